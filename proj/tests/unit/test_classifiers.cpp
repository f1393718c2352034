#include "helpers.hpp"

#include "pmussl/classifiers.hpp"
#include "pmussl/svm.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace pmussl;

namespace {

double accuracy(const Labels& a, const Labels& b) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ok += a[i] == b[i];
    return static_cast<double>(ok) / static_cast<double>(a.size());
}

// Four clusters, labels alternate around the convex hull so no line gets
// more than three right; one y threshold isolates a pure cluster first.
void staggered_xor(int per, std::uint64_t seed, Matrix& X, Labels& Y) {
    Matrix c(4, 2);
    c << 0, 0,  //
        1, 1,   //
        0, 2,   //
        1, 3;
    testing::blobs(c, per, 0.08, seed, X, Y);
    for (auto& y : Y) y = (y == 1 || y == 4) ? 1 : 2;
}

}  // namespace

TEST_SUITE("classifiers") {

TEST_CASE("names and spec validation") {
    for (auto k : kAllClassifierKinds) CHECK(kind_from_name(kind_name(k)) == k);
    CHECK_THROWS_AS(kind_from_name("RF"), Error);
    CHECK_THROWS_AS((ClassifierSpec{ClassifierKind::kNN, {{"k", 0}}}.validate()), ConfigError);
    CHECK_THROWS_AS((ClassifierSpec{ClassifierKind::DT, {{"gamma", 1}}}.validate()), ConfigError);
    CHECK(ClassifierSpec{ClassifierKind::GB, {}}.get("n_trees") == 100);
}

TEST_CASE("standardizer") {
    Matrix X(3, 2);
    X << 1, 5, 2, 5, 3, 5;
    const Standardizer st(X);
    const Matrix Z = st.transform(X);
    CHECK(std::abs(Z.col(0).mean()) < 1e-15);
    CHECK(Z.col(1).isZero());  // constant feature
    CHECK(st.inverse_transform(Z).isApprox(X));
}

TEST_CASE("separable blobs: linear SVM is perfect") {
    Matrix c(2, 3);
    c << -2, 0, 1, 2, 0, -1;
    Matrix X, Xv;
    Labels Y, Yv;
    testing::blobs(c, 40, 0.4, 1, X, Y);
    testing::blobs(c, 40, 0.4, 2, Xv, Yv);
    const auto m = fit({ClassifierKind::SVML, {{"C", 1.0}}}, X, Y);
    CHECK(accuracy(m.predict(Xv), Yv) == 1.0);
}

TEST_CASE("XOR clusters: depth-2 tree is perfect, a line is not") {
    Matrix X, Xv;
    Labels Y, Yv;
    staggered_xor(25, 3, X, Y);
    staggered_xor(25, 4, Xv, Yv);
    const auto dt = fit({ClassifierKind::DT, {{"max_depth", 2}}}, X, Y);
    CHECK(accuracy(dt.predict(Xv), Yv) == 1.0);
    const auto deep = fit({ClassifierKind::DT, {{"max_depth", 6}}}, X, Y);
    CHECK(accuracy(deep.predict(Xv), Yv) == 1.0);
    const auto svm = fit({ClassifierKind::SVML, {{"C", 10.0}}}, X, Y);
    CHECK(accuracy(svm.predict(Xv), Yv) <= 0.75);
}

TEST_CASE("every family fits four blobs") {
    Matrix c(4, 2);
    c << 0, 0, 4, 0, 0, 4, 4, 4;
    Matrix X, Xv;
    Labels Y, Yv;
    testing::blobs(c, 20, 0.5, 5, X, Y);
    testing::blobs(c, 20, 0.5, 6, Xv, Yv);
    for (auto k : kAllClassifierKinds) {
        CAPTURE(kind_name(k));
        const auto m = fit({k, {}}, X, Y);
        CHECK(m.classes() == std::vector<int>{1, 2, 3, 4});
        const Matrix S = m.score(Xv);
        CHECK(S.rows() == Xv.rows());
        CHECK(S.cols() == 4);
        CHECK(accuracy(m.predict(Xv), Yv) >= 0.95);
    }
}

TEST_CASE("empty input gives empty output") {
    Matrix X(4, 1);
    X << 0, 1, 2, 3;
    const auto m = fit({ClassifierKind::kNN, {{"k", 1}}}, X, Labels{1, 1, 2, 2});
    const Matrix empty(0, 1);
    CHECK(m.score(empty).rows() == 0);
    CHECK(m.predict(empty).empty());
    CHECK_THROWS_AS(m.score(Matrix(2, 3)), ShapeError);
}

TEST_CASE("argmax picks the top column, ties to the lowest code") {
    Matrix S(2, 4);
    S << 0.1, 0.7, 0.1, 0.1,  //
        0.4, 0.1, 0.4, 0.1;
    CHECK(argmax_labels(S, {1, 2, 3, 4}) == Labels{2, 1});
    CHECK(argmax_labels(S, {4, 3, 2, 1}) == Labels{3, 2});
}

TEST_CASE("kNN scores are vote fractions") {
    Matrix X(4, 1);
    X << 0, 1, 2, 100;
    const auto m = fit({ClassifierKind::kNN, {{"k", 3}}}, X, Labels{2, 2, 3, 1});
    Matrix q(1, 1);
    q << 1.0;
    const Matrix S = m.score(q);
    CHECK(S(0, 0) == 0.0);
    CHECK(S(0, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(S(0, 2) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("fit rejects a single class and unlabeled rows") {
    const Matrix X = Matrix::Random(4, 2);
    CHECK_THROWS_AS(fit({ClassifierKind::DT, {}}, X, Labels{1, 1, 1, 1}), Error);
    CHECK_THROWS_AS(fit({ClassifierKind::DT, {}}, X, Labels{1, 2, -1, 1}), Error);
    CHECK_THROWS_AS(fit({ClassifierKind::DT, {}}, X, Labels{1, 2}), ShapeError);
}

TEST_CASE("boosting without trees predicts the prior majority") {
    Matrix c(3, 2);
    c << 0, 0, 3, 3, 6, 0;
    Matrix X;
    Labels Y;
    testing::blobs(c, 10, 0.3, 7, X, Y);
    for (int i = 0; i < 5; ++i) Y[static_cast<std::size_t>(i)] = 3;  // class 3 becomes the majority
    const auto m = fit({ClassifierKind::GB, {{"n_trees", 0}}}, X, Y);
    for (int y : m.predict(X)) CHECK(y == 3);
}

TEST_CASE("boosting probabilities sum to one") {
    Matrix c(3, 2);
    c << 0, 0, 2, 2, 4, 0;
    Matrix X;
    Labels Y;
    testing::blobs(c, 15, 0.8, 8, X, Y);
    const auto m = fit({ClassifierKind::GB, {{"n_trees", 20}}}, X, Y);
    const Matrix S = m.score(X);
    for (Index i = 0; i < S.rows(); ++i) CHECK(S.row(i).sum() == doctest::Approx(1.0));
    CHECK((S.array() >= 0.0).all());
}

TEST_CASE("SMO solution satisfies the KKT conditions") {
    Matrix c(2, 2);
    c << 0, 0, 1.5, 1.5;
    Matrix X;
    Labels Yi;
    testing::blobs(c, 30, 0.7, 9, X, Yi);  // overlapping: some bounded alphas
    std::vector<double> y;
    for (int v : Yi) y.push_back(v == 1 ? 1.0 : -1.0);
    const double C = 2.0;
    for (auto kernel : {Kernel{KernelType::Linear, 0.0}, Kernel{KernelType::Rbf, 0.5}}) {
        const Matrix K = kernel.gram(X);
        const std::vector<double> upper(y.size(), C);
        const auto dual = solve_svm_dual(K, y, upper);
        CHECK(dual.converged);
        const Vector f = dual.decision(K, y);
        double balance = 0.0;
        int bounded = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double a = dual.alpha[static_cast<Index>(i)];
            const double margin = y[i] * f[static_cast<Index>(i)];
            balance += a * y[i];
            CHECK(a >= 0.0);
            CHECK(a <= C);
            if (a < 1e-9) CHECK(margin >= 1.0 - 1e-3);
            else if (a > C - 1e-9) {
                CHECK(margin <= 1.0 + 1e-3);
                ++bounded;
            } else CHECK(margin == doctest::Approx(1.0).epsilon(1e-3));
        }
        CHECK(std::abs(balance) < 1e-9);
        CHECK(bounded > 0);
    }
}

TEST_CASE("BinarySvm decision matches the dual expansion") {
    Matrix c(2, 2);
    c << 0, 0, 2, 2;
    Matrix X;
    Labels Yi;
    testing::blobs(c, 15, 0.6, 10, X, Yi);
    std::vector<double> y;
    for (int v : Yi) y.push_back(v == 1 ? 1.0 : -1.0);
    const Kernel k{KernelType::Rbf, 0.7};
    const BinarySvm svm(X, y, k, 1.0);
    const auto dual = solve_svm_dual(k.gram(X), y, std::vector<double>(y.size(), 1.0));
    CHECK((svm.decision(X) - dual.decision(k.gram(X), y)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("grid expansion order") {
    const auto pts = expand_grid({{"b", {1, 2}}, {"a", {10, 20, 30}}});
    REQUIRE(pts.size() == 6);
    CHECK(pts[0] == HyperParams{{"a", 10}, {"b", 1}});
    CHECK(pts[1] == HyperParams{{"a", 10}, {"b", 2}});
    CHECK(pts[5] == HyperParams{{"a", 30}, {"b", 2}});
    CHECK(expand_grid({}).size() == 1);
}

TEST_CASE("single-point grid returns that point") {
    Matrix c(2, 2);
    c << 0, 0, 3, 3;
    Matrix X;
    Labels Y;
    testing::blobs(c, 10, 0.5, 11, X, Y);
    const auto r = grid_search(ClassifierKind::DT, {{"max_depth", {4}}}, X, Y, 3);
    CHECK(r.best == HyperParams{{"max_depth", 4}});
    CHECK(r.scores.size() == 1);
}

TEST_CASE("grid search prefers k > 1 under label noise") {
    Matrix c(2, 2);
    c << 0, 0, 1.6, 0;
    Matrix X;
    Labels Y;
    testing::blobs(c, 60, 0.6, 12, X, Y);
    std::mt19937_64 rng(13);
    for (auto& y : Y)
        if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.2) y = 3 - y;
    const auto r = grid_search(ClassifierKind::kNN, {{"k", {1, 3, 5}}}, X, Y, 3);
    CHECK(r.best.at("k") > 1);
}

TEST_CASE("stratified folds keep every class in every fold for balanced labeled sets") {
    // all class compositions of 24 labels with 5..19 per class
    int checked = 0;
    for (int a = 5; a <= 19; ++a)
        for (int b = 5; b <= 19; ++b)
            for (int c = 5; c <= 19; ++c) {
                const int d = 24 - a - b - c;
                if (d < 5 || d > 19) continue;
                Labels Y;
                for (int i = 0; i < a; ++i) Y.push_back(1);
                for (int i = 0; i < b; ++i) Y.push_back(2);
                for (int i = 0; i < c; ++i) Y.push_back(3);
                for (int i = 0; i < d; ++i) Y.push_back(4);
                std::shuffle(Y.begin(), Y.end(), std::mt19937_64(static_cast<std::uint64_t>(a * 1000 + b * 10 + c)));
                const auto fold = stratified_folds(Y, 3);
                for (int f = 0; f < 3; ++f)
                    for (int cls = 1; cls <= 4; ++cls) {
                        bool hit = false;
                        for (std::size_t i = 0; i < Y.size(); ++i) hit |= fold[i] == f && Y[i] == cls;
                        CHECK(hit);
                    }
                ++checked;
            }
    CHECK(checked > 0);
}

TEST_CASE("stratified folds fall back to leave-one-out for tiny classes") {
    const Labels Y{1, 1, 1, 2, 2};
    const auto fold = stratified_folds(Y, 3);
    std::vector<int> sorted = fold;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> want(5);
    std::iota(want.begin(), want.end(), 0);
    CHECK(sorted == want);
}

}
