#include "helpers.hpp"

#include "pmussl/ssl_engines.hpp"

#include <doctest.h>

#include <cmath>

using namespace pmussl;

namespace {

// Labeled rows first (one per class), then the rest in proximity order.
MixedSet blob_mix(const Matrix& centers, int per, double spread, std::uint64_t seed, int labels_per_class,
                  Labels* truth) {
    Matrix X;
    Labels Y;
    testing::blobs(centers, per, spread, seed, X, Y);
    std::vector<Index> lab, unl;
    for (Index i = 0; i < X.rows(); ++i) (i % per < labels_per_class ? lab : unl).push_back(i);
    const Matrix XL = X(lab, Eigen::all);
    Labels YL;
    for (auto i : lab) YL.push_back(Y[static_cast<std::size_t>(i)]);
    const Matrix XU0 = X(unl, Eigen::all);
    const auto order = proximity_order(XL, XU0);
    std::vector<Index> sorted;
    for (auto o : order) sorted.push_back(unl[static_cast<std::size_t>(o)]);
    truth->assign(YL.begin(), YL.end());
    for (auto i : sorted) truth->push_back(Y[static_cast<std::size_t>(i)]);
    return make_mixed_set(XL, YL, X(sorted, Eigen::all));
}

double agreement(const Labels& a, const Labels& b) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ok += a[i] == b[i];
    return static_cast<double>(ok) / static_cast<double>(a.size());
}

std::vector<double> signs(const Labels& Y, int positive) {
    std::vector<double> out;
    for (int y : Y) out.push_back(y == positive ? 1.0 : -1.0);
    return out;
}

}  // namespace

TEST_SUITE("ssl_engines") {

TEST_CASE("engine names") {
    for (auto e : kAllEngineKinds) CHECK(engine_from_name(engine_name(e)) == e);
    CHECK(engine_name(EngineKind::LabelSpreading) == "label_spreading");
    CHECK_THROWS_AS(engine_from_name("em"), ConfigError);
}

TEST_CASE("mixed set layout and validation") {
    const Matrix XL = Matrix::Random(3, 2), XU = Matrix::Random(2, 2);
    const auto M = make_mixed_set(XL, Labels{1, 2, 1}, XU);
    CHECK(M.size() == 5);
    CHECK(M.n_unlabeled() == 2);
    CHECK(M.Y == Labels{1, 2, 1, -1, -1});
    CHECK_THROWS_AS(make_mixed_set(XL, Labels{1, 2}, XU), ShapeError);
    CHECK_THROWS_AS(make_mixed_set(XL, Labels{1, 2, 1}, Matrix::Random(2, 3)), ShapeError);
}

TEST_CASE("proximity order sorts by nearest labeled row, ties by index") {
    Matrix XL(2, 1), XU(4, 1);
    XL << 0, 10;
    XU << 5, 9, 1, 11;
    CHECK(proximity_order(XL, XU) == std::vector<Index>{1, 2, 3, 0});
}

TEST_CASE("self-training with one big batch equals one-shot prediction") {
    Matrix c(3, 2);
    c << 0, 0, 3, 0, 0, 3;
    Labels truth;
    const auto M = blob_mix(c, 20, 1.0, 1, 3, &truth);
    const ClassifierSpec base{ClassifierKind::DT, {{"max_depth", 3}}};
    const auto once = fit(base, M.X.topRows(M.n_labeled), M.labeled_labels());
    const auto pred = once.predict(M.X.bottomRows(M.n_unlabeled()));
    for (Index batch : {M.n_unlabeled(), M.n_unlabeled() + 7}) {
        const auto out = self_train(base, M, batch);
        CHECK(Labels(out.begin(), out.begin() + M.n_labeled) == M.labeled_labels());
        CHECK(Labels(out.begin() + M.n_labeled, out.end()) == pred);
    }
}

TEST_CASE("self-training without unlabeled rows returns Y_L") {
    const auto M = make_mixed_set(Matrix::Random(4, 2), Labels{1, 2, 1, 2}, Matrix(0, 2));
    CHECK(self_train({ClassifierKind::kNN, {{"k", 1}}}, M, 5) == Labels{1, 2, 1, 2});
    CHECK_THROWS_AS(self_train({ClassifierKind::kNN, {}}, M, 0), ConfigError);
}

TEST_CASE("self-training grows along separated blobs from one label each") {
    Matrix c(2, 2);
    c << 0, 0, 8, 0;
    Labels truth;
    const auto M = blob_mix(c, 30, 0.8, 2, 1, &truth);
    const auto out = self_train({ClassifierKind::kNN, {{"k", 1}}}, M, 1);
    CHECK(out == truth);
}

TEST_CASE("affinity weights") {
    SUBCASE("coincident points have unit weight") {
        Matrix X(3, 1);
        X << 0, 0, 1;
        const auto G = build_affinity(X, 1.0, false);
        CHECK(G.W(0, 1) == 1.0);
        CHECK(G.W(0, 0) == 0.0);
    }
    SUBCASE("three-point graph against brute force") {
        Matrix X(3, 2);
        X << 0, 0, 1, 0, 0, 2;
        const double sigma = 0.9;
        const auto G = build_affinity(X, sigma, false);
        Matrix W = Matrix::Zero(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j) W(i, j) = std::exp(-(X.row(i) - X.row(j)).squaredNorm() / (2 * sigma * sigma));
        const Vector d = W.rowwise().sum();
        Matrix Z(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) Z(i, j) = W(i, j) / std::sqrt(d[i] * d[j]);
        CHECK((G.W - W).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((G.Z - Z).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((G.degree - d).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("isolated row is an error") {
        Matrix X(3, 1);
        X << 0, 0, 1000;
        CHECK_THROWS_AS(build_affinity(X, 0.1, false), Error);
        CHECK_THROWS_AS(build_affinity(X, 0.0, false), ConfigError);
    }
}

TEST_CASE("default sigma is the scaled median distance") {
    Matrix X(3, 1);
    X << 0, 1, 3;  // distances 1, 2, 3
    CHECK(default_sigma(X, false) == doctest::Approx(2.0 / std::sqrt(2.0)));
    CHECK_THROWS_AS(default_sigma(Matrix::Zero(3, 2), false), Error);
}

TEST_CASE("label spreading labels separated blobs") {
    // separated on both axes: standardizing a pure-noise axis would blur the gap
    Matrix c(2, 2);
    c << 0, 0, 6, 6;
    Labels truth;
    const auto M = blob_mix(c, 25, 0.7, 3, 1, &truth);
    const auto G = build_affinity(M.X, default_sigma(M.X));
    const auto r = label_spread(G, M.Y, {.alpha = 0.2});
    CHECK(r.converged);
    CHECK(r.labels == truth);
}

TEST_CASE("label spreading without unlabeled rows returns Y_L") {
    Matrix X(4, 1);
    X << 0, 1, 2, 3;
    const Labels Y{2, 2, 4, 4};
    const auto r = label_spread(build_affinity(X, 1.0), Y);
    CHECK(r.labels == Y);
    CHECK(r.classes == std::vector<int>{2, 4});
}

TEST_CASE("label spreading converges to the closed form") {
    Matrix c(3, 3);
    c << 0, 0, 0, 2, 0, 0, 0, 2, 0;
    Labels truth;
    const auto M = blob_mix(c, 15, 1.0, 4, 2, &truth);
    const auto G = build_affinity(M.X, default_sigma(M.X));
    for (double alpha : {0.1, 0.5, 0.9}) {
        const auto r = label_spread(G, M.Y, {.alpha = alpha, .tol = 1e-12, .max_iter = 10000, .keep_history = true});
        CHECK(r.converged);
        CHECK(static_cast<int>(r.changes.size()) == r.iterations);
        const Matrix F = label_spread_closed_form(G, M.Y, alpha);
        CHECK((r.F - F).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("label spreading reports non-convergence") {
    Matrix X = Matrix::Random(10, 2);
    Labels Y(10, kUnlabeled);
    Y[0] = 1;
    Y[1] = 2;
    const auto r = label_spread(build_affinity(X, 1.0), Y, {.alpha = 0.9, .tol = 1e-15, .max_iter = 2});
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 2);
    CHECK_THROWS_AS(label_spread(build_affinity(X, 1.0), Y, {.alpha = 1.0}), ConfigError);
}

TEST_CASE("TSVM with C_u = 0 is the supervised SVM") {
    Matrix c(2, 2);
    c << 0, 0, 2, 1;
    Labels truth;
    const auto M = blob_mix(c, 20, 0.8, 5, 4, &truth);
    const auto yL = signs(M.labeled_labels(), 1);
    const Matrix XL = M.X.topRows(M.n_labeled), XU = M.X.bottomRows(M.n_unlabeled());
    for (const Kernel k : {Kernel{KernelType::Linear, 0.0}, Kernel{KernelType::Rbf, 0.5}}) {
        const auto t = tsvm_binary(XL, yL, XU, 1.0, 0.0, k);
        const BinarySvm s(XL, yL, k, 1.0);
        CHECK((t.model.decision(M.X) - s.decision(M.X)).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(t.swaps.empty());
    }
}

TEST_CASE("TSVM puts the margin through the gap between two clusters") {
    Matrix c(2, 2);
    c << 0, 0, 3, 0;
    Labels truth;
    const auto M = blob_mix(c, 30, 0.4, 6, 1, &truth);
    const auto yL = signs(M.labeled_labels(), 1);
    const Matrix XL = M.X.topRows(M.n_labeled), XU = M.X.bottomRows(M.n_unlabeled());
    const Kernel lin{KernelType::Linear, 0.0};
    const double C = 10.0, Cu = 1.0;
    const auto t = tsvm_binary(XL, yL, XU, C, Cu, lin);
    for (Index j = 0; j < M.n_unlabeled(); ++j)
        CHECK(t.labels[static_cast<std::size_t>(j)] == (truth[static_cast<std::size_t>(M.n_labeled + j)] == 1 ? 1.0 : -1.0));
    // the boundary crosses x between the clusters
    Matrix probe(2, 2);
    probe << 0.5, 0, 2.5, 0;
    const Vector f = t.model.decision(probe);
    CHECK(f[0] > 0.0);
    CHECK(f[1] < 0.0);

    // flipping every pseudo label gives a worse objective
    std::vector<double> y(yL.begin(), yL.end());
    for (double l : t.labels) y.push_back(-l);
    std::vector<double> upper(y.size(), Cu);
    std::fill(upper.begin(), upper.begin() + M.n_labeled, C);
    const Matrix K = lin.gram(M.X);
    const auto dual = solve_svm_dual(K, y, upper);
    const BinarySvm flipped(M.X, y, lin, dual);
    const Vector ff = flipped.decision(M.X);
    const double J_flip = tsvm_objective(ff.head(M.n_labeled), yL, ff.tail(M.n_unlabeled()), C, Cu,
                                         flipped.weight_norm_sq());
    CHECK(t.objective < J_flip);
}

TEST_CASE("TSVM objective never rises across accepted swaps") {
    int total = 0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        Matrix c(2, 2);
        c << 0, 0, 1.2, 0.3;
        Labels truth;
        const auto M = blob_mix(c, 25, 0.8, 100 + seed, 2, &truth);
        const auto t = tsvm_binary(M.X.topRows(M.n_labeled), signs(M.labeled_labels(), 1),
                                   M.X.bottomRows(M.n_unlabeled()), 1.0, 1.0, {KernelType::Linear, 0.0});
        for (std::size_t s = 0; s < t.swaps.size(); ++s) {
            CHECK(t.swaps[s].after <= t.swaps[s].before);
            if (s > 0 && t.swaps[s].stage == t.swaps[s - 1].stage)
                CHECK(t.swaps[s].before <= t.swaps[s - 1].after);
        }
        total += static_cast<int>(t.swaps.size());
    }
    CHECK(total > 0);
}

TEST_CASE("TSVM objective terms") {
    Vector fL(2), fU(3);
    fL << 2.0, 0.5;
    fU << 0.2, -0.6, 3.0;
    const std::vector<double> yL{1.0, 1.0};
    // hinge_L = 0 + 0.5, unlabeled = 0.8 + 0.4 + 0, ||w|| = 2
    CHECK(tsvm_objective(fL, yL, fU, 2.0, 0.5, 4.0) == doctest::Approx(2.0 * 0.5 + 0.5 * 1.2 + 2.0));
}

TEST_CASE("two-class TSVM reduction agrees with the binary machine") {
    Matrix c(2, 2);
    c << 0, 0, 2, 2;
    Labels truth;
    const auto M = blob_mix(c, 20, 0.9, 7, 3, &truth);
    const Kernel lin{KernelType::Linear, 0.0};
    const auto multi = tsvm_multiclass(M, 1.0, 1.0, lin);
    const Matrix Z = Standardizer(M.X).transform(M.X);
    const auto bin = tsvm_binary(Z.topRows(M.n_labeled), signs(M.labeled_labels(), 1), Z.bottomRows(M.n_unlabeled()),
                                 1.0, 1.0, lin);
    for (Index j = 0; j < M.n_unlabeled(); ++j)
        CHECK(multi.labels[static_cast<std::size_t>(M.n_labeled + j)] == (bin.labels[static_cast<std::size_t>(j)] > 0 ? 1 : 2));
    CHECK((multi.decision.col(0) + multi.decision.col(1)).isZero());
}

TEST_CASE("multiclass TSVM on four blobs") {
    Matrix c(4, 2);
    c << 0, 0, 5, 0, 0, 5, 5, 5;
    Labels truth;
    const auto M = blob_mix(c, 25, 0.8, 8, 2, &truth);
    const auto r = tsvm_multiclass(M, 1.0, 1.0, {KernelType::Linear, 0.0});
    CHECK(r.classes == std::vector<int>{1, 2, 3, 4});
    const Labels pseudo(r.labels.begin() + M.n_labeled, r.labels.end());
    const Labels want(truth.begin() + M.n_labeled, truth.end());
    CHECK(agreement(pseudo, want) >= 0.95);
    CHECK(Labels(r.labels.begin(), r.labels.begin() + M.n_labeled) == M.labeled_labels());
}

}
