#include "pmussl/ssl_engines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pmussl {

std::string_view engine_name(EngineKind e) noexcept {
    switch (e) {
        case EngineKind::SelfTraining: return "self_training";
        case EngineKind::Tsvm: return "tsvm";
        case EngineKind::LabelSpreading: return "label_spreading";
    }
    return "?";
}

EngineKind engine_from_name(std::string_view name) {
    for (auto e : kAllEngineKinds)
        if (engine_name(e) == name) return e;
    throw ConfigError("unknown engine '" + std::string(name) + "'");
}

void MixedSet::validate() const {
    if (static_cast<Index>(Y.size()) != X.rows()) throw ShapeError("mixed set: label count != rows");
    if (n_labeled < 0 || n_labeled > X.rows()) throw ShapeError("mixed set: bad labeled count");
    for (Index i = 0; i < X.rows(); ++i) {
        const int y = Y[static_cast<std::size_t>(i)];
        if (i < n_labeled && y == kUnlabeled) throw Error("mixed set: -1 inside the labeled block");
        if (i >= n_labeled && y != kUnlabeled) throw Error("mixed set: label inside the unlabeled block");
    }
}

MixedSet make_mixed_set(const Matrix& X_L, std::span<const int> Y_L, const Matrix& X_U) {
    if (X_L.rows() != static_cast<Index>(Y_L.size())) throw ShapeError("mixed set: X_L rows != Y_L");
    if (X_U.rows() > 0 && X_U.cols() != X_L.cols()) throw ShapeError("mixed set: X_U width differs");
    MixedSet M;
    M.X.resize(X_L.rows() + X_U.rows(), X_L.cols());
    M.X.topRows(X_L.rows()) = X_L;
    if (X_U.rows() > 0) M.X.bottomRows(X_U.rows()) = X_U;
    M.Y.assign(Y_L.begin(), Y_L.end());
    M.Y.resize(static_cast<std::size_t>(M.X.rows()), kUnlabeled);
    M.n_labeled = X_L.rows();
    M.validate();
    return M;
}

std::vector<Index> proximity_order(const Matrix& X_L, const Matrix& X_U) {
    if (X_L.rows() == 0) throw Error("proximity_order: no labeled rows");
    Vector nearest(X_U.rows());
    for (Index u = 0; u < X_U.rows(); ++u)
        nearest[u] = (X_L.rowwise() - X_U.row(u)).rowwise().squaredNorm().minCoeff();
    std::vector<Index> idx(static_cast<std::size_t>(X_U.rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return nearest[a] < nearest[b]; });
    return idx;
}

Labels self_train(const ClassifierSpec& base, const MixedSet& M, Index batch) {
    M.validate();
    if (batch < 1) throw ConfigError("self_train: batch must be >= 1");
    Labels out = M.Y;
    Index pool = M.n_labeled;
    int round = 0;
    while (pool < M.size()) {
        const Index take = std::min(batch, M.size() - pool);
        try {
            const auto model = fit(base, M.X.topRows(pool), std::span<const int>(out.data(), static_cast<std::size_t>(pool)));
            const auto pred = model.predict(M.X.middleRows(pool, take));
            std::copy(pred.begin(), pred.end(), out.begin() + pool);
        } catch (const Error& e) {
            throw Error("self_train batch " + std::to_string(round) + ": " + e.what());
        }
        pool += take;
        ++round;
    }
    return out;
}

// ---------------------------------------------------------------- label spreading

namespace {

Matrix squared_distances(const Matrix& X) {
    const Vector sq = X.rowwise().squaredNorm();
    Matrix D = -2.0 * X * X.transpose();
    D.colwise() += sq;
    D.rowwise() += sq.transpose();
    D = D.cwiseMax(0.0);
    D.diagonal().setZero();
    for (Index j = 0; j < D.cols(); ++j)
        for (Index i = j + 1; i < D.rows(); ++i) D(j, i) = D(i, j);
    return D;
}

Matrix maybe_standardize(const Matrix& X, bool standardize) {
    return standardize ? Standardizer(X).transform(X) : X;
}

struct OneHot {
    Matrix F0;
    std::vector<int> classes;
};

OneHot one_hot(std::span<const int> Y) {
    std::vector<int> present;
    for (int y : Y)
        if (y != kUnlabeled) present.push_back(y);
    if (present.empty()) throw Error("label_spread: no labeled rows");
    OneHot oh;
    oh.classes = distinct_classes(present);
    oh.F0 = Matrix::Zero(static_cast<Index>(Y.size()), static_cast<Index>(oh.classes.size()));
    for (std::size_t i = 0; i < Y.size(); ++i) {
        if (Y[i] == kUnlabeled) continue;
        const auto c = std::lower_bound(oh.classes.begin(), oh.classes.end(), Y[i]) - oh.classes.begin();
        oh.F0(static_cast<Index>(i), static_cast<Index>(c)) = 1.0;
    }
    return oh;
}

}  // namespace

double default_sigma(const Matrix& X, bool standardize) {
    if (X.rows() < 2) throw Error("default_sigma: need at least two rows");
    const Matrix D = squared_distances(maybe_standardize(X, standardize));
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(X.rows() * (X.rows() - 1) / 2));
    for (Index j = 0; j < D.cols(); ++j)
        for (Index i = j + 1; i < D.rows(); ++i) d.push_back(std::sqrt(D(i, j)));
    const auto n = d.size();
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n / 2), d.end());
    double med = d[n / 2];
    if (n % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n / 2)));
    if (!(med > 0.0)) throw Error("default_sigma: all rows coincide");
    return med / std::sqrt(2.0);
}

AffinityGraph build_affinity(const Matrix& X, double sigma, bool standardize) {
    if (!(sigma > 0.0)) throw ConfigError("build_affinity: sigma must be > 0");
    if (X.rows() < 2) throw Error("build_affinity: need at least two rows");
    AffinityGraph G;
    G.sigma = sigma;
    // std::exp: Eigen's vectorized exp does not underflow to exactly zero
    G.W = (-squared_distances(maybe_standardize(X, standardize)) / (2.0 * sigma * sigma))
              .unaryExpr([](double v) { return std::exp(v); });
    G.W.diagonal().setZero();
    G.degree = G.W.rowwise().sum();
    for (Index i = 0; i < G.degree.size(); ++i)
        if (!(G.degree[i] > 0.0)) throw Error("build_affinity: row " + std::to_string(i) + " has zero degree");
    const Vector s = G.degree.cwiseSqrt().cwiseInverse();
    G.Z = s.asDiagonal() * G.W * s.asDiagonal();
    return G;
}

LabelSpreadResult label_spread(const AffinityGraph& G, std::span<const int> Y_M,
                               const LabelSpreadOptions& opt) {
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw ConfigError("label_spread: alpha must be in (0,1)");
    if (static_cast<Index>(Y_M.size()) != G.Z.rows()) throw ShapeError("label_spread: label count != graph size");
    const auto oh = one_hot(Y_M);
    const Matrix base = (1.0 - opt.alpha) * oh.F0;

    LabelSpreadResult res;
    res.classes = oh.classes;
    Matrix F = oh.F0;
    for (int t = 0; t < opt.max_iter; ++t) {
        Matrix next = opt.alpha * (G.Z * F) + base;
        const double change = (next - F).cwiseAbs().maxCoeff();
        F = std::move(next);
        res.iterations = t + 1;
        if (opt.keep_history) res.changes.push_back(change);
        if (change < opt.tol) {
            res.converged = true;
            break;
        }
    }
    res.labels = argmax_labels(F, res.classes);
    for (std::size_t i = 0; i < Y_M.size(); ++i)
        if (Y_M[i] != kUnlabeled) res.labels[i] = Y_M[i];
    res.F = std::move(F);
    return res;
}

Matrix label_spread_closed_form(const AffinityGraph& G, std::span<const int> Y_M, double alpha) {
    const auto oh = one_hot(Y_M);
    const Matrix A = Matrix::Identity(G.Z.rows(), G.Z.cols()) - alpha * G.Z;
    return (1.0 - alpha) * A.partialPivLu().solve(oh.F0);
}

}  // namespace pmussl
