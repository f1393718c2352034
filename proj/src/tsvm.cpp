#include "pmussl/ssl_engines.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace pmussl {

double tsvm_objective(const Vector& f_L, std::span<const double> y_L, const Vector& f_U, double C,
                      double C_u, double wnorm_sq) {
    double lab = 0.0, unl = 0.0;
    for (Index i = 0; i < f_L.size(); ++i)
        lab += std::max(0.0, 1.0 - y_L[static_cast<std::size_t>(i)] * f_L[i]);
    // min(1 - f, 1 + f) clipped at zero
    for (Index j = 0; j < f_U.size(); ++j) unl += std::max(0.0, 1.0 - std::abs(f_U[j]));
    return C * lab + C_u * unl + std::sqrt(std::max(0.0, wnorm_sq));
}

namespace {

struct State {
    SvmDual dual;
    Vector f;
    double J = 0.0;
};

class Solver {
public:
    Solver(const Matrix& K, Index nL, double C, const SmoOptions& smo)
        : K_(K), nL_(nL), C_(C), smo_(smo) {}

    State solve(const std::vector<double>& y, double c_u, const Vector* warm) const {
        std::vector<double> upper(y.size(), c_u);
        std::fill(upper.begin(), upper.begin() + nL_, C_);
        State st;
        st.dual = solve_svm_dual(K_, y, upper, smo_, warm);
        st.f = st.dual.decision(K_, y);
        Vector c(static_cast<Index>(y.size()));
        for (Index i = 0; i < c.size(); ++i) c[i] = st.dual.alpha[i] * y[static_cast<std::size_t>(i)];
        const double wn = c.dot(K_ * c);
        st.J = tsvm_objective(st.f.head(nL_), std::span<const double>(y.data(), static_cast<std::size_t>(nL_)),
                              st.f.tail(K_.rows() - nL_), C_, c_u, wn);
        return st;
    }

private:
    const Matrix& K_;
    Index nL_;
    double C_;
    SmoOptions smo_;
};

}  // namespace

TsvmResult tsvm_binary(const Matrix& X_L, std::span<const double> y_L, const Matrix& X_U, double C,
                       double C_u, const Kernel& kernel, const TsvmOptions& opt) {
    const Index nL = X_L.rows(), nU = X_U.rows();
    if (static_cast<Index>(y_L.size()) != nL) throw ShapeError("tsvm: y_L size != X_L rows");
    if (nU > 0 && X_U.cols() != X_L.cols()) throw ShapeError("tsvm: X_U width differs");
    const bool has_pos = std::find(y_L.begin(), y_L.end(), 1.0) != y_L.end();
    const bool has_neg = std::find(y_L.begin(), y_L.end(), -1.0) != y_L.end();
    if (!has_pos || !has_neg) throw Error("tsvm: y_L needs both classes");
    if (!(C > 0.0) || C_u < 0.0) throw ConfigError("tsvm: need C > 0 and C_u >= 0");

    Matrix X(nL + nU, X_L.cols());
    X.topRows(nL) = X_L;
    if (nU > 0) X.bottomRows(nU) = X_U;
    const Matrix K = kernel.gram(X);
    const Solver solver(K, nL, C, opt.smo);

    std::vector<double> y(y_L.begin(), y_L.end());
    y.resize(static_cast<std::size_t>(nL + nU), 1.0);

    // supervised start: unlabeled boxes are empty
    State st = solver.solve(y, 0.0, nullptr);
    if (nU > 0) {
        if (opt.balance) {
            const double pos_frac = static_cast<double>(std::count(y_L.begin(), y_L.end(), 1.0)) /
                                    static_cast<double>(nL);
            std::vector<Index> order(static_cast<std::size_t>(nU));
            for (Index j = 0; j < nU; ++j) order[static_cast<std::size_t>(j)] = j;
            std::stable_sort(order.begin(), order.end(),
                             [&](Index a, Index b) { return st.f[nL + a] > st.f[nL + b]; });
            const auto n_pos = static_cast<std::size_t>(std::lround(pos_frac * static_cast<double>(nU)));
            for (std::size_t t = 0; t < order.size(); ++t)
                y[static_cast<std::size_t>(nL + order[t])] = t < n_pos ? 1.0 : -1.0;
        } else {
            for (Index j = 0; j < nU; ++j) y[static_cast<std::size_t>(nL + j)] = st.f[nL + j] >= 0.0 ? 1.0 : -1.0;
        }
    }

    TsvmResult res;
    if (nU > 0 && C_u > 0.0) {
        double c_u = C_u / 100.0;
        for (int stage = 0;; ++stage) {
            st = solver.solve(y, c_u, &st.dual.alpha);
            for (int swaps = 0; swaps < opt.max_swaps_per_stage; ++swaps) {
                // opposite-labeled pairs whose combined slack exceeds 2
                std::vector<std::pair<double, Index>> pos, neg;
                for (Index j = 0; j < nU; ++j) {
                    const double yj = y[static_cast<std::size_t>(nL + j)];
                    const double xi = std::max(0.0, 1.0 - yj * st.f[nL + j]);
                    if (xi > 0.0) (yj > 0 ? pos : neg).emplace_back(xi, j);
                }
                auto by_slack = [](const auto& a, const auto& b) {
                    return a.first > b.first || (a.first == b.first && a.second < b.second);
                };
                std::sort(pos.begin(), pos.end(), by_slack);
                std::sort(neg.begin(), neg.end(), by_slack);
                const std::size_t top = static_cast<std::size_t>(std::max(1, opt.max_candidates));
                pos.resize(std::min(pos.size(), top));
                neg.resize(std::min(neg.size(), top));
                std::vector<std::tuple<double, Index, Index>> pairs;
                for (const auto& [xp, ip] : pos)
                    for (const auto& [xn, in] : neg)
                        if (xp + xn > 2.0) pairs.emplace_back(xp + xn, ip, in);
                std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
                    return std::get<0>(a) > std::get<0>(b) ||
                           (std::get<0>(a) == std::get<0>(b) &&
                            std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b)));
                });
                if (pairs.size() > top) pairs.resize(top);

                bool accepted = false;
                for (const auto& [sum, i, j] : pairs) {
                    const auto ui = static_cast<std::size_t>(nL + i), uj = static_cast<std::size_t>(nL + j);
                    auto y2 = y;
                    std::swap(y2[ui], y2[uj]);
                    // exchanging the pair's alphas keeps y'a = 0
                    Vector warm = st.dual.alpha;
                    std::swap(warm[nL + i], warm[nL + j]);
                    State cand = solver.solve(y2, c_u, &warm);
                    if (cand.J < st.J) {
                        res.swaps.push_back({stage, i, j, st.J, cand.J});
                        y = std::move(y2);
                        st = std::move(cand);
                        accepted = true;
                        break;
                    }
                }
                if (!accepted) break;
            }
            if (c_u >= C_u) break;
            c_u = std::min(C_u, c_u * std::max(1.0 + 1e-9, opt.anneal_factor));
        }
    }

    res.model = BinarySvm(X, y, kernel, st.dual);
    res.labels.assign(y.begin() + nL, y.end());
    res.objective = st.J;
    return res;
}

TsvmMulticlassResult tsvm_multiclass(const MixedSet& M, double C, double C_u, const Kernel& kernel,
                                     const TsvmOptions& opt) {
    M.validate();
    const auto YL = M.labeled_labels();
    TsvmMulticlassResult out;
    out.classes = distinct_classes(YL);
    if (out.classes.size() < 2) throw Error("tsvm: labeled block needs at least two classes");

    const Matrix Z = Standardizer(M.X).transform(M.X);
    const Matrix ZL = Z.topRows(M.n_labeled), ZU = Z.bottomRows(M.n_unlabeled());
    const auto K = static_cast<Index>(out.classes.size());
    out.decision.resize(M.size(), K);
    std::vector<double> yb(YL.size());

    if (K == 2) {
        for (std::size_t i = 0; i < YL.size(); ++i) yb[i] = YL[i] == out.classes[0] ? 1.0 : -1.0;
        const auto r = tsvm_binary(ZL, yb, ZU, C, C_u, kernel, opt);
        out.decision.col(0) = r.model.decision(Z);
        out.decision.col(1) = -out.decision.col(0);
        out.labels = M.Y;
        for (Index j = 0; j < M.n_unlabeled(); ++j)
            out.labels[static_cast<std::size_t>(M.n_labeled + j)] =
                r.labels[static_cast<std::size_t>(j)] > 0 ? out.classes[0] : out.classes[1];
        return out;
    }

    for (Index c = 0; c < K; ++c) {
        for (std::size_t i = 0; i < YL.size(); ++i)
            yb[i] = YL[i] == out.classes[static_cast<std::size_t>(c)] ? 1.0 : -1.0;
        out.decision.col(c) = tsvm_binary(ZL, yb, ZU, C, C_u, kernel, opt).model.decision(Z);
    }
    out.labels = argmax_labels(out.decision, out.classes);
    for (Index i = 0; i < M.n_labeled; ++i) out.labels[static_cast<std::size_t>(i)] = M.Y[static_cast<std::size_t>(i)];
    return out;
}

}  // namespace pmussl
