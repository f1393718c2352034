#include "pmussl/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pmussl {

Matrix Kernel::gram(const Matrix& A, const Matrix& B) const {
    if (A.cols() != B.cols()) throw ShapeError("kernel: dimension mismatch");
    Matrix K = A * B.transpose();
    if (type == KernelType::Linear) return K;
    const Vector na = A.rowwise().squaredNorm();
    const Vector nb = B.rowwise().squaredNorm();
    for (Index j = 0; j < K.cols(); ++j)
        for (Index i = 0; i < K.rows(); ++i) {
            const double d2 = std::max(0.0, na[i] + nb[j] - 2.0 * K(i, j));
            K(i, j) = std::exp(-gamma * d2);
        }
    return K;
}

Matrix Kernel::gram(const Matrix& A) const {
    Matrix K = gram(A, A);
    if (type == KernelType::Rbf) K.diagonal().setOnes();
    // exact symmetry
    for (Index j = 0; j < K.cols(); ++j)
        for (Index i = j + 1; i < K.rows(); ++i) K(j, i) = K(i, j);
    return K;
}

Vector SvmDual::decision(const Matrix& K, std::span<const double> y) const {
    Vector c(alpha.size());
    for (Index i = 0; i < alpha.size(); ++i) c[i] = alpha[i] * y[static_cast<std::size_t>(i)];
    return (K * c).array() - rho;
}

SvmDual solve_svm_dual(const Matrix& Kfull, std::span<const double> yfull,
                       std::span<const double> upper, const SmoOptions& opt, const Vector* warm) {
    const Index nfull = Kfull.rows();
    if (Kfull.cols() != nfull || static_cast<Index>(yfull.size()) != nfull ||
        static_cast<Index>(upper.size()) != nfull)
        throw ShapeError("solve_svm_dual: size mismatch");

    // active set: points with a positive box
    std::vector<Index> act;
    for (Index i = 0; i < nfull; ++i)
        if (upper[static_cast<std::size_t>(i)] > 0.0) act.push_back(i);
    const auto n = static_cast<Index>(act.size());

    SvmDual out;
    out.alpha = Vector::Zero(nfull);
    if (n == 0) return out;

    Vector y(n), Cb(n), a(n);
    Matrix K(n, n);
    for (Index i = 0; i < n; ++i) {
        y[i] = yfull[static_cast<std::size_t>(act[static_cast<std::size_t>(i)])];
        Cb[i] = upper[static_cast<std::size_t>(act[static_cast<std::size_t>(i)])];
        a[i] = warm ? std::clamp((*warm)[act[static_cast<std::size_t>(i)]], 0.0, Cb[i]) : 0.0;
        for (Index j = 0; j < n; ++j)
            K(i, j) = Kfull(act[static_cast<std::size_t>(i)], act[static_cast<std::size_t>(j)]);
    }

    // G = Q a - e
    Vector G = Vector::Constant(n, -1.0);
    for (Index j = 0; j < n; ++j)
        if (a[j] != 0.0)
            for (Index i = 0; i < n; ++i) G[i] += y[i] * y[j] * K(i, j) * a[j];

    auto is_upper = [&](Index t) { return a[t] >= Cb[t]; };
    auto is_lower = [&](Index t) { return a[t] <= 0.0; };
    auto in_up = [&](Index t) { return y[t] > 0 ? !is_upper(t) : !is_lower(t); };
    auto in_low = [&](Index t) { return y[t] > 0 ? !is_lower(t) : !is_upper(t); };

    const long max_iter = opt.max_iter > 0 ? opt.max_iter : std::max<long>(10'000'000L, 100L * n);
    constexpr double tau = 1e-12;
    long iter = 0;
    out.converged = false;
    while (iter < max_iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        Index i = -1;
        for (Index t = 0; t < n; ++t)
            if (in_up(t) && -y[t] * G[t] > gmax) {
                gmax = -y[t] * G[t];
                i = t;
            }
        double gmax2 = -std::numeric_limits<double>::infinity();
        Index j = -1;
        double obj_min = std::numeric_limits<double>::infinity();
        for (Index t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            gmax2 = std::max(gmax2, y[t] * G[t]);
            if (i < 0) continue;
            const double b = gmax + y[t] * G[t];
            if (b > 0.0) {
                double aa = K(i, i) + K(t, t) - 2.0 * K(i, t);
                if (aa <= 0.0) aa = tau;
                const double obj = -(b * b) / aa;
                if (obj < obj_min) {
                    obj_min = obj;
                    j = t;
                }
            }
        }
        if (i < 0 || j < 0 || gmax + gmax2 < opt.tol) {
            out.converged = true;
            break;
        }
        ++iter;

        const double Qii = K(i, i), Qjj = K(j, j), Qij = y[i] * y[j] * K(i, j);
        const double ai_old = a[i], aj_old = a[j];
        if (y[i] != y[j]) {
            double quad = Qii + Qjj + 2.0 * Qij;
            if (quad <= 0.0) quad = tau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0.0) {
                if (a[j] < 0.0) { a[j] = 0.0; a[i] = diff; }
            } else {
                if (a[i] < 0.0) { a[i] = 0.0; a[j] = -diff; }
            }
            if (diff > Cb[i] - Cb[j]) {
                if (a[i] > Cb[i]) { a[i] = Cb[i]; a[j] = Cb[i] - diff; }
            } else {
                if (a[j] > Cb[j]) { a[j] = Cb[j]; a[i] = Cb[j] + diff; }
            }
        } else {
            double quad = Qii + Qjj - 2.0 * Qij;
            if (quad <= 0.0) quad = tau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > Cb[i]) {
                if (a[i] > Cb[i]) { a[i] = Cb[i]; a[j] = sum - Cb[i]; }
            } else {
                if (a[j] < 0.0) { a[j] = 0.0; a[i] = sum; }
            }
            if (sum > Cb[j]) {
                if (a[j] > Cb[j]) { a[j] = Cb[j]; a[i] = sum - Cb[j]; }
            } else {
                if (a[i] < 0.0) { a[i] = 0.0; a[j] = sum; }
            }
        }
        const double dai = a[i] - ai_old, daj = a[j] - aj_old;
        for (Index t = 0; t < n; ++t)
            G[t] += y[t] * (y[i] * K(t, i) * dai + y[j] * K(t, j) * daj);
    }
    out.iterations = iter;

    // rho from free variables, else midpoint of the feasible interval
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    Index nfree = 0;
    for (Index t = 0; t < n; ++t) {
        const double yG = y[t] * G[t];
        if (is_upper(t)) {
            if (y[t] < 0) ub = std::min(ub, yG); else lb = std::max(lb, yG);
        } else if (is_lower(t)) {
            if (y[t] > 0) ub = std::min(ub, yG); else lb = std::max(lb, yG);
        } else {
            ++nfree;
            sum_free += yG;
        }
    }
    if (nfree > 0) {
        out.rho = sum_free / static_cast<double>(nfree);
    } else if (std::isfinite(ub) && std::isfinite(lb)) {
        out.rho = 0.5 * (ub + lb);
    } else {
        out.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
    }

    for (Index t = 0; t < n; ++t) out.alpha[act[static_cast<std::size_t>(t)]] = a[t];
    return out;
}

BinarySvm::BinarySvm(const Matrix& X, std::span<const double> y, const Kernel& kernel, double C,
                     const SmoOptions& opt)
    : kernel_(kernel) {
    const Matrix K = kernel.gram(X);
    std::vector<double> upper(y.size(), C);
    init(X, y, solve_svm_dual(K, y, upper, opt));
}

BinarySvm::BinarySvm(const Matrix& X, std::span<const double> y, const Kernel& kernel,
                     const SvmDual& dual)
    : kernel_(kernel) {
    init(X, y, dual);
}

void BinarySvm::init(const Matrix& X, std::span<const double> y, const SvmDual& dual) {
    std::vector<Index> sv;
    for (Index i = 0; i < dual.alpha.size(); ++i)
        if (dual.alpha[i] > 0.0) sv.push_back(i);
    sv_.resize(static_cast<Index>(sv.size()), X.cols());
    coef_.resize(static_cast<Index>(sv.size()));
    for (std::size_t t = 0; t < sv.size(); ++t) {
        sv_.row(static_cast<Index>(t)) = X.row(sv[t]);
        coef_[static_cast<Index>(t)] = dual.alpha[sv[t]] * y[static_cast<std::size_t>(sv[t])];
    }
    rho_ = dual.rho;
    if (kernel_.type == KernelType::Linear) {
        w_ = sv_.transpose() * coef_;
        wnorm_sq_ = w_.squaredNorm();
    } else {
        wnorm_sq_ = sv_.rows() > 0 ? coef_.dot(kernel_.gram(sv_) * coef_) : 0.0;
    }
}

Vector BinarySvm::decision(const Matrix& X) const {
    if (sv_.rows() == 0) return Vector::Constant(X.rows(), -rho_);
    if (kernel_.type == KernelType::Linear) return (X * w_).array() - rho_;
    return (kernel_.gram(X, sv_) * coef_).array() - rho_;
}

}  // namespace pmussl
