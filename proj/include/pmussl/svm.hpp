#pragma once

#include "pmussl/common.hpp"

#include <span>
#include <string_view>

namespace pmussl {

enum class KernelType { Linear, Rbf };

struct Kernel {
    KernelType type = KernelType::Linear;
    double gamma = 1.0;  // RBF only: exp(-gamma ||a - b||^2)

    /// Gram matrix between the rows of A and the rows of B.
    Matrix gram(const Matrix& A, const Matrix& B) const;
    Matrix gram(const Matrix& A) const;  // symmetric, exact unit diagonal for RBF
};

struct SmoOptions {
    double tol = 1e-4;  // maximal KKT violation at termination
    long max_iter = 0;  // 0: max(10^7, 100 n)
};

/// Dual solution of  min 1/2 a'Qa - e'a,  0 <= a_i <= C_i,  y'a = 0,
/// Q_ij = y_i y_j K_ij. Decision value f(x) = sum_i a_i y_i K(x_i, x) - rho.
struct SvmDual {
    Vector alpha;
    double rho = 0.0;
    long iterations = 0;
    bool converged = true;

    /// f for every training point given the training Gram matrix.
    Vector decision(const Matrix& K, std::span<const double> y) const;
};

/// SMO with second-order working-set selection. Points whose upper bound is
/// zero are left out of the optimization (their alpha stays 0). `warm`
/// (optional) must be feasible for the given bounds and labels.
SvmDual solve_svm_dual(const Matrix& K, std::span<const double> y, std::span<const double> upper,
                       const SmoOptions& opt = {}, const Vector* warm = nullptr);

/// Binary soft-margin SVM on fixed training rows, kept with its support set.
class BinarySvm {
public:
    BinarySvm() = default;
    BinarySvm(const Matrix& X, std::span<const double> y, const Kernel& kernel, double C,
              const SmoOptions& opt = {});
    /// Builds the model from an already solved dual.
    BinarySvm(const Matrix& X, std::span<const double> y, const Kernel& kernel,
              const SvmDual& dual);

    Vector decision(const Matrix& X) const;
    double rho() const noexcept { return rho_; }
    const Kernel& kernel() const noexcept { return kernel_; }
    /// ||w||^2 = sum_ij c_i c_j K_ij over the support set, c_i = alpha_i y_i.
    double weight_norm_sq() const noexcept { return wnorm_sq_; }
    Index support_count() const noexcept { return sv_.rows(); }

private:
    void init(const Matrix& X, std::span<const double> y, const SvmDual& dual);

    Kernel kernel_;
    Matrix sv_;
    Vector coef_;
    Vector w_;  // linear kernel only
    double rho_ = 0.0;
    double wnorm_sq_ = 0.0;
};

}  // namespace pmussl
