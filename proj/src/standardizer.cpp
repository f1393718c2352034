#include "pmussl/classifiers.hpp"

#include <cmath>

namespace pmussl {

void Standardizer::fit(const Matrix& X) {
    if (X.rows() == 0) throw ShapeError("standardizer: no rows");
    mean_ = X.colwise().mean().transpose();
    scale_.resize(X.cols());
    for (Index j = 0; j < X.cols(); ++j) {
        const double var = (X.col(j).array() - mean_[j]).square().mean();
        const double sd = std::sqrt(var);
        // near-constant columns (relative to their magnitude) are left unscaled
        scale_[j] = sd > 1e-12 * std::max(1.0, std::abs(mean_[j])) ? sd : 1.0;
    }
}

Matrix Standardizer::transform(const Matrix& X) const {
    if (X.cols() != mean_.size()) throw ShapeError("standardizer: dimension mismatch");
    return (X.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
}

Matrix Standardizer::inverse_transform(const Matrix& Z) const {
    if (Z.cols() != mean_.size()) throw ShapeError("standardizer: dimension mismatch");
    return (Z.array().rowwise() * scale_.transpose().array()).rowwise() + mean_.transpose().array();
}

}  // namespace pmussl
