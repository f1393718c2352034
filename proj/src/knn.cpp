#include "models.hpp"

#include <algorithm>
#include <numeric>

namespace pmussl::detail {

namespace {

class KnnCore : public ModelCore {
public:
    Matrix train;
    std::vector<int> y;
    int K = 0;
    int k = 1;

    Matrix score(const Matrix& Z) const override {
        const Index n = train.rows();
        const int kk = std::min<int>(k, static_cast<int>(n));
        Matrix S = Matrix::Zero(Z.rows(), K);
        std::vector<int> idx(static_cast<std::size_t>(n));
        Vector d2(n);
        for (Index q = 0; q < Z.rows(); ++q) {
            d2 = (train.rowwise() - Z.row(q)).rowwise().squaredNorm();
            std::iota(idx.begin(), idx.end(), 0);
            // nearest first; equal distances resolved by training order
            std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(), [&](int a, int b) {
                return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
            });
            for (int t = 0; t < kk; ++t) S(q, y[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])]) += 1.0;
            S.row(q) /= static_cast<double>(kk);
        }
        return S;
    }
};

}  // namespace

std::shared_ptr<const ModelCore> fit_knn(const Matrix& Z, const std::vector<int>& y, int n_classes,
                                         int k) {
    auto core = std::make_shared<KnnCore>();
    core->train = Z;
    core->y = y;
    core->K = n_classes;
    core->k = k;
    return core;
}

Matrix SvmCore::score(const Matrix& Z) const {
    Matrix S(Z.rows(), static_cast<Index>(machines.size()));
    for (std::size_t c = 0; c < machines.size(); ++c) S.col(static_cast<Index>(c)) = machines[c].decision(Z);
    return S;
}

std::shared_ptr<const ModelCore> fit_svm(const Matrix& Z, const std::vector<int>& y,
                                         int n_classes, const Kernel& kernel, double C) {
    auto core = std::make_shared<SvmCore>();
    const Matrix K = kernel.gram(Z);
    const std::vector<double> upper(y.size(), C);
    std::vector<double> yy(y.size());
    for (int c = 0; c < n_classes; ++c) {
        for (std::size_t i = 0; i < y.size(); ++i) yy[i] = y[i] == c ? 1.0 : -1.0;
        const SvmDual dual = solve_svm_dual(K, yy, upper);
        core->machines.emplace_back(Z, yy, kernel, dual);
    }
    return core;
}

}  // namespace pmussl::detail
