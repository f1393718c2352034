#pragma once

// Internal model cores behind TrainedModel. Inputs are standardized
// features; class targets are 0-based indices into the model's class list.

#include "pmussl/classifiers.hpp"
#include "pmussl/svm.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace pmussl::detail {

/// Feature orderings computed once and shared by every tree of an ensemble.
struct SortedColumns {
    explicit SortedColumns(const Matrix& Z);
    std::vector<std::vector<int>> order;  // per feature, ascending (ties: index)
};

struct TreeNode {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf = -1;  // index into leaf values
};

struct Tree {
    std::vector<TreeNode> nodes;
    int leaf_of(const double* row, Index stride) const;
};

/// Classification tree (Gini) with class-fraction leaves.
struct ClassTreeResult {
    Tree tree;
    std::vector<Vector> leaf_prob;
};
ClassTreeResult grow_class_tree(const Matrix& Z, const SortedColumns& sorted,
                                const std::vector<int>& y, int n_classes, int max_depth,
                                int min_leaf);

/// Per-feature quantile bins (at most kMaxBins). Row i of feature f falls in
/// bin b = #{cuts[f] < x}; a split "x <= cuts[f][b]" sends bins 0..b left.
struct BinnedColumns {
    static constexpr int kMaxBins = 128;
    explicit BinnedColumns(const Matrix& Z);
    Index rows = 0;
    std::vector<std::vector<double>> cuts;
    std::vector<std::vector<double>> lo, hi;  // per feature and bin, training value range
    std::vector<std::uint8_t> bins;  // feature-major, rows * features
    std::vector<std::size_t> offset;  // first histogram cell of each feature; back() = total
    std::vector<std::size_t> splittable;  // features with at least one cut
};

/// Histogram buffers reused across the trees of one ensemble.
struct HistogramScratch {
    std::vector<double> g;
    std::vector<int> count;
};

/// Least-squares regression tree on residuals g over binned features, leaves
/// set to scale * sum(g) / sum(h) (Newton step).
struct RegTreeResult {
    Tree tree;
    std::vector<double> leaf_value;
};
RegTreeResult grow_reg_tree(const BinnedColumns& cols, const Vector& g, const Vector& h,
                            double scale, int max_depth, int min_leaf, HistogramScratch& scratch);

std::shared_ptr<const ModelCore> fit_knn(const Matrix& Z, const std::vector<int>& y, int n_classes,
                                         int k);
std::shared_ptr<const ModelCore> fit_tree(const Matrix& Z, const std::vector<int>& y,
                                          int n_classes, int max_depth, int min_leaf);
std::shared_ptr<const ModelCore> fit_gb(const Matrix& Z, const std::vector<int>& y, int n_classes,
                                        int n_trees, int depth, double learning_rate, int min_leaf);
std::shared_ptr<const ModelCore> fit_svm(const Matrix& Z, const std::vector<int>& y,
                                         int n_classes, const Kernel& kernel, double C);

/// One-vs-rest SVM core; exposed for margin checks in tests.
class SvmCore : public ModelCore {
public:
    std::vector<BinarySvm> machines;
    Matrix score(const Matrix& Z) const override;
};

}  // namespace pmussl::detail
