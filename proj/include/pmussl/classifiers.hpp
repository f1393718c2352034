#pragma once

#include "pmussl/common.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmussl {

enum class ClassifierKind { kNN, DT, GB, SVML, SVMR };

inline constexpr ClassifierKind kAllClassifierKinds[] = {
    ClassifierKind::SVMR, ClassifierKind::SVML, ClassifierKind::GB, ClassifierKind::DT,
    ClassifierKind::kNN};

std::string_view kind_name(ClassifierKind k) noexcept;
ClassifierKind kind_from_name(std::string_view name);

using HyperParams = std::map<std::string, double>;

/// Classifier family plus hyperparameters:
///   kNN: k | DT: max_depth, min_leaf | GB: n_trees, depth, learning_rate,
///   min_leaf | SVML: C | SVMR: C, gamma.
/// Missing keys take documented defaults.
struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::kNN;
    HyperParams params;

    double get(const std::string& key) const;  // value or default
    void validate() const;
    std::string describe() const;
};

/// Per-feature z-score. Constant features get unit scale.
class Standardizer {
public:
    Standardizer() = default;
    explicit Standardizer(const Matrix& X) { fit(X); }

    void fit(const Matrix& X);
    Matrix transform(const Matrix& X) const;
    Matrix inverse_transform(const Matrix& Z) const;

    const Vector& mean() const noexcept { return mean_; }
    const Vector& scale() const noexcept { return scale_; }
    Index dim() const noexcept { return mean_.size(); }

private:
    Vector mean_;
    Vector scale_;
};

namespace detail {
class ModelCore {
public:
    virtual ~ModelCore() = default;
    /// Scores for standardized inputs, one column per class in class order.
    virtual Matrix score(const Matrix& Z) const = 0;
};
}  // namespace detail

/// Immutable fitted model; cheap to copy and safe to share across threads.
class TrainedModel {
public:
    TrainedModel(ClassifierSpec spec, Standardizer std, std::vector<int> classes,
                 std::shared_ptr<const detail::ModelCore> core);

    /// n x |classes|, higher = more likely. kNN: vote fractions, DT/GB:
    /// probabilities, SVM: one-vs-rest margins.
    Matrix score(const Matrix& X) const;
    /// Argmax of score; ties go to the lowest class code.
    Labels predict(const Matrix& X) const;

    const std::vector<int>& classes() const noexcept { return classes_; }
    Index dim() const noexcept { return standardizer_.dim(); }
    const ClassifierSpec& spec() const noexcept { return spec_; }
    const Standardizer& standardizer() const noexcept { return standardizer_; }
    const detail::ModelCore& core() const noexcept { return *core_; }

private:
    void check_dim(const Matrix& X) const;

    ClassifierSpec spec_;
    Standardizer standardizer_;
    std::vector<int> classes_;
    std::shared_ptr<const detail::ModelCore> core_;
};

/// Labels must be class codes (no -1) with at least two distinct classes.
TrainedModel fit(const ClassifierSpec& spec, const Matrix& X, std::span<const int> Y);

/// Row-wise argmax over `classes` (ties: lowest code).
Labels argmax_labels(const Matrix& scores, const std::vector<int>& classes);

/// Sorted distinct labels.
std::vector<int> distinct_classes(std::span<const int> Y);

// ---------------------------------------------------------------- search

/// Parameter grid: each key maps to the list of candidate values.
/// Iteration order: keys sorted, last key varies fastest, values in listed
/// order. The first grid point with the best score wins.
using ParamGrid = std::map<std::string, std::vector<double>>;

std::vector<HyperParams> expand_grid(const ParamGrid& grid);

/// Default grid for a classifier on d-dimensional features.
ParamGrid default_grid(ClassifierKind kind, Index d);

/// Stratified folds over a labeled set: samples of each class, in order,
/// dealt round-robin. Falls back to leave-one-out when any class has fewer
/// than `folds` samples. Returns the fold id of each sample.
std::vector<int> stratified_folds(std::span<const int> Y, int folds);

struct GridSearchResult {
    HyperParams best;
    double best_score = 0.0;
    std::vector<double> scores;  // per grid point, expand_grid order
    bool leave_one_out = false;
};

/// Maximizes stratified CV accuracy over the grid.
GridSearchResult grid_search(ClassifierKind kind, const ParamGrid& grid, const Matrix& X,
                             std::span<const int> Y, int folds = 3);

}  // namespace pmussl
