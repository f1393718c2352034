#pragma once

#include "pmussl/classifiers.hpp"
#include "pmussl/svm.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace pmussl {

enum class EngineKind { SelfTraining, Tsvm, LabelSpreading };

inline constexpr EngineKind kAllEngineKinds[] = {EngineKind::SelfTraining, EngineKind::Tsvm,
                                                 EngineKind::LabelSpreading};

std::string_view engine_name(EngineKind e) noexcept;  // self_training, tsvm, label_spreading
EngineKind engine_from_name(std::string_view name);

/// D_M = [X_L; X_U] with Y_M = [Y_L; -1 ... -1]. The unlabeled block is
/// expected in proximity order (see proximity_order).
struct MixedSet {
    Matrix X;
    Labels Y;
    Index n_labeled = 0;

    Index size() const noexcept { return X.rows(); }
    Index n_unlabeled() const noexcept { return X.rows() - n_labeled; }
    Labels labeled_labels() const { return {Y.begin(), Y.begin() + n_labeled}; }

    void validate() const;
};

MixedSet make_mixed_set(const Matrix& X_L, std::span<const int> Y_L, const Matrix& X_U);

/// Indices of the rows of X_U sorted by ascending distance to the nearest row
/// of X_L (ties: lower index).
std::vector<Index> proximity_order(const Matrix& X_L, const Matrix& X_U);

// ---------------------------------------------------------------- self-training

/// Batched self-training: fit on the current pool, pseudo-label the next
/// `batch` unlabeled rows, append them, repeat. Returns labels for all rows.
Labels self_train(const ClassifierSpec& base, const MixedSet& M, Index batch);

// ---------------------------------------------------------------- label spreading

struct AffinityGraph {
    Matrix W;       // symmetric, zero diagonal
    Vector degree;  // D_ii
    Matrix Z;       // D^-1/2 W D^-1/2
    double sigma = 0.0;
};

/// sqrt(1/2) times the median pairwise Euclidean distance of the rows of X
/// (after z-scoring when `standardize` is set).
double default_sigma(const Matrix& X, bool standardize = true);

/// w_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)), w_ii = 0. Rows are z-scored
/// first when `standardize` is set.
AffinityGraph build_affinity(const Matrix& X, double sigma, bool standardize = true);

struct LabelSpreadOptions {
    double alpha = 0.2;
    double tol = 1e-6;
    int max_iter = 1000;
    bool keep_history = false;  // record max-abs change per iteration
};

struct LabelSpreadResult {
    Labels labels;
    Matrix F;                     // n x |classes|
    std::vector<int> classes;     // column order of F
    bool converged = false;
    int iterations = 0;
    std::vector<double> changes;  // when keep_history
};

LabelSpreadResult label_spread(const AffinityGraph& G, std::span<const int> Y_M,
                               const LabelSpreadOptions& opt = {});

/// (1 - alpha) (I - alpha Z)^-1 F_0 by a direct solve.
Matrix label_spread_closed_form(const AffinityGraph& G, std::span<const int> Y_M, double alpha);

// ---------------------------------------------------------------- TSVM

struct TsvmOptions {
    int max_swaps_per_stage = 200;
    int max_candidates = 8;   // pair retrains tried per round
    double anneal_factor = 2.0;
    bool balance = false;     // initial assignment keeps the labeled class ratio
    SmoOptions smo{};
};

struct TsvmSwap {
    int stage = 0;
    Index i = 0, j = 0;  // unlabeled positions
    double before = 0.0, after = 0.0;
};

struct TsvmResult {
    BinarySvm model;
    std::vector<double> labels;  // +-1 per unlabeled row
    std::vector<TsvmSwap> swaps;
    double objective = 0.0;
};

/// C sum_L hinge + C_u sum_U min(hinge(+1), hinge(-1)) + ||w||, evaluated
/// for decision values f_L, f_U of a model with ||w||^2 = wnorm_sq.
double tsvm_objective(const Vector& f_L, std::span<const double> y_L, const Vector& f_U, double C,
                      double C_u, double wnorm_sq);

/// Label-switching transductive SVM with C_u annealed geometrically from
/// C_u / 100. Swaps are accepted only when they lower the objective.
TsvmResult tsvm_binary(const Matrix& X_L, std::span<const double> y_L, const Matrix& X_U, double C,
                       double C_u, const Kernel& kernel, const TsvmOptions& opt = {});

struct TsvmMulticlassResult {
    Labels labels;        // all rows; labeled rows unchanged
    Matrix decision;      // n x |classes|; two classes share one machine as [f, -f]
    std::vector<int> classes;
};

/// One-vs-rest over tsvm_binary; per-row class is the argmax decision value.
TsvmMulticlassResult tsvm_multiclass(const MixedSet& M, double C, double C_u, const Kernel& kernel,
                                     const TsvmOptions& opt = {});

}  // namespace pmussl
