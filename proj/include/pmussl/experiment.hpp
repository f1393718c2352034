#pragma once

#include "pmussl/classifiers.hpp"
#include "pmussl/dataset.hpp"
#include "pmussl/ssl_engines.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace pmussl {

/// Derived protocol sizes: n_T = floor((n_K - 1) n_D / n_K), n_V = n_D - n_T,
/// n_U = n_T - n_L, and n_S = ceil(n_U / delta_U) + 1 step values s = 0..n_S-1
/// (the last one capped at n_U).
struct ProtocolSizes {
    Index n_D = 0, n_T = 0, n_V = 0, n_L = 0, n_U = 0, n_S = 0;
};
ProtocolSizes protocol_sizes(Index n_D, int n_K, int n_L, int delta_U);

struct Combination {
    EngineKind engine;
    ClassifierKind classifier;
    auto operator<=>(const Combination&) const = default;
};

struct ExperimentPlan {
    int n_K = 10;
    int n_Q = 20;
    int n_L = 24;
    int delta_U = 100;
    int n_R = 20;
    double B_min = 0.2;
    double B_max = 0.8;
    std::uint64_t master_seed = 0;
    std::vector<EngineKind> engines{std::begin(kAllEngineKinds), std::end(kAllEngineKinds)};
    std::vector<ClassifierKind> classifiers{std::begin(kAllClassifierKinds), std::end(kAllClassifierKinds)};
    /// Explicit (engine, classifier) list; empty means Approach 1 plus Approach 2.
    std::vector<Combination> combinations;
    /// Grid overrides keyed by classifier name (kNN, ...) or engine name
    /// (label_spreading: alpha, sigma_scale; tsvm: C, C_u_ratio).
    std::map<std::string, ParamGrid> grids;
    /// Step indices to evaluate; empty means 0..n_S-1, negative values count
    /// from the end (-1 is the final step).
    std::vector<int> steps;
    int cv_folds = 3;
    int self_training_batch = 0;  // 0: delta_U
    int max_tries = 10000;
    double ls_tol = 1e-6;
    int ls_max_iter = 1000;
    bool tsvm_balance = false;

    void validate() const;
    /// Approach 1: self_training with F2 = its base. Approach 2: tsvm and
    /// label_spreading crossed with every classifier.
    std::vector<Combination> resolved_combinations() const;
    std::vector<int> resolved_steps(Index n_S) const;
    ParamGrid grid_for(ClassifierKind kind, Index d) const;
    ParamGrid grid_for(EngineKind engine) const;
};

/// Fold id per sample: one shuffle, then contiguous slices.
std::vector<int> make_folds(Index n_D, int n_K, std::uint64_t seed);

struct LabelSplit {
    std::vector<Index> labeled;    // ascending ids
    std::vector<Index> unlabeled;  // ascending ids
    int tries = 0;
};

/// Rejection-samples an n_L subset of `train_ids` until every class in
/// `classes` holds a share in [B_min, B_max].
LabelSplit make_label_split(std::span<const Index> train_ids, std::span<const int> Y,
                            std::span<const int> classes, int n_L, double B_min, double B_max,
                            std::uint64_t seed, int max_tries = 10000);

/// Uniform sample of min(s * delta_U, |pool|) entries of a proximity-sorted
/// pool, returned in pool order (hence in proximity order).
std::vector<Index> select_unlabeled_step(std::span<const Index> sorted_pool, int s, int delta_U,
                                         std::uint64_t seed);

struct ResultKey {
    std::string engine, classifier;
    int k = 0, q = 0, s = 0, r = 0;
    auto operator<=>(const ResultKey&) const = default;
};

struct ResultRecord {
    ResultKey key;
    Index n_U_s = 0;
    double auc = 0.0;  // NaN marks a failed cell
    bool converged = true;
    double wall_ms = 0.0;
    std::string error;  // failure message, not serialized

    bool failed() const;
};

struct RunOptions {
    int jobs = 1;
    bool timing = false;  // record wall_ms; off keeps outputs byte-stable
    std::set<ResultKey> skip;  // already computed
    /// Called with the rows of each finished (k, q) task, from one thread at a time.
    std::function<void(const std::vector<ResultRecord>&)> on_task_done;
};

/// Runs every (combination, k, q, s, r) cell not in opt.skip. Results are
/// sorted by key.
std::vector<ResultRecord> run_plan(const FeatureDataset& data, const ExperimentPlan& plan,
                                   const RunOptions& opt = {});

/// Cell count of a plan: |combos| n_K n_Q sum over steps of (s == 0 ? 1 : n_R).
std::size_t planned_cell_count(const ExperimentPlan& plan, Index n_D);

struct AggregateRow {
    std::string engine, classifier;
    int s = 0;
    Index n_U_s = 0;
    double mean_auc = 0.0, p5_auc = 0.0, p95_auc = 0.0;
    std::size_t n_cells = 0;
    std::size_t n_failed = 0;
};

/// Mean and 5th/95th percentiles per (engine, classifier, s) over all k, q, r;
/// failed cells are counted but excluded.
std::vector<AggregateRow> aggregate(std::span<const ResultRecord> results);

void write_results(std::span<const ResultRecord> rows, const std::filesystem::path& path);
void append_results(std::span<const ResultRecord> rows, const std::filesystem::path& path);
std::vector<ResultRecord> read_results(const std::filesystem::path& path);
void write_aggregate(std::span<const AggregateRow> rows, const std::filesystem::path& path);

}  // namespace pmussl
