#include "pmussl/experiment.hpp"

#include "pmussl/metrics.hpp"

#include "csv.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace pmussl {

ProtocolSizes protocol_sizes(Index n_D, int n_K, int n_L, int delta_U) {
    if (n_K < 2) throw ConfigError("n_K must be >= 2");
    if (n_K > n_D) throw ConfigError("n_K = " + std::to_string(n_K) + " exceeds n_D = " + std::to_string(n_D));
    if (delta_U < 1) throw ConfigError("delta_U must be >= 1");
    if (n_L < 1) throw ConfigError("n_L must be >= 1");
    ProtocolSizes p;
    p.n_D = n_D;
    p.n_T = (static_cast<Index>(n_K) - 1) * n_D / n_K;
    p.n_V = n_D - p.n_T;
    p.n_L = n_L;
    if (p.n_L >= p.n_T)
        throw ConfigError("n_L = " + std::to_string(n_L) + " must be below n_T = " + std::to_string(p.n_T));
    p.n_U = p.n_T - p.n_L;
    p.n_S = (p.n_U + delta_U - 1) / delta_U + 1;
    return p;
}

// ---------------------------------------------------------------- plan

void ExperimentPlan::validate() const {
    auto positive = [](int v, const char* name) {
        if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
    };
    if (n_K < 2) throw ConfigError("n_K must be >= 2");
    positive(n_Q, "n_Q");
    positive(n_L, "n_L");
    positive(delta_U, "delta_U");
    positive(n_R, "n_R");
    positive(max_tries, "max_tries");
    positive(ls_max_iter, "ls_max_iter");
    if (self_training_batch < 0) throw ConfigError("self_training_batch must be >= 0");
    if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
    if (!(B_min >= 0.0 && B_min <= B_max && B_max <= 1.0))
        throw ConfigError("balance range needs 0 <= B_min <= B_max <= 1");
    if (kClassCount * B_min > 1.0 + 1e-12) throw ConfigError("|E| * B_min exceeds 1: no balanced split exists");
    if (!(ls_tol > 0.0)) throw ConfigError("ls_tol must be > 0");
    if (engines.empty() && combinations.empty()) throw ConfigError("plan lists no engines");
    if (classifiers.empty() && combinations.empty()) throw ConfigError("plan lists no classifiers");
    for (const auto& [name, grid] : grids) {
        bool known = false;
        for (auto k : kAllClassifierKinds) known |= kind_name(k) == name;
        for (auto e : kAllEngineKinds) known |= engine_name(e) == name;
        if (!known) throw ConfigError("grid for unknown classifier or engine '" + name + "'");
        if (grid.empty()) throw ConfigError("grid '" + name + "' is empty");
    }
    if (resolved_combinations().empty()) throw ConfigError("plan resolves to no (engine, classifier) pairs");
}

std::vector<Combination> ExperimentPlan::resolved_combinations() const {
    if (!combinations.empty()) return combinations;
    std::vector<Combination> out;
    auto has = [&](EngineKind e) { return std::find(engines.begin(), engines.end(), e) != engines.end(); };
    for (auto e : kAllEngineKinds)
        if (has(e))
            for (auto c : classifiers) out.push_back({e, c});
    return out;
}

std::vector<int> ExperimentPlan::resolved_steps(Index n_S) const {
    std::vector<int> out;
    if (steps.empty()) {
        for (Index s = 0; s < n_S; ++s) out.push_back(static_cast<int>(s));
        return out;
    }
    for (int s : steps) {
        const Index v = s < 0 ? n_S + s : s;
        if (v < 0 || v >= n_S)
            throw ConfigError("step " + std::to_string(s) + " outside 0.." + std::to_string(n_S - 1));
        out.push_back(static_cast<int>(v));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ParamGrid ExperimentPlan::grid_for(ClassifierKind kind, Index d) const {
    if (auto it = grids.find(std::string(kind_name(kind))); it != grids.end()) return it->second;
    return default_grid(kind, d);
}

ParamGrid ExperimentPlan::grid_for(EngineKind engine) const {
    if (auto it = grids.find(std::string(engine_name(engine))); it != grids.end()) return it->second;
    switch (engine) {
        case EngineKind::LabelSpreading: return {{"alpha", {0.1, 0.2, 0.5}}, {"sigma_scale", {0.5, 1.0, 2.0}}};
        case EngineKind::Tsvm: return {{"C", {0.1, 1.0, 10.0}}, {"C_u_ratio", {1.0}}};
        case EngineKind::SelfTraining: return {};
    }
    return {};
}

// ---------------------------------------------------------------- splits

std::vector<int> make_folds(Index n_D, int n_K, std::uint64_t seed) {
    if (n_K < 2) throw ConfigError("make_folds: n_K must be >= 2");
    if (n_K > n_D) throw ConfigError("make_folds: n_K exceeds n_D");
    std::vector<Index> perm(static_cast<std::size_t>(n_D));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold(static_cast<std::size_t>(n_D));
    for (int f = 0; f < n_K; ++f) {
        const Index lo = f * n_D / n_K, hi = (f + 1) * n_D / n_K;
        for (Index t = lo; t < hi; ++t) fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(t)])] = f;
    }
    return fold;
}

LabelSplit make_label_split(std::span<const Index> train_ids, std::span<const int> Y,
                            std::span<const int> classes, int n_L, double B_min, double B_max,
                            std::uint64_t seed, int max_tries) {
    if (n_L < 1 || static_cast<std::size_t>(n_L) > train_ids.size())
        throw ConfigError("label split: n_L = " + std::to_string(n_L) + " does not fit " +
                          std::to_string(train_ids.size()) + " training samples");
    // class share bounds as counts
    const auto lo = static_cast<long>(std::ceil(n_L * B_min - 1e-9));
    const auto hi = static_cast<long>(std::floor(n_L * B_max + 1e-9));
    long sum_lo = 0, sum_hi = 0;
    for (int c : classes) {
        const long avail = std::count_if(train_ids.begin(), train_ids.end(),
                                         [&](Index i) { return Y[static_cast<std::size_t>(i)] == c; });
        const long cap = std::min(avail, hi);
        if (lo > cap)
            throw ConfigError("label split infeasible: class " + std::to_string(c) + " has " + std::to_string(avail) +
                              " training samples but needs " + std::to_string(lo) +
                              "; lower B_min or n_L");
        sum_lo += lo;
        sum_hi += cap;
    }
    if (sum_lo > n_L || sum_hi < n_L) throw ConfigError("label split infeasible: adjust B_min, B_max or n_L");

    std::mt19937_64 rng(seed);
    std::vector<Index> pool(train_ids.begin(), train_ids.end());
    std::vector<long> counts(classes.size());
    for (int t = 1; t <= max_tries; ++t) {
        std::shuffle(pool.begin(), pool.end(), rng);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n_L; ++i) {
            const int y = Y[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])];
            const auto it = std::find(classes.begin(), classes.end(), y);
            if (it != classes.end()) ++counts[static_cast<std::size_t>(it - classes.begin())];
        }
        bool ok = true;
        for (long c : counts) ok &= c >= lo && c <= hi;
        if (!ok) continue;
        LabelSplit out;
        out.tries = t;
        out.labeled.assign(pool.begin(), pool.begin() + n_L);
        out.unlabeled.assign(pool.begin() + n_L, pool.end());
        std::sort(out.labeled.begin(), out.labeled.end());
        std::sort(out.unlabeled.begin(), out.unlabeled.end());
        return out;
    }
    throw Error("label split: no balanced subset after " + std::to_string(max_tries) +
                " tries; widen [B_min, B_max] or change n_L");
}

std::vector<Index> select_unlabeled_step(std::span<const Index> sorted_pool, int s, int delta_U,
                                         std::uint64_t seed) {
    if (s < 0) throw ConfigError("step index must be >= 0");
    const auto n = sorted_pool.size();
    const auto want = std::min<std::size_t>(static_cast<std::size_t>(s) * static_cast<std::size_t>(delta_U), n);
    if (want == n) return {sorted_pool.begin(), sorted_pool.end()};
    std::vector<std::size_t> pos(n);
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    pos.resize(want);
    std::sort(pos.begin(), pos.end());
    std::vector<Index> out;
    out.reserve(want);
    for (auto p : pos) out.push_back(sorted_pool[p]);
    return out;
}

// ---------------------------------------------------------------- cells

bool ResultRecord::failed() const { return std::isnan(auc); }

std::size_t planned_cell_count(const ExperimentPlan& plan, Index n_D) {
    const auto sz = protocol_sizes(n_D, plan.n_K, plan.n_L, plan.delta_U);
    std::size_t per_kq = 0;
    for (int s : plan.resolved_steps(sz.n_S)) per_kq += s == 0 ? 1 : static_cast<std::size_t>(plan.n_R);
    return plan.resolved_combinations().size() * static_cast<std::size_t>(plan.n_K) *
           static_cast<std::size_t>(plan.n_Q) * per_kq;
}

namespace {

constexpr std::uint64_t kFoldTag = 0xf01d;
constexpr std::uint64_t kSplitTag = 0x5b117;

struct EngineOutput {
    Labels labels;
    bool converged = true;
    std::string error;
};

EngineOutput run_engine(EngineKind engine, const MixedSet& M, const HyperParams& hp,
                        const ClassifierSpec* base, const ExperimentPlan& plan) {
    EngineOutput out;
    auto get = [&](const char* key, double fallback) {
        auto it = hp.find(key);
        return it == hp.end() ? fallback : it->second;
    };
    switch (engine) {
        case EngineKind::SelfTraining: {
            const Index batch = plan.self_training_batch > 0 ? plan.self_training_batch : plan.delta_U;
            out.labels = self_train(*base, M, batch);
            break;
        }
        case EngineKind::LabelSpreading: {
            const double sigma = get("sigma_scale", 1.0) * default_sigma(M.X);
            const auto G = build_affinity(M.X, sigma);
            LabelSpreadOptions opt;
            opt.alpha = get("alpha", 0.2);
            opt.tol = plan.ls_tol;
            opt.max_iter = plan.ls_max_iter;
            auto r = label_spread(G, M.Y, opt);
            out.labels = std::move(r.labels);
            out.converged = r.converged;
            break;
        }
        case EngineKind::Tsvm: {
            const double C = get("C", 1.0);
            TsvmOptions opt;
            opt.balance = plan.tsvm_balance;
            out.labels = tsvm_multiclass(M, C, C * get("C_u_ratio", 1.0), Kernel{KernelType::Linear, 0.0}, opt).labels;
            break;
        }
    }
    return out;
}

// Transductive CV on the labeled rows: held-out rows act as unlabeled.
HyperParams engine_grid_search(EngineKind engine, const ParamGrid& grid, const Matrix& X,
                               std::span<const int> Y, const ExperimentPlan& plan) {
    const auto points = expand_grid(grid);
    if (points.empty() || grid.empty()) throw ConfigError(std::string(engine_name(engine)) + ": empty grid");
    const auto fold_of = stratified_folds(Y, plan.cv_folds);
    const int n_folds = *std::max_element(fold_of.begin(), fold_of.end()) + 1;
    double best = -1.0;
    HyperParams best_hp;
    for (const auto& hp : points) {
        long correct = 0, total = 0;
        for (int f = 0; f < n_folds; ++f) {
            std::vector<Index> tr, te;
            for (std::size_t i = 0; i < Y.size(); ++i) (fold_of[i] == f ? te : tr).push_back(static_cast<Index>(i));
            Labels ytr;
            for (auto i : tr) ytr.push_back(Y[static_cast<std::size_t>(i)]);
            if (te.empty() || distinct_classes(ytr).size() < 2) continue;
            const auto M = make_mixed_set(X(tr, Eigen::all), ytr, X(te, Eigen::all));
            try {
                const auto out = run_engine(engine, M, hp, nullptr, plan);
                for (std::size_t t = 0; t < te.size(); ++t)
                    correct += out.labels[tr.size() + t] == Y[static_cast<std::size_t>(te[t])];
            } catch (const Error&) {
                // a failing point scores zero on this fold
            }
            total += static_cast<long>(te.size());
        }
        const double acc = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
        if (acc > best) {
            best = acc;
            best_hp = hp;
        }
    }
    return best_hp;
}

Matrix full_scores(const TrainedModel& model, const Matrix& X, const std::vector<int>& classes) {
    const Matrix S = model.score(X);
    const double fill = S.size() > 0 ? S.minCoeff() - 1.0 : 0.0;
    Matrix out = Matrix::Constant(X.rows(), static_cast<Index>(classes.size()), fill);
    const auto& mc = model.classes();
    for (std::size_t c = 0; c < mc.size(); ++c) {
        const auto it = std::find(classes.begin(), classes.end(), mc[c]);
        out.col(static_cast<Index>(it - classes.begin())) = S.col(static_cast<Index>(c));
    }
    return out;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw Error("split invariant violated: " + what);
}

struct TaskContext {
    const FeatureDataset& data;
    const ExperimentPlan& plan;
    const RunOptions& opt;
    const std::vector<int>& fold_of;
    const std::vector<int>& classes;
    const std::vector<Combination>& combos;
    ProtocolSizes sizes;
};

std::vector<ResultRecord> run_task(const TaskContext& ctx, int k, int q) {
    const auto& plan = ctx.plan;
    const auto& X = ctx.data.X;
    const auto& Y = ctx.data.Y;
    const auto master = plan.master_seed;
    using clock = std::chrono::steady_clock;

    std::vector<Index> train_ids, val_ids;
    for (Index i = 0; i < X.rows(); ++i) (ctx.fold_of[static_cast<std::size_t>(i)] == k ? val_ids : train_ids).push_back(i);
    require(train_ids.size() + val_ids.size() == static_cast<std::size_t>(X.rows()), "I_T and I_V cover I_D");
    const auto nd = X.rows();
    require(static_cast<Index>(val_ids.size()) == nd / plan.n_K || static_cast<Index>(val_ids.size()) == (nd + plan.n_K - 1) / plan.n_K,
            "|I_V| is floor or ceil of n_D / n_K");

    const auto split = make_label_split(train_ids, Y, ctx.classes, plan.n_L, plan.B_min, plan.B_max,
                                        derive_seed(master, {kSplitTag, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(q)}),
                                        plan.max_tries);
    require(static_cast<int>(split.labeled.size()) == plan.n_L, "|I_L| = n_L");
    require(split.labeled.size() + split.unlabeled.size() == train_ids.size(), "I_L and I_U cover I_T");

    const Matrix X_L = X(split.labeled, Eigen::all);
    Labels Y_L;
    for (auto i : split.labeled) Y_L.push_back(Y[static_cast<std::size_t>(i)]);
    const Matrix X_V = X(val_ids, Eigen::all);
    Labels Y_V;
    for (auto i : val_ids) Y_V.push_back(Y[static_cast<std::size_t>(i)]);

    // proximity in z-scored training-fold coordinates
    const Standardizer st(X(train_ids, Eigen::all));
    const auto order = proximity_order(st.transform(X_L), st.transform(X(split.unlabeled, Eigen::all)));
    std::vector<Index> pool;
    pool.reserve(order.size());
    for (auto o : order) pool.push_back(split.unlabeled[static_cast<std::size_t>(o)]);

    // hyperparameters frozen per (k, q)
    std::map<ClassifierKind, ClassifierSpec> specs;
    std::map<ClassifierKind, std::string> spec_error;
    std::map<EngineKind, HyperParams> engine_hp;
    std::map<EngineKind, std::string> engine_error;
    for (const auto& cb : ctx.combos) {
        if (!specs.contains(cb.classifier) && !spec_error.contains(cb.classifier)) {
            try {
                const auto gs = grid_search(cb.classifier, plan.grid_for(cb.classifier, X.cols()), X_L, Y_L, plan.cv_folds);
                specs[cb.classifier] = ClassifierSpec{cb.classifier, gs.best};
            } catch (const Error& e) {
                spec_error[cb.classifier] = e.what();
            }
        }
        if (cb.engine != EngineKind::SelfTraining && !engine_hp.contains(cb.engine) && !engine_error.contains(cb.engine)) {
            try {
                engine_hp[cb.engine] = engine_grid_search(cb.engine, plan.grid_for(cb.engine), X_L, Y_L, plan);
            } catch (const Error& e) {
                engine_error[cb.engine] = e.what();
            }
        }
    }

    std::vector<ResultRecord> rows;
    for (int s : plan.resolved_steps(ctx.sizes.n_S)) {
        const int n_r = s == 0 ? 1 : plan.n_R;
        // once the selection exhausts the pool every r sees identical inputs
        std::map<std::pair<EngineKind, ClassifierKind>, ResultRecord> exhausted;
        for (int r = 0; r < n_r; ++r) {
            const auto sel = select_unlabeled_step(
                pool, s, plan.delta_U,
                derive_seed(master, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(q),
                                     static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(r)}));
            require(sel.size() == std::min<std::size_t>(static_cast<std::size_t>(s) * static_cast<std::size_t>(plan.delta_U), pool.size()),
                    "|I_U^(s)| = min(s delta_U, n_U)");
            const MixedSet M = make_mixed_set(X_L, Y_L, X(sel, Eigen::all));

            // transductive engines do not depend on F2
            std::map<EngineKind, EngineOutput> shared;
            for (const auto& cb : ctx.combos) {
                ResultKey key{std::string(engine_name(cb.engine)), std::string(kind_name(cb.classifier)), k, q, s, r};
                if (ctx.opt.skip.contains(key)) continue;
                const bool full = sel.size() == pool.size();
                if (full) {
                    if (auto it = exhausted.find({cb.engine, cb.classifier}); it != exhausted.end()) {
                        ResultRecord copy = it->second;
                        copy.key = std::move(key);
                        copy.wall_ms = 0.0;
                        rows.push_back(std::move(copy));
                        continue;
                    }
                }
                ResultRecord rec;
                rec.key = std::move(key);
                rec.n_U_s = static_cast<Index>(sel.size());
                const auto t0 = clock::now();
                try {
                    if (auto it = spec_error.find(cb.classifier); it != spec_error.end()) throw Error(it->second);
                    if (auto it = engine_error.find(cb.engine); it != engine_error.end()) throw Error(it->second);
                    const auto& spec = specs.at(cb.classifier);
                    EngineOutput eo;
                    if (cb.engine == EngineKind::SelfTraining) {
                        eo = run_engine(cb.engine, M, {}, &spec, plan);
                    } else {
                        auto it = shared.find(cb.engine);
                        if (it == shared.end()) {
                            try {
                                it = shared.emplace(cb.engine, run_engine(cb.engine, M, engine_hp.at(cb.engine), nullptr, plan)).first;
                            } catch (const Error& e) {
                                EngineOutput bad;
                                bad.error = e.what();
                                it = shared.emplace(cb.engine, std::move(bad)).first;
                            }
                        }
                        eo = it->second;
                    }
                    if (!eo.error.empty()) throw Error(eo.error);
                    for (Index i = 0; i < M.n_labeled; ++i)
                        require(eo.labels[static_cast<std::size_t>(i)] == Y_L[static_cast<std::size_t>(i)], "labeled rows keep their labels");
                    const auto f2 = fit(spec, M.X, eo.labels);
                    rec.auc = roc_auc_ovr(full_scores(f2, X_V, ctx.classes), Y_V, ctx.classes);
                    rec.converged = eo.converged;
                } catch (const Error& e) {
                    rec.auc = std::numeric_limits<double>::quiet_NaN();
                    rec.converged = false;
                    rec.error = e.what();
                }
                if (ctx.opt.timing)
                    rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
                if (full) exhausted.emplace(std::make_pair(cb.engine, cb.classifier), rec);
                rows.push_back(std::move(rec));
            }
        }
    }
    return rows;
}

}  // namespace

std::vector<ResultRecord> run_plan(const FeatureDataset& data, const ExperimentPlan& plan,
                                   const RunOptions& opt) {
    data.validate();
    plan.validate();
    for (int y : data.Y)
        if (y == kUnlabeled) throw Error("run: every feature row needs a ground-truth label");
    const auto sizes = protocol_sizes(data.size(), plan.n_K, plan.n_L, plan.delta_U);
    const auto classes = distinct_classes(data.Y);
    if (classes.size() < 2) throw Error("run: dataset holds fewer than two classes");
    const auto fold_of = make_folds(data.size(), plan.n_K, derive_seed(plan.master_seed, {kFoldTag}));
    const auto combos = plan.resolved_combinations();
    plan.resolved_steps(sizes.n_S);  // range check before any work
    const TaskContext ctx{data, plan, opt, fold_of, classes, combos, sizes};

    const auto steps = plan.resolved_steps(sizes.n_S);
    std::vector<std::pair<int, int>> tasks;
    for (int k = 0; k < plan.n_K; ++k)
        for (int q = 0; q < plan.n_Q; ++q) {
            bool done = true;
            for (std::size_t si = 0; si < steps.size() && done; ++si)
                for (int r = 0; r < (steps[si] == 0 ? 1 : plan.n_R) && done; ++r)
                    for (const auto& cb : combos)
                        if (!opt.skip.contains(ResultKey{std::string(engine_name(cb.engine)),
                                                         std::string(kind_name(cb.classifier)), k, q, steps[si], r})) {
                            done = false;
                            break;
                        }
            if (!done) tasks.emplace_back(k, q);
        }

    std::vector<ResultRecord> all;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto worker = [&] {
        while (true) {
            const auto t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            try {
                auto rows = run_task(ctx, tasks[t].first, tasks[t].second);
                std::lock_guard lock(mu);
                if (opt.on_task_done) opt.on_task_done(rows);
                all.insert(all.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = tasks.size();
                return;
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(tasks.size())));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    return all;
}

// ---------------------------------------------------------------- aggregation

std::vector<AggregateRow> aggregate(std::span<const ResultRecord> results) {
    std::map<std::tuple<std::string, std::string, int>, std::vector<const ResultRecord*>> groups;
    for (const auto& r : results) groups[{r.key.engine, r.key.classifier, r.key.s}].push_back(&r);
    std::vector<AggregateRow> out;
    for (const auto& [key, rows] : groups) {
        AggregateRow a;
        std::tie(a.engine, a.classifier, a.s) = key;
        std::vector<double> aucs;
        a.n_U_s = std::numeric_limits<Index>::max();
        for (const auto* r : rows) {
            a.n_U_s = std::min(a.n_U_s, r->n_U_s);
            if (r->failed()) ++a.n_failed;
            else aucs.push_back(r->auc);
        }
        if (aucs.empty()) {
            std::cerr << "warning: " << a.engine << '/' << a.classifier << " s=" << a.s
                      << " has no successful cells; skipped\n";
            continue;
        }
        a.n_cells = aucs.size();
        a.mean_auc = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
        a.p5_auc = percentile(aucs, 5.0);
        a.p95_auc = percentile(aucs, 95.0);
        out.push_back(std::move(a));
    }
    return out;
}

// ---------------------------------------------------------------- IO

namespace {

constexpr const char* kResultsHeader = "engine,classifier,k,q,s,r,n_U_s,auc,converged,wall_ms";
constexpr const char* kAggregateHeader = "engine,classifier,s,n_U_s,mean_auc,p5_auc,p95_auc,n_cells";

void put_rows(std::ostream& os, std::span<const ResultRecord> rows) {
    for (const auto& r : rows)
        os << r.key.engine << ',' << r.key.classifier << ',' << r.key.k << ',' << r.key.q << ','
           << r.key.s << ',' << r.key.r << ',' << r.n_U_s << ',' << format_double(r.auc) << ','
           << (r.converged ? 1 : 0) << ',' << format_double(r.wall_ms) << '\n';
}

long parse_int(std::string_view s, const std::string& where) {
    const double v = parse_double(s);
    if (v != std::floor(v)) throw IoError(where + ": expected an integer, got '" + std::string(s) + "'");
    return static_cast<long>(v);
}

}  // namespace

void write_results(std::span<const ResultRecord> rows, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        auto os = detail::open_out(tmp);
        os << kResultsHeader << '\n';
        put_rows(os, rows);
        if (!os) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void append_results(std::span<const ResultRecord> rows, const std::filesystem::path& path) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream os(path, std::ios::app);
    if (!os) throw IoError("cannot open '" + path.string() + "' for appending");
    if (fresh) os << kResultsHeader << '\n';
    put_rows(os, rows);
    os.flush();
    if (!os) throw IoError("append failed: " + path.string());
}

std::vector<ResultRecord> read_results(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line) || detail::chomp(line) != kResultsHeader)
        throw IoError(path.string() + ": unexpected results header");
    std::vector<ResultRecord> out;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto l = detail::chomp(line);
        if (l.empty()) continue;
        const auto f = detail::split_csv(l);
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (f.size() != 10) throw IoError(where + ": expected 10 fields");
        ResultRecord r;
        r.key.engine = std::string(f[0]);
        r.key.classifier = std::string(f[1]);
        r.key.k = static_cast<int>(parse_int(f[2], where));
        r.key.q = static_cast<int>(parse_int(f[3], where));
        r.key.s = static_cast<int>(parse_int(f[4], where));
        r.key.r = static_cast<int>(parse_int(f[5], where));
        r.n_U_s = parse_int(f[6], where);
        r.auc = parse_double(f[7]);
        r.converged = parse_int(f[8], where) != 0;
        r.wall_ms = parse_double(f[9]);
        out.push_back(std::move(r));
    }
    return out;
}

void write_aggregate(std::span<const AggregateRow> rows, const std::filesystem::path& path) {
    auto os = detail::open_out(path);
    os << kAggregateHeader << '\n';
    for (const auto& a : rows)
        os << a.engine << ',' << a.classifier << ',' << a.s << ',' << a.n_U_s << ','
           << format_double(a.mean_auc) << ',' << format_double(a.p5_auc) << ','
           << format_double(a.p95_auc) << ',' << a.n_cells << '\n';
    if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace pmussl
