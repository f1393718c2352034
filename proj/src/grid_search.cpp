#include "pmussl/classifiers.hpp"

#include <algorithm>

namespace pmussl {

std::vector<HyperParams> expand_grid(const ParamGrid& grid) {
    std::vector<HyperParams> out{HyperParams{}};
    // std::map iterates keys sorted; appending each key's values innermost
    // makes the last key vary fastest.
    for (const auto& [key, values] : grid) {
        if (values.empty()) throw ConfigError("grid: parameter '" + key + "' has no values");
        std::vector<HyperParams> next;
        next.reserve(out.size() * values.size());
        for (const auto& partial : out)
            for (double v : values) {
                auto hp = partial;
                hp[key] = v;
                next.push_back(std::move(hp));
            }
        out = std::move(next);
    }
    return out;
}

ParamGrid default_grid(ClassifierKind kind, Index d) {
    const double inv_d = 1.0 / static_cast<double>(std::max<Index>(1, d));
    switch (kind) {
        case ClassifierKind::kNN: return {{"k", {1, 3, 5, 7}}};
        case ClassifierKind::DT: return {{"max_depth", {3, 5, 10}}};
        case ClassifierKind::GB: return {{"learning_rate", {0.05, 0.1}}, {"n_trees", {50, 100}}};
        case ClassifierKind::SVML: return {{"C", {0.1, 1, 10, 100}}};
        case ClassifierKind::SVMR:
            return {{"C", {0.1, 1, 10, 100}}, {"gamma", {0.01 * inv_d, 0.1 * inv_d, 1.0 * inv_d}}};
    }
    return {};
}

std::vector<int> stratified_folds(std::span<const int> Y, int folds) {
    if (folds < 2) throw ConfigError("stratified_folds: need at least 2 folds");
    const auto classes = distinct_classes(Y);
    std::vector<int> out(Y.size(), 0);
    bool loo = false;
    for (int c : classes)
        if (std::count(Y.begin(), Y.end(), c) < folds) loo = true;
    if (loo) {
        for (std::size_t i = 0; i < Y.size(); ++i) out[i] = static_cast<int>(i);
        return out;
    }
    for (int c : classes) {
        int next = 0;
        for (std::size_t i = 0; i < Y.size(); ++i)
            if (Y[i] == c) out[i] = next++ % folds;
    }
    return out;
}

GridSearchResult grid_search(ClassifierKind kind, const ParamGrid& grid, const Matrix& X,
                             std::span<const int> Y, int folds) {
    const auto points = expand_grid(grid);
    if (points.empty() || grid.empty()) throw ConfigError("grid_search: empty grid");
    if (X.rows() != static_cast<Index>(Y.size())) throw ShapeError("grid_search: X rows != labels");

    GridSearchResult res;
    const auto fold_of = stratified_folds(Y, folds);
    const int n_folds = *std::max_element(fold_of.begin(), fold_of.end()) + 1;
    res.leave_one_out = n_folds == static_cast<int>(Y.size()) && n_folds > folds;

    // fold index sets are shared by every grid point
    struct Split {
        Matrix Xtr, Xte;
        Labels ytr, yte;
        bool usable = false;
    };
    std::vector<Split> splits(static_cast<std::size_t>(n_folds));
    for (int f = 0; f < n_folds; ++f) {
        auto& sp = splits[static_cast<std::size_t>(f)];
        std::vector<Index> tr, te;
        for (std::size_t i = 0; i < Y.size(); ++i) (fold_of[i] == f ? te : tr).push_back(static_cast<Index>(i));
        sp.Xtr = X(tr, Eigen::all);
        sp.Xte = X(te, Eigen::all);
        for (auto i : tr) sp.ytr.push_back(Y[static_cast<std::size_t>(i)]);
        for (auto i : te) sp.yte.push_back(Y[static_cast<std::size_t>(i)]);
        sp.usable = !te.empty() && distinct_classes(sp.ytr).size() >= 2;
    }

    res.best_score = -1.0;
    for (const auto& hp : points) {
        ClassifierSpec spec{kind, hp};
        spec.validate();
        long correct = 0, total = 0;
        for (const auto& sp : splits) {
            if (!sp.usable) continue;
            const auto pred = fit(spec, sp.Xtr, sp.ytr).predict(sp.Xte);
            for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == sp.yte[i];
            total += static_cast<long>(pred.size());
        }
        const double acc = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
        res.scores.push_back(acc);
        if (acc > res.best_score) {
            res.best_score = acc;
            res.best = hp;
        }
    }
    return res;
}

}  // namespace pmussl
