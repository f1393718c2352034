#include "pmussl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace pmussl {

double roc_auc_binary(std::span<const double> scores, std::span<const bool> positive) {
    if (scores.size() != positive.size()) throw ShapeError("auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi + 1 < n && scores[idx[hi + 1]] == scores[idx[lo]]) ++hi;
        const double mid = 0.5 * static_cast<double>(lo + hi) + 1.0;  // 1-based midrank
        for (std::size_t t = lo; t <= hi; ++t)
            if (positive[idx[t]]) {
                rank_sum += mid;
                ++n_pos;
            }
        lo = hi + 1;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw Error("auc: need both positives and negatives");
    const double p = static_cast<double>(n_pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

double roc_auc_ovr(const Matrix& scores, std::span<const int> labels, std::span<const int> classes,
                   std::vector<int>* skipped) {
    if (scores.rows() != static_cast<Index>(labels.size()))
        throw ShapeError("auc: score rows != label count");
    if (scores.cols() != static_cast<Index>(classes.size()))
        throw ShapeError("auc: score columns != class count");
    for (int y : labels)
        if (std::find(classes.begin(), classes.end(), y) == classes.end())
            throw Error("auc: label " + std::to_string(y) + " is not among the scored classes");

    std::vector<int> present;
    for (int c : classes)
        if (std::find(labels.begin(), labels.end(), c) != labels.end()) present.push_back(c);
        else if (skipped) skipped->push_back(c);
    if (present.size() < 2) throw Error("auc: single-class validation fold");

    const std::size_t n = labels.size();
    std::vector<double> col(n);
    const std::unique_ptr<bool[]> flags(new bool[n]);
    double total = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (std::find(present.begin(), present.end(), classes[c]) == present.end()) continue;
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = scores(static_cast<Index>(i), static_cast<Index>(c));
            flags[i] = labels[i] == classes[c];
        }
        total += roc_auc_binary(col, std::span<const bool>(flags.get(), n));
    }
    return total / static_cast<double>(present.size());
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw Error("percentile: no values");
    if (!(q >= 0.0 && q <= 100.0)) throw ConfigError("percentile: q outside [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace pmussl
