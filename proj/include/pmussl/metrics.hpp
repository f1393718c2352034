#pragma once

#include "pmussl/common.hpp"

#include <span>
#include <vector>

namespace pmussl {

/// Binary ROC AUC by the rank statistic; tied scores get half credit.
/// Requires at least one positive and one negative.
double roc_auc_binary(std::span<const double> scores, std::span<const bool> positive);

/// Macro one-vs-rest AUC. Column c of `scores` belongs to classes[c]. Classes
/// without positives are skipped and reported through `skipped`. Throws when
/// fewer than two classes occur in `labels`.
double roc_auc_ovr(const Matrix& scores, std::span<const int> labels, std::span<const int> classes,
                   std::vector<int>* skipped = nullptr);

/// Empirical percentile with linear interpolation between order statistics
/// (q in [0, 100]).
double percentile(std::vector<double> values, double q);

}  // namespace pmussl
