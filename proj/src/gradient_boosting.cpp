#include "models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmussl::detail {

BinnedColumns::BinnedColumns(const Matrix& Z) : rows(Z.rows()) {
    const auto n = static_cast<std::size_t>(Z.rows());
    cuts.resize(static_cast<std::size_t>(Z.cols()));
    lo.resize(cuts.size());
    hi.resize(cuts.size());
    bins.resize(n * static_cast<std::size_t>(Z.cols()));
    std::vector<double> v(n);
    for (Index f = 0; f < Z.cols(); ++f) {
        for (std::size_t i = 0; i < n; ++i) v[i] = Z(static_cast<Index>(i), f);
        std::sort(v.begin(), v.end());
        auto& c = cuts[static_cast<std::size_t>(f)];
        const auto distinct = static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
        // cut after distinct value j sits halfway to value j + 1
        std::vector<std::size_t> after;
        if (distinct <= static_cast<std::size_t>(kMaxBins)) {
            for (std::size_t j = 0; j + 1 < distinct; ++j) after.push_back(j);
        } else {
            for (int j = 1; j < kMaxBins; ++j) after.push_back(static_cast<std::size_t>(j) * distinct / kMaxBins);
            after.erase(std::unique(after.begin(), after.end()), after.end());
        }
        for (auto j : after) c.push_back(0.5 * (v[j] + v[j + 1]));
        auto& l = lo[static_cast<std::size_t>(f)];
        auto& h = hi[static_cast<std::size_t>(f)];
        l.assign(c.size() + 1, std::numeric_limits<double>::infinity());
        h.assign(c.size() + 1, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i) {
            const double x = Z(static_cast<Index>(i), f);
            const auto b = static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), x) - c.begin());
            bins[static_cast<std::size_t>(f) * n + i] = static_cast<std::uint8_t>(b);
            l[b] = std::min(l[b], x);
            h[b] = std::max(h[b], x);
        }
    }
    offset.assign(1, 0);
    for (std::size_t f = 0; f < cuts.size(); ++f) {
        offset.push_back(offset.back() + cuts[f].size() + 1);
        if (!cuts[f].empty()) splittable.push_back(f);
    }
}

// Level-wise growth on histograms of (sum g, count) per node, feature and
// bin. Ties keep the lowest feature, then the lowest cut.
RegTreeResult grow_reg_tree(const BinnedColumns& cols, const Vector& g, const Vector& h,
                            double scale, int max_depth, int min_leaf, HistogramScratch& scratch) {
    const auto n = static_cast<std::size_t>(cols.rows);
    const std::size_t width = cols.offset.back();  // histogram cells per node
    min_leaf = std::max(min_leaf, 1);

    RegTreeResult out;
    auto& nodes = out.tree.nodes;
    nodes.push_back({});
    std::vector<double> gsum{g.sum()};
    std::vector<int> count{static_cast<int>(n)};
    std::vector<int> node_of(n, 0);

    std::vector<int> level{0};
    for (int depth = 0; depth < max_depth && !level.empty(); ++depth) {
        std::vector<int> slot_of(nodes.size(), -1);
        std::vector<int> open;
        for (int nd : level)
            if (count[static_cast<std::size_t>(nd)] >= 2 * min_leaf) {
                slot_of[static_cast<std::size_t>(nd)] = static_cast<int>(open.size());
                open.push_back(nd);
            }
        if (open.empty()) break;
        const std::size_t S = open.size();
        std::vector<int> row_slot(n);
        for (std::size_t i = 0; i < n; ++i) row_slot[i] = slot_of[static_cast<std::size_t>(node_of[i])];

        auto& hg = scratch.g;
        auto& hc = scratch.count;
        hg.assign(S * width, 0.0);
        hc.assign(S * width, 0);
        for (std::size_t f : cols.splittable) {
            const std::uint8_t* bf = &cols.bins[f * n];
            for (std::size_t i = 0; i < n; ++i) {
                const int s = row_slot[i];
                if (s < 0) continue;
                const std::size_t at = static_cast<std::size_t>(s) * width + cols.offset[f] + bf[i];
                hg[at] += g[static_cast<Index>(i)];
                ++hc[at];
            }
        }

        std::vector<double> best_gain(S, 1e-12);
        std::vector<int> best_feat(S, -1), best_bin(S, -1), best_next(S, -1);
        for (std::size_t s = 0; s < S; ++s) {
            const auto nd = static_cast<std::size_t>(open[s]);
            const double G = gsum[nd];
            const int N = count[nd];
            const double base = G * G / N;
            for (std::size_t f : cols.splittable) {
                const std::size_t nb = cols.cuts[f].size();
                const std::size_t off = s * width + cols.offset[f];
                double gl = 0.0;
                int nl = 0;
                int pending = -1;  // last non-empty bin, awaiting the next one
                double pending_gain = 0.0;
                for (std::size_t b = 0; b <= nb; ++b) {
                    if (hc[off + b] == 0) continue;
                    if (pending >= 0) {
                        if (pending_gain > best_gain[s]) {
                            best_gain[s] = pending_gain;
                            best_feat[s] = static_cast<int>(f);
                            best_bin[s] = pending;
                            best_next[s] = static_cast<int>(b);
                        }
                        pending = -1;
                    }
                    if (b == nb) break;
                    gl += hg[off + b];
                    nl += hc[off + b];
                    const int nr = N - nl;
                    if (nl < min_leaf) continue;
                    if (nr < min_leaf) break;
                    const double gr = G - gl;
                    pending_gain = gl * gl / nl + gr * gr / nr - base;
                    pending = static_cast<int>(b);
                }
            }
        }

        std::vector<int> next;
        for (std::size_t s = 0; s < S; ++s) {
            if (best_feat[s] < 0) continue;
            const int l = static_cast<int>(nodes.size());
            nodes.push_back({});
            nodes.push_back({});
            gsum.insert(gsum.end(), {0.0, 0.0});
            count.insert(count.end(), {0, 0});
            auto& parent = nodes[static_cast<std::size_t>(open[s])];
            parent.feature = best_feat[s];
            // halfway across the gap as seen from this node
            const auto bf = static_cast<std::size_t>(best_feat[s]);
            parent.threshold = 0.5 * (cols.hi[bf][static_cast<std::size_t>(best_bin[s])] +
                                      cols.lo[bf][static_cast<std::size_t>(best_next[s])]);
            parent.left = l;
            parent.right = l + 1;
            next.push_back(l);
            next.push_back(l + 1);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const int s = row_slot[i];
            if (s < 0 || best_feat[static_cast<std::size_t>(s)] < 0) continue;
            const auto& parent = nodes[static_cast<std::size_t>(open[static_cast<std::size_t>(s)])];
            const int b = cols.bins[static_cast<std::size_t>(parent.feature) * n + i];
            const int child = b <= best_bin[static_cast<std::size_t>(s)] ? parent.left : parent.right;
            node_of[i] = child;
            gsum[static_cast<std::size_t>(child)] += g[static_cast<Index>(i)];
            ++count[static_cast<std::size_t>(child)];
        }
        level = std::move(next);
    }

    std::vector<double> hsum(nodes.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) hsum[static_cast<std::size_t>(node_of[i])] += h[static_cast<Index>(i)];
    for (std::size_t u = 0; u < nodes.size(); ++u) {
        if (nodes[u].feature >= 0) continue;
        nodes[u].leaf = static_cast<int>(out.leaf_value.size());
        out.leaf_value.push_back(hsum[u] > 1e-12 ? scale * gsum[u] / hsum[u] : 0.0);
    }
    return out;
}

namespace {

void softmax_rows(Matrix& F) {
    for (Index i = 0; i < F.rows(); ++i) {
        const double mx = F.row(i).maxCoeff();
        F.row(i) = (F.row(i).array() - mx).exp();
        F.row(i) /= F.row(i).sum();
    }
}

class GbCore : public ModelCore {
public:
    Vector init;  // log prior per class
    double rate = 0.1;
    // trees[round * K + k]
    std::vector<RegTreeResult> trees;

    Matrix score(const Matrix& Z) const override {
        const Index K = init.size();
        Matrix F(Z.rows(), K);
        for (Index i = 0; i < Z.rows(); ++i) F.row(i) = init.transpose();
        for (std::size_t t = 0; t < trees.size(); ++t) {
            const auto k = static_cast<Index>(t % static_cast<std::size_t>(K));
            const auto& tr = trees[t];
            for (Index i = 0; i < Z.rows(); ++i)
                F(i, k) += rate * tr.leaf_value[static_cast<std::size_t>(tr.tree.leaf_of(Z.data() + i, Z.rows()))];
        }
        softmax_rows(F);
        return F;
    }
};

}  // namespace

// Multinomial deviance boosting: one least-squares tree per class and round
// on the residual y_k - p_k, leaves set by a one-step Newton update.
std::shared_ptr<const ModelCore> fit_gb(const Matrix& Z, const std::vector<int>& y, int K,
                                        int n_trees, int depth, double learning_rate, int min_leaf) {
    const Index n = Z.rows();
    auto core = std::make_shared<GbCore>();
    core->rate = learning_rate;
    core->init = Vector::Zero(K);
    for (int c : y) core->init[c] += 1.0;
    for (Index k = 0; k < K; ++k)
        core->init[k] = std::log(std::max(core->init[k], 1e-3) / static_cast<double>(n));

    if (n_trees <= 0) return core;

    const BinnedColumns cols(Z);
    HistogramScratch scratch;
    Matrix F(n, K);
    for (Index i = 0; i < n; ++i) F.row(i) = core->init.transpose();
    const double scale = static_cast<double>(K - 1) / static_cast<double>(K);
    Vector g(n), h(n);
    core->trees.reserve(static_cast<std::size_t>(n_trees) * static_cast<std::size_t>(K));
    for (int round = 0; round < n_trees; ++round) {
        Matrix P = F;
        softmax_rows(P);
        for (Index k = 0; k < K; ++k) {
            for (Index i = 0; i < n; ++i) {
                const double target = y[static_cast<std::size_t>(i)] == k ? 1.0 : 0.0;
                g[i] = target - P(i, k);
                h[i] = std::abs(g[i]) * (1.0 - std::abs(g[i]));
            }
            auto tr = grow_reg_tree(cols, g, h, scale, depth, min_leaf, scratch);
            for (Index i = 0; i < n; ++i)
                F(i, k) += learning_rate * tr.leaf_value[static_cast<std::size_t>(tr.tree.leaf_of(Z.data() + i, n))];
            core->trees.push_back(std::move(tr));
        }
    }
    return core;
}

}  // namespace pmussl::detail
