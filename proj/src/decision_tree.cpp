#include "models.hpp"

#include <algorithm>
#include <numeric>

namespace pmussl::detail {

SortedColumns::SortedColumns(const Matrix& Z) {
    const auto n = static_cast<int>(Z.rows());
    order.resize(static_cast<std::size_t>(Z.cols()));
    for (Index f = 0; f < Z.cols(); ++f) {
        auto& o = order[static_cast<std::size_t>(f)];
        o.resize(static_cast<std::size_t>(n));
        std::iota(o.begin(), o.end(), 0);
        std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return Z(a, f) < Z(b, f); });
    }
}

int Tree::leaf_of(const double* row, Index stride) const {
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
        const auto& nd = nodes[static_cast<std::size_t>(at)];
        at = row[nd.feature * stride] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(at)].leaf;
}

namespace {

// Level-wise CART growth over presorted columns. Every level costs one pass
// over each sorted column regardless of the number of open nodes. Splits
// tie-break on the lowest feature index, then the lowest threshold.
//
// Policy supplies: width (stats per node), add(acc, i), gain(left, total,
// nl, n), splittable(total, n).
template <class Policy>
std::pair<Tree, std::vector<std::vector<double>>> grow(const Matrix& Z, const SortedColumns& sorted,
                                                       const Policy& pol, int max_depth,
                                                       int min_leaf) {
    const auto n = static_cast<int>(Z.rows());
    const auto d = static_cast<int>(Z.cols());
    const int W = pol.width();
    min_leaf = std::max(min_leaf, 1);

    Tree tree;
    std::vector<std::vector<double>> totals;  // per node
    std::vector<int> counts;
    std::vector<int> node_of(static_cast<std::size_t>(n), 0);

    tree.nodes.push_back({});
    totals.emplace_back(static_cast<std::size_t>(W), 0.0);
    counts.push_back(n);
    for (int i = 0; i < n; ++i) pol.add(totals[0].data(), i);

    std::vector<int> level{0};
    for (int depth = 0; depth < max_depth && !level.empty(); ++depth) {
        std::vector<int> open;
        for (int nd : level) {
            const auto u = static_cast<std::size_t>(nd);
            if (counts[u] >= 2 * min_leaf && pol.splittable(totals[u].data(), counts[u]))
                open.push_back(nd);
        }
        if (open.empty()) break;

        std::vector<int> slot_of(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < open.size(); ++s) slot_of[static_cast<std::size_t>(open[s])] = static_cast<int>(s);

        const std::size_t S = open.size();
        std::vector<double> best_gain(S, 1e-12);
        std::vector<int> best_feat(S, -1);
        std::vector<double> best_thr(S, 0.0);
        std::vector<double> acc(S * static_cast<std::size_t>(W));
        std::vector<int> cnt(S);
        std::vector<double> last(S);
        std::vector<char> seen(S);

        for (int f = 0; f < d; ++f) {
            std::fill(acc.begin(), acc.end(), 0.0);
            std::fill(cnt.begin(), cnt.end(), 0);
            std::fill(seen.begin(), seen.end(), 0);
            for (int i : sorted.order[static_cast<std::size_t>(f)]) {
                const int s = slot_of[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])];
                if (s < 0) continue;
                const auto su = static_cast<std::size_t>(s);
                const double v = Z(i, f);
                const int total_n = counts[static_cast<std::size_t>(open[su])];
                if (seen[su] && v > last[su] && cnt[su] >= min_leaf && total_n - cnt[su] >= min_leaf) {
                    const double g = pol.gain(&acc[su * static_cast<std::size_t>(W)],
                                              totals[static_cast<std::size_t>(open[su])].data(),
                                              cnt[su], total_n);
                    if (g > best_gain[su]) {
                        best_gain[su] = g;
                        best_feat[su] = f;
                        double thr = last[su] + 0.5 * (v - last[su]);
                        if (!(thr < v)) thr = last[su];
                        best_thr[su] = thr;
                    }
                }
                pol.add(&acc[su * static_cast<std::size_t>(W)], i);
                ++cnt[su];
                last[su] = v;
                seen[su] = 1;
            }
        }

        std::vector<int> next;
        std::vector<int> left_of(S, -1);
        for (std::size_t s = 0; s < S; ++s) {
            if (best_feat[s] < 0) continue;
            const int nd = open[s];
            const int l = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back({});
            tree.nodes.push_back({});
            totals.emplace_back(static_cast<std::size_t>(W), 0.0);
            totals.emplace_back(static_cast<std::size_t>(W), 0.0);
            counts.push_back(0);
            counts.push_back(0);
            auto& parent = tree.nodes[static_cast<std::size_t>(nd)];
            parent.feature = best_feat[s];
            parent.threshold = best_thr[s];
            parent.left = l;
            parent.right = l + 1;
            left_of[s] = l;
            next.push_back(l);
            next.push_back(l + 1);
        }
        for (int i = 0; i < n; ++i) {
            const int s = slot_of[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])];
            if (s < 0 || left_of[static_cast<std::size_t>(s)] < 0) continue;
            const auto& parent = tree.nodes[static_cast<std::size_t>(open[static_cast<std::size_t>(s)])];
            const int child = Z(i, parent.feature) <= parent.threshold ? parent.left : parent.right;
            node_of[static_cast<std::size_t>(i)] = child;
            pol.add(totals[static_cast<std::size_t>(child)].data(), i);
            ++counts[static_cast<std::size_t>(child)];
        }
        level = std::move(next);
    }

    std::vector<std::vector<double>> leaves;
    for (std::size_t u = 0; u < tree.nodes.size(); ++u) {
        if (tree.nodes[u].feature >= 0) continue;
        tree.nodes[u].leaf = static_cast<int>(leaves.size());
        auto t = totals[u];
        t.push_back(static_cast<double>(counts[u]));
        leaves.push_back(std::move(t));
    }
    return {std::move(tree), std::move(leaves)};
}

struct GiniPolicy {
    const std::vector<int>& y;
    int K;
    int width() const { return K; }
    void add(double* acc, int i) const { acc[y[static_cast<std::size_t>(i)]] += 1.0; }
    bool splittable(const double* tot, int) const {
        int nz = 0;
        for (int c = 0; c < K; ++c) nz += tot[c] > 0.0;
        return nz > 1;
    }
    double gain(const double* left, const double* tot, int nl, int n) const {
        const int nr = n - nl;
        double sl = 0.0, sr = 0.0, st = 0.0;
        for (int c = 0; c < K; ++c) {
            const double r = tot[c] - left[c];
            sl += left[c] * left[c];
            sr += r * r;
            st += tot[c] * tot[c];
        }
        return sl / nl + sr / nr - st / n;
    }
};

class TreeCore : public ModelCore {
public:
    ClassTreeResult fitted;
    Matrix score(const Matrix& Z) const override {
        const auto K = fitted.leaf_prob.empty() ? 0 : fitted.leaf_prob.front().size();
        Matrix S(Z.rows(), K);
        for (Index i = 0; i < Z.rows(); ++i)
            S.row(i) = fitted.leaf_prob[static_cast<std::size_t>(fitted.tree.leaf_of(Z.data() + i, Z.rows()))].transpose();
        return S;
    }
};

}  // namespace

ClassTreeResult grow_class_tree(const Matrix& Z, const SortedColumns& sorted,
                                const std::vector<int>& y, int n_classes, int max_depth,
                                int min_leaf) {
    GiniPolicy pol{y, n_classes};
    auto [tree, leaves] = grow(Z, sorted, pol, max_depth, min_leaf);
    ClassTreeResult out;
    out.tree = std::move(tree);
    for (const auto& lv : leaves) {
        Vector p(n_classes);
        const double cnt = lv.back();
        for (int c = 0; c < n_classes; ++c) p[c] = lv[static_cast<std::size_t>(c)] / cnt;
        out.leaf_prob.push_back(std::move(p));
    }
    return out;
}

std::shared_ptr<const ModelCore> fit_tree(const Matrix& Z, const std::vector<int>& y,
                                          int n_classes, int max_depth, int min_leaf) {
    SortedColumns sorted(Z);
    auto core = std::make_shared<TreeCore>();
    core->fitted = grow_class_tree(Z, sorted, y, n_classes, max_depth, min_leaf);
    return core;
}

}  // namespace pmussl::detail
