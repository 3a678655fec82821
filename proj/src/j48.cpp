#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "ctxrec/error.hpp"
#include "ctxrec/learners.hpp"

namespace ctxrec {

namespace {

double entropy(double pos, double n) {
    if (n <= 0) return 0;
    double h = 0;
    for (double c : {pos, n - pos}) {
        if (c > 0) {
            const double p = c / n;
            h -= p * std::log2(p);
        }
    }
    return h;
}

struct SplitCandidate {
    int feature = -1;
    double threshold = 0;
    double gain = 0;
    double split_info = 0;
};

class TreeBuilder {
public:
    TreeBuilder(DesignView x, std::span<const int> y) : x_(x), y_(y), xlog2x_(x.rows + 1, 0.0) {
        for (std::size_t c = 2; c <= x.rows; ++c) xlog2x_[c] = static_cast<double>(c) * std::log2(static_cast<double>(c));
    }

    int build(std::vector<std::size_t> rows) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        double pos = 0;
        for (auto i : rows) pos += y_[i] != 0 ? 1 : 0;
        const double n = static_cast<double>(rows.size());
        nodes_[id].positives = pos;
        nodes_[id].count = n;
        if (rows.size() < 2 || pos == 0 || pos == n) return id;

        const auto split = choose_split(rows, pos);
        if (split.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto i : rows)
            (x_.at(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(i);
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(std::move(left));
        const int r = build(std::move(right));
        nodes_[id].feature = split.feature;
        nodes_[id].threshold = split.threshold;
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    std::vector<TreeNode> take() { return std::move(nodes_); }

private:
    // Best information-gain threshold per feature, then the C4.5 rule:
    // highest gain ratio among features whose gain is at least average.
    // Zero-gain splits are admitted so that interactions such as XOR,
    // invisible to a one-step lookahead, can still be grown.
    SplitCandidate choose_split(const std::vector<std::size_t>& rows, double pos) const {
        const double n = static_cast<double>(rows.size());
        const double parent = entropy(pos, n);
        std::vector<SplitCandidate> per_feature;
        // Order among equal values is irrelevant: thresholds only fall between distinct values.
        std::vector<std::pair<double, int>> sorted(rows.size());
        for (std::size_t j = 0; j < x_.cols; ++j) {
            for (std::size_t k = 0; k < rows.size(); ++k) sorted[k] = {x_.at(rows[k], j), y_[rows[k]] != 0 ? 1 : 0};
            std::sort(sorted.begin(), sorted.end());
            SplitCandidate best;
            best.gain = -std::numeric_limits<double>::infinity();
            const std::size_t total = sorted.size();
            const auto total_pos = static_cast<std::size_t>(pos);
            std::size_t left_pos = 0;
            for (std::size_t k = 0; k + 1 < total; ++k) {
                left_pos += static_cast<std::size_t>(sorted[k].second);
                const double a = sorted[k].first;
                const double b = sorted[k + 1].first;
                if (!(a < b)) continue;
                const std::size_t nl = k + 1, nr = total - nl, right_pos = total_pos - left_pos;
                // Weighted child entropy n_c·H_c = n_c·log2 n_c - sum over classes of m·log2 m.
                const double children = xlog2x_[nl] - xlog2x_[left_pos] - xlog2x_[nl - left_pos] + xlog2x_[nr] -
                                        xlog2x_[right_pos] - xlog2x_[nr - right_pos];
                const double gain = parent - children / n;
                if (gain > best.gain + 1e-12) {
                    double mid = a + (b - a) / 2;
                    if (!(mid < b)) mid = a;
                    best.feature = static_cast<int>(j);
                    best.threshold = mid;
                    best.gain = std::max(0.0, gain);
                    best.split_info = entropy(static_cast<double>(nl), n);
                }
            }
            if (best.feature >= 0) per_feature.push_back(best);
        }
        if (per_feature.empty()) return {};

        double gain_sum = 0;
        for (const auto& c : per_feature) gain_sum += c.gain;
        const double average = gain_sum / static_cast<double>(per_feature.size());
        SplitCandidate chosen;
        double best_ratio = -1;
        for (const auto& c : per_feature) {
            if (c.gain < average - 1e-3) continue;
            const double ratio = c.split_info > 0 ? c.gain / c.split_info : 0.0;
            if (ratio > best_ratio + 1e-12) {
                best_ratio = ratio;
                chosen = c;
            }
        }
        return chosen;
    }

    DesignView x_;
    std::span<const int> y_;
    std::vector<double> xlog2x_;  // c·log2(c) for integer counts
    std::vector<TreeNode> nodes_;
};

class Pruner {
public:
    Pruner(std::vector<TreeNode>& nodes, double cf) : nodes_(nodes), cf_(cf) {}

    // Returns the estimated (pessimistic) error count of the subtree.
    double prune(int id) {
        TreeNode& node = nodes_[static_cast<std::size_t>(id)];
        const double errors = std::min(node.positives, node.count - node.positives);
        const double as_leaf = errors + pessimistic_extra_errors(node.count, errors, cf_);
        if (node.is_leaf()) return as_leaf;
        const double as_tree = prune(node.left) + prune(node.right);
        if (as_leaf <= as_tree + 0.1) {
            TreeNode& n = nodes_[static_cast<std::size_t>(id)];
            n.feature = -1;
            n.left = n.right = -1;
            return as_leaf;
        }
        return as_tree;
    }

private:
    std::vector<TreeNode>& nodes_;
    double cf_;
};

// Drops nodes cut off by pruning, keeping pre-order layout.
std::vector<TreeNode> compact(const std::vector<TreeNode>& nodes) {
    std::vector<TreeNode> out;
    auto copy = [&](auto&& self, int id) -> int {
        const int at = static_cast<int>(out.size());
        out.push_back(nodes[static_cast<std::size_t>(id)]);
        if (!out[static_cast<std::size_t>(at)].is_leaf()) {
            const int l = self(self, nodes[static_cast<std::size_t>(id)].left);
            const int r = self(self, nodes[static_cast<std::size_t>(id)].right);
            out[static_cast<std::size_t>(at)].left = l;
            out[static_cast<std::size_t>(at)].right = r;
        }
        return at;
    };
    copy(copy, 0);
    return out;
}

}  // namespace

double pessimistic_extra_errors(double count, double errors, double cf) {
    if (count <= 0) return 0;
    if (errors < 1) {
        const double base = count * (1 - std::pow(cf, 1 / count));
        if (errors == 0) return base;
        return base + errors * (pessimistic_extra_errors(count, 1, cf) - base);
    }
    if (errors + 0.5 >= count) return std::max(count - errors, 0.0);
    const double z = boost::math::quantile(boost::math::normal(), 1 - cf);
    const double f = (errors + 0.5) / count;
    const double r = (f + z * z / (2 * count) +
                      z * std::sqrt(f / count - f * f / count + z * z / (4 * count * count))) /
                     (1 + z * z / count);
    return r * count - errors;
}

TreeModel fit_j48(DesignView x, std::span<const int> labels, double prune_confidence) {
    require(labels.size() == x.rows && x.rows >= 1, "j48: label length must match rows");
    require(prune_confidence > 0, "j48: prune confidence must be positive");
    std::vector<std::size_t> rows(x.rows);
    std::iota(rows.begin(), rows.end(), 0);
    TreeBuilder builder(x, labels);
    builder.build(std::move(rows));
    TreeModel model;
    model.nodes = builder.take();
    if (prune_confidence < 1.0) {
        Pruner(model.nodes, prune_confidence).prune(0);
        model.nodes = compact(model.nodes);
    }
    return model;
}

double TreeModel::predict(std::span<const double> row) const {
    std::size_t id = 0;
    while (!nodes[id].is_leaf())
        id = static_cast<std::size_t>(row[static_cast<std::size_t>(nodes[id].feature)] <= nodes[id].threshold
                                          ? nodes[id].left
                                          : nodes[id].right);
    return nodes[id].laplace();
}

std::size_t TreeModel::depth() const {
    auto walk = [&](auto&& self, int id) -> std::size_t {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        if (n.is_leaf()) return 0;
        return 1 + std::max(self(self, n.left), self(self, n.right));
    };
    return nodes.empty() ? 0 : walk(walk, 0);
}

std::size_t TreeModel::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::vector<int> TreeModel::structure() const {
    std::vector<int> out;
    auto walk = [&](auto&& self, int id) -> void {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        out.push_back(n.feature);
        if (!n.is_leaf()) {
            self(self, n.left);
            self(self, n.right);
        }
    };
    if (!nodes.empty()) walk(walk, 0);
    return out;
}

}  // namespace ctxrec
