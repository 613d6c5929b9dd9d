#pragma once

// Evaluation: plain and hierarchical accuracies over a rooted taxonomy,
// radius-percentile level selection, and threshold retrieval counts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperseq/common.hpp"
#include "hyperseq/geometry.hpp"

namespace hyperseq::metrics {

struct TaxonomyNode {
    int id = -1;
    int parent = -1;  // -1 marks the root
    int depth = 0;    // root is 0
    int level_index = 0;
    std::vector<int> children;
    Vec prototype;  // feature prototype, filled by the data generator
};

/// Rooted labeled tree; leaves are exactly the depth-L nodes.
class Taxonomy {
public:
    Taxonomy(std::vector<TaxonomyNode> nodes, int levels)
        : nodes_(std::move(nodes)), levels_(levels) {
        if (levels_ < 1) throw invalid_input("Taxonomy: levels must be >= 1");
        int roots = 0;
        level_counts_.assign(static_cast<std::size_t>(levels_) + 1, 0);
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const TaxonomyNode& n = nodes_[i];
            if (n.id != static_cast<int>(i)) throw invalid_input("Taxonomy: ids must be dense");
            if (n.parent < 0) {
                ++roots;
                if (n.depth != 0) throw invalid_input("Taxonomy: root depth must be 0");
            } else {
                if (n.parent >= static_cast<int>(nodes_.size()))
                    throw invalid_input("Taxonomy: dangling parent");
                if (n.depth != nodes_[n.parent].depth + 1)
                    throw invalid_input("Taxonomy: depth must increase by one");
            }
            if (n.depth > levels_) throw invalid_input("Taxonomy: node deeper than leaf level");
            if (n.depth == levels_) leaves_.push_back(n.id);
            ++level_counts_[n.depth];
        }
        if (roots != 1) throw invalid_input("Taxonomy: exactly one root required");
    }

    int levels() const { return levels_; }
    std::size_t size() const { return nodes_.size(); }
    const TaxonomyNode& node(int id) const {
        if (id < 0 || id >= static_cast<int>(nodes_.size()))
            throw invalid_input("Taxonomy: invalid node id");
        return nodes_[id];
    }
    const std::vector<int>& leaves() const { return leaves_; }
    bool is_leaf(int id) const { return node(id).depth == levels_; }

    int num_classes_at(int level) const {
        if (level < 1 || level > levels_) throw invalid_input("Taxonomy: invalid level");
        return level_counts_[level];
    }

    /// Ancestor of `id` at the given depth (depth <= node depth).
    int ancestor_at(int id, int depth) const {
        const TaxonomyNode* n = &node(id);
        if (depth > n->depth) throw invalid_input("Taxonomy: ancestor deeper than node");
        while (n->depth > depth) n = &nodes_[n->parent];
        return n->id;
    }

    int node_at(int level, int class_index) const {
        for (const TaxonomyNode& n : nodes_)
            if (n.depth == level && n.level_index == class_index) return n.id;
        throw invalid_input("Taxonomy: no node for level/class");
    }

    std::vector<TaxonomyNode>& mutable_nodes() { return nodes_; }

private:
    std::vector<TaxonomyNode> nodes_;
    std::vector<int> leaves_;
    std::vector<int> level_counts_;
    int levels_;
};

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.empty() || pred.size() != truth.size())
        throw invalid_input("accuracy: empty or mismatched inputs");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

namespace detail {

inline double hier_acc(const std::vector<int>& pred, const std::vector<int>& truth,
                       const Taxonomy& tax, bool top_down) {
    if (pred.empty() || pred.size() != truth.size())
        throw invalid_input("hierarchical accuracy: empty or mismatched inputs");
    const int L = tax.levels();
    double weight_sum = 0.0;
    std::vector<double> w(static_cast<std::size_t>(L) + 1, 0.0);
    for (int level = 1; level <= L; ++level) {
        w[level] = top_down ? std::pow(0.5, level - 1) : std::pow(0.5, L - level);
        weight_sum += w[level];
    }
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!tax.is_leaf(pred[i]) || !tax.is_leaf(truth[i]))
            throw invalid_input("hierarchical accuracy: ids must be leaves");
        double s = 0.0;
        for (int level = 1; level <= L; ++level)
            if (tax.ancestor_at(pred[i], level) == tax.ancestor_at(truth[i], level))
                s += w[level];
        total += s / weight_sum;
    }
    return total / static_cast<double>(pred.size());
}

}  // namespace detail

/// Leaf weight 1, halving toward the root; ancestor matches counted per
/// level independently; normalized to [0, 1].
inline double bottom_up_hier_acc(const std::vector<int>& pred, const std::vector<int>& truth,
                                 const Taxonomy& tax) {
    return detail::hier_acc(pred, truth, tax, false);
}

/// Top-level weight 1, halving toward the leaves.
inline double top_down_hier_acc(const std::vector<int>& pred, const std::vector<int>& truth,
                                const Taxonomy& tax) {
    return detail::hier_acc(pred, truth, tax, true);
}

struct LevelThresholds {
    double r_low = 0.0;
    double r_high = 0.0;
};

/// Nearest-rank percentile at a fraction in (0, 1].
inline double nearest_rank_percentile(Vec values, double fraction) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::size_t rank =
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return values[rank - 1];
}

/// 33rd/66th nearest-rank percentiles of prediction radii.
inline LevelThresholds compute_level_thresholds(const Vec& radii) {
    if (radii.size() < 3) throw invalid_input("compute_level_thresholds: need >= 3 radii");
    return LevelThresholds{nearest_rank_percentile(radii, 0.33),
                           nearest_rank_percentile(radii, 0.66)};
}

/// Maps a radius to a hierarchy level in {1..L}: below r_low the most
/// general level, above r_high the most specific, the inclusive band
/// [r_low, r_high] split across the interior levels (the whole band is the
/// middle level for L = 3).
inline int select_level(double radius, const LevelThresholds& thr, int L) {
    if (L < 1) throw invalid_input("select_level: L must be >= 1");
    if (L == 1) return 1;
    if (radius < thr.r_low) return 1;
    if (radius > thr.r_high) return L;
    if (L == 2) return 2;
    if (L == 3) return 2;
    const double band = thr.r_high - thr.r_low;
    if (band <= 0.0) return 1 + L / 2;
    int idx = static_cast<int>((radius - thr.r_low) / band * (L - 2));
    idx = std::clamp(idx, 0, L - 3);
    return 2 + idx;
}

/// Mean distance from a query set to a pool; the retrieval threshold is
/// computed once per experiment from this.
inline double mean_query_pool_distance(const std::vector<geom::PoincarePoint>& queries,
                                       const std::vector<geom::PoincarePoint>& pool) {
    if (queries.empty() || pool.empty())
        throw invalid_input("mean_query_pool_distance: empty inputs");
    double s = 0.0;
    for (const auto& q : queries)
        for (const auto& p : pool) s += geom::distance(q, p);
    return s / static_cast<double>(queries.size() * pool.size());
}

inline int retrieved_within_threshold(const geom::PoincarePoint& query,
                                      const std::vector<geom::PoincarePoint>& pool,
                                      double threshold) {
    if (pool.empty()) throw invalid_input("retrieved_within_threshold: empty pool");
    int count = 0;
    for (const auto& p : pool)
        if (geom::distance(query, p) <= threshold) ++count;
    return count;
}

/// One per-epoch record of the training/evaluation stream.
struct MetricsReport {
    int epoch = 0;
    std::string split;
    double loss = 0.0;
    double acc = 0.0;
    double td_acc = 0.0;
    double bu_acc = 0.0;
    double mean_radius = 0.0;
    double radius_p33 = 0.0;
    double radius_p66 = 0.0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"epoch", epoch},
                              {"split", split},
                              {"loss", loss},
                              {"acc", acc},
                              {"td_acc", td_acc},
                              {"bu_acc", bu_acc},
                              {"mean_radius", mean_radius},
                              {"radius_p33", radius_p33},
                              {"radius_p66", radius_p66}};
    }

    static MetricsReport from_json(const nlohmann::json& j) {
        MetricsReport r;
        r.epoch = j.at("epoch").get<int>();
        r.split = j.at("split").get<std::string>();
        r.loss = j.at("loss").get<double>();
        r.acc = j.at("acc").get<double>();
        r.td_acc = j.at("td_acc").get<double>();
        r.bu_acc = j.at("bu_acc").get<double>();
        r.mean_radius = j.at("mean_radius").get<double>();
        r.radius_p33 = j.at("radius_p33").get<double>();
        r.radius_p66 = j.at("radius_p66").get<double>();
        return r;
    }
};

}  // namespace hyperseq::metrics
