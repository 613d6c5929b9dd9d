#pragma once

// Synthetic hierarchical sequence generator. A complete b-ary taxonomy
// carries per-node feature prototypes; each sequence reveals the ancestry of
// a hidden leaf progressively, and the final step's label carries tunable
// leaf-level ambiguity while its parent stays certain.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperseq/common.hpp"
#include "hyperseq/metrics.hpp"

namespace hyperseq::synth {

struct GeneratorConfig {
    int branching = 3;
    int depth = 3;   // L
    int seq_len = 8; // N
    int d_in = 32;
    double ambiguity = 0.5;  // alpha: probability the final label is a random sibling
    double noise = 0.1;      // sigma of per-step feature noise
    std::uint64_t seed = 0;

    void validate() const {
        if (branching < 2) throw invalid_input("GeneratorConfig: branching must be >= 2");
        if (depth < 2) throw invalid_input("GeneratorConfig: depth must be >= 2");
        if (seq_len < 2) throw invalid_input("GeneratorConfig: seq_len must be >= 2");
        if (d_in < 1) throw invalid_input("GeneratorConfig: d_in must be >= 1");
        if (ambiguity < 0.0 || ambiguity > 1.0)
            throw invalid_input("GeneratorConfig: ambiguity outside [0,1]");
        if (noise < 0.0) throw invalid_input("GeneratorConfig: noise must be >= 0");
    }
};

/// Complete b-ary tree of the given depth, nodes in breadth-first order.
/// Prototypes: root at the origin, child = parent + gaussian(0, 1/depth), so
/// feature similarity mirrors tree proximity.
inline metrics::Taxonomy build_taxonomy(int branching, int levels, int d_in,
                                        std::uint64_t seed) {
    if (branching < 2 || levels < 1 || d_in < 1)
        throw invalid_input("build_taxonomy: bad parameters");
    Rng rng(derive_seed(seed, 1));
    std::vector<metrics::TaxonomyNode> nodes;
    metrics::TaxonomyNode root;
    root.id = 0;
    root.parent = -1;
    root.depth = 0;
    root.level_index = 0;
    root.prototype.assign(d_in, 0.0);
    nodes.push_back(root);

    std::vector<int> frontier{0};
    for (int depth = 1; depth <= levels; ++depth) {
        std::vector<int> next;
        int level_index = 0;
        for (int parent : frontier) {
            for (int b = 0; b < branching; ++b) {
                metrics::TaxonomyNode n;
                n.id = static_cast<int>(nodes.size());
                n.parent = parent;
                n.depth = depth;
                n.level_index = level_index++;
                n.prototype.resize(d_in);
                for (int i = 0; i < d_in; ++i)
                    n.prototype[i] =
                        nodes[parent].prototype[i] + rng.normal(0.0, 1.0 / depth);
                nodes[parent].children.push_back(n.id);
                next.push_back(n.id);
                nodes.push_back(n);
            }
        }
        frontier = std::move(next);
    }
    return metrics::Taxonomy(std::move(nodes), levels);
}

struct SequenceSample {
    int seq_id = 0;
    std::vector<Vec> features;      // seq_len rows of d_in
    std::vector<int> step_labels;   // per-step leaf ids (final one is realized)
    int leaf_id = -1;               // realized final label
    std::vector<int> level_labels;  // realized label's class index per level 1..L
    int intended_leaf = -1;         // the hidden l*
};

/// Context steps t = 1..N-1 emit the prototype of l*'s ancestor at depth
/// ceil(t*L/(N-1)) plus noise; the final step realizes the label (l* with
/// probability 1-alpha, otherwise uniform over l*'s sibling set) and emits
/// that leaf's prototype plus noise.
inline SequenceSample sample_sequence(const metrics::Taxonomy& tax, const GeneratorConfig& cfg,
                                      int index) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(index)));
    const int L = tax.levels();
    const int N = cfg.seq_len;
    const auto& leaves = tax.leaves();
    const int intended = leaves[rng.below(leaves.size())];

    SequenceSample s;
    s.seq_id = index;
    s.intended_leaf = intended;
    s.features.reserve(N);
    for (int t = 1; t <= N - 1; ++t) {
        const int depth = static_cast<int>(
            std::ceil(static_cast<double>(t) * L / static_cast<double>(N - 1)));
        const int anc = tax.ancestor_at(intended, depth);
        Vec f = tax.node(anc).prototype;
        for (double& v : f) v += rng.normal(0.0, cfg.noise);
        s.features.push_back(std::move(f));
        s.step_labels.push_back(intended);
    }

    int realized = intended;
    if (rng.uniform() < cfg.ambiguity) {
        const auto& siblings = tax.node(tax.node(intended).parent).children;
        realized = siblings[rng.below(siblings.size())];
    }
    Vec f = tax.node(realized).prototype;
    for (double& v : f) v += rng.normal(0.0, cfg.noise);
    s.features.push_back(std::move(f));
    s.step_labels.push_back(realized);
    s.leaf_id = realized;
    for (int level = 1; level <= L; ++level)
        s.level_labels.push_back(tax.node(tax.ancestor_at(realized, level)).level_index);
    return s;
}

/// A group of sequences presented to the model together.
struct SequenceBatch {
    std::vector<SequenceSample> rows;

    void validate(const metrics::Taxonomy& tax) const {
        for (const auto& r : rows) {
            if (r.features.size() < 2) throw invalid_input("SequenceBatch: N must be >= 2");
            if (!tax.is_leaf(r.leaf_id))
                throw invalid_input("SequenceBatch: label must be a leaf id");
        }
    }
};

// ---- JSONL dataset round trip ----

inline void export_dataset(const std::string& path, const std::vector<SequenceSample>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("export_dataset: cannot open " + path);
    for (const auto& r : rows) {
        nlohmann::json j{{"seq_id", r.seq_id},
                         {"features", r.features},
                         {"leaf_id", r.leaf_id},
                         {"level_labels", r.level_labels}};
        out << j.dump() << "\n";
    }
}

inline std::vector<SequenceSample> import_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("import_dataset: cannot open " + path);
    std::vector<SequenceSample> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw io_error("import_dataset: invalid JSON line");
        SequenceSample s;
        s.seq_id = j.at("seq_id").get<int>();
        s.features = j.at("features").get<std::vector<Vec>>();
        s.leaf_id = j.at("leaf_id").get<int>();
        s.level_labels = j.at("level_labels").get<std::vector<int>>();
        s.intended_leaf = -1;  // not part of the on-disk schema
        rows.push_back(std::move(s));
    }
    return rows;
}

/// Rebuilds the complete b-ary taxonomy implied by imported rows (prototypes
/// are not serialized and come back empty). Validates each row against the
/// reconstructed structure.
inline metrics::Taxonomy reconstruct_taxonomy(const std::vector<SequenceSample>& rows,
                                              int d_in) {
    if (rows.empty()) throw invalid_input("reconstruct_taxonomy: empty dataset");
    const int L = static_cast<int>(rows.front().level_labels.size());
    int branching = 2;
    for (const auto& r : rows)
        branching = std::max(branching, r.level_labels.empty() ? 2 : r.level_labels[0] + 1);
    metrics::Taxonomy tax = build_taxonomy(branching, L, d_in, 0);
    for (const auto& r : rows) {
        if (static_cast<int>(r.level_labels.size()) != L)
            throw invalid_input("reconstruct_taxonomy: inconsistent level counts");
        for (int level = 1; level <= L; ++level) {
            const int expect = tax.node(tax.ancestor_at(r.leaf_id, level)).level_index;
            if (expect != r.level_labels[level - 1])
                throw invalid_input("reconstruct_taxonomy: labels do not match structure");
        }
    }
    return tax;
}

}  // namespace hyperseq::synth
