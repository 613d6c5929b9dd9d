#pragma once

// The contrastive predictive objective: softmax over negative squared
// distances with one designated positive per prediction, mean-reduced over
// predictions. Hyperbolic d^2 by default; squared Euclidean distance for the
// baseline. An optional temperature divides d^2 (default 1, matching the
// objective as stated).

#include <cstddef>
#include <span>
#include <vector>

#include "hyperseq/autodiff.hpp"
#include "hyperseq/common.hpp"
#include "hyperseq/geometry.hpp"

namespace hyperseq::loss {

using ad::Tape;
using ad::Tensor;
using ad::Var;

struct EntryTag {
    int seq_id = 0;
    int step = 0;
    friend bool operator==(const EntryTag&, const EntryTag&) = default;
};

struct TaggedPoint {
    EntryTag tag;
    geom::PoincarePoint point;
};

/// Predictions plus the candidate pool they are scored against. Each
/// prediction has exactly one positive, identified by index into the pool;
/// every other pool entry acts as a negative.
struct ContrastiveBatch {
    std::vector<geom::PoincarePoint> predictions;
    std::vector<geom::PoincarePoint> targets;  // the pool
    std::vector<std::size_t> positive_index;   // one per prediction
    std::vector<EntryTag> prediction_tags;
    std::vector<EntryTag> target_tags;

    void validate() const {
        if (predictions.empty()) throw invalid_input("ContrastiveBatch: no predictions");
        if (targets.size() < 2)
            throw invalid_input("ContrastiveBatch: pool must hold >= 2 targets (no negatives)");
        if (positive_index.size() != predictions.size())
            throw invalid_input("ContrastiveBatch: positive_index size mismatch");
        const std::size_t dim = targets.front().dim();
        for (const auto& p : predictions)
            if (p.dim() != dim) throw invalid_input("ContrastiveBatch: dimension mismatch");
        for (const auto& p : targets)
            if (p.dim() != dim) throw invalid_input("ContrastiveBatch: dimension mismatch");
        for (std::size_t i : positive_index)
            if (i >= targets.size()) throw invalid_input("ContrastiveBatch: positive out of range");
    }

    /// Index-aligned construction: target i is the positive for prediction i.
    static ContrastiveBatch aligned(std::vector<geom::PoincarePoint> preds,
                                    std::vector<geom::PoincarePoint> tgts) {
        if (preds.size() != tgts.size())
            throw invalid_input("ContrastiveBatch::aligned: length mismatch");
        ContrastiveBatch b;
        b.predictions = std::move(preds);
        b.targets = std::move(tgts);
        b.positive_index.resize(b.predictions.size());
        for (std::size_t i = 0; i < b.positive_index.size(); ++i) b.positive_index[i] = i;
        b.validate();
        return b;
    }
};

/// Matches each prediction tag to the pool entry with the same tag.
inline std::vector<std::size_t> match_positives(const std::vector<EntryTag>& target_tags,
                                                const std::vector<EntryTag>& prediction_tags) {
    std::vector<std::size_t> idx;
    idx.reserve(prediction_tags.size());
    for (const EntryTag& tag : prediction_tags) {
        std::size_t found = target_tags.size();
        for (std::size_t j = 0; j < target_tags.size(); ++j) {
            if (target_tags[j] == tag) {
                if (found != target_tags.size())
                    throw invalid_input("match_positives: duplicate target tag");
                found = j;
            }
        }
        if (found == target_tags.size())
            throw invalid_input("match_positives: prediction has no matching target");
        idx.push_back(found);
    }
    return idx;
}

/// Builds the contrastive pool: the positive for prediction (s, t) is the
/// target with the same tag; negatives are every target of other sequences
/// plus the same sequence's targets at other steps, i.e. the rest of the
/// pool. Spatial negatives do not exist at this scale.
inline ContrastiveBatch assemble_negatives(const std::vector<TaggedPoint>& targets,
                                           const std::vector<TaggedPoint>& predictions) {
    if (targets.size() < 2)
        throw invalid_input("assemble_negatives: degenerate pool (need >= 2 targets)");
    ContrastiveBatch b;
    b.targets.reserve(targets.size());
    for (const auto& t : targets) {
        b.targets.push_back(t.point);
        b.target_tags.push_back(t.tag);
    }
    for (const auto& p : predictions) {
        b.predictions.push_back(p.point);
        b.prediction_tags.push_back(p.tag);
    }
    b.positive_index = match_positives(b.target_tags, b.prediction_tags);
    b.validate();
    return b;
}

/// Tape form of the objective; shared by training and the scalar evaluator.
/// loss = mean_i [ d^2(pred_i, pool[pos_i])/tau + logsumexp_j(-d^2(pred_i,
/// pool_j)/tau) ].
inline Var contrastive_loss(Tape& t, std::span<const Var> predictions,
                            std::span<const Var> pool,
                            std::span<const std::size_t> positive_index, double temperature,
                            bool euclidean_space) {
    if (pool.size() < 2) throw invalid_input("contrastive_loss: pool must hold >= 2 targets");
    if (predictions.empty()) throw invalid_input("contrastive_loss: no predictions");
    if (positive_index.size() != predictions.size())
        throw invalid_input("contrastive_loss: positive_index size mismatch");
    const double inv_tau = 1.0 / temperature;

    std::vector<Var> per_prediction;
    per_prediction.reserve(predictions.size());
    std::vector<Var> neg_scores(pool.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        Var pos_d2{};
        for (std::size_t j = 0; j < pool.size(); ++j) {
            Var d2{};
            if (euclidean_space) {
                Var diff = t.sub(predictions[i], pool[j]);
                d2 = t.sum(t.mul(diff, diff));
            } else {
                Var d = t.poincare_distance(predictions[i], pool[j]);
                d2 = t.mul(d, d);
            }
            d2 = t.scale(d2, inv_tau);
            if (j == positive_index[i]) pos_d2 = d2;
            neg_scores[j] = t.neg(d2);
        }
        per_prediction.push_back(t.add(pos_d2, t.logsumexp(t.pack(neg_scores))));
    }
    return t.scale(t.sum(t.pack(per_prediction)),
                   1.0 / static_cast<double>(per_prediction.size()));
}

/// Scalar evaluation of the same graph.
inline double contrastive_loss_value(const ContrastiveBatch& batch, double temperature = 1.0) {
    batch.validate();
    Tape t;
    std::vector<Var> preds, pool;
    preds.reserve(batch.predictions.size());
    pool.reserve(batch.targets.size());
    for (const auto& p : batch.predictions)
        preds.push_back(t.leaf(Tensor::from_vec(p.coords())));
    for (const auto& p : batch.targets) pool.push_back(t.leaf(Tensor::from_vec(p.coords())));
    Var l = contrastive_loss(t, preds, pool, batch.positive_index, temperature, false);
    return t.value(l)[0];
}

}  // namespace hyperseq::loss
