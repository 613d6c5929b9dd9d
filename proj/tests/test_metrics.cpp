#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hyperseq/metrics.hpp"
#include "hyperseq/synthdata.hpp"
#include "test_support.hpp"

using namespace hyperseq;
using namespace hyperseq::metrics;
using geom::PoincarePoint;

namespace {

// Brute-force hierarchical scorer, written against the ancestor arrays
// directly; shares nothing with the implementation.
double brute_hier(int pred, int truth, const Taxonomy& tax, bool top_down) {
    const int L = tax.levels();
    double num = 0.0, den = 0.0;
    for (int level = 1; level <= L; ++level) {
        double w = 1.0;
        if (top_down)
            for (int i = 1; i < level; ++i) w *= 0.5;
        else
            for (int i = level; i < L; ++i) w *= 0.5;
        den += w;
        int a = pred, b = truth;
        while (tax.node(a).depth > level) a = tax.node(a).parent;
        while (tax.node(b).depth > level) b = tax.node(b).parent;
        if (a == b) num += w;
    }
    return num / den;
}

}  // namespace

TEST_CASE("plain accuracy") {
    CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
    CHECK(accuracy({1, 2, 3}, {4, 5, 6}) == 0.0);
    CHECK(accuracy({1, 2, 3, 4}, {1, 9, 3, 9}) == 0.5);
    CHECK_THROWS_AS(accuracy({}, {}), invalid_input);
    CHECK_THROWS_AS(accuracy({1}, {1, 2}), invalid_input);
}

TEST_CASE("hierarchical accuracies: hand-worked cases") {
    auto t2 = synth::build_taxonomy(2, 2, 2, 0);
    // nodes: 0 root; 1,2 level-1; 3,4 children of 1; 5,6 children of 2
    CHECK(bottom_up_hier_acc({3}, {3}, t2) == 1.0);
    CHECK(top_down_hier_acc({3}, {3}, t2) == 1.0);
    // wrong leaf, same parent: bottom-up (0*1 + 1*0.5)/1.5 = 1/3
    CHECK_THAT(bottom_up_hier_acc({4}, {3}, t2), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
    // top-down (1 + 0*0.5)/1.5 = 2/3
    CHECK_THAT(top_down_hier_acc({4}, {3}, t2), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
    // different parent: nothing matches
    CHECK(bottom_up_hier_acc({5}, {3}, t2) == 0.0);

    auto t3 = synth::build_taxonomy(2, 3, 2, 0);
    // leaf under node 1 with only the top level correct: 1/(1+0.5+0.25) = 4/7
    const int truth = t3.node(t3.node(t3.node(1).children[0]).children[0]).id;
    const int pred = t3.node(t3.node(t3.node(1).children[1]).children[1]).id;
    CHECK_THAT(top_down_hier_acc({pred}, {truth}, t3),
               Catch::Matchers::WithinAbs(4.0 / 7.0, 1e-15));

    CHECK_THROWS_AS(top_down_hier_acc({1}, {3}, t2), invalid_input);   // non-leaf id
    CHECK_THROWS_AS(top_down_hier_acc({99}, {3}, t2), invalid_input);  // invalid id
}

TEST_CASE("hierarchical accuracies: brute force over a branching-2 depth-2 taxonomy") {
    auto tax = synth::build_taxonomy(2, 2, 2, 1);
    for (int pred : tax.leaves()) {
        for (int truth : tax.leaves()) {
            const double bu = bottom_up_hier_acc({pred}, {truth}, tax);
            const double td = top_down_hier_acc({pred}, {truth}, tax);
            CHECK(bu == brute_hier(pred, truth, tax, false));  // bit-for-bit
            CHECK(td == brute_hier(pred, truth, tax, true));
            CHECK(bu >= 0.0);
            CHECK(td <= 1.0);
            CHECK((bu == 1.0) == (pred == truth));
            CHECK((td == 1.0) == (pred == truth));
            // ancestor matches are prefix-closed from the root, so top-
            // weighted credit dominates leaf-weighted credit
            CHECK(bu <= td);
        }
    }
    auto t3 = synth::build_taxonomy(3, 3, 2, 2);
    for (int pred : t3.leaves())
        for (int truth : t3.leaves()) {
            CHECK(bottom_up_hier_acc({pred}, {truth}, t3) == brute_hier(pred, truth, t3, false));
            CHECK(top_down_hier_acc({pred}, {truth}, t3) == brute_hier(pred, truth, t3, true));
        }
}

TEST_CASE("hierarchical accuracies reduce to plain accuracy at a single level") {
    auto t1 = synth::build_taxonomy(4, 1, 2, 3);
    std::vector<int> pred{1, 2, 3, 4}, truth{1, 3, 3, 2};
    const double plain = accuracy(pred, truth);
    CHECK(bottom_up_hier_acc(pred, truth, t1) == plain);
    CHECK(top_down_hier_acc(pred, truth, t1) == plain);
}

TEST_CASE("uniform random leaf predictions: closed-form expectation") {
    // For a uniform leaf prediction on branching-3 depth-3, the level-l
    // ancestor matches with probability 3^-l, so
    //   E[td] = (1/3 + (1/2)(1/9) + (1/4)(1/27)) / (7/4) = 43/189.
    auto tax = synth::build_taxonomy(3, 3, 2, 4);
    double total = 0.0;
    std::size_t n = 0;
    for (int pred : tax.leaves())
        for (int truth : tax.leaves()) {
            total += top_down_hier_acc({pred}, {truth}, tax);
            ++n;
        }
    CHECK_THAT(total / static_cast<double>(n),
               Catch::Matchers::WithinAbs(43.0 / 189.0, 1e-12));

    // Monte Carlo cross-check
    Rng rng(61);
    double mc = 0.0;
    const int trials = 20000;
    for (int i = 0; i < trials; ++i) {
        int pred = tax.leaves()[rng.below(27)];
        int truth = tax.leaves()[rng.below(27)];
        mc += top_down_hier_acc({pred}, {truth}, tax);
    }
    CHECK_THAT(mc / trials, Catch::Matchers::WithinAbs(43.0 / 189.0, 5e-3));

    // plain accuracy of uniform predictions is 1/27 in expectation
    double acc_total = 0.0;
    for (int pred : tax.leaves())
        for (int truth : tax.leaves()) acc_total += (pred == truth) ? 1.0 : 0.0;
    CHECK_THAT(acc_total / 729.0, Catch::Matchers::WithinAbs(1.0 / 27.0, 1e-15));
}

TEST_CASE("level thresholds: nearest-rank percentiles") {
    Vec radii{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    LevelThresholds t = compute_level_thresholds(radii);
    CHECK(t.r_low == 0.3);
    CHECK(t.r_high == 0.6);

    Vec equal(7, 0.42);
    LevelThresholds te = compute_level_thresholds(equal);
    CHECK(te.r_low == 0.42);
    CHECK(te.r_high == 0.42);

    CHECK_THROWS_AS(compute_level_thresholds({0.1, 0.2}), invalid_input);
}

TEST_CASE("select_level: band rules and degenerate thresholds") {
    LevelThresholds t{0.3, 0.6};
    CHECK(select_level(0.2, t, 3) == 1);
    CHECK(select_level(0.7, t, 3) == 3);
    CHECK(select_level(0.45, t, 3) == 2);
    CHECK(select_level(0.5, t, 1) == 1);

    // equal thresholds: everything that is not strictly outside lands in the
    // middle level
    LevelThresholds eq{0.42, 0.42};
    CHECK(select_level(0.42, eq, 3) == 2);
    CHECK(select_level(0.41, eq, 3) == 1);
    CHECK(select_level(0.43, eq, 3) == 3);

    // distinct radii split into thirds within +-1
    Vec radii{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    LevelThresholds tt = compute_level_thresholds(radii);
    int buckets[4] = {0, 0, 0, 0};
    for (double r : radii) buckets[select_level(r, tt, 3)]++;
    for (int level = 1; level <= 3; ++level) {
        CHECK(buckets[level] >= 2);
        CHECK(buckets[level] <= 4);
    }
}

TEST_CASE("retrieval: duplicated pool, radial closed form, monotonicity") {
    PoincarePoint q = PoincarePoint::origin(2);
    std::vector<PoincarePoint> dup(5, PoincarePoint({0.3, 0.1}));
    CHECK(retrieved_within_threshold(PoincarePoint({0.3, 0.1}), dup, 0.5) == 5);

    std::vector<PoincarePoint> pool{PoincarePoint({0.1, 0.0}), PoincarePoint({0.9, 0.0})};
    const double threshold = mean_query_pool_distance({q}, pool);
    CHECK_THAT(threshold,
               Catch::Matchers::WithinAbs((2.0 * std::atanh(0.1) + 2.0 * std::atanh(0.9)) / 2.0,
                                          1e-12));
    CHECK(retrieved_within_threshold(q, pool, threshold) == 1);

    Rng rng(62);
    std::vector<PoincarePoint> big;
    for (int i = 0; i < 50; ++i) big.push_back(testsup::random_point(rng, 2, 0.95));
    int prev = 0;
    for (double th : {0.2, 0.5, 1.0, 2.0, 4.0}) {
        const int c = retrieved_within_threshold(q, big, th);
        CHECK(c >= prev);
        prev = c;
    }
    CHECK_THROWS_AS(retrieved_within_threshold(q, {}, 1.0), invalid_input);
}

TEST_CASE("metrics report serializes to the documented JSONL schema") {
    MetricsReport r{3, "val", 1.25, 0.5, 0.75, 0.6, 0.44, 0.3, 0.55};
    nlohmann::json j = r.to_json();
    for (const char* key : {"epoch", "split", "loss", "acc", "td_acc", "bu_acc", "mean_radius",
                            "radius_p33", "radius_p66"})
        CHECK(j.contains(key));
    MetricsReport back = MetricsReport::from_json(j);
    CHECK(back.epoch == r.epoch);
    CHECK(back.td_acc == r.td_acc);
}
