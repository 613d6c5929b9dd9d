#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "hyperseq/loss.hpp"
#include "hyperseq/optim.hpp"
#include "test_support.hpp"

using namespace hyperseq;
using namespace hyperseq::loss;
using geom::PoincarePoint;

TEST_CASE("contrastive loss: equal distances give ln K per prediction") {
    const std::size_t K = 5;
    std::vector<PoincarePoint> preds(K, PoincarePoint::origin(3));
    std::vector<PoincarePoint> targets;
    Rng rng(21);
    for (std::size_t j = 0; j < K; ++j) {
        Vec dir = testsup::random_in_ball(rng, 3, 1.0);
        const double n = norm(dir);
        targets.push_back(PoincarePoint(scaled(dir, 0.4 / n)));
    }
    ContrastiveBatch b = ContrastiveBatch::aligned(preds, targets);
    CHECK_THAT(contrastive_loss_value(b), Catch::Matchers::WithinAbs(std::log(5.0), 1e-12));
}

TEST_CASE("contrastive loss: decreases as the negative moves away") {
    PoincarePoint pos({0.2, 0.0});
    double prev = 1e300;
    for (double r : {0.3, 0.5, 0.7, 0.9}) {
        ContrastiveBatch b;
        b.predictions = {pos};
        b.targets = {pos, PoincarePoint({-r, 0.0})};
        b.positive_index = {0};
        const double l = contrastive_loss_value(b);
        CHECK(l > 0.0);
        CHECK(l < prev);
        prev = l;
    }
}

TEST_CASE("contrastive loss: three hand-picked points match direct Eq evaluation") {
    std::vector<PoincarePoint> preds{PoincarePoint({0.1, 0.2}), PoincarePoint({-0.4, 0.3}),
                                     PoincarePoint({0.6, -0.1})};
    std::vector<PoincarePoint> targets{PoincarePoint({0.15, 0.25}), PoincarePoint({-0.5, 0.2}),
                                       PoincarePoint({0.55, -0.2})};
    ContrastiveBatch b = ContrastiveBatch::aligned(preds, targets);

    // independent evaluation with the reference acosh distance
    double expect = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double dpos =
            testsup::distance_reference(preds[i].coords(), targets[i].coords());
        double denom = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            const double d = testsup::distance_reference(preds[i].coords(), targets[j].coords());
            denom += std::exp(-d * d);
        }
        expect += dpos * dpos + std::log(denom);
    }
    expect /= 3.0;
    CHECK_THAT(contrastive_loss_value(b), Catch::Matchers::WithinAbs(expect, 1e-12));
}

TEST_CASE("contrastive loss: permutation of the pool leaves the value unchanged") {
    Rng rng(22);
    ContrastiveBatch b;
    for (int i = 0; i < 4; ++i) b.predictions.push_back(testsup::random_point(rng, 3, 0.8));
    for (int j = 0; j < 6; ++j) b.targets.push_back(testsup::random_point(rng, 3, 0.8));
    b.positive_index = {0, 2, 4, 5};
    const double base = contrastive_loss_value(b);

    std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    ContrastiveBatch shuffled;
    shuffled.predictions = b.predictions;
    shuffled.targets.resize(6, PoincarePoint::origin(3));
    for (std::size_t j = 0; j < 6; ++j) shuffled.targets[perm[j]] = b.targets[j];
    for (std::size_t i : b.positive_index) shuffled.positive_index.push_back(perm[i]);
    CHECK_THAT(contrastive_loss_value(shuffled), Catch::Matchers::WithinAbs(base, 1e-12));
}

TEST_CASE("contrastive loss: errors on degenerate batches") {
    ContrastiveBatch b;
    b.predictions = {PoincarePoint({0.1, 0.1})};
    b.targets = {PoincarePoint({0.2, 0.2})};
    b.positive_index = {0};
    CHECK_THROWS_AS(contrastive_loss_value(b), invalid_input);
}

TEST_CASE("assemble_negatives: pool counting matches the stated rule") {
    auto mk = [](int seq, int step, double x) {
        return TaggedPoint{EntryTag{seq, step}, PoincarePoint({x, 0.05 * seq + 0.01 * step})};
    };
    // 2 sequences x 3 steps; predict the last step of each
    std::vector<TaggedPoint> pool;
    for (int s = 0; s < 2; ++s)
        for (int t = 1; t <= 3; ++t) pool.push_back(mk(s, t, 0.1 * t - 0.2 * s));
    std::vector<TaggedPoint> preds{mk(0, 3, 0.4), mk(1, 3, -0.3)};
    ContrastiveBatch b = assemble_negatives(pool, preds);
    CHECK(b.targets.size() == 6);  // 1 positive + 5 negatives per prediction
    CHECK(b.predictions.size() == 2);
    CHECK(b.positive_index[0] == 2);
    CHECK(b.positive_index[1] == 5);

    // 1 sequence x 4 steps: 1 positive + 3 temporal negatives
    std::vector<TaggedPoint> solo;
    for (int t = 1; t <= 4; ++t) solo.push_back(mk(0, t, 0.1 * t));
    ContrastiveBatch b2 = assemble_negatives(solo, {mk(0, 4, 0.4)});
    CHECK(b2.targets.size() == 4);
    CHECK(b2.positive_index[0] == 3);

    // 1 sequence x 1 step: no negatives exist
    CHECK_THROWS_AS(assemble_negatives({mk(0, 1, 0.1)}, {mk(0, 1, 0.1)}), invalid_input);
}

TEST_CASE("contrastive loss: gradients verified on a random 4-sequence batch") {
    using ad::grad_check;
    using ad::Tape;
    using ad::Tensor;
    using ad::Var;
    Rng rng(23);
    // 4 sequences x 2 steps of targets; one prediction per sequence
    std::vector<Tensor> inputs;
    std::vector<bool> ball;
    for (int i = 0; i < 4; ++i) {
        inputs.push_back(Tensor::from_vec(testsup::random_in_ball(rng, 3, 0.85)));
        ball.push_back(true);
    }
    for (int j = 0; j < 8; ++j) {
        inputs.push_back(Tensor::from_vec(testsup::random_in_ball(rng, 3, 0.85)));
        ball.push_back(true);
    }
    auto f = [](Tape& t, const std::vector<Var>& v) {
        std::vector<Var> preds(v.begin(), v.begin() + 4);
        std::vector<Var> pool(v.begin() + 4, v.end());
        std::vector<std::size_t> pos{1, 3, 5, 7};
        return contrastive_loss(t, preds, pool, pos, 1.0, false);
    };
    auto rep = grad_check("contrastive", f, inputs, 1e-6, 1e-4, ball);
    INFO("err " << rep.max_rel_error);
    CHECK(rep.pass);

    auto fe = [](Tape& t, const std::vector<Var>& v) {
        std::vector<Var> preds(v.begin(), v.begin() + 4);
        std::vector<Var> pool(v.begin() + 4, v.end());
        std::vector<std::size_t> pos{0, 2, 4, 6};
        return contrastive_loss(t, preds, pool, pos, 1.0, true);
    };
    auto repe = grad_check("contrastive_euclidean", fe, inputs, 1e-6, 1e-4, ball);
    CHECK(repe.pass);
}

TEST_CASE("contrastive loss: euclidean mode matches an independent evaluation") {
    using ad::Tape;
    using ad::Tensor;
    using ad::Var;
    Rng rng(24);
    std::vector<Vec> preds, pool;
    for (int i = 0; i < 3; ++i) preds.push_back({rng.normal(), rng.normal()});
    for (int j = 0; j < 4; ++j) pool.push_back({rng.normal(), rng.normal()});
    std::vector<std::size_t> pos{0, 1, 2};
    const double tau = 0.7;

    Tape t;
    std::vector<Var> pv, qv;
    for (const Vec& p : preds) pv.push_back(t.leaf(Tensor::from_vec(p)));
    for (const Vec& q : pool) qv.push_back(t.leaf(Tensor::from_vec(q)));
    const double got = t.value(contrastive_loss(t, pv, qv, pos, tau, true))[0];

    double expect = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        auto d2 = [&](const Vec& a, const Vec& b) {
            return ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])) / tau;
        };
        double denom = 0.0;
        for (const Vec& q : pool) denom += std::exp(-d2(preds[i], q));
        expect += d2(preds[i], pool[pos[i]]) + std::log(denom);
    }
    expect /= 3.0;
    CHECK_THAT(got, Catch::Matchers::WithinAbs(expect, 1e-12));
}

TEST_CASE("hedging: optimizing a free prediction against two boundary targets shrinks radius") {
    using ad::Tape;
    using ad::Tensor;
    using ad::Var;
    // two fixed targets of radius 0.9; positive alternates between them
    const Vec a{0.9, 0.0};
    const Vec b{0.0, 0.9};
    Tensor p = Tensor::from_vec({0.05, 0.02});
    opt::ParamGroup group;
    group.add("p", opt::Space::manifold, p);
    for (int it = 0; it < 2000; ++it) {
        Tape t;
        Var pv = t.leaf(p);
        std::vector<Var> pool{t.constant(Tensor::from_vec(a)), t.constant(Tensor::from_vec(b))};
        std::vector<Var> preds{pv};
        std::vector<std::size_t> pos{static_cast<std::size_t>(it % 2)};
        Var l = contrastive_loss(t, preds, pool, pos, 1.0, false);
        t.backward(l);
        opt::rsgd_step(group, {t.adjoint(pv)}, 0.05);
    }
    double r = std::sqrt(p[0] * p[0] + p[1] * p[1]);
    CHECK(r < 0.9);
}
