#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lavg/estimators.hpp"
#include "lavg/harness.hpp"

using namespace lavg;
using Catch::Matchers::WithinAbs;

TEST_CASE("noiseless signal estimate averages on-manifold points", "[estimators]") {
    const auto m = ManifoldModel::sphere(2, 16, 1.0);
    LandmarkConfig cfg;
    cfg.sigma = 0.0;
    cfg.radius1 = 0.6;
    cfg.radius2 = 0.6;
    cfg.batch1 = 25;
    cfg.batch2 = 25;
    SampleStream stream(m, 0.0, 41);
    Rng rng(42);
    const Vec q0 = m.sample_uniform(rng);
    SampleStream replay(m, 0.0, 41);
    const Vec est = estimate_signal(stream, q0, cfg);
    Vec mean(16, 0.0);
    int taken = 0;
    while (taken < 25) {
        const NoisySample s = replay.next();
        if (distance(s.observed, q0) <= 0.6) {
            accumulate(mean, s.clean);
            ++taken;
        }
    }
    REQUIRE(distance(est, scaled(mean, 1.0 / 25.0)) <= 1e-14);
}

TEST_CASE("signal estimate beats the raw noisy point", "[estimators]") {
    const auto m = ManifoldModel::sphere(2, 128, 1.0);
    LandmarkConfig cfg;
    cfg.sigma = 0.03;
    std::vector<double> est_err, raw_err;
    for (int seed = 0; seed < 12; ++seed) {
        SampleStream stream(m, cfg.sigma, 500 + seed);
        const Vec q0 = stream.next().observed;
        const Vec q0_nat = m.project(q0);
        const Vec est = estimate_signal(stream, q0, cfg);
        est_err.push_back(distance(est, q0_nat));
        raw_err.push_back(distance(q0, q0_nat));
    }
    REQUIRE(median_of(est_err) < median_of(raw_err));

    // The error also sits at the (Dd)^{1/4} scale:
    // sigma sqrt(kbar) (Dd)^{1/4} + sigma (Dd (kappa diam + log D))^{1/4}.
    const auto c = m.constants();
    const double Dd = 128.0 * 2.0;
    const double scale =
        cfg.sigma * std::sqrt(c.kappa_bar) * std::pow(Dd, 0.25) +
        cfg.sigma * std::pow(Dd * (c.curvature * c.diameter + std::log(128.0)), 0.25);
    WARN("signal-estimate error / scale = " << median_of(est_err) / scale);
    REQUIRE(median_of(est_err) <= 5.0 * scale);
}

TEST_CASE("single-sample estimate is that sample", "[estimators]") {
    const auto m = ManifoldModel::sphere(2, 16, 1.0);
    LandmarkConfig cfg;
    cfg.sigma = 0.05;
    cfg.radius1 = 50.0;
    cfg.batch1 = 1;
    SampleStream stream(m, cfg.sigma, 43);
    SampleStream replay(m, cfg.sigma, 43);
    const Vec first = replay.next().observed;
    Rng rng(44);
    const Vec q0 = m.sample_uniform(rng);
    const Vec est = estimate_signal(stream, q0, cfg);
    REQUIRE(est == first);
}

TEST_CASE("pairwise estimator is symmetric and vanishes on a shared batch", "[estimators]") {
    const auto m = ManifoldModel::sphere(2, 32, 1.0);
    SampleStream stream(m, 0.05, 45);
    Rng rng(46);
    const Vec q = m.sample_uniform(rng);
    const Batch b1 = collect_minibatch(stream, q, 1.0, 20);
    const Batch b2 = collect_minibatch(stream, q, 1.0, 20);
    REQUIRE(pairwise_distance_from_batches(b1, b1) == 0.0);
    REQUIRE(pairwise_distance_from_batches(b1, b2) == pairwise_distance_from_batches(b2, b1));
}

TEST_CASE("noiseless pairwise error is bounded by the two signal spreads", "[estimators]") {
    const auto m = ManifoldModel::sphere(2, 16, 1.0);
    LandmarkConfig cfg;
    cfg.sigma = 0.0;
    cfg.radius1 = 0.5;
    cfg.radius2 = 0.5;
    cfg.batch1 = 20;
    cfg.batch2 = 20;
    Rng rng(47);
    const Vec qi = m.sample_uniform(rng);
    const Vec qj = m.sample_uniform(rng);
    SampleStream stream(m, 0.0, 48);
    const double est = estimate_pairwise_distance(stream, qi, qj, cfg);
    // Replay to measure the actual spreads of the two batches.
    SampleStream replay(m, 0.0, 48);
    double spread = 0.0;
    for (const Vec* q : {&qi, &qj}) {
        Vec mean(16, 0.0);
        int taken = 0;
        while (taken < 20) {
            const NoisySample s = replay.next();
            if (distance(s.observed, *q) <= 0.5) {
                accumulate(mean, s.observed);
                ++taken;
            }
        }
        spread += distance(scaled(mean, 1.0 / 20.0), *q);
    }
    REQUIRE(std::fabs(est - distance(qi, qj)) <= spread + 1e-12);
}

TEST_CASE("averaged pairwise distances beat raw noisy pairs", "[estimators]") {
    const auto m = ManifoldModel::sphere(2, 256, 1.0);
    LandmarkConfig cfg;
    cfg.sigma = 0.02;
    cfg.batch1 = 128;
    SampleStream stream(m, cfg.sigma, 49);
    int wins = 0;
    const int pairs = 20;
    for (int k = 0; k < pairs; ++k) {
        const NoisySample xi = stream.next();
        const NoisySample xj = stream.next();
        const double truth = distance(xi.clean, xj.clean);
        const double raw_err = std::fabs(distance(xi.observed, xj.observed) - truth);
        const double est = estimate_pairwise_distance(stream, xi.observed, xj.observed, cfg);
        const double est_err = std::fabs(est - truth);
        if (est_err < raw_err) ++wins;
    }
    REQUIRE(wins >= pairs * 6 / 10);
}

TEST_CASE("net respects the draw budget", "[estimators]") {
    const auto m = ManifoldModel::circle(32, 1.0);
    LandmarkConfig cfg;
    cfg.sigma = 0.05;
    cfg.batch1 = 50;
    cfg.batch2 = 50;
    Rng prng(51);
    SampleStream stream(m, cfg.sigma, 52);
    const NetSpec tiny = build_net(stream, cfg, 0.5, /*budget=*/10, prng);
    REQUIRE(tiny.landmarks.size() <= 1);
    SampleStream stream0(m, cfg.sigma, 53);
    const NetSpec none = build_net(stream0, cfg, 0.5, /*budget=*/0, prng);
    REQUIRE(none.landmarks.empty());
}

TEST_CASE("circle net has the expected size and accuracy", "[estimators]") {
    const auto m = ManifoldModel::circle(64, 1.0);
    LandmarkConfig cfg;
    cfg.sigma = 0.05;
    const double separation = 0.5;
    int total_landmarks = 0, accurate = 0;
    for (int seed = 0; seed < 2; ++seed) {
        SampleStream stream(m, cfg.sigma, 600 + seed);
        Rng prng(700 + seed);
        const NetSpec net = build_net(stream, cfg, separation, 3'000'000, prng);
        // Circumference 2 pi over separation 0.5, with packing slack.
        REQUIRE(net.landmarks.size() >= 8);
        REQUIRE(net.landmarks.size() <= 16);
        for (const auto& lm : net.landmarks) {
            ++total_landmarks;
            if (m.extrinsic_distance(lm.point) <= 5.0 * cfg.sigma) ++accurate;
            REQUIRE(lm.draws_consumed > 0);
        }
        // Separation holds up to twice the worst refinement displacement
        // (each landmark moved at most that far from its seeding candidate).
        double worst_move = 0.0;
        for (const auto& lm : net.landmarks)
            worst_move = std::max(worst_move, distance(lm.point, lm.seeded_from));
        for (std::size_t i = 0; i < net.landmarks.size(); ++i)
            for (std::size_t j = i + 1; j < net.landmarks.size(); ++j)
                REQUIRE(distance(net.landmarks[i].point, net.landmarks[j].point) >=
                        separation - 2.0 * worst_move - 1e-12);
        const auto j = net.to_json();
        REQUIRE(j.at("size").get<int>() == static_cast<int>(net.landmarks.size()));
    }
    REQUIRE(accurate * 10 >= total_landmarks * 9);
}
