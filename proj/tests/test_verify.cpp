#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lavg/verify.hpp"

using namespace lavg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("signal-avg inequality on explicit point sets", "[verify]") {
    const auto circle = ManifoldModel::circle(4, 1.0);
    // All points equal: both sides are zero.
    Vec p(4, 0.0);
    p[0] = 1.0;
    auto r = check_signal_avg(circle, {p, p, p}, p);
    REQUIRE(r.outcome == Outcome::Pass);
    REQUIRE(r.measured.at("lhs").get<double>() <= 1e-15);

    // Two circle points at +-pi/3 from the reference point.
    Vec a(4, 0.0), b(4, 0.0);
    a[0] = std::cos(M_PI / 3.0);
    a[1] = std::sin(M_PI / 3.0);
    b[0] = std::cos(M_PI / 3.0);
    b[1] = -std::sin(M_PI / 3.0);
    r = check_signal_avg(circle, {a, b}, p);
    REQUIRE(r.outcome == Outcome::Pass);
    REQUIRE_THAT(r.measured.at("lhs").get<double>(), WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(r.bounds.at("rhs").get<double>(), WithinAbs(M_PI * M_PI / 9.0, 1e-12));
}

TEST_CASE("signal-avg suite passes on random sphere sets", "[verify]") {
    const auto r = check_signal_avg_suite(ManifoldModel::sphere(2, 8, 1.0), 30, 71);
    REQUIRE(r.outcome == Outcome::Pass);
    REQUIRE(r.measured.at("passed").get<int>() == 30);
}

TEST_CASE("noisy-point distance bracket", "[verify]") {
    const auto m = ManifoldModel::sphere(2, 128, 1.0);
    const auto r = check_noisy_point_distance(m, 0.03, 10000, 72);
    REQUIRE(r.outcome == Outcome::Pass);
    const double ratio = r.measured.at("mean_distance_ratio").get<double>();
    REQUIRE(ratio >= 0.95);
    REQUIRE(ratio <= 1.05);
    REQUIRE(r.measured.at("coverage").get<double>() >= 0.9);

    // sigma = 0: the distance is exactly zero and the bracket collapses to it.
    const auto r0 = check_noisy_point_distance(m, 0.0, 200, 73);
    REQUIRE(r0.outcome == Outcome::Pass);
    REQUIRE(r0.measured.at("coverage").get<double>() == 1.0);
    REQUIRE(r0.measured.at("mean_distance").get<double>() <= 1e-12);
}

TEST_CASE("conditional noise mean without selection is centered", "[verify]") {
    const auto m = ManifoldModel::sphere(2, 32, 1.0);
    Rng rng(73);
    const Vec q = m.sample_uniform(rng);
    const double sigma = 0.05;
    const double R = m.intrinsic_diameter() + 12.0 * sigma * std::sqrt(32.0) + 1.0;
    const auto est = conditional_noise_mean_mc(m, q, R, sigma, 20000, 74);
    REQUIRE(est.acceptance_rate == 1.0);  // nothing rejected
    REQUIRE(est.mean_norm <= 3.0 * est.se);
}

TEST_CASE("conditional noise mean vanishes as sigma -> 0", "[verify]") {
    const auto m = ManifoldModel::sphere(2, 32, 1.0);
    Rng rng(75);
    const Vec q = m.sample_uniform(rng);
    const double sigma = 1e-3;
    const auto est = conditional_noise_mean_mc(m, q, 0.5, sigma, 5000, 76);
    REQUIRE(est.mean_norm <= 5.0 * est.se + 0.05 * sigma);
}

TEST_CASE("noise-size check skips inadmissible parameters", "[verify]") {
    const auto m = ManifoldModel::sphere(2, 128, 1.0);
    Vec q(128, 0.0);
    q[2] = 1.2;
    // sigma <= 1/D violates the hypotheses outright.
    auto r = check_conditional_noise_mean(m, q, 1.0, 1.0 / 200.0, 1000, 77);
    REQUIRE(r.outcome == Outcome::Skipped);
    REQUIRE_FALSE(r.reason.empty());
    // The reference parameter set at D = 128 has no admissible s*^2 window.
    REQUIRE(noise_size_hypothesis_violation(m, 0.9, std::sqrt(0.01 * 125.0 + 1.5), 0.1));
}

TEST_CASE("noise-size check passes at an admissible parameter set", "[verify]") {
    const long D = 1024;
    const double sigma = std::sqrt(0.55 / static_cast<double>(D));
    const double R = std::sqrt(1.5 + sigma * sigma * (static_cast<double>(D) - 3.0));
    const auto m = ManifoldModel::sphere(2, static_cast<int>(D), 1.0);
    Vec q(D, 0.0);
    q[2] = 1.9;
    REQUIRE_FALSE(noise_size_hypothesis_violation(m, 0.9, R, sigma));
    const auto r = check_conditional_noise_mean(m, q, R, sigma, 20000, 78);
    REQUIRE(r.outcome == Outcome::Pass);
    REQUIRE(r.measured.at("ratio").get<double>() <= 10.0);
}

TEST_CASE("conditional intrinsic distance matches the closed form without selection",
          "[verify]") {
    const auto m = ManifoldModel::sphere(2, 16, 1.0);
    Vec q(16, 0.0);
    q[2] = 1.0;  // on the manifold
    const auto est = conditional_signal_distance_mc(m, q, 50.0, 0.01, 40000, 79);
    REQUIRE(est.acceptance_rate == 1.0);
    // E d_M^2 over the uniform sphere = (pi^2 - 4) / 2.
    REQUIRE_THAT(est.m2, WithinAbs(2.93480220054468, 4.0 * est.m2_se));
    // Jensen: fourth moment dominates the squared second moment.
    REQUIRE(est.m4 >= est.m2 * est.m2 * (1.0 - 1e-9) - 4.0 * est.m4_se);
}

TEST_CASE("conditional intrinsic distance shrinks with the radius", "[verify]") {
    const auto m = ManifoldModel::sphere(2, 64, 1.0);
    Vec q(64, 0.0);
    q[2] = 1.05;
    const double sigma = 1e-3;
    double prev = 1e300;
    for (double R : {0.6, 0.45, 0.35}) {
        const auto est = conditional_signal_distance_mc(m, q, R, sigma, 20000, 80);
        REQUIRE(est.m2 < prev);
        prev = est.m2;
    }
}

TEST_CASE("signal-distance check at an admissible parameter set", "[verify]") {
    const long D = 2'500'000;
    const double sigma = 2.9e-4;
    const double R = std::sqrt(0.625 + sigma * sigma * (static_cast<double>(D) - 3.0));
    const auto m = ManifoldModel::sphere(2, static_cast<int>(D), 1.0);
    Vec q(D, 0.0);
    q[2] = 1.45;
    REQUIRE_FALSE(signal_distance_hypothesis_violation(m, 0.45, R, sigma));
    const auto r = check_conditional_signal_distance(m, q, R, sigma, 20000, 81);
    REQUIRE(r.outcome == Outcome::Pass);
    REQUIRE(r.measured.at("ratio2").get<double>() <= 10.0);
    REQUIRE(r.measured.at("ratio4").get<double>() <= 10.0);
}

TEST_CASE("far-distance bound on the circle and sphere", "[verify]") {
    const auto circle = ManifoldModel::circle(4, 1.0);
    Vec q(4, 0.0);
    q[0] = 1.0;  // on M, so the bound is c xi^2 against the chord
    const double xi = 0.4;
    auto r = check_far_distance(circle, q, xi, 20000);
    REQUIRE(r.outcome == Outcome::Pass);
    const double chord_sq = std::pow(2.0 * std::sin(xi / 2.0), 2);
    // Grid resolution limits agreement: one spacing along the boundary.
    REQUIRE_THAT(r.measured.at("inf_sq").get<double>(), WithinRel(chord_sq, 1e-2));

    // xi = 0: the bound degenerates to ||q - q_nat||^2.
    Vec lifted(4, 0.0);
    lifted[0] = 1.3;
    r = check_far_distance(circle, lifted, 1e-12, 20000);
    REQUIRE(r.outcome == Outcome::Pass);
    REQUIRE_THAT(r.bounds.at("bound").get<double>(), WithinAbs(0.09, 1e-9));

    // 20 random (q, xi) pairs on the sphere.
    const auto sphere = ManifoldModel::sphere(2, 8, 1.0);
    Rng rng(82);
    for (int i = 0; i < 20; ++i) {
        const Vec base = sphere.sample_uniform(rng);
        Vec qq = scaled(base, 1.0 + 0.4 * rng.uniform01());
        const double x = 0.05 + 0.4 * rng.uniform01();
        const auto rr = check_far_distance(sphere, qq, x, 10000);
        REQUIRE(rr.outcome == Outcome::Pass);
    }

    // Preconditions: q too far off, or xi too large, both skip.
    Vec far_q(4, 0.0);
    far_q[0] = 1.6;
    REQUIRE(check_far_distance(circle, far_q, 0.3, 100).outcome == Outcome::Skipped);
    REQUIRE(check_far_distance(circle, lifted, 0.6, 100).outcome == Outcome::Skipped);
}

TEST_CASE("sphere cap volume ratios", "[verify]") {
    // d=2, r=1, cap 0.1: (1 - cos 0.1)/2 against (1/4)(0.2)^2 e^{-pi}.
    REQUIRE_THAT(sphere_cap_volume_ratio(2, 1.0, 0.1), WithinRel(0.00249791736099, 1e-9));
    REQUIRE_THAT(sphere_cap_volume_ratio(2, 1.0, M_PI), WithinRel(1.0, 1e-10));
    // d=3 closed form: (t - sin t cos t) / pi ... via the normalized integral.
    const double phi = 0.7;
    const double d3 = (phi - std::sin(phi) * std::cos(phi)) / M_PI;
    REQUIRE_THAT(sphere_cap_volume_ratio(3, 1.0, 0.7), WithinRel(d3, 1e-9));

    const auto whole = check_volume_ratio_sphere(2, 1.0, 50);
    REQUIRE(whole.outcome == Outcome::Pass);
    for (int d = 2; d <= 8; ++d)
        REQUIRE(check_volume_ratio_sphere(d, 1.0, 50).outcome == Outcome::Pass);
}

TEST_CASE("vector Hoeffding tails", "[verify]") {
    auto r = check_vector_hoeffding(16, 1.0, 100, 2000, {0.0, 0.15, 0.3}, 83);
    REQUIRE(r.outcome == Outcome::Pass);
    // Far tail at large N: the empirical tail at t = B is zero.
    r = check_vector_hoeffding(16, 1.0, 10000, 200, {1.0}, 84);
    REQUIRE(r.outcome == Outcome::Pass);
    REQUIRE(r.measured.at("tails")[0].at("empirical").get<double>() == 0.0);
}

TEST_CASE("envelope suite passes", "[verify]") {
    const auto r = check_envelope_suite(60);
    INFO(r.reason);
    REQUIRE(r.outcome == Outcome::Pass);
    REQUIRE(r.measured.at("points_checked").get<long>() > 2000);
}

TEST_CASE("grouping consistency at reduced trial counts", "[verify]") {
    const auto r = check_grouping_consistency(20000, 85);
    INFO(r.measured.dump(2));
    REQUIRE(r.outcome == Outcome::Pass);
}

TEST_CASE("reports are deterministic given the seed", "[verify]") {
    const auto m = ManifoldModel::sphere(2, 64, 1.0);
    const auto a = check_noisy_point_distance(m, 0.03, 2000, 86);
    const auto b = check_noisy_point_distance(m, 0.03, 2000, 86);
    REQUIRE(a.measured == b.measured);
    REQUIRE(a.bounds == b.bounds);
    REQUIRE(a.outcome == b.outcome);
    const auto c = check_noisy_point_distance(m, 0.03, 2000, 87);
    REQUIRE(c.measured != a.measured);
}

TEST_CASE("registry names resolve", "[verify]") {
    for (const auto& name : registered_check_names()) {
        REQUIRE_NOTHROW(name.size());
    }
    REQUIRE_THROWS_AS(run_registered_check("no-such-check", 1, 1.0), std::invalid_argument);
}
