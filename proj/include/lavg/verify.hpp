#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lavg/common.hpp"
#include "lavg/geometry.hpp"
#include "lavg/grouping.hpp"
#include "lavg/harness.hpp"
#include "lavg/landmarking.hpp"
#include "lavg/sampling.hpp"

namespace lavg {

enum class Outcome { Pass, Fail, Inconclusive, Skipped };

inline std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Pass: return "PASS";
        case Outcome::Fail: return "FAIL";
        case Outcome::Inconclusive: return "INCONCLUSIVE";
        case Outcome::Skipped: return "SKIPPED";
    }
    return "?";
}

/// Result of one named verification check. The outcome is a pure function of
/// the measured statistics, the bounds, and the stated tolerance; Monte Carlo
/// checks that land inside their 3-SE band report Inconclusive instead of
/// flipping between pass and fail.
struct CheckReport {
    std::string name;
    nlohmann::json parameters;
    nlohmann::json measured;
    nlohmann::json bounds;
    Outcome outcome = Outcome::Skipped;
    std::string reason;
    long samples = 0;
    std::uint64_t seed = 0;
    double runtime_seconds = 0.0;

    nlohmann::json to_json() const {
        return {{"check", name},          {"outcome", to_string(outcome)},
                {"reason", reason},       {"parameters", parameters},
                {"measured", measured},   {"bounds", bounds},
                {"samples", samples},     {"seed", seed},
                {"runtime_seconds", runtime_seconds}};
    }

    std::string table_row() const {
        std::ostringstream os;
        os << to_string(outcome) << "  " << name;
        if (!reason.empty()) os << "  (" << reason << ")";
        return os.str();
    }
};

namespace detail {

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

/// Three-valued comparison of a Monte Carlo estimate against a threshold:
/// decisive only when the 3-SE band clears it on one side.
inline Outcome compare_with_band(double estimate, double se, double threshold) {
    if (estimate + 3.0 * se <= threshold) return Outcome::Pass;
    if (estimate - 3.0 * se > threshold) return Outcome::Fail;
    return Outcome::Inconclusive;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Signal-average inequality: the distance of a mean of on-manifold points to
// the manifold is at most kappa times their mean squared intrinsic distance
// to any reference point of M.
// ---------------------------------------------------------------------------

inline CheckReport check_signal_avg(const ManifoldModel& m, const std::vector<Vec>& points,
                                    const Vec& q_nat) {
    detail::Stopwatch clock;
    CheckReport r;
    r.name = "signal-avg";
    r.parameters = {{"manifold", m.to_json()}, {"n_points", points.size()}};
    Vec mean;
    double rhs = 0.0;
    for (const auto& p : points) {
        accumulate(mean, p);
        const double g = m.geodesic_distance(p, q_nat);
        rhs += g * g;
    }
    mean = scaled(mean, 1.0 / static_cast<double>(points.size()));
    rhs *= m.curvature() / static_cast<double>(points.size());
    const double lhs = m.extrinsic_distance(mean);
    const double tol = 1e-9 * m.radii()[0];
    r.measured = {{"lhs", lhs}};
    r.bounds = {{"rhs", rhs}};
    r.outcome = lhs <= rhs + tol ? Outcome::Pass : Outcome::Fail;
    r.samples = static_cast<long>(points.size());
    r.runtime_seconds = clock.seconds();
    return r;
}

inline CheckReport check_signal_avg_suite(const ManifoldModel& m, int n_sets, std::uint64_t seed) {
    detail::Stopwatch clock;
    CheckReport r;
    r.name = "signal-avg";
    r.seed = seed;
    Rng rng(seed);
    int passed = 0;
    double worst_margin = 1e300;
    for (int i = 0; i < n_sets; ++i) {
        const int n = 2 + static_cast<int>(rng.uniform01() * 49.0);
        const Vec q_nat = m.sample_uniform(rng);
        std::vector<Vec> pts;
        pts.reserve(n);
        for (int j = 0; j < n; ++j) pts.push_back(m.sample_uniform(rng));
        const CheckReport one = check_signal_avg(m, pts, q_nat);
        if (one.outcome == Outcome::Pass) ++passed;
        worst_margin = std::min(worst_margin, one.bounds.at("rhs").get<double>() -
                                                  one.measured.at("lhs").get<double>());
    }
    r.parameters = {{"manifold", m.to_json()}, {"sets", n_sets}};
    r.measured = {{"passed", passed}, {"worst_margin", worst_margin}};
    r.bounds = {{"required", n_sets}};
    r.outcome = passed == n_sets ? Outcome::Pass : Outcome::Fail;
    r.samples = n_sets;
    r.runtime_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Noisy-point distance bracket: d(x, M) concentrates at sigma sqrt(D-d)
// within a C1 kbar sigma sqrt(d) margin.
// ---------------------------------------------------------------------------

inline CheckReport check_noisy_point_distance(const ManifoldModel& m, double sigma, long trials,
                                              std::uint64_t seed, double C1 = 5.0) {
    detail::Stopwatch clock;
    CheckReport r;
    r.name = "noisy-point-distance";
    r.seed = seed;
    const long D = m.ambient_dim();
    const long d = m.intrinsic_dim();
    const auto c = m.constants();
    r.parameters = {{"manifold", m.to_json()}, {"sigma", sigma}, {"trials", trials}, {"C1", C1}};
    if (sigma * std::sqrt(static_cast<double>(D)) > 0.5 * c.reach)
        r.reason = "warning: sigma sqrt(D) exceeds tau/2, outside the bracket's validity regime";
    SampleStream stream(m, sigma, seed);
    const double center = sigma * std::sqrt(static_cast<double>(D - d));
    // Rounding slack keeps the sigma = 0 edge (margin exactly zero, points one
    // ulp off the manifold) from reading as non-coverage.
    const double margin =
        C1 * c.kappa_bar * sigma * std::sqrt(static_cast<double>(d)) + 1e-12 * m.radii()[0];
    long covered = 0;
    double sum_dist = 0.0;
    for (long i = 0; i < trials; ++i) {
        const NoisySample s = stream.next();
        const double dist = m.extrinsic_distance(s.observed);
        if (std::fabs(dist - center) <= margin) ++covered;
        sum_dist += dist;
    }
    const double coverage = static_cast<double>(covered) / static_cast<double>(trials);
    const double se = std::sqrt(coverage * (1.0 - coverage) / static_cast<double>(trials));
    const double mean_dist = sum_dist / static_cast<double>(trials);
    r.measured = {{"coverage", coverage},
                  {"coverage_se", se},
                  {"mean_distance", mean_dist},
                  {"mean_distance_ratio", center > 0.0 ? mean_dist / center : 1.0}};
    r.bounds = {{"coverage_required", 0.9}, {"center", center}, {"margin", margin}};
    // Pass when coverage - 3 SE clears 0.9; inconclusive inside the band.
    if (coverage - 3.0 * se >= 0.9)
        r.outcome = Outcome::Pass;
    else if (coverage + 3.0 * se < 0.9)
        r.outcome = Outcome::Fail;
    else
        r.outcome = Outcome::Inconclusive;
    r.samples = trials;
    r.runtime_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Conditional noise mean (rejection sampling of the exact conditional law).
// ---------------------------------------------------------------------------

struct ConditionalNoiseMeanEstimate {
    Vec mean;
    double mean_norm = 0.0;
    double se = 0.0;              // sqrt(sum_i var_i / n), the norm-scale SE
    double acceptance_rate = 0.0;
    long kept = 0;
    long draws = 0;
};

/// Estimates || E[z | ||x_nat + z - q|| <= R] || by keeping the noise of
/// accepted draws. Exact conditional law via rejection; no reweighting.
inline ConditionalNoiseMeanEstimate conditional_noise_mean_mc(const ManifoldModel& m, const Vec& q,
                                                              double R, double sigma, long kept_target,
                                                              std::uint64_t seed,
                                                              long max_draws = 200'000'000) {
    SampleStream stream(m, sigma, seed);
    const double r_sq = R * R;
    ConditionalNoiseMeanEstimate est;
    const int D = m.ambient_dim();
    Vec sum(D, 0.0), sum_sq(D, 0.0);
    while (est.kept < kept_target) {
        if (stream.draws_so_far() >= max_draws)
            throw AcceptanceTooLow("conditional sampler exceeded its draw budget",
                                   stream.draws_so_far(), static_cast<int>(est.kept),
                                   static_cast<int>(kept_target));
        const NoisySample s = stream.next();
        if (squared_distance(s.observed, q) > r_sq) continue;
        ++est.kept;
        for (int i = 0; i < D; ++i) {
            sum[i] += s.noise[i];
            sum_sq[i] += s.noise[i] * s.noise[i];
        }
    }
    est.draws = stream.draws_so_far();
    est.acceptance_rate = static_cast<double>(est.kept) / static_cast<double>(est.draws);
    est.mean = scaled(sum, 1.0 / static_cast<double>(est.kept));
    est.mean_norm = norm(est.mean);
    double var_total = 0.0;
    for (int i = 0; i < D; ++i) {
        const double mu = est.mean[i];
        var_total += std::max(0.0, sum_sq[i] / static_cast<double>(est.kept) - mu * mu);
    }
    est.se = std::sqrt(var_total / static_cast<double>(est.kept));
    return est;
}

/// Hypotheses of the noise-size statement with all constants set to 1.
/// Returns an explanation when some condition fails.
inline std::optional<std::string> noise_size_hypothesis_violation(const ManifoldModel& m,
                                                                  double dist_q, double R,
                                                                  double sigma) {
    const auto c = m.constants();
    const double D = m.ambient_dim();
    const double d = m.intrinsic_dim();
    std::ostringstream why;
    if (c.curvature * c.diameter < 1.0) return "kappa diam < 1";
    if (!(sigma > 1.0 / D)) return "sigma <= 1/D";
    if (!(dist_q < 1.0 / c.curvature)) return "d(q,M) >= c1/kappa (c1=1)";
    const double s_star_sq = R * R - sigma * sigma * (D - 3.0);
    if (!(s_star_sq >= dist_q * dist_q)) return "s_star_parallel^2 < 0";
    const double s_par = std::sqrt(s_star_sq - dist_q * dist_q);
    const double log_term = std::log(1.0 / (c.curvature * s_par));
    const double L = std::log(D) + c.curvature * d * c.diameter + d * log_term;
    if (!(L > 0.0)) return "log factor nonpositive";
    if (!(L * sigma * sigma * std::pow(D, 2.0 / 3.0) <= s_star_sq)) {
        why << "s_star^2 = " << s_star_sq << " below the C2 log-factor floor "
            << L * sigma * sigma * std::pow(D, 2.0 / 3.0);
        return why.str();
    }
    if (!(s_star_sq <= 3.0 * sigma * sigma * D)) return "s_star^2 > 3 sigma^2 D";
    if (!(s_star_sq <= dist_q * dist_q + 1.0 / (c.curvature * c.curvature)))
        return "s_star^2 > d(q,M)^2 + c2/kappa^2 (c2=1)";
    return std::nullopt;
}

inline CheckReport check_conditional_noise_mean(const ManifoldModel& m, const Vec& q, double R,
                                                double sigma, long kept_target, std::uint64_t seed) {
    detail::Stopwatch clock;
    CheckReport r;
    r.name = "conditional-noise-mean";
    r.seed = seed;
    const double dist_q = m.extrinsic_distance(q);
    r.parameters = {{"manifold", m.to_json()}, {"R", R},           {"sigma", sigma},
                    {"dist_q", dist_q},        {"kept", kept_target}};
    if (auto why = noise_size_hypothesis_violation(m, dist_q, R, sigma)) {
        r.outcome = Outcome::Skipped;
        r.reason = "hypotheses not satisfied: " + *why;
        r.runtime_seconds = clock.seconds();
        return r;
    }
    const auto c = m.constants();
    const double D = m.ambient_dim();
    const double d = m.intrinsic_dim();
    const double s_star = std::sqrt(R * R - sigma * sigma * (D - 3.0));
    const double s_par = std::sqrt(s_star * s_star - dist_q * dist_q);
    const double L =
        std::log(D) + c.curvature * d * c.diameter + d * std::log(1.0 / (c.curvature * s_par));
    const double bound = s_star / std::sqrt(D - 3.0) * std::sqrt(L);  // C3 = 1
    const auto est = conditional_noise_mean_mc(m, q, R, sigma, kept_target, seed);
    const double ratio = est.mean_norm / bound;
    r.measured = {{"mean_norm", est.mean_norm},
                  {"se", est.se},
                  {"ratio", ratio},
                  {"acceptance_rate", est.acceptance_rate}};
    r.bounds = {{"bound", bound}, {"ratio_tolerance", 10.0}};
    r.outcome = detail::compare_with_band(est.mean_norm, est.se, 10.0 * bound);
    r.samples = est.kept;
    r.runtime_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Conditional intrinsic-distance moments. The estimand depends only on the
// clean point, so the acceptance event ||x_nat + z - q|| <= R is sampled
// through its parallel/perpendicular decomposition: given t = ||x_nat - q||,
// the squared distance is (t - g)^2 + sigma^2 W with g ~ N(0, sigma^2) and
// W ~ chi^2_{D-1} independent (rotational invariance of the noise). This is
// still exact rejection sampling of the conditional law, but each draw costs
// O(d) instead of O(D), which is what makes the admissible D reachable.
// ---------------------------------------------------------------------------

struct ConditionalSignalDistanceEstimate {
    double m2 = 0.0, m2_se = 0.0;  // E[d_M^2 | E]
    double m4 = 0.0, m4_se = 0.0;  // E[d_M^4 | E]
    double acceptance_rate = 0.0;
    long kept = 0;
    long draws = 0;
};

inline ConditionalSignalDistanceEstimate conditional_signal_distance_mc(
    const ManifoldModel& m, const Vec& q, double R, double sigma, long kept_target,
    std::uint64_t seed, long max_draws = 400'000'000) {
    Rng rng(seed);
    const double D = m.ambient_dim();
    const double r_sq = R * R;
    // Clean points live in the leading block, so the sampling runs on a twin
    // manifold whose ambient space is just that block; D only enters through
    // the chi-square degrees of freedom. Keeps each draw O(d) even at D ~ 1e7.
    const int head = m.active_dims();
    ManifoldModel twin = [&] {
        switch (m.kind()) {
            case ManifoldKind::Circle: return ManifoldModel::circle(head, m.radii()[0]);
            case ManifoldKind::Sphere:
                return ManifoldModel::sphere(m.intrinsic_dim(), head, m.radii()[0]);
            case ManifoldKind::FlatTorus:
                return ManifoldModel::flat_torus(head, m.radii()[0], m.radii()[1]);
        }
        throw std::logic_error("unreachable");
    }();
    Vec q_head(q.begin(), q.begin() + head);
    double q_tail_sq = 0.0;
    for (int i = head; i < m.ambient_dim(); ++i) q_tail_sq += q[i] * q[i];
    const Vec q_nat = twin.project(q_head);
    // chi^2_{D-1} via the Marsaglia-Tsang gamma sampler (shape (D-1)/2, scale 2).
    const double shape = 0.5 * (D - 1.0);
    const double dd = shape - 1.0 / 3.0;
    const double cc = 1.0 / std::sqrt(9.0 * dd);
    auto chi_sq_draw = [&]() {
        for (;;) {
            double x, v;
            do {
                x = rng.gaussian();
                v = 1.0 + cc * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = rng.uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return 2.0 * dd * v;
            if (std::log(u) < 0.5 * x * x + dd * (1.0 - v + std::log(v))) return 2.0 * dd * v;
        }
    };
    ConditionalSignalDistanceEstimate est;
    double s2 = 0.0, s4 = 0.0, s8 = 0.0;
    long draws = 0;
    while (est.kept < kept_target) {
        if (draws >= max_draws)
            throw AcceptanceTooLow("conditional sampler exceeded its draw budget", draws,
                                   static_cast<int>(est.kept), static_cast<int>(kept_target));
        ++draws;
        const Vec x_nat = twin.sample_uniform(rng);
        const double t_sq = q_tail_sq + squared_distance(x_nat, q_head);
        const double t = std::sqrt(t_sq);
        const double g = rng.gaussian(sigma);
        const double w = chi_sq_draw();
        const double obs_sq = (t - g) * (t - g) + sigma * sigma * w;
        if (obs_sq > r_sq) continue;
        ++est.kept;
        const double gd = twin.geodesic_distance(x_nat, q_nat);
        const double gd2 = gd * gd;
        s2 += gd2;
        s4 += gd2 * gd2;
        s8 += gd2 * gd2 * gd2 * gd2;
    }
    est.draws = draws;
    est.acceptance_rate = static_cast<double>(est.kept) / static_cast<double>(draws);
    const double n = static_cast<double>(est.kept);
    est.m2 = s2 / n;
    est.m4 = s4 / n;
    est.m2_se = std::sqrt(std::max(0.0, s4 / n - est.m2 * est.m2) / n);
    est.m4_se = std::sqrt(std::max(0.0, s8 / n - est.m4 * est.m4) / n);
    return est;
}

/// Hypotheses of the intrinsic-distance statement with constants set to 1.
inline std::optional<std::string> signal_distance_hypothesis_violation(const ManifoldModel& m,
                                                                       double dist_q, double R,
                                                                       double sigma) {
    const auto c = m.constants();
    const double D = m.ambient_dim();
    const double d = m.intrinsic_dim();
    if (!(sigma * std::sqrt(D) <= 0.5 * c.reach)) return "sigma sqrt(D) > tau/2";
    if (!(dist_q <= std::min(1.0 / c.curvature, 0.5 * c.reach))) return "d(q,M) too large";
    const double s_star_sq = R * R - sigma * sigma * (D - 3.0);
    const double lo = std::max(576.0 * std::log(2.0) * sigma * sigma * std::pow(D, 2.0 / 3.0),
                               dist_q * dist_q);
    const double hi = std::min(3.0 * sigma * sigma * D, dist_q * dist_q + c.reach * c.reach);
    if (!(lo <= s_star_sq && s_star_sq <= hi)) return "s_star^2 outside its admissible window";
    const double s_par_sq = s_star_sq - dist_q * dist_q;
    const double s_par_check_sq = s_par_sq - 2.0 * sigma * sigma;
    if (!(s_par_check_sq > 0.0)) return "s_check_parallel^2 <= 0";
    const double L = std::log(c.diameter / std::sqrt(s_par_check_sq)) +
                     d * c.curvature * c.diameter +
                     d * std::log(1.0 / (c.curvature * std::sqrt(s_par_sq)));
    if (!(L > 0.0)) return "log factor nonpositive";
    if (!(sigma * std::sqrt(L) <= c.reach)) return "sigma sqrt(log factor) > c3 tau";
    const double s_check_sq = R * R - sigma * sigma * (D - 1.0);
    if (!(s_par_check_sq + std::sqrt(L) * sigma * sigma * std::sqrt(D) <= s_check_sq))
        return "combined window condition fails (c4=1)";
    return std::nullopt;
}

inline CheckReport check_conditional_signal_distance(const ManifoldModel& m, const Vec& q, double R,
                                                     double sigma, long kept_target,
                                                     std::uint64_t seed) {
    detail::Stopwatch clock;
    CheckReport r;
    r.name = "conditional-signal-distance";
    r.seed = seed;
    const double dist_q = m.extrinsic_distance(q);
    r.parameters = {{"manifold", m.to_json()}, {"R", R},           {"sigma", sigma},
                    {"dist_q", dist_q},        {"kept", kept_target}};
    if (auto why = signal_distance_hypothesis_violation(m, dist_q, R, sigma)) {
        r.outcome = Outcome::Skipped;
        r.reason = "hypotheses not satisfied: " + *why;
        r.runtime_seconds = clock.seconds();
        return r;
    }
    const auto c = m.constants();
    const double D = m.ambient_dim();
    const double d = m.intrinsic_dim();
    const double s_star_sq = R * R - sigma * sigma * (D - 3.0);
    const double s_par_sq = s_star_sq - dist_q * dist_q;
    const double s_par_check_sq = s_par_sq - 2.0 * sigma * sigma;
    const double L = std::log(c.diameter / std::sqrt(s_par_check_sq)) +
                     d * c.curvature * c.diameter +
                     d * std::log(1.0 / (c.curvature * std::sqrt(s_par_sq)));
    const double bound2 = s_par_check_sq + std::sqrt(L) * sigma * sigma * std::sqrt(D);
    const double bound4 = s_par_check_sq * s_par_check_sq + L * std::pow(sigma, 4) * D;
    const auto est = conditional_signal_distance_mc(m, q, R, sigma, kept_target, seed);
    r.measured = {{"m2", est.m2},           {"m2_se", est.m2_se},
                  {"m4", est.m4},           {"m4_se", est.m4_se},
                  {"ratio2", est.m2 / bound2}, {"ratio4", est.m4 / bound4},
                  {"acceptance_rate", est.acceptance_rate}};
    r.bounds = {{"bound2", bound2}, {"bound4", bound4}, {"ratio_tolerance", 10.0}};
    const Outcome o2 = detail::compare_with_band(est.m2, est.m2_se, 10.0 * bound2);
    const Outcome o4 = detail::compare_with_band(est.m4, est.m4_se, 10.0 * bound4);
    r.outcome = (o2 == Outcome::Fail || o4 == Outcome::Fail) ? Outcome::Fail
                : (o2 == Outcome::Inconclusive || o4 == Outcome::Inconclusive)
                    ? Outcome::Inconclusive
                    : Outcome::Pass;
    r.samples = est.kept;
    r.runtime_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Points intrinsically far from q_nat are extrinsically far from q.
// ---------------------------------------------------------------------------

inline CheckReport check_far_distance(const ManifoldModel& m, const Vec& q, double xi, int grid_n) {
    detail::Stopwatch clock;
    CheckReport r;
    r.name = "far-distance";
    const auto c = m.constants();
    const Vec q_nat = m.project(q);
    const double dist_q = distance(q, q_nat);
    r.parameters = {{"manifold", m.to_json()}, {"xi", xi}, {"dist_q", dist_q}, {"grid", grid_n}};
    if (!(dist_q < 0.5 * c.reach)) {
        r.outcome = Outcome::Skipped;
        r.reason = "requires ||q - q_nat|| < tau/2";
        r.runtime_seconds = clock.seconds();
        return r;
    }
    if (!(xi < 0.5 / c.curvature)) {
        r.outcome = Outcome::Skipped;
        r.reason = "requires xi < 1/(2 kappa)";
        r.runtime_seconds = clock.seconds();
        return r;
    }
    const double c_const = (std::sqrt(2.0) - 1.0) / std::sqrt(2.0);
    double inf_sq = 1e300;
    long considered = 0;
    for (const auto& p : m.grid(grid_n)) {
        if (m.geodesic_distance(p, q_nat) < xi) continue;
        ++considered;
        inf_sq = std::min(inf_sq, squared_distance(q, p));
    }
    const double bound = std::min(dist_q * dist_q + c_const * xi * xi, c.reach * c.reach);
    r.measured = {{"inf_sq", inf_sq}, {"grid_points_considered", considered}};
    r.bounds = {{"bound", bound}, {"c", c_const}};
    r.outcome = (considered > 0 && inf_sq >= bound - 1e-12) ? Outcome::Pass : Outcome::Fail;
    if (considered == 0) r.reason = "no grid point with d_M >= xi";
    r.samples = considered;
    r.runtime_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Geodesic-ball volume bound, checked where cap volumes are closed-form:
// spheres S^d(r). The cap ratio is int_0^{Delta/r} sin^{d-1} / int_0^pi.
// ---------------------------------------------------------------------------

inline double sphere_cap_volume_ratio(int d, double r, double delta) {
    if (!(delta > 0.0) || delta > M_PI * r + 1e-12)
        throw DomainError("cap radius must lie in (0, pi r]");
    const double phi = std::min(delta / r, M_PI);
    auto integrand = [d](double t) { return std::pow(std::sin(t), d - 1); };
    QuadratureOptions opts;
    opts.abs_tol = 1e-12;
    const double num = adaptive_simpson(integrand, 0.0, phi, opts);
    const double den = adaptive_simpson(integrand, 0.0, M_PI, opts);
    return num / den;
}

inline CheckReport check_volume_ratio_sphere(int d, double r, int grid_n) {
    detail::Stopwatch clock;
    CheckReport r_;
    r_.name = "volume-ratio-sphere";
    r_.parameters = {{"d", d}, {"r", r}, {"grid", grid_n}};
    const double kappa = 1.0 / r;
    const double diam = M_PI * r;
    int passed = 0;
    double worst_ratio = 1e300;
    for (int i = 1; i <= grid_n; ++i) {
        const double delta = 0.5 * M_PI * r * static_cast<double>(i) / grid_n;
        const double lhs = sphere_cap_volume_ratio(d, r, delta);
        const double rhs =
            0.25 * std::pow(2.0 * kappa * delta, d) * std::exp(-kappa * (d - 1.0) * diam);
        if (lhs >= rhs) ++passed;
        worst_ratio = std::min(worst_ratio, lhs / rhs);
    }
    r_.measured = {{"passed", passed}, {"worst_lhs_over_rhs", worst_ratio}};
    r_.bounds = {{"required", grid_n}};
    r_.outcome = passed == grid_n ? Outcome::Pass : Outcome::Fail;
    r_.samples = grid_n;
    r_.runtime_seconds = clock.seconds();
    return r_;
}

// ---------------------------------------------------------------------------
// Vector Hoeffding tail for bounded i.i.d. vectors, with the statement
// constant 25 * 64 carried by the norm bound B.
// ---------------------------------------------------------------------------

inline CheckReport check_vector_hoeffding(int D, double B, int N, long trials,
                                          const std::vector<double>& t_values, std::uint64_t seed) {
    detail::Stopwatch clock;
    CheckReport r;
    r.name = "vector-hoeffding";
    r.seed = seed;
    r.parameters = {{"D", D}, {"B", B}, {"N", N}, {"trials", trials}, {"t_values", t_values}};
    Rng rng(seed);
    const double coord_sd = B / std::sqrt(static_cast<double>(D));
    std::vector<double> mean_norms(trials);
    Vec z(D), mean(D);
    for (long trial = 0; trial < trials; ++trial) {
        std::fill(mean.begin(), mean.end(), 0.0);
        for (int k = 0; k < N; ++k) {
            double nrm_sq = 0.0;
            for (int i = 0; i < D; ++i) {
                z[i] = rng.gaussian(coord_sd);
                nrm_sq += z[i] * z[i];
            }
            // Clip to the ball of radius B; symmetric, so the mean stays zero.
            const double scale = nrm_sq > B * B ? B / std::sqrt(nrm_sq) : 1.0;
            for (int i = 0; i < D; ++i) mean[i] += scale * z[i];
        }
        mean_norms[trial] = norm(mean) / static_cast<double>(N);
    }
    bool all_ok = true;
    nlohmann::json tails = nlohmann::json::array();
    for (double t : t_values) {
        long exceed = 0;
        for (double v : mean_norms)
            if (v > t) ++exceed;
        const double empirical = static_cast<double>(exceed) / static_cast<double>(trials);
        const double bound = std::min(
            1.0, D * std::exp(-t * t * static_cast<double>(N) / (25.0 * 64.0 * B * B)));
        tails.push_back({{"t", t}, {"empirical", empirical}, {"bound", bound}});
        if (empirical > bound) all_ok = false;
    }
    r.measured = {{"tails", tails}};
    r.bounds = {{"form", "D exp(-t^2 N / (25*64 B^2))"}};
    r.outcome = all_ok ? Outcome::Pass : Outcome::Fail;
    r.samples = trials;
    r.runtime_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Envelope suite: every band statement about gamma_dot, -h', phi * -h' and
// phi * h, each checked pointwise on grids at parameter triples that satisfy
// the statement's own hypotheses, plus the C(D) decay bound.
// ---------------------------------------------------------------------------

inline CheckReport check_envelope_suite(int grid_points = 200) {
    detail::Stopwatch clock;
    CheckReport r;
    r.name = "envelope-suite";
    r.parameters = {{"grid_points", grid_points}};
    std::vector<std::string> failures;
    long checked = 0;

    // (a) gamma_dot factor-4 band.
    for (double p : {28.0, 50.0, 100.0, 500.0}) {
        const double xstar = p - 1.0;
        const double half = std::pow(xstar, 2.0 / 3.0);
        for (int i = 0; i < 100; ++i) {
            const double x = xstar - half + 2.0 * half * i / 99.0;
            const auto band = gamma_dot_envelope(p, x);
            ++checked;
            if (!band.contains(gamma_pdf_normalized(p, x)))
                failures.push_back("gamma_dot band violated at p=" + std::to_string(p));
        }
    }

    // (b) -h' subgaussian band.
    for (const auto& tr : hdot_band_triples()) {
        if (!hypotheses::hdot_band(tr.D, tr.sigma, tr.s_star_sq)) {
            failures.push_back("inadmissible -h' triple D=" + std::to_string(tr.D));
            continue;
        }
        const auto g = tr.profile();
        const double half = g.sigma() * std::pow(static_cast<double>(g.D()) - 3.0, 1.0 / 6.0) / 3.0;
        for (int i = 0; i < grid_points; ++i) {
            const double s = g.s_star() - half + 2.0 * half * i / (grid_points - 1.0);
            const auto band = bands::hdot(g, s);
            ++checked;
            if (!band.contains(g.neg_h_dot(s)))
                failures.push_back("-h' band violated at D=" + std::to_string(tr.D));
        }
    }

    // (c) phi * -h' band.
    for (const auto& tr : conv_hdot_band_triples()) {
        if (!hypotheses::conv_hdot_band(tr.D, tr.sigma, tr.s_star_sq)) {
            failures.push_back("inadmissible phi*-h' triple D=" + std::to_string(tr.D));
            continue;
        }
        const auto g = tr.profile();
        const double half = g.sigma() * std::pow(static_cast<double>(g.D()) - 3.0, 1.0 / 6.0) / 6.0;
        for (int i = 0; i < grid_points; ++i) {
            const double s = g.s_star() - half + 2.0 * half * i / (grid_points - 1.0);
            const auto band = bands::conv_hdot(g, s);
            ++checked;
            if (!band.contains(g.phi_conv_neg_h_dot(s)))
                failures.push_back("phi*-h' band violated at D=" + std::to_string(tr.D));
        }
    }

    // (d) phi * h lower and upper bounds.
    for (const auto& tr : conv_h_bounds_triples()) {
        if (!hypotheses::conv_h_bounds(tr.D, tr.sigma, tr.s_star_sq)) {
            failures.push_back("inadmissible phi*h triple D=" + std::to_string(tr.D));
            continue;
        }
        const auto g = tr.profile();
        const double hi = g.s_star() +
                          g.sigma() * std::pow(static_cast<double>(g.D()) - 3.0, 1.0 / 6.0) / 12.0;
        // Lower bound over [0, hi]. Most of the grid budget goes near the
        // transition where the bound actually bites.
        for (int i = 0; i < grid_points; ++i) {
            double s;
            if (i < grid_points / 4)
                s = (g.s_star() - 3.0 * g.nu_bar()) * static_cast<double>(i) / (grid_points / 4);
            else
                s = g.s_star() - 3.0 * g.nu_bar() +
                    (hi - g.s_star() + 3.0 * g.nu_bar()) *
                        static_cast<double>(i - grid_points / 4) /
                        (grid_points - grid_points / 4 - 1.0);
            ++checked;
            if (g.phi_conv_h(s) < bands::conv_h_lower(g, s))
                failures.push_back("phi*h lower bound violated at D=" + std::to_string(tr.D));
        }
        // Upper bound from s_check outward.
        const double sc = *g.s_check();
        for (int i = 0; i < grid_points; ++i) {
            const double s = sc + (6.0 * g.nu_bar()) * static_cast<double>(i) / (grid_points - 1.0);
            ++checked;
            if (g.phi_conv_h(s) > bands::conv_h_upper(g, s))
                failures.push_back("phi*h upper bound violated at D=" + std::to_string(tr.D));
        }
    }

    // (e) C(D) <= (pi (D-3))^{-1/2}, D in {4, ..., 1024}.
    for (long D = 4; D <= 1024; ++D) {
        ++checked;
        if (c_of_d(D) > 1.0 / std::sqrt(M_PI * (static_cast<double>(D) - 3.0)))
            failures.push_back("C(D) decay bound violated at D=" + std::to_string(D));
    }

    r.measured = {{"points_checked", checked}, {"violations", failures.size()}};
    if (!failures.empty()) {
        r.reason = failures.front() + (failures.size() > 1 ? " (+" +
                       std::to_string(failures.size() - 1) + " more)" : "");
    }
    r.bounds = {{"violations_allowed", 0}};
    r.outcome = failures.empty() ? Outcome::Pass : Outcome::Fail;
    r.samples = checked;
    r.runtime_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Grouping consistency: the quadrature value (phi*h)(t) against the Monte
// Carlo grouping frequency, and the stream acceptance rate against the
// manifold average of phi*h.
// ---------------------------------------------------------------------------

inline CheckReport check_grouping_consistency(long trials, std::uint64_t seed,
                                              int n_t_values = 10) {
    detail::Stopwatch clock;
    CheckReport r;
    r.name = "grouping-consistency";
    r.seed = seed;
    const long D = 128;
    const double sigma = 0.1;
    const double R = std::sqrt(3.84);
    GroupingProfile g(R, sigma, D);
    r.parameters = {{"D", D}, {"sigma", sigma}, {"R_sq", R * R}, {"trials", trials}};
    bool all_ok = true;
    const double t_hi = g.s_star() + 4.0 * g.nu_bar();
    std::vector<nlohmann::json> row_list(n_t_values);
    std::vector<bool> row_ok(n_t_values, false);
    // Each offset gets its own derived stream, so the result is independent
    // of the worker count.
    parallel_for(n_t_values, default_worker_count(), [&](long k) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k), 0));
        const double t = t_hi * static_cast<double>(k) / (n_t_values - 1.0);
        const double analytic = g.phi_conv_h(t);
        long hits = 0;
        for (long i = 0; i < trials; ++i) {
            // ||x_nat + z - q|| with ||x_nat - q|| = t: put the offset on the
            // first coordinate; the event is a pure Gaussian functional.
            double dist_sq = 0.0;
            for (long j = 0; j < D; ++j) {
                const double zj = rng.gaussian(sigma);
                const double diff = (j == 0) ? zj - t : zj;
                dist_sq += diff * diff;
            }
            if (dist_sq <= R * R) ++hits;
        }
        const double freq = static_cast<double>(hits) / static_cast<double>(trials);
        const double se = std::max(
            std::sqrt(std::max(0.0, analytic * (1.0 - analytic)) / static_cast<double>(trials)),
            1.0 / static_cast<double>(trials));
        row_ok[k] = std::fabs(freq - analytic) <= 3.0 * se;
        row_list[k] = {{"t", t}, {"phi_conv_h", analytic}, {"mc", freq}, {"se", se},
                       {"ok", static_cast<bool>(row_ok[k])}};
    });
    nlohmann::json rows = nlohmann::json::array();
    for (int k = 0; k < n_t_values; ++k) {
        rows.push_back(row_list[k]);
        all_ok = all_ok && row_ok[k];
    }

    // Stream acceptance vs the manifold average of phi*h on the 2-sphere,
    // with q lifted radially off the north pole.
    const ManifoldModel m = ManifoldModel::sphere(2, static_cast<int>(D), 1.0);
    Vec q(D, 0.0);
    q[2] = 1.2;
    auto dist_at_angle = [&](double theta) {
        return std::sqrt(1.2 * 1.2 + 1.0 - 2.0 * 1.2 * std::cos(theta));
    };
    QuadratureOptions opts;
    opts.abs_tol = 1e-6;
    const double analytic_rate = adaptive_simpson(
        [&](double theta) { return 0.5 * std::sin(theta) * g.phi_conv_h(dist_at_angle(theta)); },
        0.0, M_PI, opts);
    SampleStream stream(m, sigma, seed + 1);
    const long stream_trials = std::max(10'000L, trials / 50);
    long accepted = 0;
    for (long i = 0; i < stream_trials; ++i) {
        const NoisySample s = stream.next();
        if (squared_distance(s.observed, q) <= R * R) ++accepted;
    }
    const double rate = static_cast<double>(accepted) / static_cast<double>(stream_trials);
    const double rate_se =
        std::sqrt(analytic_rate * (1.0 - analytic_rate) / static_cast<double>(stream_trials));
    const bool rate_ok = std::fabs(rate - analytic_rate) <= 3.0 * rate_se;
    all_ok = all_ok && rate_ok;

    r.measured = {{"pointwise", rows},
                  {"stream_acceptance", rate},
                  {"stream_acceptance_analytic", analytic_rate},
                  {"stream_acceptance_se", rate_se}};
    r.bounds = {{"tolerance", "3 binomial SE"}};
    r.outcome = all_ok ? Outcome::Pass : Outcome::Fail;
    r.samples = trials * n_t_values + stream_trials;
    r.runtime_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Registry with desk-scale default parameters for the CLI.
// ---------------------------------------------------------------------------

inline std::vector<std::string> registered_check_names() {
    return {"signal-avg",
            "noisy-point-distance",
            "conditional-noise-mean",
            "conditional-signal-distance",
            "far-distance",
            "volume-ratio-sphere",
            "vector-hoeffding",
            "envelope-suite",
            "grouping-consistency"};
}

inline CheckReport run_registered_check(const std::string& name, std::uint64_t seed,
                                        double trials_scale) {
    auto n = [trials_scale](long base) {
        return std::max(100L, static_cast<long>(base * trials_scale));
    };
    if (name == "signal-avg") {
        return check_signal_avg_suite(ManifoldModel::sphere(2, 8, 1.0), 100, seed);
    }
    if (name == "noisy-point-distance") {
        return check_noisy_point_distance(ManifoldModel::sphere(2, 128, 1.0), 0.03, n(10'000), seed);
    }
    if (name == "conditional-noise-mean") {
        const long D = 1024;
        const double sigma = std::sqrt(0.55 / static_cast<double>(D));
        const double s_star_sq = 1.5;
        const double R = std::sqrt(s_star_sq + sigma * sigma * (static_cast<double>(D) - 3.0));
        ManifoldModel m = ManifoldModel::sphere(2, static_cast<int>(D), 1.0);
        Vec q(D, 0.0);
        q[2] = 1.9;  // d(q, M) = 0.9
        return check_conditional_noise_mean(m, q, R, sigma, n(200'000), seed);
    }
    if (name == "conditional-signal-distance") {
        const long D = 2'500'000;
        const double sigma = 2.9e-4;
        const double s_star_sq = 0.625;
        const double R = std::sqrt(s_star_sq + sigma * sigma * (static_cast<double>(D) - 3.0));
        ManifoldModel m = ManifoldModel::sphere(2, static_cast<int>(D), 1.0);
        Vec q(D, 0.0);
        q[2] = 1.45;  // d(q, M) = 0.45
        return check_conditional_signal_distance(m, q, R, sigma, n(200'000), seed);
    }
    if (name == "far-distance") {
        ManifoldModel m = ManifoldModel::sphere(2, 8, 1.0);
        Rng rng(seed);
        Vec q(8, 0.0);
        const Vec p = m.sample_uniform(rng);
        for (int i = 0; i < 8; ++i) q[i] = 1.3 * p[i];
        CheckReport worst;
        for (int i = 0; i < 20; ++i) {
            const double xi = 0.05 + 0.4 * rng.uniform01();
            CheckReport one = check_far_distance(m, q, xi, 10'000);
            if (i == 0 || one.outcome == Outcome::Fail) worst = one;
        }
        return worst;
    }
    if (name == "volume-ratio-sphere") {
        CheckReport worst;
        for (int d = 2; d <= 8; ++d) {
            CheckReport one = check_volume_ratio_sphere(d, 1.0, 50);
            if (d == 2 || one.outcome == Outcome::Fail) worst = one;
        }
        worst.parameters["d"] = "2..8";
        return worst;
    }
    if (name == "vector-hoeffding") {
        return check_vector_hoeffding(16, 1.0, 100, n(10'000), {0.0, 0.15, 0.3}, seed);
    }
    if (name == "envelope-suite") return check_envelope_suite();
    if (name == "grouping-consistency") return check_grouping_consistency(n(100'000), seed);
    throw std::invalid_argument("unknown check: " + name);
}

}  // namespace lavg
