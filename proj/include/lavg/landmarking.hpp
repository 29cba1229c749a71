#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lavg/common.hpp"
#include "lavg/geometry.hpp"
#include "lavg/sampling.hpp"

namespace lavg {

// ---------------------------------------------------------------------------
// Stage radius and batch-size calculators. The constants C2, C3, C6, C7 are
// the tunable stand-ins for the existential constants of the accuracy
// guarantee; they default to 1 and are swept by experiments.
// ---------------------------------------------------------------------------

/// R1^2 = sigma^2 (2D - d - 3) + C3 kbar^2 sigma^2 d + 3 C3 kbar sigma^2 sqrt(Dd).
inline double stage1_radius_sq(double sigma, long D, long d, double kappa_bar, double C3) {
    const double s2 = sigma * sigma;
    const double Dd = static_cast<double>(D) * static_cast<double>(d);
    return s2 * (2.0 * D - d - 3.0) + C3 * kappa_bar * kappa_bar * s2 * d +
           3.0 * C3 * kappa_bar * s2 * std::sqrt(Dd);
}

/// R2^2 = sigma^2 (D - 3 + D^{3/4} + 2 C7 D^{5/12}).
inline double stage2_radius_sq(double sigma, long D, double C7) {
    const double Dd = static_cast<double>(D);
    return sigma * sigma * (Dd - 3.0 + std::pow(Dd, 0.75) + 2.0 * C7 * std::pow(Dd, 5.0 / 12.0));
}

/// N1 >= C2 log(D) diam^2 / (sigma^2 (log(D) + kappa diam)), natural log.
inline double stage1_batch_size_raw(double sigma, long D, double kappa, double diam, double C2) {
    const double logD = std::log(static_cast<double>(D));
    return C2 * logD * diam * diam / (sigma * sigma * (logD + kappa * diam));
}

/// N2 >= C6 log^2(D) diam^2 / (sigma^2 (log(D) + kappa diam)).
inline double stage2_batch_size_raw(double sigma, long D, double kappa, double diam, double C6) {
    const double logD = std::log(static_cast<double>(D));
    return C6 * logD * logD * diam * diam / (sigma * sigma * (logD + kappa * diam));
}

inline int ceil_batch(double raw) {
    // Floored at 1: a degenerate constant must still request one sample.
    const double c = std::ceil(raw);
    if (c < 1.0) return 1;
    if (c > 2e9) throw std::invalid_argument("batch size formula overflows int");
    return static_cast<int>(c);
}

inline int stage1_batch_size(double sigma, long D, double kappa, double diam, double C2) {
    return ceil_batch(stage1_batch_size_raw(sigma, D, kappa, diam, C2));
}

inline int stage2_batch_size(double sigma, long D, double kappa, double diam, double C6) {
    return ceil_batch(stage2_batch_size_raw(sigma, D, kappa, diam, C6));
}

/// The post-averaging perturbation theta with i.i.d. N(0, sigma^2 D^{-1/4})
/// coordinates, so E||theta||^2 = sigma^2 D^{3/4}. Disabled -> zero vector.
inline Vec draw_perturbation(double sigma, long D, Rng& rng, bool enabled = true) {
    Vec v(D, 0.0);
    if (!enabled || sigma == 0.0) return v;
    const double stddev = sigma * std::pow(static_cast<double>(D), -0.125);
    for (auto& x : v) x = rng.gaussian(stddev);
    return v;
}

struct StageConstants {
    double C2 = 1.0;
    double C3 = 1.0;
    double C6 = 1.0;
    double C7 = 1.0;
};

/// All tunables of a landmarking run. Radii and batch sizes default to the
/// stage formulas evaluated on the manifold's constants; any of them can be
/// pinned manually. `round_radii`/`round_batches` switch on the multi-round
/// running-average mode.
struct LandmarkConfig {
    double sigma = 0.1;
    StageConstants constants;
    std::optional<double> radius1;  // length, not squared
    std::optional<double> radius2;
    std::optional<int> batch1;
    std::optional<int> batch2;
    bool perturbation_enabled = true;
    long max_draws = kDefaultMaxDraws;
    bool record_batches = false;
    std::vector<double> round_radii;   // multi-round schedule (manual)
    std::vector<int> round_batches;

    double resolved_radius1(const ManifoldModel& m) const {
        if (radius1) return *radius1;
        return std::sqrt(stage1_radius_sq(sigma, m.ambient_dim(), m.intrinsic_dim(),
                                          m.kappa_bar(), constants.C3));
    }
    double resolved_radius2(const ManifoldModel& m) const {
        if (radius2) return *radius2;
        return std::sqrt(stage2_radius_sq(sigma, m.ambient_dim(), constants.C7));
    }
    int resolved_batch1(const ManifoldModel& m) const {
        if (batch1) return *batch1;
        return stage1_batch_size(sigma, m.ambient_dim(), m.curvature(), m.intrinsic_diameter(),
                                 constants.C2);
    }
    int resolved_batch2(const ManifoldModel& m) const {
        if (batch2) return *batch2;
        return stage2_batch_size(sigma, m.ambient_dim(), m.curvature(), m.intrinsic_diameter(),
                                 constants.C6);
    }

    void validate(const ManifoldModel& m) const {
        // sigma = 0 (the noiseless degenerate stream) is allowed only with
        // fully manual radii and batch sizes; the stage formulas need sigma > 0.
        if (sigma < 0.0) throw std::invalid_argument("sigma must be nonnegative");
        if (sigma == 0.0) {
            if (!(radius1 && radius2 && batch1 && batch2))
                throw std::invalid_argument("sigma = 0 requires manual radii and batch sizes");
            return;
        }
        const double floor_sq = sigma * sigma * (m.ambient_dim() - 3.0);
        const double r1 = resolved_radius1(m), r2 = resolved_radius2(m);
        if (!radius1 && r1 * r1 < floor_sq * (1.0 - 1e-12))
            throw std::invalid_argument("auto stage-1 radius below the sigma^2 (D-3) floor");
        if (!radius2 && r2 * r2 < floor_sq * (1.0 - 1e-12))
            throw std::invalid_argument("auto stage-2 radius below the sigma^2 (D-3) floor");
        if (resolved_batch1(m) < 1 || resolved_batch2(m) < 1)
            throw std::invalid_argument("batch sizes must be >= 1");
        if (max_draws < 1) throw std::invalid_argument("max_draws must be >= 1");
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"sigma", sigma},
                            {"C2", constants.C2},
                            {"C3", constants.C3},
                            {"C6", constants.C6},
                            {"C7", constants.C7},
                            {"perturbation_enabled", perturbation_enabled},
                            {"max_draws", max_draws}};
        if (radius1) j["radius1"] = *radius1;
        if (radius2) j["radius2"] = *radius2;
        if (batch1) j["batch1"] = *batch1;
        if (batch2) j["batch2"] = *batch2;
        if (!round_radii.empty()) j["round_radii"] = round_radii;
        if (!round_batches.empty()) j["round_batches"] = round_batches;
        return j;
    }
};

/// Per-stage bookkeeping: the exact decomposition of the minibatch mean into
/// signal average and noise average, plus draw accounting.
struct StageDiagnostics {
    double radius = 0.0;
    int batch_size = 0;
    long draws = 0;
    double dist_to_manifold = 0.0;   // d(q^ell, M)
    Vec signal_average;              // mean of clean points
    Vec noise_average;               // mean of noise vectors
};

struct LandmarkResult {
    Vec q0;
    Vec q1;
    Vec q2;
    Vec perturbation;
    double dist_q0 = 0.0;
    StageDiagnostics stage1;
    StageDiagnostics stage2;
    std::vector<NoisySample> batch1;  // populated only when record_batches
    std::vector<NoisySample> batch2;
    std::uint64_t stream_seed = 0;

    nlohmann::json to_json(bool include_points = true) const {
        nlohmann::json j = {{"stream_seed", stream_seed},
                            {"rng", Rng::describe()},
                            {"d_q0", dist_q0},
                            {"d_q1", stage1.dist_to_manifold},
                            {"d_q2", stage2.dist_to_manifold},
                            {"radius1", stage1.radius},
                            {"radius2", stage2.radius},
                            {"batch1", stage1.batch_size},
                            {"batch2", stage2.batch_size},
                            {"draws_stage1", stage1.draws},
                            {"draws_stage2", stage2.draws},
                            {"noise_average_norm_1", norm(stage1.noise_average)},
                            {"noise_average_norm_2", norm(stage2.noise_average)},
                            {"perturbation_norm", norm(perturbation)}};
        if (include_points) {
            j["q0"] = q0;
            j["q1"] = q1;
            j["q2"] = q2;
            j["perturbation"] = perturbation;
        }
        return j;
    }
};

namespace detail {

struct StageAccumulator {
    Vec sum_observed, sum_clean, sum_noise;
    void add(const NoisySample& s) {
        accumulate(sum_observed, s.observed);
        accumulate(sum_clean, s.clean);
        accumulate(sum_noise, s.noise);
    }
    Vec mean_observed(int n) const { return scaled(sum_observed, 1.0 / n); }
    Vec mean_clean(int n) const { return scaled(sum_clean, 1.0 / n); }
    Vec mean_noise(int n) const { return scaled(sum_noise, 1.0 / n); }
};

inline StageDiagnostics run_stage(SampleStream& stream, const Vec& center, double radius, int count,
                                  long max_draws, Vec& mean_out,
                                  std::vector<NoisySample>* keep, const char* stage_name) {
    StageDiagnostics diag;
    diag.radius = radius;
    diag.batch_size = count;
    StageAccumulator acc;
    try {
        diag.draws = collect_minibatch_foreach(stream, center, radius, count, max_draws,
                                               [&](NoisySample&& s) {
                                                   acc.add(s);
                                                   if (keep) keep->push_back(std::move(s));
                                               });
    } catch (const AcceptanceTooLow& e) {
        throw AcceptanceTooLow(std::string(stage_name) + ": " + e.what(), e.draws_consumed,
                               e.accepted, e.wanted);
    }
    mean_out = acc.mean_observed(count);
    diag.signal_average = acc.mean_clean(count);
    diag.noise_average = acc.mean_noise(count);
    return diag;
}

}  // namespace detail

inline void require_matching_sigma(const SampleStream& stream, const LandmarkConfig& cfg) {
    if (stream.sigma() != cfg.sigma)
        throw std::invalid_argument("stream sigma differs from config sigma");
}

/// The two-round minibatch landmarking pass, starting from a given q0:
/// collect within R1 of q0, average, perturb; collect within R2 of the
/// perturbed average, average again. `perturbation_rng` is independent of the
/// sample stream.
inline LandmarkResult two_round_landmark_from(const Vec& q0, SampleStream& stream,
                                              const LandmarkConfig& cfg, Rng& perturbation_rng) {
    const ManifoldModel& m = stream.manifold();
    cfg.validate(m);
    require_matching_sigma(stream, cfg);
    LandmarkResult res;
    res.stream_seed = stream.seed();
    res.q0 = q0;
    res.dist_q0 = m.extrinsic_distance(q0);

    Vec mean1;
    res.stage1 = detail::run_stage(stream, res.q0, cfg.resolved_radius1(m), cfg.resolved_batch1(m),
                                   cfg.max_draws, mean1, cfg.record_batches ? &res.batch1 : nullptr,
                                   "stage 1");
    res.perturbation =
        draw_perturbation(cfg.sigma, m.ambient_dim(), perturbation_rng, cfg.perturbation_enabled);
    res.q1 = add(mean1, res.perturbation);
    res.stage1.dist_to_manifold = m.extrinsic_distance(res.q1);

    Vec mean2;
    res.stage2 = detail::run_stage(stream, res.q1, cfg.resolved_radius2(m), cfg.resolved_batch2(m),
                                   cfg.max_draws, mean2, cfg.record_batches ? &res.batch2 : nullptr,
                                   "stage 2");
    res.q2 = mean2;
    res.stage2.dist_to_manifold = m.extrinsic_distance(res.q2);
    return res;
}

/// Standard entry point: q0 is the first sample drawn from the stream.
inline LandmarkResult two_round_landmark(SampleStream& stream, const LandmarkConfig& cfg,
                                         Rng& perturbation_rng) {
    const NoisySample first = stream.next();
    return two_round_landmark_from(first.observed, stream, cfg, perturbation_rng);
}

struct RoundRecord {
    Vec q;
    double dist_to_manifold = 0.0;
    long draws = 0;
    long points_assigned = 0;  // N after this round (q0 counts as one)
};

/// Multi-round running-average variant: q starts at the first sample with
/// weight 1 and each round folds a fresh radius-filtered minibatch into the
/// running mean, q <- (N q + sum X) / (N + N_mb). The radius schedule is
/// caller-supplied. Returns the per-round trajectory, q0 first.
inline std::vector<RoundRecord> multi_round_landmark(SampleStream& stream,
                                                     const LandmarkConfig& cfg) {
    if (cfg.round_radii.empty() || cfg.round_radii.size() != cfg.round_batches.size())
        throw std::invalid_argument("multi-round mode needs matching radius and batch schedules");
    require_matching_sigma(stream, cfg);
    const ManifoldModel& m = stream.manifold();
    std::vector<RoundRecord> trajectory;
    Vec q = stream.next().observed;
    long n_assigned = 1;
    trajectory.push_back({q, m.extrinsic_distance(q), 1, n_assigned});
    for (std::size_t round = 0; round < cfg.round_radii.size(); ++round) {
        const int count = cfg.round_batches[round];
        Vec sum(q.size(), 0.0);
        long draws = 0;
        try {
            draws = collect_minibatch_foreach(stream, q, cfg.round_radii[round], count,
                                              cfg.max_draws,
                                              [&](NoisySample&& s) { accumulate(sum, s.observed); });
        } catch (const AcceptanceTooLow& e) {
            throw AcceptanceTooLow("round " + std::to_string(round + 1) + ": " + e.what(),
                                   e.draws_consumed, e.accepted, e.wanted);
        }
        const double total = static_cast<double>(n_assigned + count);
        for (std::size_t i = 0; i < q.size(); ++i)
            q[i] = (static_cast<double>(n_assigned) * q[i] + sum[i]) / total;
        n_assigned += count;
        trajectory.push_back({q, m.extrinsic_distance(q), draws, n_assigned});
    }
    return trajectory;
}

}  // namespace lavg
