#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "lavg/common.hpp"
#include "lavg/landmarking.hpp"
#include "lavg/sampling.hpp"

namespace lavg {

/// Unperturbed stage-1 local average around q0, used as an estimate of the
/// projection of q0 onto the manifold.
inline Vec estimate_signal(SampleStream& stream, const Vec& q0, const LandmarkConfig& cfg) {
    const ManifoldModel& m = stream.manifold();
    cfg.validate(m);
    require_matching_sigma(stream, cfg);
    Vec sum(q0.size(), 0.0);
    const int count = cfg.resolved_batch1(m);
    collect_minibatch_foreach(stream, q0, cfg.resolved_radius1(m), count, cfg.max_draws,
                              [&](NoisySample&& s) { accumulate(sum, s.observed); });
    return scaled(sum, 1.0 / count);
}

inline Vec batch_mean(const Batch& batch) {
    Vec sum;
    for (const auto& s : batch.samples) accumulate(sum, s.observed);
    return scaled(sum, 1.0 / static_cast<double>(batch.samples.size()));
}

/// || mean(batch_i) - mean(batch_j) ||; symmetric in its arguments.
inline double pairwise_distance_from_batches(const Batch& batch_i, const Batch& batch_j) {
    return distance(batch_mean(batch_i), batch_mean(batch_j));
}

/// Estimates || q_i_nat - q_j_nat || as the distance between two local
/// averages, each over a fresh independent minibatch (no sample is shared
/// between the endpoints: the stream is consumed strictly in order).
inline double estimate_pairwise_distance(SampleStream& stream, const Vec& q_i, const Vec& q_j,
                                         const LandmarkConfig& cfg) {
    const ManifoldModel& m = stream.manifold();
    cfg.validate(m);
    require_matching_sigma(stream, cfg);
    const double radius = cfg.resolved_radius1(m);
    const int count = cfg.resolved_batch1(m);
    Vec sum_i(q_i.size(), 0.0), sum_j(q_j.size(), 0.0);
    collect_minibatch_foreach(stream, q_i, radius, count, cfg.max_draws,
                              [&](NoisySample&& s) { accumulate(sum_i, s.observed); });
    collect_minibatch_foreach(stream, q_j, radius, count, cfg.max_draws,
                              [&](NoisySample&& s) { accumulate(sum_j, s.observed); });
    return distance(scaled(sum_i, 1.0 / count), scaled(sum_j, 1.0 / count));
}

struct NetLandmark {
    Vec point;                 // refined landmark q2
    Vec seeded_from;           // the noisy candidate the run started at
    std::uint64_t stream_seed; // provenance
    long draws_consumed;       // stream draws spent producing it
};

struct NetSpec {
    std::vector<NetLandmark> landmarks;
    double covering_radius = 0.0;  // the separation parameter used to build it
    long total_draws = 0;

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& lm : landmarks)
            arr.push_back({{"point", lm.point},
                           {"seeded_from", lm.seeded_from},
                           {"stream_seed", lm.stream_seed},
                           {"draws_consumed", lm.draws_consumed}});
        return {{"landmarks", arr},
                {"covering_radius", covering_radius},
                {"total_draws", total_draws},
                {"size", landmarks.size()}};
    }
};

/// Greedy net construction: stream noisy points; whenever one lies at least
/// `separation` from every landmark so far, run a full two-round landmarking
/// pass seeded at it and keep the refined q2. Stops once `budget` stream
/// draws have been consumed, returning the partial net built so far.
inline NetSpec build_net(SampleStream& stream, const LandmarkConfig& cfg, double separation,
                         long budget, Rng& perturbation_rng) {
    if (!(separation > 0.0)) throw std::invalid_argument("separation must be positive");
    NetSpec net;
    net.covering_radius = separation;
    const double sep_sq = separation * separation;
    while (stream.draws_so_far() < budget) {
        const NoisySample candidate = stream.next();
        bool far_from_all = true;
        for (const auto& lm : net.landmarks) {
            if (squared_distance(candidate.observed, lm.point) < sep_sq) {
                far_from_all = false;
                break;
            }
        }
        if (!far_from_all) continue;
        const long before = stream.draws_so_far();
        LandmarkResult res = two_round_landmark_from(candidate.observed, stream, cfg, perturbation_rng);
        net.landmarks.push_back(
            {res.q2, candidate.observed, stream.seed(), stream.draws_so_far() - before + 1});
    }
    net.total_draws = stream.draws_so_far();
    return net;
}

}  // namespace lavg
