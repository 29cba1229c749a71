#pragma once

#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lavg/common.hpp"
#include "lavg/geometry.hpp"
#include "lavg/rng.hpp"

namespace lavg {

/// One observation x = x_nat + z with the clean point and noise kept visible
/// for evaluators; the algorithms only ever look at `observed`.
struct NoisySample {
    Vec observed;
    Vec clean;
    Vec noise;
    long draw_index;
};

/// Unbounded seeded stream of noisy samples: clean points uniform on the
/// manifold, noise i.i.d. N(0, sigma^2 I_D). Single consumer; replaying the
/// same seed reproduces the identical sequence bit-for-bit.
class SampleStream {
  public:
    SampleStream(ManifoldModel manifold, double sigma, std::uint64_t seed)
        : manifold_(std::move(manifold)), sigma_(sigma), seed_(seed), rng_(seed) {
        if (sigma < 0.0) throw std::invalid_argument("sigma must be nonnegative");
    }

    NoisySample next() {
        NoisySample s;
        s.clean = manifold_.sample_uniform(rng_);
        const int D = manifold_.ambient_dim();
        s.noise.resize(D);
        s.observed.resize(D);
        for (int i = 0; i < D; ++i) {
            s.noise[i] = sigma_ == 0.0 ? 0.0 : rng_.gaussian(sigma_);
            s.observed[i] = s.clean[i] + s.noise[i];
        }
        s.draw_index = draws_++;
        return s;
    }

    const ManifoldModel& manifold() const { return manifold_; }
    double sigma() const { return sigma_; }
    long draws_so_far() const { return draws_; }
    std::uint64_t seed() const { return seed_; }

  private:
    ManifoldModel manifold_;
    double sigma_;
    std::uint64_t seed_;
    Rng rng_;
    long draws_ = 0;
};

struct Batch {
    std::vector<NoisySample> samples;
    long draws_consumed = 0;
};

inline constexpr long kDefaultMaxDraws = 10'000'000;

/// Streams samples, keeping those with ||x - q|| <= R, until `count` have
/// been accepted; rejected draws are discarded, never recycled. Calls
/// on_accept for each accepted sample in draw order and returns the number
/// of draws consumed. Throws AcceptanceTooLow when max_draws is exhausted,
/// which signals a radius below the grouping phase transition.
template <class F>
long collect_minibatch_foreach(SampleStream& stream, const Vec& center, double radius, int count,
                               long max_draws, F&& on_accept) {
    if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
    if (count < 1) throw std::invalid_argument("batch size must be >= 1");
    const double r_sq = radius * radius;
    long consumed = 0;
    int accepted = 0;
    while (accepted < count) {
        if (consumed >= max_draws)
            throw AcceptanceTooLow("minibatch acceptance below 1/" + std::to_string(max_draws) +
                                       " per sample wanted; radius likely below the phase transition",
                                   consumed, accepted, count);
        NoisySample s = stream.next();
        ++consumed;
        if (squared_distance(s.observed, center) <= r_sq) {
            ++accepted;
            on_accept(std::move(s));
        }
    }
    return consumed;
}

inline Batch collect_minibatch(SampleStream& stream, const Vec& center, double radius, int count,
                               long max_draws = kDefaultMaxDraws) {
    Batch batch;
    batch.samples.reserve(count);
    batch.draws_consumed = collect_minibatch_foreach(
        stream, center, radius, count, max_draws,
        [&](NoisySample&& s) { batch.samples.push_back(std::move(s)); });
    return batch;
}

/// JSONL dump of samples for offline inspection.
inline void dump_samples_jsonl(std::ostream& out, const std::vector<NoisySample>& samples) {
    for (const auto& s : samples) {
        nlohmann::json row = {{"draw_index", s.draw_index},
                              {"x", s.observed},
                              {"x_nat", s.clean},
                              {"z", s.noise}};
        out << row.dump() << '\n';
    }
}

}  // namespace lavg
