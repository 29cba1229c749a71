#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "lavg/common.hpp"
#include "lavg/gammainc.hpp"
#include "lavg/quadrature.hpp"

namespace lavg {

/// Two-sided pointwise bound with its validity window.
struct EnvelopeBand {
    double lower;
    double upper;
    double window_lo;
    double window_hi;
    bool contains(double v) const { return lower <= v && v <= upper; }
};

/// Factor-4 subgaussian envelope for the normalized gamma integrand near its
/// peak x* = p-1, valid for p >= 28 on the window |x - x*| <= x*^{2/3}:
///   (1/4) g(p,x*) exp(-(x-x*)^2/(2 x*)) <= g(p,x) <= 4 g(p,x*) exp(same).
inline EnvelopeBand gamma_dot_envelope(double p, double x) {
    if (!(p >= 28.0)) throw DomainError("gamma_dot_envelope requires p >= 28");
    const double xstar = p - 1.0;
    const double half_width = std::pow(xstar, 2.0 / 3.0);
    const double lo = xstar - half_width, hi = xstar + half_width;
    if (x < lo || x > hi) throw WindowError("x outside the gamma_dot envelope window");
    const double center = gamma_pdf_normalized(p, xstar) *
                          std::exp(-(x - xstar) * (x - xstar) / (2.0 * xstar));
    return {0.25 * center, 4.0 * center, lo, hi};
}

/// The grouping-probability bundle for a ball of radius R around a landmark
/// in R^D under per-coordinate noise sigma. h(s) is the probability that a
/// noisy point whose parallel offset is s lands in the ball; it is a
/// chi-square CDF with D-1 degrees of freedom in disguise and drops from ~1
/// to ~0 across a window of width ~nu around
///   s*^2 = R^2 - sigma^2 (D-3).
class GroupingProfile {
  public:
    GroupingProfile(double R, double sigma, long D) : R_(R), sigma_(sigma), D_(D) {
        if (!(R > 0.0) || !(sigma > 0.0) || D < 4)
            throw DomainError("GroupingProfile requires R > 0, sigma > 0, D >= 4");
        const double Dm3 = static_cast<double>(D) - 3.0;
        const double ss2 = R * R - sigma * sigma * Dm3;
        if (!(ss2 >= 0.0))
            throw DomainError("GroupingProfile requires R^2 >= sigma^2 (D-3)");
        s_star_ = std::sqrt(ss2);
        nu_sq_ = sigma * sigma * sigma * sigma * Dm3 / (2.0 * ss2);
        nu_ = std::sqrt(nu_sq_);
        nu_bar_ = std::sqrt(nu_sq_ + sigma * sigma);
        const double Dm1 = static_cast<double>(D) - 1.0;
        const double sc2 = R * R - sigma * sigma * Dm1;
        if (sc2 >= 0.0) {
            s_check_ = std::sqrt(sc2);
            nu_check_ = std::sqrt(sigma * sigma * sigma * sigma * Dm1 / (2.0 * sc2));
        }
    }

    double R() const { return R_; }
    double sigma() const { return sigma_; }
    long D() const { return D_; }
    /// Shape parameter of the underlying incomplete gamma, (D-1)/2.
    double p() const { return 0.5 * (static_cast<double>(D_) - 1.0); }

    double s_star() const { return s_star_; }
    double nu() const { return nu_; }
    double nu_sq() const { return nu_sq_; }
    double nu_bar() const { return nu_bar_; }
    /// s_check^2 = R^2 - sigma^2 (D-1); empty when negative.
    std::optional<double> s_check() const { return s_check_; }
    std::optional<double> nu_check() const { return nu_check_; }

    /// h(s) = P[chi^2_{D-1} <= (R^2 - s^2)/sigma^2]; even in s, zero for |s| >= R.
    double h(double s) const {
        const double x = 0.5 * (R_ * R_ - s * s) / (sigma_ * sigma_);
        if (x <= 0.0) return 0.0;
        return regularized_lower_gamma(p(), x);
    }

    /// -h'(s), nonnegative on [0, R], zero at both ends.
    double neg_h_dot(double s) const {
        if (s < 0.0) throw DomainError("neg_h_dot requires s >= 0");
        return neg_h_dot_signed(s);
    }

    /// Odd extension of -h'(s); this is what convolves against the Gaussian
    /// kernel so that phi_conv_neg_h_dot(t) = -d/dt phi_conv_h(t) exactly.
    double neg_h_dot_signed(double s) const {
        const double x = 0.5 * (R_ * R_ - s * s) / (sigma_ * sigma_);
        if (x <= 0.0) return 0.0;
        return s / (sigma_ * sigma_) * gamma_pdf_normalized(p(), x);
    }

    /// s_{*,par} = sqrt(s*^2 - d(q,M)^2), the geometric part of the phase
    /// transition once the landmark's own off-manifold offset is removed.
    double s_star_parallel(double dist_q) const {
        const double v = s_star_ * s_star_ - dist_q * dist_q;
        if (v < 0.0)
            throw DomainError("s_star_parallel: d(q,M) exceeds s_star (radius below geometric floor)");
        return std::sqrt(v);
    }

    /// Exact grouping probability (phi * h)(t) = P[ ||x_nat + z - q|| <= R ]
    /// at ||q - x_nat|| = t, by adaptive quadrature over the kernel support.
    /// Clamped to [0, 1]: the quadrature may overshoot by its tolerance.
    double phi_conv_h(double t) const {
        const double v = convolve([this](double s) { return h(s); }, t);
        return std::min(1.0, std::max(0.0, v));
    }

    /// (phi * -h')(t) = -d/dt (phi * h)(t).
    double phi_conv_neg_h_dot(double t) const {
        return convolve([this](double s) { return neg_h_dot_signed(s); }, t);
    }

  private:
    template <class F>
    double convolve(const F& f, double t) const {
        // Kernel mass outside 12 sigma is < 1e-30; the window is further
        // clipped to the support |t - v| <= R of h.
        const double half = 12.0 * sigma_;
        const double lo = std::max(-half, t - R_);
        const double hi = std::min(half, t + R_);
        if (!(hi > lo)) return 0.0;
        const double inv = 1.0 / (std::sqrt(2.0 * M_PI) * sigma_);
        const double two_sig_sq = 2.0 * sigma_ * sigma_;
        QuadratureOptions opts;
        opts.abs_tol = 1e-8;
        // The transition of h (width ~nu, possibly much narrower than the
        // kernel) sits at s = +-s_star, i.e. v = t -+ s_star.
        std::vector<double> cuts;
        for (double v_star : {t - s_star_, t + s_star_}) {
            if (v_star <= lo || v_star >= hi) continue;
            for (double off : {-6.0 * nu_bar_, 0.0, 6.0 * nu_bar_}) cuts.push_back(v_star + off);
        }
        return adaptive_simpson_with_breakpoints(
            [&](double v) { return inv * std::exp(-v * v / two_sig_sq) * f(t - v); }, lo, hi,
            std::move(cuts), opts);
    }

    double R_;
    double sigma_;
    long D_;
    double s_star_;
    double nu_sq_;
    double nu_;
    double nu_bar_;
    std::optional<double> s_check_;
    std::optional<double> nu_check_;
};

// ---------------------------------------------------------------------------
// Hypothesis predicates and band evaluators for the envelope statements.
// Each envelope statement about h comes with explicit admissibility conditions on
// (D, sigma, s*^2); checks verify them before asserting anything.
// ---------------------------------------------------------------------------

namespace hypotheses {

inline double d_pow(long D, double e) { return std::pow(static_cast<double>(D), e); }

/// -h' subgaussian band: D > 192 and sigma^2 sqrt(D) <= s*^2 <= 3 sigma^2 D.
inline bool hdot_band(long D, double sigma, double s_star_sq) {
    const double s2 = sigma * sigma;
    return D > 192 && s2 * std::sqrt(static_cast<double>(D)) <= s_star_sq &&
           s_star_sq <= 3.0 * s2 * static_cast<double>(D);
}

/// Monotonicity of -h' outside the transition:
/// 96 log6 sigma^2 D^{2/3} <= s*^2 <= 3 sigma^2 D and D > 48^3 + 3.
inline bool hdot_monotonicity(long D, double sigma, double s_star_sq) {
    const double s2 = sigma * sigma;
    return D > 48L * 48L * 48L + 3L && 96.0 * std::log(6.0) * s2 * d_pow(D, 2.0 / 3.0) <= s_star_sq &&
           s_star_sq <= 3.0 * s2 * static_cast<double>(D);
}

/// phi * -h' band: 24 log6 sigma^2 D^{2/3} <= s*^2 <= 3 sigma^2 D,
/// D > (48 log6)^3 + 3.
inline bool conv_hdot_band(long D, double sigma, double s_star_sq) {
    const double s2 = sigma * sigma;
    const double dmin = std::pow(48.0 * std::log(6.0), 3.0) + 3.0;
    return static_cast<double>(D) > dmin &&
           24.0 * std::log(6.0) * s2 * d_pow(D, 2.0 / 3.0) <= s_star_sq &&
           s_star_sq <= 3.0 * s2 * static_cast<double>(D);
}

/// phi * h bounds: 576 log2 sigma^2 D^{2/3} <= s*^2 <= 3 sigma^2 D,
/// D > (576 log2)^3 + 3. Same hypotheses for the relative bound.
inline bool conv_h_bounds(long D, double sigma, double s_star_sq) {
    const double s2 = sigma * sigma;
    const double dmin = std::pow(576.0 * std::log(2.0), 3.0) + 3.0;
    return static_cast<double>(D) > dmin &&
           576.0 * std::log(2.0) * s2 * d_pow(D, 2.0 / 3.0) <= s_star_sq &&
           s_star_sq <= 3.0 * s2 * static_cast<double>(D);
}

}  // namespace hypotheses

namespace bands {

/// [1/(8e), 6e] C(D) (s*/sigma^2) exp(-(s-s*)^2/(2 nu^2)),
/// window |s - s*| <= sigma (D-3)^{1/6} / 3.
inline EnvelopeBand hdot(const GroupingProfile& g, double s) {
    const double half = g.sigma() * std::pow(static_cast<double>(g.D()) - 3.0, 1.0 / 6.0) / 3.0;
    if (std::fabs(s - g.s_star()) > half * (1.0 + 1e-12))
        throw WindowError("s outside the -h' band window");
    const double c = c_of_d(g.D()) * g.s_star() / (g.sigma() * g.sigma()) *
                     std::exp(-(s - g.s_star()) * (s - g.s_star()) / (2.0 * g.nu_sq()));
    return {c / (8.0 * M_E), 6.0 * M_E * c, g.s_star() - half, g.s_star() + half};
}

/// [1/(16e), 9e] C(D) (nu/nu_bar) (s*/sigma^2) exp(-(s-s*)^2/(2 nu_bar^2)),
/// window |s - s*| <= sigma (D-3)^{1/6} / 6.
inline EnvelopeBand conv_hdot(const GroupingProfile& g, double s) {
    const double half = g.sigma() * std::pow(static_cast<double>(g.D()) - 3.0, 1.0 / 6.0) / 6.0;
    if (std::fabs(s - g.s_star()) > half * (1.0 + 1e-12))
        throw WindowError("s outside the phi*-h' band window");
    const double c = c_of_d(g.D()) * (g.nu() / g.nu_bar()) * g.s_star() / (g.sigma() * g.sigma()) *
                     std::exp(-(s - g.s_star()) * (s - g.s_star()) /
                              (2.0 * g.nu_bar() * g.nu_bar()));
    return {c / (16.0 * M_E), 9.0 * M_E * c, g.s_star() - half, g.s_star() + half};
}

/// Lower bound on (phi*h)(s): constant C(D) s* nu / (64 e^2 sigma^2) up to
/// s* + nu_bar, then the Gaussian-tail form up to s* + sigma (D-3)^{1/6}/12.
inline double conv_h_lower(const GroupingProfile& g, double s) {
    const double base = c_of_d(g.D()) * g.s_star() * g.nu() / (g.sigma() * g.sigma());
    if (s <= g.s_star() + g.nu_bar()) return base / (64.0 * M_E * M_E);
    const double hi = g.s_star() + g.sigma() * std::pow(static_cast<double>(g.D()) - 3.0, 1.0 / 6.0) / 12.0;
    if (s > hi) throw WindowError("s outside the phi*h lower-bound window");
    const double gap = s - g.s_star();
    return base / (64.0 * M_E) * (g.nu_bar() / gap) *
           std::exp(-gap * gap / (2.0 * g.nu_bar() * g.nu_bar()));
}

/// Upper bound on (phi*h)(s): 1 below s_check, then
/// 4 exp(-(s - s_check)^2 / (2 (nu_check^2 + sigma^2))).
inline double conv_h_upper(const GroupingProfile& g, double s) {
    if (!g.s_check()) throw DomainError("conv_h_upper requires R^2 >= sigma^2 (D-1)");
    const double sc = *g.s_check();
    if (s < sc) return 1.0;
    const double vc = *g.nu_check();
    const double denom = 2.0 * (vc * vc + g.sigma() * g.sigma());
    return 4.0 * std::exp(-(s - sc) * (s - sc) / denom);
}

/// Upper tail of h itself: h(s) <= 4 exp(-(s - s_check)^2 / (2 nu_check^2))
/// for s >= s_check.
inline double h_upper_tail(const GroupingProfile& g, double s) {
    if (!g.s_check()) throw DomainError("h_upper_tail requires R^2 >= sigma^2 (D-1)");
    const double sc = *g.s_check();
    if (s < sc) throw WindowError("h_upper_tail applies for s >= s_check");
    const double vc = *g.nu_check();
    return 4.0 * std::exp(-(s - sc) * (s - sc) / (2.0 * vc * vc));
}

}  // namespace bands

/// (D, sigma, s*^2) triple; R follows from s*^2 = R^2 - sigma^2 (D-3).
struct EnvelopeTriple {
    long D;
    double sigma;
    double s_star_sq;
    GroupingProfile profile() const {
        return GroupingProfile(
            std::sqrt(s_star_sq + sigma * sigma * (static_cast<double>(D) - 3.0)), sigma, D);
    }
};

/// Parameter triples satisfying each statement's hypotheses, frozen so the
/// band checks are deterministic; the predicates are asserted before use.
inline std::vector<EnvelopeTriple> hdot_band_triples() {
    return {{256, 1.0, 100.0}, {2000, 0.1, 10.0}, {10000, std::sqrt(0.1), 300.0}};
}
inline std::vector<EnvelopeTriple> conv_hdot_band_triples() {
    return {{650'000, 1.0, 1.0e6}, {1'000'000, 1.0, 1.5e6}, {2'000'000, 1.0, 3.0e6}};
}
inline std::vector<EnvelopeTriple> conv_h_bounds_triples() {
    return {{65'000'000, 1.0, 1.2e8}, {80'000'000, 1.0, 1.5e8}, {100'000'000, 1.0, 1.8e8}};
}
inline EnvelopeTriple hdot_monotonicity_triple() { return {200'000, 1.0, 5.94e5}; }

}  // namespace lavg
