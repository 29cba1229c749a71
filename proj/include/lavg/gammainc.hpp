#pragma once

#include <cmath>
#include <limits>

#include "lavg/common.hpp"
#include "lavg/quadrature.hpp"

namespace lavg {

// ---------------------------------------------------------------------------
// Regularized incomplete gamma function P(p, x) = gamma(p, x) / Gamma(p) and
// friends. Everything works in log space; shape parameters up to (D-1)/2 with
// D in the tens of millions must not overflow.
//
// Evaluation strategy:
//   * p <= 1e4 : power series for x < p+1, Lentz continued fraction otherwise
//     (the standard split; absolute accuracy better than 1e-10 in this range).
//   * p  > 1e4 : both series and fraction need O(sqrt(p)) terms near x ~ p,
//     which is too slow inside convolution loops, so the normalized integrand
//     exp((p-1) ln t - t - lgamma(p)) is integrated directly with adaptive
//     Simpson. The truncation point is pushed 45 nats below the boundary
//     value, leaving discarded mass ~1e-19.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kSeriesCfMaxP = 1e4;
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

inline double lower_gamma_series(double p, double x) {
    // P(p,x) = exp(p ln x - x - lgamma(p)) * sum_{n>=0} x^n / (p (p+1)...(p+n))
    double ap = p;
    double sum = 1.0 / p;
    double del = sum;
    for (int n = 0; n < 10'000'000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps)
            return sum * std::exp(-x + p * std::log(x) - std::lgamma(p));
    }
    throw QuadratureNonConvergence("incomplete gamma series did not converge");
}

inline double upper_gamma_cf(double p, double x) {
    // Q(p,x) via the Lentz continued fraction.
    constexpr double kFloor = 1e-300;
    double b = x + 1.0 - p;
    double c = 1.0 / kFloor;
    double d = 1.0 / b;
    double f = d;
    for (int i = 1; i < 10'000'000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - p);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kFloor) d = kFloor;
        c = b + an / c;
        if (std::fabs(c) < kFloor) c = kFloor;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::fabs(delta - 1.0) < kEps)
            return f * std::exp(-x + p * std::log(x) - std::lgamma(p));
    }
    throw QuadratureNonConvergence("incomplete gamma continued fraction did not converge");
}

// Log of the normalized integrand relative to its peak, in the shifted
// coordinate u = t - t* with t* = p - 1:
//   ln g(t* + u) - ln g(t*) = t* log1p(u/t*) - u.
// Working in u keeps node magnitudes ~sqrt(p) instead of ~p, so quadrature
// positions are not drowned in ulp noise of the large offset.
inline double log_integrand_shifted(double tstar, double u) {
    return tstar * std::log1p(u / tstar) - u;
}

// Finds the offset on the chosen side of the peak where the shifted
// log-integrand has fallen `drop` nats below its value at u0. The function
// is monotone on each side of 0, so expanding search plus bisection works.
inline double truncation_offset(double tstar, double u0, bool upper, double drop) {
    const double w = std::sqrt(tstar);
    const double target = log_integrand_shifted(tstar, u0) - drop;
    double lo, hi;
    if (upper) {
        lo = u0;
        hi = u0 + w;
        while (log_integrand_shifted(tstar, hi) > target) hi += (hi - lo);
    } else {
        const double floor = -tstar * (1.0 - 1e-12);
        hi = u0;
        lo = std::max(u0 - w, floor);
        while (lo > floor && log_integrand_shifted(tstar, lo) > target) {
            const double step = hi - lo;
            lo = std::max(lo - 2.0 * step, floor);
        }
        if (log_integrand_shifted(tstar, lo) > target) return lo;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const bool below = log_integrand_shifted(tstar, mid) <= target;
        if (upper ? below : !below)
            hi = mid;
        else
            lo = mid;
        if (std::fabs(hi - lo) <= 1e-9 * w) break;
    }
    return upper ? hi : lo;
}

inline double lower_gamma_quadrature(double p, double x) {
    const double tstar = p - 1.0;
    // Peak height of the normalized integrand. The naive form
    // (p-1) ln t* - t* - lgamma(p) cancels ~p log p sized terms and loses
    // ~eps p log p nats; expanding lgamma with the Stirling series instead
    // gives ln g(t*) = -ln(2 pi t*)/2 - binet(t*) with no cancellation.
    const double binet = 1.0 / (12.0 * tstar) - 1.0 / (360.0 * tstar * tstar * tstar);
    const double log_peak = -0.5 * std::log(2.0 * M_PI * tstar) - binet;
    const double peak = std::exp(log_peak);
    const double u_x = x - tstar;
    auto g = [tstar, peak](double u) { return peak * std::exp(log_integrand_shifted(tstar, u)); };
    QuadratureOptions opts;
    opts.abs_tol = 1e-12;
    if (u_x >= 0.0) {
        const double u_hi = truncation_offset(tstar, u_x, /*upper=*/true, 45.0);
        const double q = adaptive_simpson(g, u_x, u_hi, opts);
        return 1.0 - q;
    }
    const double u_lo = truncation_offset(tstar, u_x, /*upper=*/false, 45.0);
    return adaptive_simpson(g, u_lo, u_x, opts);
}

}  // namespace detail

/// P(p, x): monotone in x, P(p,0) = 0, P(p,inf) = 1.
inline double regularized_lower_gamma(double p, double x) {
    if (!(p > 0.0)) throw DomainError("regularized_lower_gamma requires p > 0");
    if (x < 0.0) throw DomainError("regularized_lower_gamma requires x >= 0");
    if (x == 0.0) return 0.0;
    if (p > detail::kSeriesCfMaxP) {
        const double v = detail::lower_gamma_quadrature(p, x);
        return std::min(1.0, std::max(0.0, v));
    }
    if (x < p + 1.0) return detail::lower_gamma_series(p, x);
    return 1.0 - detail::upper_gamma_cf(p, x);
}

/// Q(p, x) = 1 - P(p, x).
inline double regularized_upper_gamma(double p, double x) {
    if (!(p > 0.0)) throw DomainError("regularized_upper_gamma requires p > 0");
    if (x < 0.0) throw DomainError("regularized_upper_gamma requires x >= 0");
    if (x == 0.0) return 1.0;
    if (p > detail::kSeriesCfMaxP) return 1.0 - regularized_lower_gamma(p, x);
    if (x < p + 1.0) return 1.0 - detail::lower_gamma_series(p, x);
    return detail::upper_gamma_cf(p, x);
}

/// Normalized integrand of the lower gamma function,
/// gamma_dot(p, x) / Gamma(p) = x^{p-1} e^{-x} / Gamma(p), zero for x <= 0.
inline double gamma_pdf_normalized(double p, double x) {
    if (!(p > 0.0)) throw DomainError("gamma_pdf_normalized requires p > 0");
    if (x <= 0.0) return 0.0;
    return std::exp((p - 1.0) * std::log(x) - x - std::lgamma(p));
}

/// CDF of a chi-square variable with `dof` degrees of freedom at x.
inline double chi_square_cdf(double dof, double x) {
    if (x <= 0.0) return 0.0;
    return regularized_lower_gamma(0.5 * dof, 0.5 * x);
}

/// epsilon_n in n! = sqrt(2 pi) n^{n+1/2} e^{-n + epsilon_n};
/// satisfies 1/(12n+1) <= epsilon_n <= 1/(12n).
inline double stirling_epsilon(long n) {
    if (n < 1) throw DomainError("stirling_epsilon requires n >= 1");
    const double nd = static_cast<double>(n);
    return std::lgamma(nd + 1.0) -
           (0.5 * std::log(2.0 * M_PI) + (nd + 0.5) * std::log(nd) - nd);
}

/// C(D) = gamma_dot((D-1)/2, (D-3)/2) / Gamma((D-1)/2), the peak height of
/// the chi-square transition kernel; decays like 1/sqrt(pi D).
inline double c_of_d(long D) {
    if (D < 4) throw DomainError("c_of_d requires D >= 4");
    return gamma_pdf_normalized(0.5 * (static_cast<double>(D) - 1.0),
                                0.5 * (static_cast<double>(D) - 3.0));
}

/// Sharper bound from the Stirling bracket: C(D) <= (pi(D-3))^{-1/2} e^{-1/(6(D-3)+1)}.
inline double c_of_d_bound(long D) {
    if (D < 4) throw DomainError("c_of_d_bound requires D >= 4");
    const double m = static_cast<double>(D) - 3.0;
    return std::exp(-1.0 / (6.0 * m + 1.0)) / std::sqrt(M_PI * m);
}

}  // namespace lavg
