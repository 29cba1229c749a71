#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lavg/common.hpp"

namespace lavg {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    int max_depth = 60;
    long max_evals = 4'000'000;
};

namespace detail {

template <class F>
struct SimpsonState {
    const F& f;
    long evals = 0;
    long budget;

    double eval(double x) {
        ++evals;
        return f(x);
    }
};

// Classic adaptive Simpson with Richardson extrapolation. The tolerance is
// split between halves so the accumulated error stays below the request.
template <class F>
double simpson_recurse(SimpsonState<F>& st, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth) {
    if (st.evals > st.budget)
        throw QuadratureNonConvergence("adaptive Simpson exceeded its evaluation budget");
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = st.eval(lm);
    const double frm = st.eval(rm);
    const double h = b - a;
    const double left = (h / 12.0) * (fa + 4.0 * flm + fm);
    const double right = (h / 12.0) * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    // Accept on the Richardson error estimate, or once the estimate is down
    // at rounding level, or when the interval has shrunk to floating-point
    // resolution and cannot be subdivided further. The second floor term is
    // the irreducible width noise: at node magnitude |a|, the width b-a is
    // only known to ulp(a), which shows up in delta as ~eps |a| f.
    const double eps = std::numeric_limits<double>::epsilon();
    const double rounding_floor =
        64.0 * eps * (std::fabs(left) + std::fabs(right) + std::fabs(whole)) +
        8.0 * eps * (std::fabs(a) + std::fabs(b)) * (std::fabs(fa) + std::fabs(fm) + std::fabs(fb));
    const bool at_resolution = !(a < lm && lm < m && m < rm && rm < b);
    if (std::fabs(delta) <= 15.0 * tol || std::fabs(delta) <= rounding_floor || at_resolution)
        return left + right + delta / 15.0;
    if (depth <= 0) throw QuadratureNonConvergence("adaptive Simpson hit maximum recursion depth");
    return simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Integrates f over [a, b] to the requested absolute accuracy.
template <class F>
double adaptive_simpson(const F& f, double a, double b, const QuadratureOptions& opts = {}) {
    if (!(b > a)) return 0.0;
    detail::SimpsonState<F> st{f, 0, opts.max_evals};
    const double m = 0.5 * (a + b);
    const double fa = st.eval(a);
    const double fm = st.eval(m);
    const double fb = st.eval(b);
    const double whole = ((b - a) / 6.0) * (fa + 4.0 * fm + fb);
    // Seed the recursion with a few fixed splits so a narrow feature in the
    // middle of a wide interval cannot fool the first error estimate.
    const int pieces = 8;
    double total = 0.0;
    double x0 = a, f0 = fa;
    for (int i = 1; i <= pieces; ++i) {
        const double x1 = a + (b - a) * static_cast<double>(i) / pieces;
        const double f1 = (i == pieces) ? fb : st.eval(x1);
        const double xm = 0.5 * (x0 + x1);
        const double fxm = st.eval(xm);
        const double piece = ((x1 - x0) / 6.0) * (f0 + 4.0 * fxm + f1);
        total += detail::simpson_recurse(st, x0, x1, f0, fxm, f1, piece,
                                         opts.abs_tol / pieces, opts.max_depth);
        x0 = x1;
        f0 = f1;
    }
    (void)whole;
    return total;
}

/// Integrates f over [a, b] with known feature locations: the interval is cut
/// at every interior breakpoint so narrow structure cannot slip between the
/// initial sample nodes.
template <class F>
double adaptive_simpson_with_breakpoints(const F& f, double a, double b,
                                         std::vector<double> breakpoints,
                                         const QuadratureOptions& opts = {}) {
    if (!(b > a)) return 0.0;
    breakpoints.push_back(a);
    breakpoints.push_back(b);
    std::sort(breakpoints.begin(), breakpoints.end());
    double total = 0.0;
    double prev = a;
    QuadratureOptions piece_opts = opts;
    for (double cut : breakpoints) {
        cut = std::min(std::max(cut, a), b);
        if (cut - prev < 1e-14 * (b - a)) continue;
        piece_opts.abs_tol = opts.abs_tol * (cut - prev) / (b - a);
        total += adaptive_simpson(f, prev, cut, piece_opts);
        prev = cut;
    }
    if (b - prev >= 1e-14 * (b - a)) {
        piece_opts.abs_tol = opts.abs_tol * (b - prev) / (b - a);
        total += adaptive_simpson(f, prev, b, piece_opts);
    }
    return total;
}

}  // namespace lavg
