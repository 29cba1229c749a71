#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "lavg/grouping.hpp"

using namespace lavg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
GroupingProfile reference_profile() { return GroupingProfile(std::sqrt(3.84), 0.1, 128); }
GroupingProfile from_s_star_sq(long D, double sigma, double s_star_sq) {
    return GroupingProfile(std::sqrt(s_star_sq + sigma * sigma * (static_cast<double>(D) - 3.0)),
                           sigma, D);
}
}  // namespace

TEST_CASE("profile derived quantities", "[grouping]") {
    const auto g = reference_profile();
    REQUIRE_THAT(g.s_star() * g.s_star(), WithinAbs(2.59, 1e-12));
    REQUIRE_THAT(g.s_star(), WithinAbs(1.6093476939431082, 1e-12));
    REQUIRE_THAT(g.nu_sq(), WithinRel(0.002413127413127414, 1e-12));
    REQUIRE_THAT(g.nu_bar(), WithinRel(0.1114142154894402, 1e-12));
    REQUIRE(g.s_check().has_value());
    REQUIRE_THAT(*g.s_check() * *g.s_check(), WithinAbs(2.57, 1e-12));
    REQUIRE(g.s_star() >= *g.s_check());
    REQUIRE(*g.s_check() >= 0.0);
    REQUIRE(g.nu() > 0.0);
    REQUIRE(*g.nu_check() > 0.0);

    // Construction fails below the sigma^2 (D-3) floor.
    REQUIRE_THROWS_AS(GroupingProfile(1.0, 0.1, 128), DomainError);
    // s_check undefined when R^2 is between sigma^2(D-3) and sigma^2(D-1).
    const GroupingProfile narrow(std::sqrt(0.01 * 126.0), 0.1, 128);
    REQUIRE_FALSE(narrow.s_check().has_value());
}

TEST_CASE("h values at the reference parameters", "[grouping]") {
    const auto g = reference_profile();
    REQUIRE(g.h(g.R()) == 0.0);
    REQUIRE(g.h(2.0) == 0.0);  // s > R
    REQUIRE(g.h(0.0) >= 1.0 - 1e-12);
    REQUIRE_THAT(g.h(1.0), WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(g.h(g.s_star()), WithinAbs(0.466426912823191, 1e-9));
    REQUIRE(g.h(g.s_star()) > 0.40);
    REQUIRE(g.h(g.s_star()) < 0.55);
}

TEST_CASE("h is nonincreasing", "[grouping]") {
    const GroupingProfile profiles[] = {
        reference_profile(),
        from_s_star_sq(64, 0.05, 0.02),
        from_s_star_sq(256, 1.0, 100.0),
        from_s_star_sq(500, 0.3, 1.0),
        from_s_star_sq(1000, 0.02, 0.001),
        from_s_star_sq(4096, 0.7, 800.0),
    };
    for (const auto& g : profiles) {
        double prev = 2.0;
        for (int i = 0; i <= 1000; ++i) {
            const double s = g.R() * static_cast<double>(i) / 1000.0;
            const double v = g.h(s);
            REQUIRE(v <= prev + 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("upper tail of h", "[grouping]") {
    for (const auto& g : {reference_profile(), from_s_star_sq(256, 1.0, 100.0), from_s_star_sq(1000, 0.1, 15.0)}) {
        if (!g.s_check()) continue;
        const double sc = *g.s_check();
        for (int i = 0; i < 300; ++i) {
            const double s = sc + (g.R() - sc) * static_cast<double>(i) / 299.0;
            REQUIRE(g.h(s) <= bands::h_upper_tail(g, s) + 1e-14);
        }
    }
}

TEST_CASE("neg_h_dot endpoints and finite differences", "[grouping]") {
    const auto g = reference_profile();
    REQUIRE(g.neg_h_dot(0.0) == 0.0);
    REQUIRE(g.neg_h_dot(g.R()) == 0.0);
    REQUIRE(g.neg_h_dot(g.R() + 0.5) == 0.0);
    REQUIRE_THROWS_AS(g.neg_h_dot(-0.1), DomainError);
    REQUIRE_THAT(g.neg_h_dot(g.s_star()), WithinRel(8.11037405954046, 1e-9));
    REQUIRE_THAT(g.neg_h_dot(1.0), WithinRel(2.82813496678201e-12, 1e-6));

    // Central finite difference of h at s*, step 1e-5.
    const double s = g.s_star();
    const double fd = -(g.h(s + 1e-5) - g.h(s - 1e-5)) / 2e-5;
    REQUIRE_THAT(g.neg_h_dot(s), WithinRel(fd, 1e-4));
    // And along a grid inside the support.
    for (double frac : {0.5, 0.75, 0.85, 0.9}) {
        const double si = g.R() * frac;
        const double fdi = -(g.h(si + 1e-6) - g.h(si - 1e-6)) / 2e-6;
        if (fdi > 1e-8) REQUIRE_THAT(g.neg_h_dot(si), WithinRel(fdi, 1e-3));
    }
}

TEST_CASE("s_star_parallel", "[grouping]") {
    const auto g = reference_profile();
    REQUIRE(g.s_star_parallel(0.0) == g.s_star());
    REQUIRE_THAT(g.s_star_parallel(g.s_star()), WithinAbs(0.0, 1e-7));
    REQUIRE_THAT(g.s_star_parallel(1.0), WithinAbs(1.2609520212918492, 1e-12));  // sqrt(1.59)
    REQUIRE_THROWS_AS(g.s_star_parallel(g.s_star() + 0.01), DomainError);
}

TEST_CASE("gamma_dot envelope", "[grouping]") {
    // Window center: the band brackets the peak value itself.
    for (double p : {28.0, 100.0, 500.0}) {
        const double xstar = p - 1.0;
        const auto band = gamma_dot_envelope(p, xstar);
        REQUIRE(band.contains(gamma_pdf_normalized(p, xstar)));
    }
    // Window edge at p = 100.
    {
        const double xstar = 99.0;
        const double x = xstar + std::pow(xstar, 2.0 / 3.0);
        REQUIRE(gamma_dot_envelope(100.0, x).contains(gamma_pdf_normalized(100.0, x)));
    }
    // Dense grid at the smallest admissible p.
    {
        const double p = 28.0, xstar = 27.0;
        const double half = std::pow(xstar, 2.0 / 3.0);
        for (int i = 0; i < 100; ++i) {
            const double x = xstar - half + 2.0 * half * i / 99.0;
            REQUIRE(gamma_dot_envelope(p, x).contains(gamma_pdf_normalized(p, x)));
        }
    }
    REQUIRE_THROWS_AS(gamma_dot_envelope(27.0, 26.0), DomainError);
    REQUIRE_THROWS_AS(gamma_dot_envelope(100.0, 99.0 + 2.0 * std::pow(99.0, 2.0 / 3.0)),
                      WindowError);
}

TEST_CASE("phi_conv_h quadrature", "[grouping]") {
    const auto g = reference_profile();
    // Disjoint supports.
    REQUIRE(g.phi_conv_h(g.R() + 12.0 * g.sigma() + 0.5) <= 1e-8);
    // Reference values from 40-digit quadrature.
    REQUIRE_THAT(g.phi_conv_h(g.s_star()), WithinAbs(0.4770322590844, 1e-7));
    REQUIRE_THAT(g.phi_conv_h(1.0), WithinAbs(0.9999998988401, 1e-7));
    // Delta-kernel limit: sigma = 1e-6 R.
    const GroupingProfile tight(1.0, 1e-6, 128);
    for (double t : {0.0, 0.3, 0.6, 0.9, 1.2, 2.0}) {
        REQUIRE_THAT(tight.phi_conv_h(t), WithinAbs(tight.h(t), 1e-6));
    }
}

TEST_CASE("phi_conv_neg_h_dot matches the derivative of phi_conv_h", "[grouping]") {
    const auto g = reference_profile();
    const double t = g.s_star();
    REQUIRE_THAT(g.phi_conv_neg_h_dot(t), WithinRel(3.567868791765, 1e-6));
    const double fd = -(g.phi_conv_h(t + 1e-4) - g.phi_conv_h(t - 1e-4)) / 2e-4;
    REQUIRE_THAT(g.phi_conv_neg_h_dot(t), WithinRel(fd, 1e-3));
    // t = 0: the odd extension integrates to zero, within sup -h'.
    double sup = 0.0;
    for (int i = 0; i <= 400; ++i) sup = std::max(sup, g.neg_h_dot(g.R() * i / 400.0));
    const double at0 = g.phi_conv_neg_h_dot(0.0);
    REQUIRE(at0 >= -1e-8);
    REQUIRE(at0 <= sup);
    REQUIRE_THAT(at0, WithinAbs(0.0, 1e-8));
}

TEST_CASE("phi_conv_neg_h_dot band at an admissible triple", "[grouping]") {
    const auto tr = conv_hdot_band_triples().front();
    REQUIRE(hypotheses::conv_hdot_band(tr.D, tr.sigma, tr.s_star_sq));
    const auto g = tr.profile();
    for (double frac : {-0.9, -0.4, 0.0, 0.4, 0.9}) {
        const double half = g.sigma() * std::pow(static_cast<double>(g.D()) - 3.0, 1.0 / 6.0) / 6.0;
        const double s = g.s_star() + frac * half;
        REQUIRE(bands::conv_hdot(g, s).contains(g.phi_conv_neg_h_dot(s)));
    }
}

TEST_CASE("monotonicity of neg_h_dot outside the transition", "[grouping]") {
    // The statement's hypotheses need D >= ~1.9e5; this triple satisfies them.
    const auto tr = hdot_monotonicity_triple();
    REQUIRE(hypotheses::hdot_monotonicity(tr.D, tr.sigma, tr.s_star_sq));
    // At D just above 48^3+3 the hypothesis window is still empty: the upper
    // and lower constraints on s*^2 cross only near D ~ (32 log 6)^3.
    REQUIRE_FALSE(hypotheses::hdot_monotonicity(110600, 1.0, 110597.0));
    const auto g = tr.profile();
    const double delta_s =
        g.sigma() * std::pow(static_cast<double>(g.D()) - 3.0, 1.0 / 6.0) / 12.0;
    const double step = 1e-3;
    double max_abs = 0.0;
    std::vector<std::pair<double, double>> derivs;
    for (int i = 0; i <= 400; ++i) {
        const double s = g.s_star() - 8.0 + 16.0 * i / 400.0;
        if (s <= step) continue;
        const double d = (g.neg_h_dot(s + step) - g.neg_h_dot(s - step)) / (2.0 * step);
        derivs.push_back({s, d});
        max_abs = std::max(max_abs, std::fabs(d));
    }
    for (const auto& [s, d] : derivs) {
        if (std::fabs(d) <= 1e-12 * max_abs) continue;
        if (s <= g.s_star() - delta_s) REQUIRE(d >= 0.0);
        if (s >= g.s_star() + delta_s) REQUIRE(d <= 0.0);
    }
}

TEST_CASE("relative bound with a fitted constant", "[grouping]") {
    const auto tr = conv_h_bounds_triples().front();
    REQUIRE(hypotheses::conv_h_bounds(tr.D, tr.sigma, tr.s_star_sq));
    const auto g = tr.profile();
    const double hi = g.s_star() +
                      g.sigma() * std::pow(static_cast<double>(g.D()) - 3.0, 1.0 / 6.0) / 12.0;
    double fitted_c = 0.0;
    for (int i = 0; i < 40; ++i) {
        // Concentrate on the transition; far below s* both sides are benign.
        const double s = g.s_star() - 5.0 * g.nu_bar() +
                         (hi - g.s_star() + 5.0 * g.nu_bar()) * static_cast<double>(i) / 39.0;
        if (s < 0.0) continue;
        const double ratio = g.phi_conv_neg_h_dot(s) / g.phi_conv_h(s);
        const double envelope =
            std::max(1.0 / g.nu_bar(), (s - g.s_star()) / (g.nu_bar() * g.nu_bar()));
        fitted_c = std::max(fitted_c, ratio / envelope);
    }
    REQUIRE(std::isfinite(fitted_c));
    REQUIRE(fitted_c > 0.0);
    WARN("relative-bound fitted constant C = " << fitted_c);
    // The statement asserts existence of a universal C; log it and keep a
    // generous sanity cap derived from the two band constants.
    REQUIRE(fitted_c < 64.0 * 9.0 * M_E * M_E * M_E);
}
