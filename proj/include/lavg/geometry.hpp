#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lavg/common.hpp"
#include "lavg/rng.hpp"

namespace lavg {

enum class ManifoldKind { Circle, Sphere, FlatTorus };

inline std::string to_string(ManifoldKind k) {
    switch (k) {
        case ManifoldKind::Circle: return "circle";
        case ManifoldKind::Sphere: return "sphere";
        case ManifoldKind::FlatTorus: return "flat_torus";
    }
    return "?";
}

/// Geometric constants of the embedded manifold.
struct ManifoldConstants {
    double reach;         // tau
    double curvature;     // kappa, bound on geodesic acceleration
    double kappa_bar;     // max{1, kappa}
    double diameter;      // intrinsic diameter
    double volume;        // d-dimensional volume
};

/// An embedded d-dimensional manifold in R^D with closed-form oracles.
/// Supported kinds:
///   Circle(r)        embedded in the first 2 coordinates,
///   Sphere(d, r)     embedded in the first d+1 coordinates,
///   FlatTorus(r1,r2) embedded in the first 4 coordinates,
/// all zero-padded to R^D. Points are exact: the padding coordinates are 0.0,
/// not merely small. Instances are immutable and all operations are pure.
class ManifoldModel {
  public:
    static ManifoldModel circle(int ambient_dim, double r) {
        return ManifoldModel(ManifoldKind::Circle, 1, ambient_dim, {r});
    }
    static ManifoldModel sphere(int intrinsic_dim, int ambient_dim, double r) {
        return ManifoldModel(ManifoldKind::Sphere, intrinsic_dim, ambient_dim, {r});
    }
    static ManifoldModel flat_torus(int ambient_dim, double r1, double r2) {
        return ManifoldModel(ManifoldKind::FlatTorus, 2, ambient_dim, {r1, r2});
    }

    ManifoldKind kind() const { return kind_; }
    int intrinsic_dim() const { return d_; }
    int ambient_dim() const { return D_; }
    const std::vector<double>& radii() const { return radii_; }

    /// Number of leading coordinates that carry the embedding.
    int active_dims() const {
        switch (kind_) {
            case ManifoldKind::Circle: return 2;
            case ManifoldKind::Sphere: return d_ + 1;
            case ManifoldKind::FlatTorus: return 4;
        }
        return 0;
    }

    ManifoldConstants constants() const {
        ManifoldConstants c{};
        switch (kind_) {
            case ManifoldKind::Circle:
            case ManifoldKind::Sphere: {
                const double r = radii_[0];
                c.reach = r;
                c.curvature = 1.0 / r;
                c.diameter = M_PI * r;
                c.volume = sphere_surface_area(d_, r);
                break;
            }
            case ManifoldKind::FlatTorus: {
                const double r1 = radii_[0], r2 = radii_[1];
                c.reach = std::min(r1, r2);
                // A unit-speed geodesic with speed split (a, b), a^2 + b^2 = 1,
                // has acceleration sqrt(a^4/r1^2 + b^4/r2^2) <= max(1/r1, 1/r2).
                c.curvature = std::max(1.0 / r1, 1.0 / r2);
                c.diameter = M_PI * std::sqrt(r1 * r1 + r2 * r2);
                c.volume = 4.0 * M_PI * M_PI * r1 * r2;
                break;
            }
        }
        c.kappa_bar = std::max(1.0, c.curvature);
        return c;
    }

    double reach() const { return constants().reach; }
    double curvature() const { return constants().curvature; }
    double kappa_bar() const { return constants().kappa_bar; }
    double intrinsic_diameter() const { return constants().diameter; }
    double volume() const { return constants().volume; }

    /// Uniform sample w.r.t. surface measure. Sphere: normalized standard
    /// Gaussian in the d+1 active coordinates; circle and torus: uniform angles.
    Vec sample_uniform(Rng& rng) const {
        Vec p(D_, 0.0);
        switch (kind_) {
            case ManifoldKind::Circle: {
                const double theta = rng.uniform(0.0, 2.0 * M_PI);
                p[0] = radii_[0] * std::cos(theta);
                p[1] = radii_[0] * std::sin(theta);
                break;
            }
            case ManifoldKind::Sphere: {
                const int n = d_ + 1;
                double nrm2;
                do {
                    nrm2 = 0.0;
                    for (int i = 0; i < n; ++i) {
                        p[i] = rng.gaussian();
                        nrm2 += p[i] * p[i];
                    }
                } while (nrm2 < 1e-280);
                const double scale = radii_[0] / std::sqrt(nrm2);
                for (int i = 0; i < n; ++i) p[i] *= scale;
                break;
            }
            case ManifoldKind::FlatTorus: {
                const double t1 = rng.uniform(0.0, 2.0 * M_PI);
                const double t2 = rng.uniform(0.0, 2.0 * M_PI);
                p[0] = radii_[0] * std::cos(t1);
                p[1] = radii_[0] * std::sin(t1);
                p[2] = radii_[1] * std::cos(t2);
                p[3] = radii_[1] * std::sin(t2);
                break;
            }
        }
        return p;
    }

    /// Nearest-point projection P_M. Closed form per kind: rescale the
    /// defining coordinate block(s). Throws AmbiguousProjection when a block
    /// is (numerically) zero, which signals a point outside the reach tube.
    Vec project(const Vec& x) const {
        check_dim(x);
        Vec p(D_, 0.0);
        switch (kind_) {
            case ManifoldKind::Circle:
            case ManifoldKind::Sphere: {
                const int n = active_dims();
                rescale_block(x, p, 0, n, radii_[0]);
                break;
            }
            case ManifoldKind::FlatTorus: {
                rescale_block(x, p, 0, 2, radii_[0]);
                rescale_block(x, p, 2, 2, radii_[1]);
                break;
            }
        }
        return p;
    }

    /// d(x, M) = ||x - P_M x||. Cheaper than projecting: the head-block error
    /// and the padding tail combine orthogonally.
    double extrinsic_distance(const Vec& x) const {
        check_dim(x);
        double tail2 = 0.0;
        for (int i = active_dims(); i < D_; ++i) tail2 += x[i] * x[i];
        switch (kind_) {
            case ManifoldKind::Circle:
            case ManifoldKind::Sphere: {
                const double head = block_norm(x, 0, active_dims());
                require_resolvable(head, radii_[0]);
                const double e = head - radii_[0];
                return std::sqrt(e * e + tail2);
            }
            case ManifoldKind::FlatTorus: {
                const double h1 = block_norm(x, 0, 2);
                const double h2 = block_norm(x, 2, 2);
                require_resolvable(h1, radii_[0]);
                require_resolvable(h2, radii_[1]);
                const double e1 = h1 - radii_[0];
                const double e2 = h2 - radii_[1];
                return std::sqrt(e1 * e1 + e2 * e2 + tail2);
            }
        }
        return 0.0;
    }

    /// Intrinsic (geodesic) distance between two points of M.
    double geodesic_distance(const Vec& a, const Vec& b) const {
        require_on_manifold(a);
        require_on_manifold(b);
        switch (kind_) {
            case ManifoldKind::Circle:
            case ManifoldKind::Sphere: {
                const double r = radii_[0];
                double c = 0.0;
                for (int i = 0; i < active_dims(); ++i) c += a[i] * b[i];
                c /= r * r;
                c = std::max(-1.0, std::min(1.0, c));
                return r * std::acos(c);
            }
            case ManifoldKind::FlatTorus: {
                const double d1 = radii_[0] * angle_gap(a, b, 0);
                const double d2 = radii_[1] * angle_gap(a, b, 2);
                return std::sqrt(d1 * d1 + d2 * d2);
            }
        }
        return 0.0;
    }

    bool on_manifold(const Vec& p, double rel_tol = 1e-9) const {
        if (static_cast<int>(p.size()) != D_) return false;
        const double scale = radii_[0];
        for (int i = active_dims(); i < D_; ++i)
            if (std::fabs(p[i]) > rel_tol * scale) return false;
        switch (kind_) {
            case ManifoldKind::Circle:
            case ManifoldKind::Sphere:
                return std::fabs(block_norm(p, 0, active_dims()) - radii_[0]) <= rel_tol * radii_[0];
            case ManifoldKind::FlatTorus:
                return std::fabs(block_norm(p, 0, 2) - radii_[0]) <= rel_tol * radii_[0] &&
                       std::fabs(block_norm(p, 2, 2) - radii_[1]) <= rel_tol * radii_[1];
        }
        return false;
    }

    /// Orthogonal projection of an ambient vector onto the tangent space at p.
    Vec tangent_project(const Vec& p, const Vec& v) const {
        require_on_manifold(p);
        check_dim(v);
        Vec t(D_, 0.0);
        switch (kind_) {
            case ManifoldKind::Circle:
            case ManifoldKind::Sphere: {
                const int n = active_dims();
                const double r = radii_[0];
                double inner = 0.0;
                for (int i = 0; i < n; ++i) inner += v[i] * p[i];
                inner /= r * r;
                for (int i = 0; i < n; ++i) t[i] = v[i] - inner * p[i];
                break;
            }
            case ManifoldKind::FlatTorus: {
                tangent_block(p, v, t, 0, radii_[0]);
                tangent_block(p, v, t, 2, radii_[1]);
                break;
            }
        }
        return t;
    }

    /// Point of the unit-speed geodesic through p with initial direction u
    /// (a unit tangent vector at p) at arc length t.
    Vec geodesic_point(const Vec& p, const Vec& u, double t) const {
        require_on_manifold(p);
        Vec c(D_, 0.0);
        switch (kind_) {
            case ManifoldKind::Circle:
            case ManifoldKind::Sphere: {
                const double r = radii_[0];
                const double a = t / r;
                for (int i = 0; i < active_dims(); ++i)
                    c[i] = p[i] * std::cos(a) + r * u[i] * std::sin(a);
                break;
            }
            case ManifoldKind::FlatTorus: {
                geodesic_block(p, u, c, 0, radii_[0], t);
                geodesic_block(p, u, c, 2, radii_[1], t);
                break;
            }
        }
        return c;
    }

    /// Deterministic dense grid on M, used by brute-force oracles. Circle:
    /// uniform angles; 2-sphere: Fibonacci lattice; torus: product angle grid.
    std::vector<Vec> grid(int n) const {
        std::vector<Vec> pts;
        pts.reserve(n);
        switch (kind_) {
            case ManifoldKind::Circle: {
                for (int i = 0; i < n; ++i) {
                    const double theta = 2.0 * M_PI * i / n;
                    Vec p(D_, 0.0);
                    p[0] = radii_[0] * std::cos(theta);
                    p[1] = radii_[0] * std::sin(theta);
                    pts.push_back(std::move(p));
                }
                break;
            }
            case ManifoldKind::Sphere: {
                if (d_ != 2)
                    throw std::invalid_argument("grid() supports spheres of intrinsic dimension 2");
                const double golden = M_PI * (3.0 - std::sqrt(5.0));
                for (int i = 0; i < n; ++i) {
                    const double z = 1.0 - 2.0 * (i + 0.5) / n;
                    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
                    const double theta = golden * i;
                    Vec p(D_, 0.0);
                    p[0] = radii_[0] * rho * std::cos(theta);
                    p[1] = radii_[0] * rho * std::sin(theta);
                    p[2] = radii_[0] * z;
                    pts.push_back(std::move(p));
                }
                break;
            }
            case ManifoldKind::FlatTorus: {
                const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
                for (int i = 0; i < side; ++i) {
                    for (int j = 0; j < side; ++j) {
                        const double t1 = 2.0 * M_PI * i / side;
                        const double t2 = 2.0 * M_PI * j / side;
                        Vec p(D_, 0.0);
                        p[0] = radii_[0] * std::cos(t1);
                        p[1] = radii_[0] * std::sin(t1);
                        p[2] = radii_[1] * std::cos(t2);
                        p[3] = radii_[1] * std::sin(t2);
                        pts.push_back(std::move(p));
                    }
                }
                break;
            }
        }
        return pts;
    }

    /// Approximate spacing of grid(n), for oracle tolerances.
    double grid_spacing(int n) const {
        switch (kind_) {
            case ManifoldKind::Circle:
                return 2.0 * M_PI * radii_[0] / n;
            case ManifoldKind::Sphere:
                return 2.0 * radii_[0] * std::sqrt(M_PI / n);
            case ManifoldKind::FlatTorus: {
                const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
                return 2.0 * M_PI * std::max(radii_[0], radii_[1]) / side;
            }
        }
        return 0.0;
    }

    nlohmann::json to_json() const {
        return {{"kind", to_string(kind_)}, {"d", d_}, {"D", D_}, {"radii", radii_}};
    }

    static ManifoldModel from_json(const nlohmann::json& j) {
        const std::string kind = j.at("kind").get<std::string>();
        const int D = j.at("D").get<int>();
        const auto radii = j.at("radii").get<std::vector<double>>();
        if (kind == "circle") return circle(D, radii.at(0));
        if (kind == "sphere") return sphere(j.at("d").get<int>(), D, radii.at(0));
        if (kind == "flat_torus") return flat_torus(D, radii.at(0), radii.at(1));
        throw std::invalid_argument("unknown manifold kind: " + kind);
    }

  private:
    ManifoldModel(ManifoldKind kind, int d, int D, std::vector<double> radii)
        : kind_(kind), d_(d), D_(D), radii_(std::move(radii)) {
        if (D_ <= d_) throw std::invalid_argument("ambient dimension must exceed intrinsic dimension");
        if (D_ < active_dims()) throw std::invalid_argument("ambient dimension too small for embedding");
        for (double r : radii_)
            if (!(r > 0.0)) throw std::invalid_argument("radii must be positive");
        if (kind_ == ManifoldKind::Sphere && d_ < 1)
            throw std::invalid_argument("sphere intrinsic dimension must be >= 1");
    }

    static double sphere_surface_area(int d, double r) {
        // vol(S^d(r)) = 2 pi^{(d+1)/2} / Gamma((d+1)/2) * r^d
        const double a = 0.5 * (d + 1);
        return 2.0 * std::pow(M_PI, a) / std::exp(std::lgamma(a)) * std::pow(r, d);
    }

    void check_dim(const Vec& x) const {
        if (static_cast<int>(x.size()) != D_)
            throw std::invalid_argument("point has wrong ambient dimension");
    }

    void require_on_manifold(const Vec& p) const {
        if (!on_manifold(p)) throw OffManifold("point does not satisfy the manifold equations");
    }

    static double block_norm(const Vec& x, int start, int len) {
        double s = 0.0;
        for (int i = start; i < start + len; ++i) s += x[i] * x[i];
        return std::sqrt(s);
    }

    static void require_resolvable(double block_norm_value, double r) {
        if (block_norm_value < 1e-12 * r)
            throw AmbiguousProjection("defining coordinate block is zero; projection not unique");
    }

    void rescale_block(const Vec& x, Vec& out, int start, int len, double r) const {
        const double bn = block_norm(x, start, len);
        require_resolvable(bn, r);
        const double scale = r / bn;
        for (int i = start; i < start + len; ++i) out[i] = x[i] * scale;
    }

    static double angle_gap(const Vec& a, const Vec& b, int start) {
        const double ta = std::atan2(a[start + 1], a[start]);
        const double tb = std::atan2(b[start + 1], b[start]);
        double g = std::fabs(ta - tb);
        if (g > M_PI) g = 2.0 * M_PI - g;
        return g;
    }

    static void tangent_block(const Vec& p, const Vec& v, Vec& t, int start, double r) {
        double inner = (v[start] * p[start] + v[start + 1] * p[start + 1]) / (r * r);
        t[start] = v[start] - inner * p[start];
        t[start + 1] = v[start + 1] - inner * p[start + 1];
    }

    static void geodesic_block(const Vec& p, const Vec& u, Vec& c, int start, double r, double t) {
        // The factor circle rotates at angular rate |u_block| / r, oriented by
        // the sign of the planar cross product.
        const double speed = std::hypot(u[start], u[start + 1]);
        const double cross = p[start] * u[start + 1] - p[start + 1] * u[start];
        const double omega = (cross >= 0.0 ? 1.0 : -1.0) * speed / r;
        const double a = omega * t;
        c[start] = p[start] * std::cos(a) - p[start + 1] * std::sin(a);
        c[start + 1] = p[start] * std::sin(a) + p[start + 1] * std::cos(a);
    }

    ManifoldKind kind_;
    int d_;
    int D_;
    std::vector<double> radii_;
};

}  // namespace lavg
