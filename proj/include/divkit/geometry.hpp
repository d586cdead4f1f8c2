#pragma once

// Exact metric geometry of finite products of hyperbolic (curvature -1) and
// Euclidean factors: distances, geodesics, radial projection, horospherical
// coordinates, seeded sphere sampling.
//
// Hyperbolic factors use upper-half-space coordinates with logarithmic
// height: a point of H^m is (u_1..u_{m-1}, s) with metric ds^2 +
// e^{-2s}|du|^2 (half-space height y = e^s). All formulas below are built
// from differences of coordinates and exponentials of differences, so
// relative accuracy is uniform in the distance from the basepoint; the
// hyperboloid model, by contrast, loses e^{2R} * eps of absolute precision
// at radius R, which is fatal for the far-point constructions (radius 5r).

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace divkit {

inline constexpr double kPointTol = 1e-9;

struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Vec = std::vector<double>;

enum class FactorKind { Hyperbolic, Euclidean };

struct Factor {
    FactorKind kind;
    int dim;  // intrinsic dimension; coordinate blocks have exactly dim entries
};

// A point of the product: one coordinate block per factor.
struct ProductPoint {
    std::vector<Vec> parts;
};

namespace vec {

inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec axpy(double t, const Vec& x, const Vec& y) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = t * x[i] + y[i];
    return r;
}

inline Vec scale(double t, const Vec& x) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = t * x[i];
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

}  // namespace vec

// ---------------------------------------------------------------------------
// H^m in half-space-log coordinates x = (u, s), u in R^{m-1}, s in R.
// Geodesics are vertical lines (u constant) and semicircles orthogonal to
// the boundary; both are handled through the substitution w = log tan(phi/2)
// which makes arc length linear in w.
// ---------------------------------------------------------------------------
namespace hyp {

inline bool valid(const Vec& x) {
    if (x.empty()) return false;
    for (double c : x)
        if (!std::isfinite(c)) return false;
    return true;
}

// log(cosh w) without overflow.
inline double logcosh(double w) {
    const double a = std::abs(w);
    return a + std::log1p(std::exp(-2 * a)) - std::log(2.0);
}

inline double dist(const Vec& p, const Vec& q) {
    const std::size_t m = p.size();
    const double sp = p[m - 1], sq = q[m - 1];
    double du2 = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double d = p[i] - q[i];
        du2 += d * d;
    }
    const double h = std::sqrt(du2) * std::exp(-(sp + sq) / 2);
    const double v = 2 * std::sinh((sp - sq) / 2);
    return 2 * std::asinh(0.5 * std::hypot(h, v));
}

namespace detail {

// w = log tan(phi/2) of a point (x, y) on the semicircle centered at (c, 0)
// of radius R; the branch choice avoids cancellation near phi = 0, pi.
inline double circle_w(double x, double y, double c, double R) {
    const double xc = x - c;
    return xc >= 0 ? std::log(y) - std::log(R + xc) : std::log(R - xc) - std::log(y);
}

}  // namespace detail

// Point at arc length L from p toward q (L beyond dist(p,q) or negative
// extends the geodesic line).
inline Vec geodesic(const Vec& p, const Vec& q, double L) {
    const std::size_t m = p.size();
    const double sp = p[m - 1], sq = q[m - 1];
    double du2 = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double d = q[i] - p[i];
        du2 += d * d;
    }
    const double n = std::sqrt(du2);
    // scale the half-plane by e^{-(sp+sq)/2}: an isometry normalizing heights
    const double lam = (sp + sq) / 2;
    const double h = n * std::exp(-lam);
    if (h < 1e-14 * (1.0 + std::abs(sp - sq))) {
        Vec r = p;
        r[m - 1] = sp + (sq >= sp ? L : -L);
        return r;
    }
    const double yp = std::exp((sp - sq) / 2), yq = std::exp((sq - sp) / 2);
    const double c = (h * h + yq * yq - yp * yp) / (2 * h);
    const double R = std::hypot(c, yp);
    const double wp = detail::circle_w(0, yp, c, R);
    const double wq = detail::circle_w(h, yq, c, R);
    const double w = wp + (wq >= wp ? L : -L);
    // cos(phi) = -tanh(w), sin(phi) = sech(w)
    const double x = c - R * std::tanh(w);
    Vec r(m);
    for (std::size_t i = 0; i + 1 < m; ++i) r[i] = p[i] + (x / h) * (q[i] - p[i]);
    r[m - 1] = std::log(R) - logcosh(w) + lam;
    return r;
}

// Point at arc length L from p along the chart velocity v = (du, ds); v is
// normalized internally to unit speed in the metric at p.
inline Vec flow(const Vec& p, const Vec& v, double L) {
    const std::size_t m = p.size();
    const double s = p[m - 1];
    double du2 = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) du2 += v[i] * v[i];
    const double un = std::sqrt(du2);
    const double h = un * std::exp(-s);  // horizontal speed contribution
    const double speed = std::hypot(h, v[m - 1]);
    if (speed <= 0 || !std::isfinite(speed))
        throw DomainError("hyperbolic flow: zero or invalid velocity");
    if (h < 1e-14 * speed) {
        Vec r = p;
        r[m - 1] = s + (v[m - 1] >= 0 ? L : -L);
        return r;
    }
    // scaled half-plane: point (0, 1), unit velocity (dx, dy)
    const double dx = h / speed, dy = v[m - 1] / speed;
    const double c = dy / dx;
    const double R = std::hypot(c, 1.0);
    const double wp = detail::circle_w(0, 1.0, c, R);
    const double w = wp - L;  // dx > 0 means phi (and w) decreasing
    const double x = c - R * std::tanh(w);
    Vec r(m);
    for (std::size_t i = 0; i + 1 < m; ++i)
        r[i] = p[i] + x * std::exp(s) * (v[i] / un);
    r[m - 1] = std::log(R) - logcosh(w) + s;
    return r;
}

}  // namespace hyp

// Oriented unit-speed geodesic of a hyperbolic factor, given by a point and
// a chart velocity at that point.
struct OrientedGeodesic {
    Vec point;
    Vec tangent;

    Vec at(double t) const { return hyp::flow(point, tangent, t); }

    // The vertical upward geodesic through the origin of the chart; its
    // forward ideal endpoint is the point at infinity of the half space.
    static OrientedGeodesic axis(int dim) {
        Vec p(dim, 0.0), v(dim, 0.0);
        v[dim - 1] = 1.0;
        return {p, v};
    }

    OrientedGeodesic reversed() const { return {point, vec::scale(-1.0, tangent)}; }
};

// Horospherical coordinates relative to an oriented geodesic: u along the
// horosphere, s vertical with s = t on the axis; the Busemann function of
// the forward endpoint is -s.
struct HoroCoords {
    Vec u;
    double s = 0;
};

struct ModelSpace {
    std::vector<Factor> factors;
    ProductPoint basepoint;

    int total_dim() const {
        int n = 0;
        for (const auto& f : factors) n += f.dim;
        return n;
    }

    static ModelSpace make(std::vector<Factor> fs) {
        if (fs.empty()) throw StructuralError("ModelSpace: needs at least one factor");
        ModelSpace s;
        for (const auto& f : fs)
            if (f.dim < 1) throw StructuralError("ModelSpace: factor dim must be >= 1");
        s.factors = std::move(fs);
        for (const auto& f : s.factors) s.basepoint.parts.push_back(Vec(f.dim, 0.0));
        return s;
    }

    // Convenience: H^a x H^b x ... (all hyperbolic).
    static ModelSpace hyperbolic_product(const std::vector<int>& dims) {
        std::vector<Factor> fs;
        for (int d : dims) fs.push_back({FactorKind::Hyperbolic, d});
        return make(std::move(fs));
    }
};

inline void check_point(const ModelSpace& space, const ProductPoint& p) {
    if (p.parts.size() != space.factors.size())
        throw StructuralError("point arity does not match space");
    for (std::size_t i = 0; i < space.factors.size(); ++i) {
        if (p.parts[i].size() != static_cast<std::size_t>(space.factors[i].dim))
            throw StructuralError("point part dimension mismatch");
        for (double c : p.parts[i])
            if (!std::isfinite(c)) throw DomainError("non-finite point coordinate");
    }
}

inline double dist(const ModelSpace& space, const ProductPoint& p, const ProductPoint& q) {
    check_point(space, p);
    check_point(space, q);
    double s = 0;
    for (std::size_t i = 0; i < space.factors.size(); ++i) {
        double di;
        if (space.factors[i].kind == FactorKind::Hyperbolic)
            di = hyp::dist(p.parts[i], q.parts[i]);
        else
            di = vec::norm(vec::sub(p.parts[i], q.parts[i]));
        s += di * di;
    }
    return std::sqrt(s);
}

// gamma(t) on the geodesic from p to q, t in [0,1]; dist(p, gamma(t)) =
// t * dist(p,q). Values of t outside [0,1] extend the geodesic line.
inline ProductPoint geodesic_point(const ModelSpace& space, const ProductPoint& p,
                                   const ProductPoint& q, double t) {
    check_point(space, p);
    check_point(space, q);
    ProductPoint out;
    out.parts.reserve(space.factors.size());
    for (std::size_t i = 0; i < space.factors.size(); ++i) {
        if (space.factors[i].kind == FactorKind::Hyperbolic) {
            const double di = hyp::dist(p.parts[i], q.parts[i]);
            if (di < 1e-14)
                out.parts.push_back(p.parts[i]);
            else
                out.parts.push_back(hyp::geodesic(p.parts[i], q.parts[i], t * di));
        } else {
            out.parts.push_back(
                vec::axpy(t, vec::sub(q.parts[i], p.parts[i]), p.parts[i]));
        }
    }
    return out;
}

// Point at distance r from the basepoint on the ray from the basepoint
// through p. Idempotent on S(r); 1-lipschitz as a retraction of C(r).
inline ProductPoint radial_project(const ModelSpace& space, const ProductPoint& p, double r) {
    const double d = dist(space, space.basepoint, p);
    if (d < 1e-12) throw DomainError("radial_project: ray from basepoint undefined");
    return geodesic_point(space, space.basepoint, p, r / d);
}

// ---------------------------------------------------------------------------
// Horospherical chart of a hyperbolic factor relative to a vertical oriented
// geodesic. For the upward axis the chart is the identity; the downward
// orientation composes with the inversion about the base height, which swaps
// the two ideal endpoints.
// ---------------------------------------------------------------------------
class HoroFrame {
public:
    HoroFrame(int dim, const OrientedGeodesic& g) : g_(g) {
        if (static_cast<int>(g.point.size()) != dim ||
            static_cast<int>(g.tangent.size()) != dim)
            throw StructuralError("HoroFrame: geodesic dimension mismatch");
        double du = 0;
        for (int i = 0; i + 1 < dim; ++i) du += g.tangent[i] * g.tangent[i];
        const double ds = g.tangent[dim - 1];
        if (std::sqrt(du) > 1e-12 * std::abs(ds))
            throw StructuralError("HoroFrame: only vertical geodesics are supported");
        up_ = ds > 0;
        u0_.assign(g.point.begin(), g.point.end() - 1);
        s0_ = g.point.back();
    }

    HoroCoords to_horospherical(const Vec& x) const {
        HoroCoords hc;
        hc.u.resize(u0_.size());
        const double scale = std::exp(-s0_);
        for (std::size_t i = 0; i < u0_.size(); ++i) hc.u[i] = (x[i] - u0_[i]) * scale;
        hc.s = x.back() - s0_;
        if (!up_) invert(hc);
        return hc;
    }

    Vec from_horospherical(HoroCoords hc) const {
        if (hc.u.size() != u0_.size())
            throw StructuralError("horospherical: u dimension mismatch");
        if (!up_) invert(hc);
        Vec x(u0_.size() + 1);
        const double scale = std::exp(s0_);
        for (std::size_t i = 0; i < u0_.size(); ++i) x[i] = u0_[i] + hc.u[i] * scale;
        x.back() = s0_ + hc.s;
        return x;
    }

    const OrientedGeodesic& geodesic() const { return g_; }

private:
    // Inversion about the unit height of the chart: (u, y) -> (u, y)/(|u|^2 + y^2).
    // An involutive isometry exchanging the two ideal endpoints of the axis.
    static void invert(HoroCoords& hc) {
        const double e = std::exp(-2 * hc.s);
        double u2 = 0;
        for (double c : hc.u) u2 += c * c;
        const double denom = 1.0 + u2 * e;
        for (double& c : hc.u) c *= e / denom;
        hc.s = -hc.s - std::log1p(u2 * e);
    }

    OrientedGeodesic g_;
    Vec u0_;
    double s0_ = 0;
    bool up_ = true;
};

// Busemann function of the forward ideal endpoint of g at x,
// lim_{T->inf} (dist(x, g(T)) - T). Equals -s of the horospherical chart.
inline double busemann(const OrientedGeodesic& g, const Vec& x) {
    HoroFrame frame(static_cast<int>(x.size()), g);
    return -frame.to_horospherical(x).s;
}

// ---------------------------------------------------------------------------
// Seeded sampling of the metric sphere S(r): uniform directions in the
// tangent space at the basepoint, pushed out by per-factor geodesic flow.
// ---------------------------------------------------------------------------
inline std::vector<ProductPoint> sphere_sample(const ModelSpace& space, double r,
                                               std::uint64_t seed, int count) {
    if (r <= 0) throw DomainError("sphere_sample: r must be positive");
    if (count <= 0) throw DomainError("sphere_sample: count must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = space.total_dim();
    std::vector<ProductPoint> out;
    out.reserve(count);
    for (int c = 0; c < count; ++c) {
        Vec dir(n);
        double len = 0;
        do {
            for (double& d : dir) d = gauss(rng);
            len = vec::norm(dir);
        } while (len < 1e-12);
        for (double& d : dir) d /= len;

        ProductPoint p;
        int off = 0;
        for (std::size_t i = 0; i < space.factors.size(); ++i) {
            const auto& f = space.factors[i];
            Vec w(dir.begin() + off, dir.begin() + off + f.dim);
            off += f.dim;
            const double lam = vec::norm(w);
            if (f.kind == FactorKind::Hyperbolic) {
                // at the basepoint (s = 0) the chart metric is euclidean, so
                // w itself is a valid tangent direction
                if (lam < 1e-15)
                    p.parts.push_back(space.basepoint.parts[i]);
                else
                    p.parts.push_back(hyp::flow(space.basepoint.parts[i], w, r * lam));
            } else {
                Vec q = space.basepoint.parts[i];
                for (int j = 0; j < f.dim; ++j) q[j] += r * w[j];
                p.parts.push_back(std::move(q));
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

// Inner product of two chart tangent vectors (stored as coordinate deltas
// with the block shape of points) in the product metric at the point `at`:
// hyperbolic blocks weigh the horospherical components by e^{-2s}.
inline double metric_dot(const ModelSpace& space, const ProductPoint& at,
                         const ProductPoint& a, const ProductPoint& b) {
    double s = 0;
    for (std::size_t i = 0; i < space.factors.size(); ++i) {
        const auto& pa = a.parts[i];
        const auto& pb = b.parts[i];
        if (space.factors[i].kind == FactorKind::Hyperbolic) {
            const double w = std::exp(-2 * at.parts[i].back());
            for (std::size_t j = 0; j + 1 < pa.size(); ++j) s += w * pa[j] * pb[j];
            s += pa.back() * pb.back();
        } else {
            s += vec::dot(pa, pb);
        }
    }
    return s;
}

inline ProductPoint point_sub(const ProductPoint& a, const ProductPoint& b) {
    ProductPoint r;
    r.parts.reserve(a.parts.size());
    for (std::size_t i = 0; i < a.parts.size(); ++i)
        r.parts.push_back(vec::sub(a.parts[i], b.parts[i]));
    return r;
}

}  // namespace divkit
