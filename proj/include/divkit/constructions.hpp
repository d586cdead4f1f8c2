#pragma once

// Explicit geometric constructions: suspension of sphere maps, loop
// perturbation off the unit disc, the four-stage pull-off filling, the
// Y/Z embeddings into products of hyperbolic spaces, leaf geometry of the
// diagonal foliation, flat spheres, and quasi-isometry transport.

#include <functional>

#include "divkit/simplicial.hpp"

namespace divkit {

// ---------------------------------------------------------------------------
// Leaf parameters of the foliation Y_s, s_1 + ... + s_k = 0.
// ---------------------------------------------------------------------------
struct LeafParam {
    Vec s;

    static LeafParam make(Vec s) {
        double sum = 0;
        for (double v : s) sum += v;
        if (std::abs(sum) > 1e-12)
            throw DomainError("LeafParam: coordinates must sum to zero");
        return {std::move(s)};
    }
};

struct QIMap {
    std::function<ProductPoint(const ProductPoint&)> forward;
    double K = 1;
    double epsilon = 0;
    double C = 0;
};

// ---------------------------------------------------------------------------
// Suspension (sphere maps in X x R).
// ---------------------------------------------------------------------------

namespace detail {

inline void require_last_factor_line(const ModelSpace& space) {
    if (space.factors.size() < 2 || space.factors.back().kind != FactorKind::Euclidean ||
        space.factors.back().dim != 1)
        throw StructuralError("expected a space of the form X x R");
}

inline ModelSpace drop_last_factor(const ModelSpace& space) {
    ModelSpace x;
    x.factors.assign(space.factors.begin(), space.factors.end() - 1);
    x.basepoint.parts.assign(space.basepoint.parts.begin(),
                             space.basepoint.parts.end() - 1);
    return x;
}

}  // namespace detail

// Suspension complex of a sphere complex: poles and meridian levels
// t_j = j / bands, j = 1..bands-1. Global order: north pole, levels, south
// pole; prism staircases between levels, cones at the poles.
struct SuspensionComplex {
    SimplicialComplex complex;  // dim = base.dim + 1
    std::vector<std::vector<int>> level_vertex;  // [level 1..bands-1][base vertex]
    int north = -1, south = -1;
    int bands = 0;
};

inline SuspensionComplex suspension_complex(const SimplicialComplex& base, int bands) {
    if (bands < 2) throw StructuralError("suspension: need at least 2 bands");
    SuspensionComplex out;
    out.bands = bands;
    auto& c = out.complex;
    c.dim = base.dim + 1;
    c.kind = ComplexKind::Sphere;
    const std::size_t ref_dim = base.vertices.empty() ? 1 : base.vertices[0].size();

    auto push_vertex = [&](const Vec& equatorial, double t) {
        // reference: sin(pi t) * base direction in the first coords, cos(pi t) last
        Vec v(ref_dim + 1, 0.0);
        for (std::size_t i = 0; i < ref_dim; ++i)
            v[i] = std::sin(M_PI * t) * equatorial[i];
        v[ref_dim] = std::cos(M_PI * t);
        c.vertices.push_back(std::move(v));
        return c.vertex_count() - 1;
    };

    out.north = push_vertex(Vec(ref_dim, 0.0), 0.0);
    for (int level = 1; level < bands; ++level) {
        std::vector<int> ids;
        for (int v = 0; v < base.vertex_count(); ++v)
            ids.push_back(push_vertex(base.vertices[v], static_cast<double>(level) / bands));
        out.level_vertex.push_back(std::move(ids));
    }
    out.south = push_vertex(Vec(ref_dim, 0.0), 1.0);

    // north cone
    for (const auto& s : base.simplices) {
        std::vector<int> t{out.north};
        for (int v : s) t.push_back(out.level_vertex[0][v]);
        std::sort(t.begin(), t.end());
        c.simplices.push_back(std::move(t));
    }
    for (int level = 0; level + 1 < bands - 1; ++level)
        detail::emit_prisms(base, out.level_vertex[level], out.level_vertex[level + 1],
                            c.simplices);
    // south cone
    for (const auto& s : base.simplices) {
        std::vector<int> t;
        for (int v : s) t.push_back(out.level_vertex[bands - 2][v]);
        t.push_back(out.south);
        std::sort(t.begin(), t.end());
        c.simplices.push_back(std::move(t));
    }
    return out;
}

// Sigma(f): sweep f along arcs of radius-r circles in the 2-flats spanned by
// the X-ray through f(p) and the R line. The suspension parameter t maps to
// ((sin pi t) r along the ray, (cos pi t) r in R); the equatorial slice
// t = 1/2 is f itself and each meridian is an arc of length pi r.
inline ManifoldMap suspend(const ModelSpace& space, const ManifoldMap& f, double r,
                           int bands = 16) {
    detail::require_last_factor_line(space);
    check_map(f);
    const ModelSpace x_space = detail::drop_last_factor(space);
    if (f.space.factors.size() != x_space.factors.size())
        throw StructuralError("suspend: f must map into the X slice of X x R");
    for (const auto& img : f.images) {
        const double d = dist(x_space, x_space.basepoint, img);
        if (std::abs(d - r) > 0.01 * r + 1e-9)
            throw DomainError("suspend: image of f is not on S(r) of the slice");
    }

    SuspensionComplex sc = suspension_complex(f.domain, bands);
    ManifoldMap out;
    out.space = space;
    out.quadrature_order = f.quadrature_order;
    out.domain = std::move(sc.complex);
    out.images.resize(out.domain.vertices.size());

    auto lift = [&](const ProductPoint& x_part, double height) {
        ProductPoint p = x_part;
        p.parts.push_back({height});
        return p;
    };
    out.images[sc.north] = lift(x_space.basepoint, r);
    out.images[sc.south] = lift(x_space.basepoint, -r);
    for (int level = 1; level < bands; ++level) {
        const double t = static_cast<double>(level) / bands;
        const double along_ray = r * std::sin(M_PI * t);
        const double height = r * std::cos(M_PI * t);
        for (int v = 0; v < f.domain.vertex_count(); ++v) {
            // place the vertex on the ray toward f(v) at the exact arc radius
            const ProductPoint on_ray =
                along_ray > 1e-12 ? radial_project(x_space, f.images[v], along_ray)
                                  : x_space.basepoint;
            out.images[sc.level_vertex[level - 1][v]] = lift(on_ray, height);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Loop perturbation off the open unit disc (plane case).
// ---------------------------------------------------------------------------

struct PerturbedLoop {
    std::vector<Vec> loop;       // closed: loop.front() is implicitly followed again
    ManifoldMap homotopy;        // S^1 x [0,1] track in R^2, boundary = input/output
    double homotopy_area = 0;
    int case_branch = 0;         // 1: already outside, 2: fully inside, 3: mixed
};

namespace detail {

inline double polyline_length(const std::vector<Vec>& pts, bool closed) {
    double len = 0;
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i + 1 < n; ++i) len += vec::norm(vec::sub(pts[i + 1], pts[i]));
    if (closed && n > 1) len += vec::norm(vec::sub(pts[0], pts[n - 1]));
    return len;
}

// Cylinder map over the straight-line homotopy between two equal-length
// closed polylines in R^2.
inline ManifoldMap straight_line_homotopy(const std::vector<Vec>& from,
                                          const std::vector<Vec>& to, int bands = 8) {
    const int n = static_cast<int>(from.size());
    ManifoldMap m;
    m.space = ModelSpace::make({{FactorKind::Euclidean, 2}});
    m.domain.dim = 2;
    m.domain.kind = ComplexKind::Patch;
    SimplicialComplex circle;  // combinatorial S^1 with n vertices
    circle.dim = 1;
    circle.kind = ComplexKind::Sphere;
    for (int i = 0; i < n; ++i) {
        const double a = 2 * M_PI * i / n;
        circle.vertices.push_back({std::cos(a), std::sin(a)});
        std::vector<int> e{i, (i + 1) % n};
        std::sort(e.begin(), e.end());
        circle.simplices.push_back(std::move(e));
    }
    std::vector<std::vector<int>> level_ids;
    for (int level = 0; level <= bands; ++level) {
        std::vector<int> ids;
        const double t = static_cast<double>(level) / bands;
        for (int i = 0; i < n; ++i) {
            ids.push_back(m.domain.vertex_count());
            m.domain.vertices.push_back({circle.vertices[i][0], circle.vertices[i][1], t});
            ProductPoint p;
            p.parts = {vec::axpy(t, vec::sub(to[i], from[i]), from[i])};
            m.images.push_back(std::move(p));
        }
        level_ids.push_back(std::move(ids));
    }
    for (int level = 0; level < bands; ++level)
        emit_prisms(circle, level_ids[level], level_ids[level + 1], m.domain.simplices);
    return m;
}

}  // namespace detail

// Homotope a closed polyline off the open unit disc. Cases: (i) already
// outside; (ii) entirely inside, translate by a length-2 vector; (iii) mixed,
// replace each maximal inside run by the shorter unit-circle arc between its
// circle crossings, straight-line homotopy throughout.
inline PerturbedLoop perturb_loop(const std::vector<Vec>& beta, double A, double r) {
    if (beta.size() < 2) throw StructuralError("perturb_loop: need a closed polyline");
    for (const auto& p : beta)
        if (p.size() != 2) throw StructuralError("perturb_loop: points must be planar");
    if (vec::norm(vec::sub(beta.front(), beta.back())) > 1e-9 && beta.size() < 3)
        throw StructuralError("perturb_loop: open input");
    (void)A;
    (void)r;

    // Work on an explicitly closed copy without the duplicate endpoint.
    std::vector<Vec> loop = beta;
    if (vec::norm(vec::sub(loop.front(), loop.back())) < 1e-12) loop.pop_back();
    const int n = static_cast<int>(loop.size());

    bool any_inside = false, all_inside = true;
    for (const auto& p : loop) {
        const bool in = vec::norm(p) < 1.0 - 1e-12;
        any_inside = any_inside || in;
        all_inside = all_inside && in;
    }
    // Edges can dip into the disc even with endpoints outside.
    if (!any_inside) {
        for (int i = 0; i < n; ++i) {
            const Vec& a = loop[i];
            const Vec& b = loop[(i + 1) % n];
            const Vec d = vec::sub(b, a);
            const double dd = vec::dot(d, d);
            if (dd < 1e-24) continue;
            const double t = std::clamp(-vec::dot(a, d) / dd, 0.0, 1.0);
            if (vec::norm(vec::axpy(t, d, a)) < 1.0 - 1e-12) {
                any_inside = true;
                break;
            }
        }
    }

    PerturbedLoop out;
    if (!any_inside) {
        out.case_branch = 1;
        out.loop = loop;
        out.homotopy = detail::straight_line_homotopy(loop, loop, 2);
        out.homotopy_area = 0.0;
        return out;
    }
    if (all_inside) {
        bool crosses = false;
        for (int i = 0; i < n && !crosses; ++i) {
            // inside vertices with an edge leaving the disc means mixed case
            crosses = vec::norm(loop[i]) >= 1.0 - 1e-12;
        }
        if (!crosses) {
            out.case_branch = 2;
            const Vec v = {2.0, 0.0};
            out.loop.reserve(n);
            for (const auto& p : loop) out.loop.push_back(vec::add(p, v));
            out.homotopy = detail::straight_line_homotopy(loop, out.loop, 8);
            out.homotopy_area = k_volume(out.homotopy);
            return out;
        }
    }

    // Mixed case: refine the polyline at circle crossings, then push inside
    // runs to the shorter boundary arc.
    std::vector<Vec> refined;
    auto push_crossings = [&](const Vec& a, const Vec& b) {
        refined.push_back(a);
        const Vec d = vec::sub(b, a);
        const double aa = vec::dot(a, a), dd = vec::dot(d, d), ad = vec::dot(a, d);
        if (dd < 1e-24) return;
        const double disc = ad * ad - dd * (aa - 1.0);
        if (disc <= 0) return;
        const double sq = std::sqrt(disc);
        for (double t : {(-ad - sq) / dd, (-ad + sq) / dd})
            if (t > 1e-9 && t < 1 - 1e-9) refined.push_back(vec::axpy(t, d, a));
    };
    for (int i = 0; i < n; ++i) push_crossings(loop[i], loop[(i + 1) % n]);

    // Chords between consecutive circle points can still pass through the
    // disc without any strictly-inside vertex; sample such chords so the run
    // replacement below sees them.
    {
        std::vector<Vec> sampled;
        const int m0 = static_cast<int>(refined.size());
        for (int i = 0; i < m0; ++i) {
            const Vec& a = refined[i];
            const Vec& b = refined[(i + 1) % m0];
            sampled.push_back(a);
            const Vec mid = vec::scale(0.5, vec::add(a, b));
            if (vec::norm(mid) < 1.0 - 1e-9) {
                const Vec d = vec::sub(b, a);
                const int extra =
                    std::max(1, static_cast<int>(std::ceil(vec::norm(d) / 0.1)));
                for (int j = 1; j <= extra; ++j)
                    sampled.push_back(
                        vec::axpy(static_cast<double>(j) / (extra + 1), d, a));
            }
        }
        refined = std::move(sampled);
    }

    const int m = static_cast<int>(refined.size());
    std::vector<Vec> target = refined;
    int i = 0;
    while (i < m) {
        if (vec::norm(refined[i]) >= 1.0 - 1e-9) {
            ++i;
            continue;
        }
        // maximal inside run [first, last]
        int first = i;
        while (i < m && vec::norm(refined[i]) < 1.0 - 1e-9) ++i;
        int last = i - 1;
        const Vec pa = refined[(first - 1 + m) % m];
        const Vec pb = refined[(last + 1) % m];
        // endpoints of the run's replacement arc (crossings are on the circle)
        double ta = std::atan2(pa[1], pa[0]);
        double tb = std::atan2(pb[1], pb[0]);
        double delta = tb - ta;
        while (delta > M_PI) delta -= 2 * M_PI;
        while (delta < -M_PI) delta += 2 * M_PI;
        if (std::abs(std::abs(delta) - M_PI) < 1e-12) delta = M_PI;  // antipodal: ccw arc
        const int steps = last - first + 2;
        for (int j = first; j <= last; ++j) {
            const double t = static_cast<double>(j - first + 1) / steps;
            const double ang = ta + t * delta;
            target[j] = {std::cos(ang), std::sin(ang)};
        }
    }

    out.case_branch = 3;
    out.loop = target;
    out.homotopy = detail::straight_line_homotopy(refined, target, 8);
    out.homotopy_area = k_volume(out.homotopy);
    return out;
}

// ---------------------------------------------------------------------------
// Four-stage pull-off filling in X x R^2.
// ---------------------------------------------------------------------------

namespace detail {

inline void require_last_factor_plane(const ModelSpace& space) {
    if (space.factors.size() < 2 || space.factors.back().kind != FactorKind::Euclidean ||
        space.factors.back().dim != 2)
        throw StructuralError("expected a space of the form X x R^2");
}

}  // namespace detail

struct PulloffReport {
    double area = 0;
    std::array<double, 4> stage_budget{};  // 9Ar^3, Ar^2, 15Ar^3, 9Ar^3 pattern
    double total_budget = 0;               // 35 A r^3
    double min_vertex_radius = 0;
};

// Tracks of the four homotopies, as annular bands of a disc complex whose
// boundary is gamma's domain (vertex ids preserved):
//   1. radial projection in the R^2 factor to the 3r-circle,
//   2. coning-off in the X factor along geodesics to x0,
//   3. pulling to the 5r-sphere in the X factor along the axis geodesic,
//   4. coning-off in the R^2 factor.
inline ManifoldMap pulloff_filling(const ModelSpace& space, const ManifoldMap& gamma,
                                   double A, double r, PulloffReport* report = nullptr,
                                   int sub_layers = 6) {
    detail::require_last_factor_plane(space);
    check_map(gamma);
    if (gamma.domain.dim != 1 || gamma.domain.kind != ComplexKind::Sphere)
        throw StructuralError("pulloff_filling: gamma must be a circle map");
    const ModelSpace x_space = detail::drop_last_factor(space);
    const std::size_t plane = space.factors.size() - 1;
    for (const auto& img : gamma.images)
        if (vec::norm(img.parts[plane]) < 1.0 - 1e-9)
            throw DomainError("pulloff_filling: R^2 projection enters the open unit disc");

    auto x_part = [&](const ProductPoint& p) {
        ProductPoint x;
        x.parts.assign(p.parts.begin(), p.parts.end() - 1);
        return x;
    };

    // Far point x1 at distance 5r along the first factor's axis.
    ProductPoint x1_x = x_space.basepoint;
    if (x_space.factors[0].kind == FactorKind::Hyperbolic) {
        x1_x.parts[0] = OrientedGeodesic::axis(x_space.factors[0].dim).at(5 * r);
    } else {
        x1_x.parts[0][0] = 5 * r;
    }

    const int total_layers = 4 * sub_layers;
    LayeredBall ball = layered_ball(gamma.domain, total_layers + 1);

    ManifoldMap out;
    out.space = space;
    out.quadrature_order = gamma.quadrature_order;
    out.domain = ball.complex;
    out.images.resize(out.domain.vertices.size());

    for (int v = 0; v < gamma.domain.vertex_count(); ++v) {
        const ProductPoint& g = gamma.images[v];
        const ProductPoint gx = x_part(g);
        const Vec& gv = g.parts[plane];
        const double gv_len = vec::norm(gv);
        const Vec gv_dir = vec::scale(1.0 / gv_len, gv);
        const Vec three_r = vec::scale(3 * r, gv_dir);

        for (int layer = 0; layer <= total_layers; ++layer) {
            const double u = static_cast<double>(layer) / sub_layers;  // stage coordinate
            ProductPoint p;
            if (u <= 1.0) {  // stage 1: R^2 radial projection to the 3r circle
                p = gx;
                p.parts.push_back(vec::scale(gv_len + u * (3 * r - gv_len), gv_dir));
            } else if (u <= 2.0) {  // stage 2: cone the X factor to x0
                p = geodesic_point(x_space, gx, x_space.basepoint, u - 1.0);
                p.parts.push_back(three_r);
            } else if (u <= 3.0) {  // stage 3: pull to the 5r-sphere in X
                p = geodesic_point(x_space, x_space.basepoint, x1_x, u - 2.0);
                p.parts.push_back(three_r);
            } else {  // stage 4: cone the R^2 factor
                p = x1_x;
                p.parts.push_back(vec::scale(4.0 - u, three_r));
            }
            out.images[ball.layer_vertex[layer][v]] = p;
        }
    }
    out.images[ball.apex] = x1_x;
    out.images[ball.apex].parts.push_back({0.0, 0.0});

    // Vertex feasibility: images must avoid B(r).
    double min_rad = std::numeric_limits<double>::infinity();
    for (auto& img : out.images) {
        double d = dist(space, space.basepoint, img);
        if (d < r) {
            img = radial_project(space, img, r);
            d = r;
        }
        min_rad = std::min(min_rad, d);
    }
    // Boundary layer must remain gamma vertex-for-vertex.
    for (int v = 0; v < gamma.domain.vertex_count(); ++v)
        out.images[ball.layer_vertex[0][v]] = gamma.images[v];

    if (report) {
        report->area = k_volume(out);
        report->stage_budget = {(3 * A * r * r) * (3 * r), (A * r) * r,
                                (3 * A * r * r) * (5 * r), (3 * A * r * r) * (3 * r)};
        report->total_budget = 35 * A * r * r * r;
        report->min_vertex_radius = min_rad;
    }
    return out;
}

// ---------------------------------------------------------------------------
// The Y and Z embeddings and leaf geometry.
// ---------------------------------------------------------------------------

// Per-factor horospherical frames along the diagonal geodesic through the
// basepoint of a product of hyperbolic factors.
class DiagonalFrames {
public:
    explicit DiagonalFrames(const ModelSpace& space) : space_(space) {
        for (const auto& f : space.factors) {
            if (f.kind != FactorKind::Hyperbolic || f.dim < 2)
                throw StructuralError(
                    "diagonal frames need hyperbolic factors of dimension >= 2");
            auto g = OrientedGeodesic::axis(f.dim);
            forward_.emplace_back(f.dim, g);
            backward_.emplace_back(f.dim, g.reversed());
        }
    }

    int k() const { return static_cast<int>(forward_.size()); }
    const ModelSpace& space() const { return space_; }
    const HoroFrame& forward(int i) const { return forward_[i]; }
    const HoroFrame& backward(int i) const { return backward_[i]; }

    int horospherical_dim() const {
        int n = 0;
        for (const auto& f : space_.factors) n += f.dim - 1;
        return n;
    }

private:
    ModelSpace space_;
    std::vector<HoroFrame> forward_;
    std::vector<HoroFrame> backward_;
};

// Point of the leaf Y_s at coordinates (t, u): factor i sits on the forward
// horosphere at level (t + s_i)/sqrt(k) with horospherical part u_i.
inline ProductPoint embed_Y_point(const DiagonalFrames& frames, double t, const Vec& u,
                                  const LeafParam& s) {
    const int k = frames.k();
    if (static_cast<int>(u.size()) != frames.horospherical_dim())
        throw StructuralError("embed_Y_point: u dimension mismatch");
    if (static_cast<int>(s.s.size()) != k)
        throw StructuralError("embed_Y_point: leaf parameter arity mismatch");
    const double rt = std::sqrt(static_cast<double>(k));
    ProductPoint p;
    int off = 0;
    for (int i = 0; i < k; ++i) {
        const int mi = frames.space().factors[i].dim;
        HoroCoords hc;
        hc.u.assign(u.begin() + off, u.begin() + off + (mi - 1));
        off += mi - 1;
        hc.s = (t + s.s[i]) / rt;
        p.parts.push_back(frames.forward(i).from_horospherical(hc));
    }
    return p;
}

// Point of Z: factor 1 on the forward horosphere family, factors 2..k on the
// backward family, all at level t/sqrt(k).
inline ProductPoint embed_Z_point(const DiagonalFrames& frames, double t, const Vec& u1,
                                  const Vec& u2) {
    const int k = frames.k();
    if (k < 2) throw StructuralError("embed_Z_point: need at least two factors");
    const int m1 = frames.space().factors[0].dim;
    if (static_cast<int>(u1.size()) != m1 - 1)
        throw StructuralError("embed_Z_point: u1 dimension mismatch");
    if (static_cast<int>(u2.size()) != frames.horospherical_dim() - (m1 - 1))
        throw StructuralError("embed_Z_point: u2 dimension mismatch");
    const double rt = std::sqrt(static_cast<double>(k));
    ProductPoint p;
    {
        HoroCoords hc{u1, t / rt};
        p.parts.push_back(frames.forward(0).from_horospherical(hc));
    }
    int off = 0;
    for (int i = 1; i < k; ++i) {
        const int mi = frames.space().factors[i].dim;
        HoroCoords hc;
        hc.u.assign(u2.begin() + off, u2.begin() + off + (mi - 1));
        off += mi - 1;
        hc.s = -t / rt;  // backward-family level of the point g_i(t / sqrt k)
        p.parts.push_back(frames.backward(i).from_horospherical(hc));
    }
    return p;
}

// Intrinsic distance of Y (constant curvature -1/k): sqrt(k) times the
// hyperbolic distance between the rescaled points (u/sqrt k, t/sqrt k).
inline double y_intrinsic_dist(double t_p, const Vec& u_p, double t_q, const Vec& u_q,
                               int k) {
    const double rt = std::sqrt(static_cast<double>(k));
    const double y1 = std::exp(t_p / rt), y2 = std::exp(t_q / rt);
    double du2 = 0;
    for (std::size_t i = 0; i < u_p.size(); ++i) {
        const double d = (u_p[i] - u_q[i]) / rt;
        du2 += d * d;
    }
    const double arg = 1.0 + (du2 + (y1 - y2) * (y1 - y2)) / (2 * y1 * y2);
    return rt * std::acosh(std::max(1.0, arg));
}

struct YPath {
    std::vector<std::pair<double, Vec>> nodes;  // (t, u) polyline in Y coordinates
    double length = 0;
    double tau = 0;  // sup_i of the vertical extent of the factor geodesics
};

namespace detail {

// Vertical (s-coordinate) extent of the hyperbolic geodesic between points
// at heights y1, y2 with horizontal separation delta in half-space coords.
inline double geodesic_vertical_extent(double y1, double y2, double delta) {
    const double lo = std::min(y1, y2);
    double hi = std::max(y1, y2);
    if (delta > 1e-14) {
        const double c = (delta * delta + y2 * y2 - y1 * y1) / (2 * delta);
        if (c > 0 && c < delta) hi = std::max(hi, std::sqrt(c * c + y1 * y1));
    }
    return std::log(hi / lo);
}

}  // namespace detail

// Three-segment path inside a leaf: diagonal ascent to the horospherical
// level min{t,t'} + tau, horospherical traverse, diagonal descent. Length is
// bounded by 2 sqrt(k) tau + 2 sqrt(k).
inline YPath y_path(const DiagonalFrames& frames, double t_p, const Vec& u_p, double t_q,
                    const Vec& u_q, const LeafParam& s) {
    const int k = frames.k();
    const double rt = std::sqrt(static_cast<double>(k));
    if (u_p.size() != u_q.size() ||
        static_cast<int>(u_p.size()) != frames.horospherical_dim())
        throw StructuralError("y_path: coordinate dimension mismatch");

    YPath out;
    if (std::abs(t_p - t_q) < 1e-15 && vec::norm(vec::sub(u_p, u_q)) < 1e-15) {
        out.nodes = {{t_p, u_p}, {t_q, u_q}};
        return out;
    }

    // Per-factor vertical extents of the factor geodesics, in factor units.
    double tau = 0;
    int off = 0;
    for (int i = 0; i < k; ++i) {
        const int mi = frames.space().factors[i].dim;
        const double vp = (t_p + s.s[i]) / rt, vq = (t_q + s.s[i]) / rt;
        double delta = 0;
        for (int j = 0; j < mi - 1; ++j) {
            const double d = u_p[off + j] - u_q[off + j];
            delta += d * d;
        }
        delta = std::sqrt(delta);
        off += mi - 1;
        tau = std::max(tau,
                       detail::geodesic_vertical_extent(std::exp(vp), std::exp(vq), delta));
    }
    out.tau = tau;

    const double t_top = std::min(t_p, t_q) + rt * tau;  // factor rise tau each
    // Traverse length at the top level in the product-of-horospheres flat.
    double traverse = 0;
    off = 0;
    for (int i = 0; i < k; ++i) {
        const int mi = frames.space().factors[i].dim;
        const double level = (t_top + s.s[i]) / rt;
        double d2 = 0;
        for (int j = 0; j < mi - 1; ++j) {
            const double d = u_p[off + j] - u_q[off + j];
            d2 += d * d;
        }
        off += mi - 1;
        traverse += std::exp(-2 * level) * d2;
    }
    traverse = std::sqrt(traverse);

    out.nodes = {{t_p, u_p}, {t_top, u_p}, {t_top, u_q}, {t_q, u_q}};
    out.length = (t_top - t_p) + traverse + (t_top - t_q);
    return out;
}

// Distance of the non-quasiconvexity witness midpoint from Y:
// min over l1 + l2 = l of sqrt((k-1) l1^2 + l2^2), in closed form l sqrt((k-1)/k).
inline double nonconvexity_gap(double l, int k) {
    if (l < 0 || k < 2) throw DomainError("nonconvexity_gap: need l >= 0, k >= 2");
    return l * std::sqrt(static_cast<double>(k - 1) / k);
}

// Recover the leaf parameter of a point: the per-factor forward Busemann
// values give the factor verticals v_i; t = sum(v_i)/sqrt(k) and
// s_i = sqrt(k) v_i - t.
inline LeafParam leaf_coordinate(const DiagonalFrames& frames, const ProductPoint& p) {
    const int k = frames.k();
    const double rt = std::sqrt(static_cast<double>(k));
    Vec v(k);
    for (int i = 0; i < k; ++i)
        v[i] = -busemann(frames.forward(i).geodesic(), p.parts[i]);
    double t = 0;
    for (double x : v) t += x;
    t /= rt;
    LeafParam s;
    s.s.resize(k);
    for (int i = 0; i < k; ++i) s.s[i] = rt * v[i] - t;
    return s;
}

// Round (k-1)-sphere of radius r in the flat F = gamma_1 x ... x gamma_k.
inline ManifoldMap flat_sphere(const ModelSpace& space, double r, int depth) {
    const int k = static_cast<int>(space.factors.size());
    if (k < 2) throw StructuralError("flat_sphere: need at least 2 hyperbolic factors");
    for (const auto& f : space.factors)
        if (f.kind != FactorKind::Hyperbolic)
            throw StructuralError("flat_sphere: factors must be hyperbolic");
    ManifoldMap m;
    m.space = space;
    m.domain = triangulate_sphere(k - 1, depth);
    m.images.resize(m.domain.vertices.size());
    for (int v = 0; v < m.domain.vertex_count(); ++v) {
        const Vec& w = m.domain.vertices[v];  // unit vector in R^k
        ProductPoint p;
        for (int i = 0; i < k; ++i)
            p.parts.push_back(OrientedGeodesic::axis(space.factors[i].dim).at(r * w[i]));
        m.images[v] = std::move(p);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Quasi-isometry transport and skeleton straightening.
// ---------------------------------------------------------------------------

// pi o F o f: apply F to vertex images, then radially project onto S(r/L),
// L = F.K.
inline ManifoldMap transport_sphere(const QIMap& F, const ModelSpace& target,
                                    const ManifoldMap& f, double r) {
    check_map(f);
    ManifoldMap out;
    out.space = target;
    out.quadrature_order = f.quadrature_order;
    out.domain = f.domain;
    out.images.resize(f.images.size());
    const double new_r = r / F.K;
    for (std::size_t v = 0; v < f.images.size(); ++v) {
        ProductPoint y = F.forward(f.images[v]);
        const double d = dist(target, target.basepoint, y);
        if (d < 1e-12)
            throw DomainError("transport_sphere: image hit the target basepoint");
        out.images[v] = radial_project(target, y, new_r);
    }
    return out;
}

// Discrete skeleton extension: vertices keep F's values, higher skeleta are
// filled by the geodesic coning already built into map evaluation.
inline ManifoldMap straighten_map(const QIMap& F, const ModelSpace& target,
                                  const SimplicialComplex& complex,
                                  const std::vector<ProductPoint>& net_points) {
    if (net_points.size() != complex.vertices.size())
        throw StructuralError("straighten_map: one net point per vertex required");
    ManifoldMap out;
    out.space = target;
    out.domain = complex;
    out.images.resize(net_points.size());
    for (std::size_t v = 0; v < net_points.size(); ++v)
        out.images[v] = F.forward(net_points[v]);
    return out;
}

}  // namespace divkit
