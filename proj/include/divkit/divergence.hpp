#pragma once

// Numerical estimation of the divergence functions: feasible starting
// fillings, projected local descent under the outside-ball constraint, leaf
// slicing of fillings, radius sweeps, and growth-kind regression.

#include <optional>

#include "divkit/constructions.hpp"

namespace divkit {

struct FillingProblem {
    ModelSpace space;
    ManifoldMap sphere;  // S^k -> S(r)
    double r = 1;
    double rho = 1;
    double A = 1;
};

struct OptimizerConfig {
    int max_iters = 400;
    double initial_step = 0.1;
    double step_shrink = 0.5;
    double tolerance = 1e-4;  // relative volume change
    int seeds = 1;
    int refine_rounds = 0;
    std::uint64_t rng_seed = 1;
    int cone_layers = 24;  // radial resolution of the initial filling

    void validate() const {
        if (max_iters <= 0 || initial_step <= 0 || step_shrink <= 0 ||
            step_shrink >= 1 || tolerance <= 0 || tolerance >= 1 || seeds <= 0 ||
            cone_layers < 2)
            throw DomainError("OptimizerConfig: invalid settings");
    }
};

struct FitRecord {
    std::string kind;        // "polynomial" | "exponential" | "inconclusive"
    double parameter = 0;    // degree or rate of the winning hypothesis
    double r_squared = 0;
    std::string alt_kind;
    double alt_parameter = 0;
    double alt_r_squared = 0;
};

struct GrowthSeries {
    struct Point {
        double r = 0;
        double value = 0;
        bool admissible = true;
        std::uint64_t seed_best = 0;
    };
    std::vector<Point> points;
    FitRecord fit;
};

// ---------------------------------------------------------------------------
// Feasible start: cone the sphere to a far point at distance 5r along the
// first factor's axis, vertices projected out to S(rho r) when inside.
// ---------------------------------------------------------------------------
inline ManifoldMap initial_filling(const FillingProblem& problem,
                                   const OptimizerConfig& config = {}) {
    check_map(problem.sphere);
    const ModelSpace& space = problem.space;
    const double r = problem.r, rho = problem.rho;

    ProductPoint far = space.basepoint;
    if (space.factors[0].kind == FactorKind::Hyperbolic)
        far.parts[0] = OrientedGeodesic::axis(space.factors[0].dim).at(5 * r);
    else
        far.parts[0][0] += 5 * r;

    LayeredBall ball = layered_ball(problem.sphere.domain, config.cone_layers);
    ManifoldMap out;
    out.space = space;
    out.quadrature_order = problem.sphere.quadrature_order;
    out.domain = ball.complex;
    out.images.resize(out.domain.vertices.size());

    for (int v = 0; v < problem.sphere.domain.vertex_count(); ++v) {
        for (int layer = 0; layer < config.cone_layers; ++layer) {
            const double t = static_cast<double>(layer) / config.cone_layers;
            ProductPoint p = geodesic_point(space, problem.sphere.images[v], far, t);
            if (layer > 0 && dist(space, space.basepoint, p) < rho * r)
                p = radial_project(space, p, rho * r);
            out.images[ball.layer_vertex[layer][v]] = p;
        }
    }
    out.images[ball.apex] = far;
    return out;
}

// ---------------------------------------------------------------------------
// Projected local descent.
// ---------------------------------------------------------------------------

namespace detail {

struct VertexStars {
    std::vector<std::vector<int>> star;  // vertex -> incident simplex indices
};

inline VertexStars vertex_stars(const SimplicialComplex& c) {
    VertexStars vs;
    vs.star.resize(c.vertices.size());
    for (int si = 0; si < c.simplex_count(); ++si)
        for (int v : c.simplices[si]) vs.star[v].push_back(si);
    return vs;
}

inline double star_volume(const ManifoldMap& m, const std::vector<int>& star,
                          const std::vector<Vec>& nodes) {
    double s = 0;
    for (int si : star) s += simplex_volume(m, si, nodes, nullptr);
    return s;
}


inline std::vector<int> interior_vertices(const SimplicialComplex& ball) {
    // Boundary vertices are those on faces owned by a single simplex.
    std::set<int> boundary;
    if (ball.dim >= 1)
        for (const auto& [face, owners] : face_incidence(ball))
            if (owners.size() == 1) boundary.insert(face.begin(), face.end());
    std::vector<int> out;
    for (int v = 0; v < ball.vertex_count(); ++v)
        if (!boundary.count(v)) out.push_back(v);
    return out;
}

}  // namespace detail

struct OptimizeResult {
    ManifoldMap filling;
    double volume = 0;
    std::vector<double> volume_trace;  // accepted volumes, non-increasing
    std::uint64_t seed_best = 0;
};

inline OptimizeResult optimize_filling_resume(const FillingProblem& problem,
                                              const ManifoldMap& start,
                                              const OptimizerConfig& config);

// Move interior vertices along negative finite-difference volume gradients,
// projecting back outside B(rho r) after every step; boundary fixed, steps
// accepted only when volume does not increase.
inline OptimizeResult optimize_filling(const FillingProblem& problem,
                                       const ManifoldMap& start,
                                       const OptimizerConfig& config) {
    config.validate();
    check_map(start);
    if (start.domain.kind != ComplexKind::Ball)
        throw StructuralError("optimize_filling: start must be a ball complex");
    const ModelSpace& space = problem.space;
    const double floor_r = problem.rho * problem.r;
    {
        for (const auto& img : start.images)
            if (dist(space, space.basepoint, img) < floor_r - 1e-9)
                throw DomainError("optimize_filling: infeasible start");
    }

    const auto interior = detail::interior_vertices(start.domain);
    const auto stars = detail::vertex_stars(start.domain);
    const auto nodes = quadrature_nodes(start.domain.dim, start.quadrature_order);
    constexpr double grad_h = 1e-5;

    auto project_feasible = [&](ProductPoint& p) {
        if (dist(space, space.basepoint, p) < floor_r)
            p = radial_project(space, p, floor_r);
    };

    auto run_descent = [&](ManifoldMap m, std::uint64_t seed) {
        OptimizeResult res;
        std::mt19937_64 rng(seed);
        if (seed != config.rng_seed) {
            // jitter the interior start to decorrelate seeds
            std::normal_distribution<double> g(0.0, 0.02 * problem.r);
            for (int v : interior) {
                for (auto& part : m.images[v].parts)
                    for (double& x : part) x += g(rng);
                project_feasible(m.images[v]);
            }
        }
        double volume = k_volume(m);
        res.volume_trace.push_back(volume);
        double step = config.initial_step;

        for (int iter = 0; iter < config.max_iters; ++iter) {
            // finite-difference gradient per interior vertex
            std::vector<ProductPoint> grad(m.images.size());
            const int nv = static_cast<int>(interior.size());
            const int threads = std::min(thread_count(), std::max(1, nv / 8));
            auto work = [&](int lo, int hi) {
                ManifoldMap local = m;
                for (int idx = lo; idx < hi; ++idx) {
                    const int v = interior[idx];
                    const double base = detail::star_volume(local, stars.star[v], nodes);
                    ProductPoint g = local.images[v];
                    for (auto& part : g.parts)
                        for (double& x : part) x = 0;
                    for (std::size_t part = 0; part < g.parts.size(); ++part)
                        for (std::size_t c = 0; c < g.parts[part].size(); ++c) {
                            const double keep = local.images[v].parts[part][c];
                            local.images[v].parts[part][c] = keep + grad_h;
                            const double vol_p =
                                detail::star_volume(local, stars.star[v], nodes);
                            local.images[v] = m.images[v];
                            g.parts[part][c] = (vol_p - base) / grad_h;
                        }
                    grad[v] = std::move(g);
                }
            };
            if (threads <= 1) {
                work(0, nv);
            } else {
                std::vector<std::thread> pool;
                const int chunk = (nv + threads - 1) / threads;
                for (int t = 0; t < threads; ++t)
                    pool.emplace_back(work, t * chunk, std::min(nv, (t + 1) * chunk));
                for (auto& th : pool) th.join();
            }
            double gnorm2 = 0;
            for (int v : interior)
                for (const auto& part : grad[v].parts)
                    for (double x : part) gnorm2 += x * x;
            if (gnorm2 < 1e-24) break;

            // backtracking on the accepted-step rule
            bool accepted = false;
            double trial_step = step;
            for (int bt = 0; bt < 12; ++bt) {
                ManifoldMap trial = m;
                for (int v : interior) {
                    for (std::size_t part = 0; part < trial.images[v].parts.size(); ++part)
                        for (std::size_t c = 0; c < trial.images[v].parts[part].size(); ++c)
                            trial.images[v].parts[part][c] -=
                                trial_step * grad[v].parts[part][c];
                    project_feasible(trial.images[v]);
                }
                const double trial_vol = k_volume(trial);
                if (trial_vol <= volume) {
                    const double rel = (volume - trial_vol) / std::max(volume, 1e-12);
                    m = std::move(trial);
                    volume = trial_vol;
                    res.volume_trace.push_back(volume);
                    accepted = true;
                    step = trial_step * 1.5;  // cautious growth between iterations
                    if (rel < config.tolerance && bt == 0) iter = config.max_iters;
                    break;
                }
                trial_step *= config.step_shrink;
            }
            if (!accepted) {
                step *= config.step_shrink;
                if (step < 1e-12) break;
            }
        }
        res.filling = std::move(m);
        res.volume = volume;
        res.seed_best = seed;
        return res;
    };

    std::optional<OptimizeResult> best;
    for (int s = 0; s < config.seeds; ++s) {
        auto res = run_descent(start, config.rng_seed + s);
        if (!best || res.volume < best->volume) best = std::move(res);
    }
    for (int round = 0; round < config.refine_rounds; ++round) {
        ManifoldMap finer = refine(best->filling);
        // refine interpolates; interior vertices may need re-projection
        for (auto& img : finer.images)
            if (dist(space, space.basepoint, img) < floor_r)
                img = radial_project(space, img, floor_r);
        FillingProblem p2 = problem;
        OptimizerConfig c2 = config;
        c2.seeds = 1;
        auto res = optimize_filling_resume(p2, finer, c2);
        if (res.volume < best->volume) {
            res.seed_best = best->seed_best;
            best = std::move(res);
        }
    }
    return *best;
}

// Continue descent from an already-feasible filling (no seed jitter, no
// further refinement).
inline OptimizeResult optimize_filling_resume(const FillingProblem& problem,
                                              const ManifoldMap& start,
                                              const OptimizerConfig& config) {
    OptimizerConfig c = config;
    c.seeds = 1;
    c.refine_rounds = 0;
    return optimize_filling(problem, start, c);
}

// ---------------------------------------------------------------------------
// Leaf slicing (k = 2: products of two hyperbolic factors).
// ---------------------------------------------------------------------------

struct LeafSlice {
    double length = 0;
    bool empty = true;
    ProductPoint endpoint_a, endpoint_b;  // extremes of the longest chain
};

// Level set {leaf_coordinate = s} of a disc map, by linear interpolation of
// the leaf coordinate at vertices inside each simplex; segment lengths in the
// ambient metric via mid-edge evaluation.
inline LeafSlice leaf_slice(const DiagonalFrames& frames, const ManifoldMap& filling,
                            const LeafParam& s) {
    check_map(filling);
    if (filling.domain.dim != 2)
        throw StructuralError("leaf_slice: expects a 2-dimensional filling");
    if (frames.k() != 2)
        throw StructuralError("leaf_slice: implemented for products of two factors");
    const double target = s.s.at(0);

    // Scalar leaf coordinate per vertex: s_1 of the leaf through the image.
    std::vector<double> phi(filling.images.size());
    for (std::size_t v = 0; v < filling.images.size(); ++v)
        phi[v] = leaf_coordinate(frames, filling.images[v]).s[0];

    LeafSlice out;
    double best_chain = -1;
    for (int si = 0; si < filling.domain.simplex_count(); ++si) {
        const auto& tri = filling.domain.simplices[si];
        // crossing points on edges, as barycentric coordinates
        std::vector<Vec> crossings;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                const double a = phi[tri[i]] - target, b = phi[tri[j]] - target;
                if ((a <= 0 && b > 0) || (a > 0 && b <= 0)) {
                    const double t = a / (a - b);
                    Vec bary(3, 0.0);
                    bary[i] = 1 - t;
                    bary[j] = t;
                    crossings.push_back(std::move(bary));
                }
            }
        if (crossings.size() < 2) continue;
        const ProductPoint pa = map_eval(filling, si, crossings[0]);
        const ProductPoint pb = map_eval(filling, si, crossings[1]);
        // measure through the midpoint to track the curved image
        const Vec mid = vec::scale(0.5, vec::add(crossings[0], crossings[1]));
        const ProductPoint pm = map_eval(filling, si, mid);
        const double len =
            dist(filling.space, pa, pm) + dist(filling.space, pm, pb);
        out.length += len;
        out.empty = false;
        // track extremes: keep the farthest-apart crossing pair seen
        const double span = dist(filling.space, pa, pb);
        if (span > best_chain) {
            best_chain = span;
            out.endpoint_a = pa;
            out.endpoint_b = pb;
        }
    }
    // Endpoints of the sliced arc: the two crossing points farthest from each
    // other over all segments.
    if (!out.empty) {
        // refine the endpoint pair across segments
        std::vector<ProductPoint> ends;
        for (int si = 0; si < filling.domain.simplex_count(); ++si) {
            const auto& tri = filling.domain.simplices[si];
            for (int i = 0; i < 3; ++i)
                for (int j = i + 1; j < 3; ++j) {
                    const double a = phi[tri[i]] - target, b = phi[tri[j]] - target;
                    if ((a <= 0 && b > 0) || (a > 0 && b <= 0)) {
                        const double t = a / (a - b);
                        Vec bary(3, 0.0);
                        bary[i] = 1 - t;
                        bary[j] = t;
                        ends.push_back(map_eval(filling, si, bary));
                    }
                }
        }
        double best = -1;
        for (std::size_t i = 0; i < ends.size(); ++i)
            for (std::size_t j = i + 1; j < ends.size(); ++j) {
                const double d = dist(filling.space, ends[i], ends[j]);
                if (d > best) {
                    best = d;
                    out.endpoint_a = ends[i];
                    out.endpoint_b = ends[j];
                }
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Growth classification.
// ---------------------------------------------------------------------------

namespace detail {

struct LineFit {
    double slope = 0, intercept = 0, r_squared = 0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    LineFit f;
    const double den = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean = sy / n;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = f.slope * x[i] + f.intercept;
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    f.r_squared = ss_tot < 1e-30 ? 1.0 : 1.0 - ss_res / ss_tot;
    return f;
}

}  // namespace detail

// Regress log v on log r (polynomial hypothesis) and log v on r (exponential
// hypothesis); the higher coefficient of determination wins, ties within 0.01
// are reported as inconclusive.
inline FitRecord fit_growth(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 4) throw DomainError("fit_growth: need at least 4 points");
    std::vector<double> r, logr, logv;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].second <= 0)
            throw DomainError("fit_growth: values must be positive");
        if (i > 0 && points[i].first <= points[i - 1].first)
            throw DomainError("fit_growth: radii must be strictly increasing");
        r.push_back(points[i].first);
        logr.push_back(std::log(points[i].first));
        logv.push_back(std::log(points[i].second));
    }
    const auto poly = detail::least_squares(logr, logv);
    const auto expo = detail::least_squares(r, logv);

    FitRecord fit;
    const bool poly_wins = poly.r_squared >= expo.r_squared;
    const auto& win = poly_wins ? poly : expo;
    const auto& lose = poly_wins ? expo : poly;
    fit.kind = poly_wins ? "polynomial" : "exponential";
    fit.parameter = win.slope;
    fit.r_squared = win.r_squared;
    fit.alt_kind = poly_wins ? "exponential" : "polynomial";
    fit.alt_parameter = lose.slope;
    fit.alt_r_squared = lose.r_squared;
    if (std::abs(poly.r_squared - expo.r_squared) < 0.01) fit.kind = "inconclusive";
    return fit;
}

// ---------------------------------------------------------------------------
// Radius sweeps.
// ---------------------------------------------------------------------------

enum class SphereGenerator { FlatSphere, Suspended, AntipodalPair };

// Antipodal S^0 on S(r), placed along the given axis direction of the first
// factor (axis index 1 = first coordinate axis, 2 = perpendicular).
inline ManifoldMap antipodal_pair(const ModelSpace& space, double r, int axis = 2) {
    ManifoldMap m;
    m.space = space;
    m.domain = triangulate_sphere(0, 0);
    m.images.resize(2);
    for (int side = 0; side < 2; ++side) {
        ProductPoint p = space.basepoint;
        const double sgn = side == 0 ? 1.0 : -1.0;
        if (space.factors[0].kind == FactorKind::Hyperbolic) {
            const int dim = space.factors[0].dim;
            // chart direction: axis 1 = vertical (the far-point axis),
            // axis >= 2 = horospherical directions, perpendicular to it
            Vec tangent(dim, 0.0);
            tangent[axis == 1 ? dim - 1 : std::min(axis - 2, dim - 2)] = 1.0;
            p.parts[0] = hyp::flow(space.basepoint.parts[0], tangent, sgn * r);
        } else {
            p.parts[0][std::min(axis, space.factors[0].dim) - 1] += sgn * r;
        }
        m.images[side] = p;
    }
    return m;
}

struct DivergenceEstimate {
    GrowthSeries series;
    std::vector<OptimizeResult> runs;  // one per admissible radius
};

inline DivergenceEstimate estimate_divergence(const ModelSpace& space, int k, double rho,
                                              double A, const std::vector<double>& radii,
                                              SphereGenerator generator,
                                              const OptimizerConfig& config,
                                              int sphere_depth = 4) {
    DivergenceEstimate out;
    std::vector<std::pair<double, double>> fit_pts;
    for (double r : radii) {
        ManifoldMap sphere;
        switch (generator) {
            case SphereGenerator::FlatSphere:
                sphere = flat_sphere(space, r, sphere_depth);
                break;
            case SphereGenerator::AntipodalPair:
                sphere = antipodal_pair(space, r);
                break;
            case SphereGenerator::Suspended: {
                const ModelSpace x_space = detail::drop_last_factor(space);
                ManifoldMap base = antipodal_pair(x_space, r);
                sphere = suspend(space, base, r, 8 << sphere_depth / 2);
                break;
            }
        }
        if (sphere.domain.dim != k)
            throw StructuralError("estimate_divergence: generator dimension mismatch");

        GrowthSeries::Point pt;
        pt.r = r;
        const bool admissible =
            k == 0 ||
            check_admissible(sphere, r, rho, A, AdmissibleRole::Sphere).sphere_admissible;
        pt.admissible = admissible;
        if (admissible) {
            FillingProblem problem{space, sphere, r, rho, A};
            auto start = initial_filling(problem, config);
            auto res = optimize_filling(problem, start, config);
            pt.value = res.volume;
            pt.seed_best = res.seed_best;
            fit_pts.push_back({r, res.volume});
            out.runs.push_back(std::move(res));
        }
        out.series.points.push_back(pt);
    }
    if (fit_pts.size() >= 4) out.series.fit = fit_growth(fit_pts);
    return out;
}

}  // namespace divkit
