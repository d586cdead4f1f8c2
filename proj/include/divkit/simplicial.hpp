#pragma once

// Reference complexes (spheres, balls, patches), consistent red refinement,
// piecewise-geodesic maps into a ModelSpace, k-volume quadrature and
// admissibility checks.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <thread>
#include <utility>

#include "divkit/geometry.hpp"

namespace divkit {

inline int thread_count() {
    if (const char* env = std::getenv("DIVKIT_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

enum class ComplexKind { Sphere, Ball, Patch };

inline std::string to_string(ComplexKind k) {
    switch (k) {
        case ComplexKind::Sphere: return "sphere";
        case ComplexKind::Ball: return "ball";
        default: return "patch";
    }
}

// A pure k-dimensional complex. Simplices are stored with vertex indices
// sorted ascending; map evaluation relies on this global order for face
// consistency.
struct SimplicialComplex {
    int dim = 0;
    ComplexKind kind = ComplexKind::Sphere;
    std::vector<Vec> vertices;               // reference coordinates
    std::vector<std::vector<int>> simplices; // each of size dim+1, sorted

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int simplex_count() const { return static_cast<int>(simplices.size()); }
};

namespace detail {

inline std::vector<std::vector<int>> faces_of(const std::vector<int>& simplex) {
    std::vector<std::vector<int>> out;
    for (std::size_t drop = 0; drop < simplex.size(); ++drop) {
        std::vector<int> f;
        for (std::size_t i = 0; i < simplex.size(); ++i)
            if (i != drop) f.push_back(simplex[i]);
        out.push_back(std::move(f));
    }
    return out;
}

inline std::map<std::vector<int>, std::vector<int>> face_incidence(
    const SimplicialComplex& c) {
    std::map<std::vector<int>, std::vector<int>> inc;
    for (int si = 0; si < c.simplex_count(); ++si)
        for (auto& f : faces_of(c.simplices[si])) inc[f].push_back(si);
    return inc;
}

}  // namespace detail

// Every (dim-1)-face shared by exactly two simplices.
inline bool is_closed(const SimplicialComplex& c) {
    if (c.dim == 0) return c.simplex_count() == 2;
    for (const auto& [face, owners] : detail::face_incidence(c))
        if (owners.size() != 2) return false;
    return true;
}

// Attempt a consistent orientation by sign propagation over face adjacency.
inline bool is_orientable(const SimplicialComplex& c) {
    if (c.dim == 0) return true;
    const auto inc = detail::face_incidence(c);
    std::vector<int> sign(c.simplex_count(), 0);
    // Parity of the position of the dropped vertex decides the induced face
    // orientation of a sorted simplex.
    auto face_parity = [&](int si, const std::vector<int>& face) {
        const auto& s = c.simplices[si];
        for (std::size_t i = 0; i < s.size(); ++i)
            if (std::find(face.begin(), face.end(), s[i]) == face.end())
                return static_cast<int>(i) % 2 == 0 ? 1 : -1;
        return 0;
    };
    for (int start = 0; start < c.simplex_count(); ++start) {
        if (sign[start] != 0) continue;
        sign[start] = 1;
        std::vector<int> stack{start};
        while (!stack.empty()) {
            const int si = stack.back();
            stack.pop_back();
            for (auto& f : detail::faces_of(c.simplices[si])) {
                const auto it = inc.find(f);
                if (it == inc.end()) continue;
                for (int sj : it->second) {
                    if (sj == si) continue;
                    // Opposite induced orientations on the shared face.
                    const int want = -sign[si] * face_parity(si, f) * face_parity(sj, f);
                    if (sign[sj] == 0) {
                        sign[sj] = want;
                        stack.push_back(sj);
                    } else if (sign[sj] != want) {
                        return false;
                    }
                }
            }
        }
    }
    return true;
}

inline int euler_characteristic(const SimplicialComplex& c) {
    std::set<std::vector<int>> all;
    std::vector<std::vector<int>> frontier = c.simplices;
    for (auto s : frontier) all.insert(s);
    // Enumerate all faces of all dimensions.
    while (!frontier.empty()) {
        std::vector<std::vector<int>> next;
        for (const auto& s : frontier) {
            if (s.size() == 1) continue;
            for (auto& f : detail::faces_of(s))
                if (all.insert(f).second) next.push_back(f);
        }
        frontier = std::move(next);
    }
    int chi = 0;
    for (const auto& s : all) chi += (s.size() % 2 == 1) ? 1 : -1;
    return chi;
}

// ---------------------------------------------------------------------------
// Consistent red (edge-midpoint) refinement. A sorted k-simplex is identified
// with the doubled Kuhn simplex {2 >= z_1 >= ... >= z_k >= 0}; its lattice
// points are the vertex pair midpoints, and the 2^k children are the Kuhn
// simplices of the unit subcubes that fit inside. Consistency across shared
// faces follows from the global vertex order.
// ---------------------------------------------------------------------------
namespace detail {

// z in {0,1,2}^k non-increasing  <->  midpoint of (v_i, v_j), i <= j.
inline std::pair<int, int> decode_lattice(const std::vector<int>& z) {
    int twos = 0, ones = 0;
    for (int v : z) {
        if (v == 2) ++twos;
        else if (v == 1) ++ones;
    }
    return {twos, twos + ones};
}

inline bool monotone(const std::vector<int>& z) {
    for (std::size_t i = 1; i < z.size(); ++i)
        if (z[i] > z[i - 1]) return false;
    return true;
}

// Children of a single ordered k-simplex, as lists of (i,j) midpoint labels.
inline std::vector<std::vector<std::pair<int, int>>> red_children(int k) {
    std::vector<std::vector<std::pair<int, int>>> out;
    if (k == 0) {
        out.push_back({{0, 0}});
        return out;
    }
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    // Cube corners inside the doubled Kuhn simplex are v_0..v_k.
    for (int corner = 0; corner <= k; ++corner) {
        std::vector<int> w0(k, 0);
        for (int i = 0; i < corner; ++i) w0[i] = 1;
        std::sort(perm.begin(), perm.end());
        do {
            std::vector<int> w = w0;
            std::vector<std::pair<int, int>> chain{decode_lattice(w)};
            bool ok = true;
            for (int step = 0; step < k; ++step) {
                w[perm[step]] += 1;
                if (!monotone(w)) {
                    ok = false;
                    break;
                }
                chain.push_back(decode_lattice(w));
            }
            if (ok) out.push_back(std::move(chain));
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return out;
}

}  // namespace detail

// Result of one refinement round, with the edge-midpoint table so callers can
// interpolate data attached to vertices.
struct Refinement {
    SimplicialComplex complex;
    // (a, b) with a <= b  ->  vertex index in the refined complex.
    std::map<std::pair<int, int>, int> midpoint;
};

inline Refinement subdivide(const SimplicialComplex& c) {
    Refinement out;
    out.complex.dim = c.dim;
    out.complex.kind = c.kind;
    out.complex.vertices = c.vertices;
    for (int v = 0; v < c.vertex_count(); ++v) out.midpoint[{v, v}] = v;

    auto midpoint_id = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        const auto it = out.midpoint.find({a, b});
        if (it != out.midpoint.end()) return it->second;
        Vec m = vec::scale(0.5, vec::add(c.vertices[a], c.vertices[b]));
        if (c.kind == ComplexKind::Sphere) {
            const double n = vec::norm(m);
            if (n > 1e-12) m = vec::scale(1.0 / n, m);
        }
        const int id = out.complex.vertex_count();
        out.complex.vertices.push_back(std::move(m));
        out.midpoint[{a, b}] = id;
        return id;
    };

    const auto children = detail::red_children(c.dim);
    for (const auto& s : c.simplices) {
        for (const auto& child : children) {
            std::vector<int> t;
            t.reserve(child.size());
            for (auto [i, j] : child) t.push_back(midpoint_id(s[i], s[j]));
            std::sort(t.begin(), t.end());
            out.complex.simplices.push_back(std::move(t));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reference triangulations.
// ---------------------------------------------------------------------------

// Boundary of the (k+1)-cross-polytope, subdivided `depth` times, vertices on
// the unit sphere of R^{k+1}. Simplex count: 2^{k+1} (2^k)^depth for k >= 1.
inline SimplicialComplex triangulate_sphere(int k, int depth) {
    if (k < 0 || k > 4) throw StructuralError("triangulate_sphere: supported k is 0..4");
    if (depth < 0) throw StructuralError("triangulate_sphere: depth must be >= 0");
    SimplicialComplex c;
    c.dim = k;
    c.kind = ComplexKind::Sphere;
    const int n = k + 1;
    for (int axis = 0; axis < n; ++axis)
        for (int sgn : {+1, -1}) {
            Vec v(n, 0.0);
            v[axis] = sgn;
            c.vertices.push_back(std::move(v));
        }
    // vertex ids: +e_a -> 2a, -e_a -> 2a+1
    if (k == 0) {
        c.simplices = {{0}, {1}};
        return c;
    }
    for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<int> s;
        for (int axis = 0; axis < n; ++axis)
            s.push_back(2 * axis + ((mask >> axis) & 1));
        std::sort(s.begin(), s.end());
        c.simplices.push_back(std::move(s));
    }
    for (int d = 0; d < depth; ++d) c = subdivide(c).complex;
    return c;
}

// Boundary sub-complex: faces incident to exactly one simplex. Vertex indices
// are inherited from the parent complex.
inline SimplicialComplex boundary_complex(const SimplicialComplex& c) {
    SimplicialComplex b;
    b.dim = c.dim - 1;
    b.kind = ComplexKind::Sphere;
    b.vertices = c.vertices;
    if (c.dim == 0) throw StructuralError("boundary of a 0-complex");
    for (const auto& [face, owners] : detail::face_incidence(c))
        if (owners.size() == 1) b.simplices.push_back(face);
    std::sort(b.simplices.begin(), b.simplices.end());
    return b;
}

namespace detail {

// Staircase triangulation of the prism between two vertex-parallel copies of
// a complex. bottom[i], top[i] are global ids of copy i of base vertex i.
inline void emit_prisms(const SimplicialComplex& base, const std::vector<int>& bottom,
                        const std::vector<int>& top,
                        std::vector<std::vector<int>>& out) {
    for (const auto& s : base.simplices) {
        const int k = static_cast<int>(s.size()) - 1;
        for (int cut = 0; cut <= k; ++cut) {
            std::vector<int> t;
            for (int i = 0; i <= cut; ++i) t.push_back(bottom[s[i]]);
            for (int i = cut; i <= k; ++i) t.push_back(top[s[i]]);
            std::sort(t.begin(), t.end());
            t.erase(std::unique(t.begin(), t.end()), t.end());
            if (static_cast<int>(t.size()) == k + 2) out.push_back(std::move(t));
        }
    }
}

}  // namespace detail

// Layered ball: boundary sphere complex (indices preserved), `layers - 1`
// shrunken interior copies, and an apex at the origin. Used both as the
// reference B^{k+1} and as the combinatorial scaffold for coning fillings.
struct LayeredBall {
    SimplicialComplex complex;              // dim = sphere.dim + 1, kind ball
    int layers = 0;                         // radial copies including boundary
    std::vector<std::vector<int>> layer_vertex;  // [layer][base vertex] -> id
    int apex = -1;
};

inline LayeredBall layered_ball(const SimplicialComplex& sphere, int layers) {
    if (layers < 2) throw StructuralError("layered_ball: need at least 2 layers");
    LayeredBall out;
    out.layers = layers;
    auto& c = out.complex;
    c.dim = sphere.dim + 1;
    c.kind = ComplexKind::Ball;
    const int nb = sphere.vertex_count();
    for (int layer = 0; layer < layers; ++layer) {
        const double radius = 1.0 - static_cast<double>(layer) / layers;
        std::vector<int> ids(nb);
        for (int v = 0; v < nb; ++v) {
            ids[v] = c.vertex_count();
            c.vertices.push_back(vec::scale(radius, sphere.vertices[v]));
        }
        out.layer_vertex.push_back(std::move(ids));
    }
    out.apex = c.vertex_count();
    c.vertices.push_back(Vec(sphere.vertices.empty() ? 1 : sphere.vertices[0].size(), 0.0));
    for (int layer = 0; layer + 1 < layers; ++layer)
        detail::emit_prisms(sphere, out.layer_vertex[layer], out.layer_vertex[layer + 1],
                            c.simplices);
    // Cone the innermost copy to the apex.
    for (const auto& s : sphere.simplices) {
        std::vector<int> t;
        for (int v : s) t.push_back(out.layer_vertex[layers - 1][v]);
        t.push_back(out.apex);
        std::sort(t.begin(), t.end());
        c.simplices.push_back(std::move(t));
    }
    return out;
}

// Cone over triangulate_sphere(k, depth) with radial layering; boundary
// sub-complex equals the sphere complex.
inline SimplicialComplex triangulate_ball(int k_plus_1, int depth, int layers = 3) {
    if (k_plus_1 < 1 || k_plus_1 > 5)
        throw StructuralError("triangulate_ball: supported dimension is 1..5");
    return layered_ball(triangulate_sphere(k_plus_1 - 1, depth), layers).complex;
}

// ---------------------------------------------------------------------------
// Piecewise-geodesic maps.
// ---------------------------------------------------------------------------

struct ManifoldMap {
    SimplicialComplex domain;
    std::vector<ProductPoint> images;  // one per domain vertex
    ModelSpace space;
    int quadrature_order = 2;
};

inline void check_map(const ManifoldMap& m) {
    if (m.images.size() != m.domain.vertices.size())
        throw StructuralError("ManifoldMap: one image per vertex required");
}

// Iterated geodesic coning in global vertex order. Zero-weight leading
// vertices drop out, so the value on a shared face depends only on that
// face's vertices.
inline ProductPoint map_eval(const ManifoldMap& m, int simplex_index, const Vec& bary) {
    const auto& s = m.domain.simplices[simplex_index];
    if (bary.size() != s.size()) throw DomainError("map_eval: barycentric arity mismatch");
    double total = 0;
    for (double b : bary) {
        if (b < -1e-12) throw DomainError("map_eval: negative barycentric coordinate");
        total += b;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw DomainError("map_eval: barycentric coordinates must sum to 1");

    ProductPoint p;
    double acc = 0;
    bool started = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double b = std::max(0.0, bary[i]);
        if (!started) {
            if (b > 0) {
                p = m.images[s[i]];
                acc = b;
                started = true;
            }
            continue;
        }
        if (b <= 0) continue;
        acc += b;
        p = geodesic_point(m.space, p, m.images[s[i]], b / acc);
    }
    if (!started) throw DomainError("map_eval: zero barycentric vector");
    return p;
}

// ---------------------------------------------------------------------------
// Quadrature nodes on the reference simplex (barycentric): order 1 is the
// barycenter; order >= 2 adds all edge midpoints. Equal weights sum to the
// barycentric cell volume 1/k!.
// ---------------------------------------------------------------------------
inline std::vector<Vec> quadrature_nodes(int k, int order) {
    std::vector<Vec> nodes;
    Vec bary(k + 1, 1.0 / (k + 1));
    nodes.push_back(bary);
    if (order >= 2 && k >= 1) {
        for (int i = 0; i <= k; ++i)
            for (int j = i + 1; j <= k; ++j) {
                Vec b(k + 1, 0.0);
                b[i] = b[j] = 0.5;
                nodes.push_back(std::move(b));
            }
    }
    return nodes;
}

namespace detail {

inline double det_small(std::vector<Vec> a) {
    const int n = static_cast<int>(a.size());
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return 0.0;
        if (piv != col) {
            std::swap(a[piv], a[col]);
            det = -det;
        }
        det *= a[col][col];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int cc = col; cc < n; ++cc) a[r][cc] -= f * a[col][cc];
        }
    }
    return det;
}

inline constexpr double kFdStep = 1e-5;

// Volume of the image of one simplex: quadrature of sqrt(det(J^T G J)) over
// the barycentric cell, J by forward differences.
inline double simplex_volume(const ManifoldMap& m, int si, const std::vector<Vec>& nodes,
                             bool* degenerate) {
    const int k = m.domain.dim;
    if (k == 0) return 0.0;
    const auto& s = m.domain.simplices[si];
    {
        std::set<int> uniq(s.begin(), s.end());
        if (static_cast<int>(uniq.size()) != k + 1) {
            if (degenerate) *degenerate = true;
            return 0.0;
        }
    }
    const double cell = [&] {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return 1.0 / f;
    }();
    const double w = cell / nodes.size();
    double vol = 0;
    for (const Vec& b : nodes) {
        int anchor = 0;
        for (int i = 1; i <= k; ++i)
            if (b[i] > b[anchor]) anchor = i;
        const ProductPoint base = map_eval(m, si, b);
        std::vector<ProductPoint> tangents;
        tangents.reserve(k);
        for (int i = 0; i <= k; ++i) {
            if (i == anchor) continue;
            Vec bb = b;
            bb[i] += kFdStep;
            bb[anchor] -= kFdStep;
            ProductPoint t = point_sub(map_eval(m, si, bb), base);
            for (auto& part : t.parts)
                for (double& x : part) x /= kFdStep;
            tangents.push_back(std::move(t));
        }
        std::vector<Vec> gram(k, Vec(k));
        for (int i = 0; i < k; ++i)
            for (int j = i; j < k; ++j)
                gram[i][j] = gram[j][i] =
                    metric_dot(m.space, base, tangents[i], tangents[j]);
        const double d = det_small(gram);
        vol += w * std::sqrt(std::max(0.0, d));
    }
    return vol;
}

}  // namespace detail

// Per-simplex image volumes; degenerate reference simplices contribute 0 and
// are flagged.
inline std::vector<double> per_simplex_volumes(const ManifoldMap& m,
                                               std::vector<bool>* degenerate_flags = nullptr) {
    check_map(m);
    const auto nodes = quadrature_nodes(m.domain.dim, m.quadrature_order);
    const int n = m.domain.simplex_count();
    std::vector<double> vols(n, 0.0);
    std::vector<char> degen(n, 0);
    const int threads = std::min(thread_count(), std::max(1, n / 64));
    auto work = [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            bool d = false;
            vols[i] = detail::simplex_volume(m, i, nodes, &d);
            degen[i] = d ? 1 : 0;
        }
    };
    if (threads <= 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n + threads - 1) / threads;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(work, t * chunk, std::min(n, (t + 1) * chunk));
        for (auto& th : pool) th.join();
    }
    if (degenerate_flags) degenerate_flags->assign(degen.begin(), degen.end());
    return vols;
}

namespace detail {

// Deterministic pairwise reduction, independent of thread count.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

}  // namespace detail

inline double k_volume(const ManifoldMap& m) {
    const auto vols = per_simplex_volumes(m);
    return detail::pairwise_sum(vols, 0, vols.size());
}

// Max over simplex edges of image distance over reference edge length; a
// diagnostic upper-bound proxy, not a certified constant.
inline double lipschitz_estimate(const ManifoldMap& m) {
    check_map(m);
    double best = 0;
    std::set<std::pair<int, int>> seen;
    for (const auto& s : m.domain.simplices)
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = i + 1; j < s.size(); ++j) {
                const auto e = std::make_pair(s[i], s[j]);
                if (!seen.insert(e).second) continue;
                const double ref =
                    vec::norm(vec::sub(m.domain.vertices[s[i]], m.domain.vertices[s[j]]));
                if (ref < 1e-12) continue;
                best = std::max(best, dist(m.space, m.images[s[i]], m.images[s[j]]) / ref);
            }
    return best;
}

enum class AdmissibleRole { Sphere, Filling };

struct AdmissibilityReport {
    double volume = 0;
    double min_radius = 0;          // over vertices and quadrature nodes
    double lipschitz = 0;
    double sphere_deviation = 0;    // max | dist(x0, image) - r |
    bool sphere_admissible = false;
    bool filling_admissible = false;
    bool has_degenerate_simplex = false;
};

// role Sphere:  volume <= A r^k and image on S(r) within tolerance.
// role Filling: image outside B(rho r) within tolerance.
// The default tolerance scales with r; piecewise-geodesic chords of smooth
// maps dip inside S(r) by O(r / m^2) for an m-vertex mesh.
inline AdmissibilityReport check_admissible(const ManifoldMap& m, double r, double rho,
                                            double A, AdmissibleRole role,
                                            double tolerance = -1.0) {
    if (r <= 0 || rho <= 0 || rho > 1 || A <= 0)
        throw DomainError("check_admissible: need r > 0, 0 < rho <= 1, A > 0");
    if (role == AdmissibleRole::Sphere && m.domain.kind != ComplexKind::Sphere)
        throw StructuralError("check_admissible: sphere role needs a sphere complex");
    if (role == AdmissibleRole::Filling && m.domain.kind != ComplexKind::Ball)
        throw StructuralError("check_admissible: filling role needs a ball complex");
    if (tolerance < 0) tolerance = 0.01 * r + 1e-9;

    AdmissibilityReport rep;
    std::vector<bool> degen;
    const auto vols = per_simplex_volumes(m, &degen);
    rep.volume = detail::pairwise_sum(vols, 0, vols.size());
    for (bool d : degen) rep.has_degenerate_simplex = rep.has_degenerate_simplex || d;
    rep.lipschitz = lipschitz_estimate(m);

    double min_rad = std::numeric_limits<double>::infinity();
    double dev = 0;
    auto visit = [&](const ProductPoint& p) {
        const double d = dist(m.space, m.space.basepoint, p);
        min_rad = std::min(min_rad, d);
        dev = std::max(dev, std::abs(d - r));
    };
    for (const auto& img : m.images) visit(img);
    const auto nodes = quadrature_nodes(m.domain.dim, std::max(2, m.quadrature_order));
    for (int si = 0; si < m.domain.simplex_count(); ++si)
        for (const Vec& b : nodes) visit(map_eval(m, si, b));
    rep.min_radius = min_rad;
    rep.sphere_deviation = dev;

    const double k = m.domain.dim;
    rep.sphere_admissible = rep.volume <= A * std::pow(r, k) + 1e-12 && dev <= tolerance;
    rep.filling_admissible = min_rad >= rho * r - tolerance;
    return rep;
}

// Edge-midpoint refinement of a map: the subdivided complex with new vertex
// images evaluated at the reference midpoints (geodesic edge midpoints).
inline ManifoldMap refine(const ManifoldMap& m) {
    check_map(m);
    Refinement ref = subdivide(m.domain);
    ManifoldMap out;
    out.space = m.space;
    out.quadrature_order = m.quadrature_order;
    out.domain = std::move(ref.complex);
    out.images.resize(out.domain.vertices.size());
    for (const auto& [edge, id] : ref.midpoint) {
        if (edge.first == edge.second)
            out.images[id] = m.images[edge.first];
        else
            out.images[id] =
                geodesic_point(m.space, m.images[edge.first], m.images[edge.second], 0.5);
    }
    return out;
}

}  // namespace divkit
