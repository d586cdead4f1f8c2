#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "divkit/constructions.hpp"

using namespace divkit;

namespace {

ModelSpace h2xr() {
    return ModelSpace::make({{FactorKind::Hyperbolic, 2}, {FactorKind::Euclidean, 1}});
}

// Antipodal S^0 on S(r) of H^2, along the first axis.
ManifoldMap h2_antipodal(double r) {
    ManifoldMap m;
    m.space = ModelSpace::hyperbolic_product({2});
    m.domain = triangulate_sphere(0, 0);
    m.images.resize(2);
    m.images[0].parts = {hyp::flow({0.0, 0.0}, {1.0, 0.0}, r)};
    m.images[1].parts = {hyp::flow({0.0, 0.0}, {-1.0, 0.0}, r)};
    return m;
}

Vec random_sum_zero(std::mt19937_64& rng, int k, double scale) {
    std::uniform_real_distribution<double> uni(-scale, scale);
    Vec s(k);
    double mean = 0;
    for (double& x : s) {
        x = uni(rng);
        mean += x;
    }
    mean /= k;
    for (double& x : s) x -= mean;
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Suspension.
// ---------------------------------------------------------------------------

TEST_CASE("suspension poles, equator, sphere placement") {
    auto space = h2xr();
    const double r = 1.7;
    const int bands = 16;
    auto sigma = suspend(space, h2_antipodal(r), r, bands);

    CHECK(sigma.domain.dim == 1);
    CHECK(is_closed(sigma.domain));
    // every vertex sits exactly on S(r) of H^2 x R
    for (const auto& img : sigma.images)
        CHECK(dist(space, space.basepoint, img) == doctest::Approx(r).epsilon(1e-9));
    // poles: basepoint in the slice, heights +-r
    CHECK(sigma.images[0].parts[1][0] == doctest::Approx(r));
    CHECK(sigma.images.back().parts[1][0] == doctest::Approx(-r));
    // equatorial level (t = 1/2) recovers the base map up to renormalization
    const ModelSpace x_space = ModelSpace::hyperbolic_product({2});
    int on_equator = 0;
    for (const auto& img : sigma.images)
        if (std::abs(img.parts[1][0]) < 1e-9) {
            ProductPoint x;
            x.parts = {img.parts[0]};
            CHECK(dist(x_space, x_space.basepoint, x) == doctest::Approx(r).epsilon(1e-9));
            ++on_equator;
        }
    CHECK(on_equator == 2);
}

TEST_CASE("suspension of an antipodal pair is a circle of length 2 pi r") {
    auto space = h2xr();
    const double r = 2.0;
    auto sigma = suspend(space, h2_antipodal(r), r, 64);
    // two meridian arcs of length pi r each
    CHECK(k_volume(sigma) == doctest::Approx(2 * M_PI * r).epsilon(0.01));
}

TEST_CASE("suspension rejects maps off the sphere of the slice") {
    auto space = h2xr();
    auto f = h2_antipodal(1.0);
    CHECK_THROWS_AS(suspend(space, f, 2.0, 8), DomainError);
    ModelSpace not_a_product = ModelSpace::hyperbolic_product({2});
    CHECK_THROWS_AS(suspend(not_a_product, f, 1.0, 8), StructuralError);
}

// ---------------------------------------------------------------------------
// Loop perturbation.
// ---------------------------------------------------------------------------

TEST_CASE("perturb_loop leaves loops outside the disc alone") {
    std::vector<Vec> beta = {{4, 0}, {5, 0}, {5, 1}, {4, 1}};
    auto out = perturb_loop(beta, 1.0, 1.0);
    CHECK(out.case_branch == 1);
    CHECK(out.homotopy_area == doctest::Approx(0.0));
    REQUIRE(out.loop.size() == 4);
    for (int i = 0; i < 4; ++i)
        CHECK(vec::norm(vec::sub(out.loop[i], beta[i])) == doctest::Approx(0.0));
}

TEST_CASE("perturb_loop translates fully inside loops by a length-2 vector") {
    std::vector<Vec> beta = {{-0.2, -0.2}, {0.2, -0.2}, {0.2, 0.2}, {-0.2, 0.2}};
    auto out = perturb_loop(beta, 1.0, 1.0);
    CHECK(out.case_branch == 2);
    REQUIRE(out.loop.size() == 4);
    for (int i = 0; i < 4; ++i) {
        const Vec d = vec::sub(out.loop[i], beta[i]);
        CHECK(vec::norm(d) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(vec::norm(out.loop[i]) >= 1.0 + 1e-9);
    }
    // swept area of translating the square: each vertical side sweeps a
    // 2 x 0.4 parallelogram
    CHECK(out.homotopy_area == doctest::Approx(1.6).epsilon(0.02));
    CHECK(out.homotopy.domain.kind == ComplexKind::Patch);
}

TEST_CASE("perturb_loop pushes inside runs to the shorter circle arc") {
    // wide rectangle crossing the disc; every vertex is outside but both long
    // edges pass straight through
    std::vector<Vec> beta = {{-3, -0.5}, {3, -0.5}, {3, 0.5}, {-3, 0.5}};
    auto out = perturb_loop(beta, 1.0, 1.0);
    CHECK(out.case_branch == 3);
    for (const auto& p : out.loop) CHECK(vec::norm(p) >= 1.0 - 1e-9);
    // points pushed onto the circle exist
    int on_circle = 0;
    for (const auto& p : out.loop)
        if (std::abs(vec::norm(p) - 1.0) < 1e-9) ++on_circle;
    CHECK(on_circle >= 4);
    // original vertices survive untouched
    for (const auto& b : beta) {
        bool found = false;
        for (const auto& p : out.loop)
            found = found || vec::norm(vec::sub(p, b)) < 1e-12;
        CHECK(found);
    }
    CHECK(out.homotopy_area > 0.0);
    // each replaced chord at height 1/2 moves to the nearer arc; the track
    // stays well below the disc area times a small factor
    CHECK(out.homotopy_area < M_PI);
}

TEST_CASE("perturb_loop picks the counterclockwise arc for antipodal crossings") {
    // straight slit through the center: crossings at (+-1, 0), antipodal
    std::vector<Vec> beta = {{-3, 0}, {3, 0}, {3, 2}, {-3, 2}};
    auto out = perturb_loop(beta, 1.0, 1.0);
    CHECK(out.case_branch == 3);
    for (const auto& p : out.loop) CHECK(vec::norm(p) >= 1.0 - 1e-9);
    // the diameter chord must be replaced by a half circle, so some replaced
    // point has |y| close to 1
    double max_abs_y_on_circle = 0;
    for (const auto& p : out.loop)
        if (std::abs(vec::norm(p) - 1.0) < 1e-9)
            max_abs_y_on_circle = std::max(max_abs_y_on_circle, std::abs(p[1]));
    CHECK(max_abs_y_on_circle > 0.9);
}

// ---------------------------------------------------------------------------
// Pull-off filling.
// ---------------------------------------------------------------------------

TEST_CASE("pulloff filling budgets, boundary, and feasibility") {
    auto space = ModelSpace::make({{FactorKind::Hyperbolic, 2}, {FactorKind::Euclidean, 2}});
    const double r = 1.0, A = 12.0;

    // gamma: circle of radius 2 in the plane factor, basepoint in H^2
    ManifoldMap gamma;
    gamma.space = space;
    const int n = 48;
    gamma.domain.dim = 1;
    gamma.domain.kind = ComplexKind::Sphere;
    for (int i = 0; i < n; ++i) {
        const double a = 2 * M_PI * i / n;
        gamma.domain.vertices.push_back({std::cos(a), std::sin(a)});
        std::vector<int> e{i, (i + 1) % n};
        std::sort(e.begin(), e.end());
        gamma.domain.simplices.push_back(std::move(e));
        ProductPoint p = space.basepoint;
        p.parts[1] = {2 * std::cos(a), 2 * std::sin(a)};
        gamma.images.push_back(std::move(p));
    }

    PulloffReport report;
    auto filling = pulloff_filling(space, gamma, A, r, &report);
    CHECK(filling.domain.kind == ComplexKind::Ball);
    CHECK(report.total_budget == doctest::Approx(35 * A * r * r * r));
    double stage_sum = 0;
    for (double b : report.stage_budget) stage_sum += b;
    CHECK(stage_sum == doctest::Approx(report.total_budget - A * r * r * r + A * r * r));
    CHECK(report.area > 0.0);
    CHECK(report.area <= report.total_budget);
    CHECK(report.min_vertex_radius >= r - 1e-9);

    // boundary layer is gamma vertex-for-vertex
    for (int v = 0; v < n; ++v)
        CHECK(dist(space, filling.images[v], gamma.images[v]) == doctest::Approx(0.0));
    // and combinatorially the boundary of the ball is gamma's circle
    auto bd = boundary_complex(filling.domain);
    CHECK(bd.simplices == gamma.domain.simplices);

    // gamma dipping into the unit disc of the plane factor is rejected
    auto bad = gamma;
    bad.images[0].parts[1] = {0.5, 0.0};
    CHECK_THROWS_AS(pulloff_filling(space, bad, A, r), DomainError);
}

// ---------------------------------------------------------------------------
// Y/Z embeddings and leaf geometry.
// ---------------------------------------------------------------------------

TEST_CASE("Y embedding hits the basepoint and the right Busemann levels") {
    auto space = ModelSpace::hyperbolic_product({2, 2});
    DiagonalFrames frames(space);
    const int k = 2;
    const double rt = std::sqrt(2.0);

    auto origin = embed_Y_point(frames, 0.0, Vec(2, 0.0), LeafParam::make({0.0, 0.0}));
    CHECK(dist(space, origin, space.basepoint) == doctest::Approx(0.0).epsilon(1e-9));

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-1.5, 1.5);
    for (int trial = 0; trial < 200; ++trial) {
        const double t = uni(rng);
        Vec u = {uni(rng), uni(rng)};
        auto s = LeafParam::make(random_sum_zero(rng, k, 1.0));
        auto p = embed_Y_point(frames, t, u, s);
        for (int i = 0; i < k; ++i) {
            const double b = busemann(frames.forward(i).geodesic(), p.parts[i]);
            CHECK(b == doctest::Approx(-(t + s.s[i]) / rt).epsilon(1e-9));
        }
    }
}

TEST_CASE("Y embedding induces dt^2 + e^{-2t/sqrt k} du^2") {
    auto space = ModelSpace::hyperbolic_product({2, 2});
    DiagonalFrames frames(space);
    const double rt = std::sqrt(2.0);
    auto s0 = LeafParam::make({0.0, 0.0});
    const double h = 1e-4;
    for (double t : {-1.0, 0.0, 0.7, 2.0}) {
        Vec u = {0.3, -0.8};
        auto p = embed_Y_point(frames, t, u, s0);
        // dt direction has unit speed
        auto pt = embed_Y_point(frames, t + h, u, s0);
        CHECK(dist(space, p, pt) / h == doctest::Approx(1.0).epsilon(1e-3));
        // each du direction has speed e^{-t/sqrt k}
        for (int j = 0; j < 2; ++j) {
            Vec uh = u;
            uh[j] += h;
            auto pu = embed_Y_point(frames, t, uh, s0);
            CHECK(dist(space, p, pu) / h ==
                  doctest::Approx(std::exp(-t / rt)).epsilon(1e-3));
        }
    }
}

TEST_CASE("Z embedding scales u1 forward and u2 backward") {
    auto space = ModelSpace::hyperbolic_product({2, 2});
    DiagonalFrames frames(space);
    const double rt = std::sqrt(2.0);
    const double h = 1e-4;
    for (double t : {-1.0, 0.5, 1.5}) {
        Vec u1 = {0.4}, u2 = {-0.6};
        auto p = embed_Z_point(frames, t, u1, u2);
        auto pt = embed_Z_point(frames, t + h, u1, u2);
        CHECK(dist(space, p, pt) / h == doctest::Approx(1.0).epsilon(1e-3));
        Vec u1h = {u1[0] + h};
        CHECK(dist(space, p, embed_Z_point(frames, t, u1h, u2)) / h ==
              doctest::Approx(std::exp(-t / rt)).epsilon(1e-3));
        Vec u2h = {u2[0] + h};
        CHECK(dist(space, p, embed_Z_point(frames, t, u1, u2h)) / h ==
              doctest::Approx(std::exp(t / rt)).epsilon(1e-3));
    }
}

TEST_CASE("intrinsic leaf distance dominates the ambient distance") {
    auto space = ModelSpace::hyperbolic_product({2, 2});
    DiagonalFrames frames(space);
    auto s0 = LeafParam::make({0.0, 0.0});
    CHECK(y_intrinsic_dist(0.3, {1.0, 2.0}, 0.3, {1.0, 2.0}, 2) ==
          doctest::Approx(0.0));
    // vertical segments are geodesics of the leaf
    CHECK(y_intrinsic_dist(-1.0, {0.5, 0.5}, 2.0, {0.5, 0.5}, 2) ==
          doctest::Approx(3.0).epsilon(1e-12));

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(-2, 2);
    for (int trial = 0; trial < 100; ++trial) {
        const double tp = uni(rng), tq = uni(rng);
        Vec up = {uni(rng), uni(rng)}, uq = {uni(rng), uni(rng)};
        const double intrinsic = y_intrinsic_dist(tp, up, tq, uq, 2);
        const double ambient = dist(space, embed_Y_point(frames, tp, up, s0),
                                    embed_Y_point(frames, tq, uq, s0));
        CHECK(ambient <= intrinsic + 1e-9);
    }
}

TEST_CASE("three-segment leaf path is valid and obeys its length bound") {
    auto space = ModelSpace::hyperbolic_product({2, 2});
    DiagonalFrames frames(space);
    auto s0 = LeafParam::make({0.0, 0.0});
    const double rt = std::sqrt(2.0);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> tdist(-2, 2), udist(-3, 3);
    for (int trial = 0; trial < 1000; ++trial) {
        const double tp = tdist(rng), tq = tdist(rng);
        Vec up = {udist(rng), udist(rng)}, uq = {udist(rng), udist(rng)};
        auto path = y_path(frames, tp, up, tq, uq, s0);
        const double intrinsic = y_intrinsic_dist(tp, up, tq, uq, 2);
        CHECK(path.length >= intrinsic - 1e-9);
        CHECK(path.length <= 2 * rt * path.tau + 2 * rt + 1e-9);
        // nodes start and end at the requested points
        CHECK(path.nodes.front().first == doctest::Approx(tp));
        CHECK(path.nodes.back().first == doctest::Approx(tq));
    }
}

TEST_CASE("nonconvexity gap matches a brute-force scan") {
    for (int k : {2, 3, 5}) {
        for (double l : {0.5, 1.0, 3.7}) {
            double best = std::numeric_limits<double>::infinity();
            const int steps = 20000;
            for (int i = 0; i <= steps; ++i) {
                const double l1 = l * i / steps, l2 = l - l1;
                best = std::min(best, std::sqrt((k - 1) * l1 * l1 + l2 * l2));
            }
            CHECK(nonconvexity_gap(l, k) == doctest::Approx(best).epsilon(1e-6));
        }
    }
    CHECK_THROWS_AS(nonconvexity_gap(-1.0, 2), DomainError);
    CHECK_THROWS_AS(nonconvexity_gap(1.0, 1), DomainError);
}

TEST_CASE("leaf coordinate round trip and separation bound") {
    auto space = ModelSpace::hyperbolic_product({2, 2});
    DiagonalFrames frames(space);
    const int k = 2;
    const double rt = std::sqrt(2.0);
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> uni(-1.5, 1.5);

    for (int trial = 0; trial < 300; ++trial) {
        const double t = uni(rng);
        Vec u = {uni(rng), uni(rng)};
        auto s = LeafParam::make(random_sum_zero(rng, k, 1.2));
        auto rec = leaf_coordinate(frames, embed_Y_point(frames, t, u, s));
        for (int i = 0; i < k; ++i)
            CHECK(rec.s[i] == doctest::Approx(s.s[i]).epsilon(1e-8));
    }

    // distance between points on different leaves is at least the euclidean
    // leaf-parameter separation over sqrt(k) (Busemann functions contract)
    for (int trial = 0; trial < 1000; ++trial) {
        auto sa = LeafParam::make(random_sum_zero(rng, k, 1.2));
        auto sb = LeafParam::make(random_sum_zero(rng, k, 1.2));
        auto p = embed_Y_point(frames, uni(rng), {uni(rng), uni(rng)}, sa);
        auto q = embed_Y_point(frames, uni(rng), {uni(rng), uni(rng)}, sb);
        double sep2 = 0;
        for (int i = 0; i < k; ++i)
            sep2 += (sa.s[i] - sb.s[i]) * (sa.s[i] - sb.s[i]);
        CHECK(dist(space, p, q) >= std::sqrt(sep2) / rt - 1e-9);
    }
}

TEST_CASE("flat sphere sits on S(r) and slices the zero leaf at +-r") {
    auto space = ModelSpace::hyperbolic_product({2, 2});
    const double r = 2.5;
    auto m = flat_sphere(space, r, 6);
    for (const auto& img : m.images)
        CHECK(dist(space, space.basepoint, img) == doctest::Approx(r).epsilon(1e-9));
    CHECK(k_volume(m) == doctest::Approx(2 * M_PI * r).epsilon(0.01));

    // diagonal points w = (1,1)/sqrt 2 and -(1,1)/sqrt 2 are on the zero leaf
    DiagonalFrames frames(space);
    for (const auto& img : m.images) {
        const double d1 = img.parts[0][1], d2 = img.parts[1][1];
        if (std::abs(d1 - d2) < 1e-12) {  // on the diagonal flat's diagonal
            auto s = leaf_coordinate(frames, img);
            CHECK(std::abs(s.s[0]) < 1e-9);
        }
    }
}

// ---------------------------------------------------------------------------
// Quasi-isometry transport.
// ---------------------------------------------------------------------------

TEST_CASE("transport by an isometry preserves spheres and volume") {
    auto space = ModelSpace::hyperbolic_product({2, 2});
    const double r = 1.8;
    auto m = flat_sphere(space, r, 5);
    const double base = k_volume(m);

    QIMap identity{[](const ProductPoint& p) { return p; }, 1.0, 0.0, 0.0};
    auto same = transport_sphere(identity, space, m, r);
    CHECK(k_volume(same) == doctest::Approx(base).epsilon(1e-6));
    for (std::size_t v = 0; v < m.images.size(); ++v)
        CHECK(dist(space, same.images[v], m.images[v]) == doctest::Approx(0.0).epsilon(1e-7));

    // swapping the two factors is an isometry fixing the basepoint
    QIMap swap_factors{[](const ProductPoint& p) {
                           ProductPoint q;
                           q.parts = {p.parts[1], p.parts[0]};
                           return q;
                       },
                       1.0, 0.0, 0.0};
    auto swapped = transport_sphere(swap_factors, space, m, r);
    CHECK(k_volume(swapped) == doctest::Approx(base).epsilon(1e-6));
    for (const auto& img : swapped.images)
        CHECK(dist(space, space.basepoint, img) == doctest::Approx(r).epsilon(1e-9));
}

TEST_CASE("straighten_map carries net points through the map") {
    auto space = ModelSpace::hyperbolic_product({2});
    QIMap identity{[](const ProductPoint& p) { return p; }, 1.0, 0.0, 0.0};
    auto complex = triangulate_sphere(1, 2);
    std::vector<ProductPoint> net;
    for (int v = 0; v < complex.vertex_count(); ++v) {
        ProductPoint p;
        const double a = 2 * M_PI * v / complex.vertex_count();
        p.parts = {hyp::flow({0.0, 0.0}, {std::cos(a), std::sin(a)}, 1.0)};
        net.push_back(std::move(p));
    }
    auto m = straighten_map(identity, space, complex, net);
    for (int v = 0; v < complex.vertex_count(); ++v)
        CHECK(dist(space, m.images[v], net[v]) == doctest::Approx(0.0));
    std::vector<ProductPoint> short_net(net.begin(), net.end() - 1);
    CHECK_THROWS_AS(straighten_map(identity, space, complex, short_net), StructuralError);
}
