#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "divkit/divergence.hpp"

using namespace divkit;

namespace {

ModelSpace h2() { return ModelSpace::hyperbolic_product({2}); }
ModelSpace r2() { return ModelSpace::make({{FactorKind::Euclidean, 2}}); }

// Flat disc of radius r inside the diagonal flat of H^2 x H^2, as a layered
// ball over the flat circle.
ManifoldMap flat_disc(const ModelSpace& space, double r, int depth, int layers) {
    auto circle = flat_sphere(space, r, depth);
    LayeredBall ball = layered_ball(circle.domain, layers);
    ManifoldMap m;
    m.space = space;
    m.domain = ball.complex;
    m.images.resize(m.domain.vertices.size());
    for (int v = 0; v < circle.domain.vertex_count(); ++v) {
        const Vec& w = circle.domain.vertices[v];
        for (int layer = 0; layer < layers; ++layer) {
            const double rho = r * (1.0 - static_cast<double>(layer) / layers);
            ProductPoint p;
            for (int i = 0; i < 2; ++i)
                p.parts.push_back(OrientedGeodesic::axis(2).at(rho * w[i]));
            m.images[ball.layer_vertex[layer][v]] = std::move(p);
        }
    }
    m.images[ball.apex] = space.basepoint;
    return m;
}

}  // namespace

TEST_CASE("antipodal pair sits on S(r) at distance 2r") {
    for (const auto& space : {h2(), r2()}) {
        const double r = 1.4;
        auto m = antipodal_pair(space, r);
        REQUIRE(m.images.size() == 2);
        for (const auto& img : m.images)
            CHECK(dist(space, space.basepoint, img) == doctest::Approx(r).epsilon(1e-12));
        CHECK(dist(space, m.images[0], m.images[1]) == doctest::Approx(2 * r).epsilon(1e-12));
    }
}

TEST_CASE("initial filling is feasible and bounded by the cone length") {
    auto space = h2();
    const double r = 2.0;
    FillingProblem problem{space, antipodal_pair(space, r), r, 1.0, 1.0};
    OptimizerConfig config;
    auto start = initial_filling(problem, config);
    CHECK(start.domain.kind == ComplexKind::Ball);
    for (const auto& img : start.images)
        CHECK(dist(space, space.basepoint, img) >= r - 1e-9);
    // boundary layer equals the sphere
    for (int v = 0; v < 2; ++v)
        CHECK(dist(space, start.images[v], problem.sphere.images[v]) ==
              doctest::Approx(0.0));
    CHECK(k_volume(start) > 0.0);
}

TEST_CASE("descent shortens the euclidean pair to the half circle") {
    auto space = r2();
    const double r = 1.5;
    FillingProblem problem{space, antipodal_pair(space, r), r, 1.0, 1.0};
    OptimizerConfig config;
    config.max_iters = 800;
    config.initial_step = 0.5;
    config.cone_layers = 32;
    auto start = initial_filling(problem, config);
    auto res = optimize_filling(problem, start, config);

    // the optimal connection outside B(r) between antipodal points is half
    // of the circle of radius r
    CHECK(res.volume == doctest::Approx(M_PI * r).epsilon(0.05));
    // accepted steps never increase the volume
    for (std::size_t i = 1; i < res.volume_trace.size(); ++i)
        CHECK(res.volume_trace[i] <= res.volume_trace[i - 1] + 1e-12);
    // final filling stays feasible
    for (const auto& img : res.filling.images)
        CHECK(dist(space, space.basepoint, img) >= r - 1e-9);
}

TEST_CASE("hyperbolic pair cost approaches half the circle circumference") {
    auto space = h2();
    const double r = 2.0;
    const double oracle = M_PI * std::sinh(r);
    FillingProblem problem{space, antipodal_pair(space, r), r, 1.0, 1.0};
    OptimizerConfig config;
    config.max_iters = 1200;
    config.initial_step = 0.5;
    config.cone_layers = 48;
    auto start = initial_filling(problem, config);
    auto res = optimize_filling(problem, start, config);
    CHECK(res.volume == doctest::Approx(oracle).epsilon(0.10));
    CHECK(res.volume >= oracle * 0.90);
}

TEST_CASE("optimize_filling rejects infeasible starts") {
    auto space = h2();
    const double r = 2.0;
    FillingProblem problem{space, antipodal_pair(space, r), r, 1.0, 1.0};
    auto start = initial_filling(problem, {});
    start.images[start.images.size() / 2] = space.basepoint;
    CHECK_THROWS_AS(optimize_filling(problem, start, {}), DomainError);
}

TEST_CASE("leaf slice of the flat disc is its diagonal diameter") {
    auto space = ModelSpace::hyperbolic_product({2, 2});
    DiagonalFrames frames(space);
    const double r = 2.0;
    auto disc = flat_disc(space, r, 6, 24);
    auto slice = leaf_slice(frames, disc, LeafParam::make({0.0, 0.0}));
    CHECK_FALSE(slice.empty);
    CHECK(slice.length == doctest::Approx(2 * r).epsilon(0.02));
    CHECK(dist(space, slice.endpoint_a, slice.endpoint_b) ==
          doctest::Approx(2 * r).epsilon(0.02));
}

TEST_CASE("slice lengths integrate to the area of the flat disc") {
    // coarea for the flat disc: the leaf coordinate is the signed distance to
    // the diagonal, so integrating slice lengths in s recovers pi r^2
    auto space = ModelSpace::hyperbolic_product({2, 2});
    DiagonalFrames frames(space);
    const double r = 1.5;
    auto disc = flat_disc(space, r, 6, 16);
    const int n = 40;
    double integral = 0;
    double prev = 0;
    for (int i = 0; i <= n; ++i) {
        const double s = -r + 2.0 * r * i / n;
        auto slice = leaf_slice(frames, disc, LeafParam::make({s, -s}));
        const double len = slice.empty ? 0.0 : slice.length;
        if (i > 0) integral += 0.5 * (prev + len) * (2.0 * r / n);
        prev = len;
    }
    CHECK(integral == doctest::Approx(M_PI * r * r).epsilon(0.05));
}

TEST_CASE("growth fit recognizes exact power laws") {
    std::vector<std::pair<double, double>> pts;
    for (double r = 1.0; r <= 8.0; r += 1.0) pts.push_back({r, 2.0 * r * r * r});
    auto fit = fit_growth(pts);
    CHECK(fit.kind == "polynomial");
    CHECK(fit.parameter == doctest::Approx(3.0).epsilon(0.01));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("growth fit recognizes exact exponentials") {
    std::vector<std::pair<double, double>> pts;
    for (double r = 1.0; r <= 8.0; r += 1.0) pts.push_back({r, 0.5 * std::exp(r)});
    auto fit = fit_growth(pts);
    CHECK(fit.kind == "exponential");
    CHECK(fit.parameter == doctest::Approx(1.0).epsilon(0.01));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.alt_kind == "polynomial");
}

TEST_CASE("growth fit classifies pi sinh r as exponential with unit-ish rate") {
    std::vector<std::pair<double, double>> pts;
    for (double r = 2.0; r <= 6.0; r += 0.5) pts.push_back({r, M_PI * std::sinh(r)});
    auto fit = fit_growth(pts);
    CHECK(fit.kind == "exponential");
    CHECK(fit.parameter >= 0.8);
    CHECK(fit.parameter <= 1.1);
}

TEST_CASE("growth fit reports near-ties as inconclusive") {
    // over a narrow window both hypotheses are near-perfect straight lines
    std::vector<std::pair<double, double>> pts;
    for (double r = 10.0; r <= 10.31; r += 0.1) pts.push_back({r, r});
    auto fit = fit_growth(pts);
    CHECK(fit.kind == "inconclusive");
}

TEST_CASE("growth fit input validation") {
    std::vector<std::pair<double, double>> few = {{1, 1}, {2, 8}, {3, 27}};
    CHECK_THROWS_AS(fit_growth(few), DomainError);
    std::vector<std::pair<double, double>> neg = {{1, 1}, {2, -8}, {3, 27}, {4, 64}};
    CHECK_THROWS_AS(fit_growth(neg), DomainError);
    std::vector<std::pair<double, double>> dup = {{1, 1}, {1, 1}, {3, 27}, {4, 64}};
    CHECK_THROWS_AS(fit_growth(dup), DomainError);
}
