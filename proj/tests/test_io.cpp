#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "divkit/io.hpp"

using namespace divkit;

namespace {

ManifoldMap sample_circle() {
    ManifoldMap m;
    m.space = ModelSpace::make(
        {{FactorKind::Hyperbolic, 2}, {FactorKind::Euclidean, 1}});
    m.domain = triangulate_sphere(1, 3);
    m.images.resize(m.domain.vertices.size());
    for (int v = 0; v < m.domain.vertex_count(); ++v) {
        const double a = std::atan2(m.domain.vertices[v][1], m.domain.vertices[v][0]);
        m.images[v].parts = {hyp::flow({0.0, 0.0}, {std::cos(a), std::sin(a)}, 1.3),
                             {0.25 * a}};
    }
    return m;
}

}  // namespace

TEST_CASE("model space JSON round trip") {
    auto space = ModelSpace::make({{FactorKind::Hyperbolic, 3},
                                   {FactorKind::Euclidean, 2},
                                   {FactorKind::Hyperbolic, 2}});
    auto back = space_from_json(to_json(space));
    REQUIRE(back.factors.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.factors[i].kind == space.factors[i].kind);
        CHECK(back.factors[i].dim == space.factors[i].dim);
    }
    CHECK_THROWS_AS(space_from_json(json{{"factors", json::array()}}),
                    StructuralError);
    CHECK_THROWS_AS(
        space_from_json(json{{"factors", {{{"kind", "spherical"}, {"dim", 2}}}}}),
        StructuralError);
}

TEST_CASE("manifold map JSON round trip preserves volume exactly") {
    auto m = sample_circle();
    auto back = map_from_json(to_json(m));
    REQUIRE(back.images.size() == m.images.size());
    for (std::size_t v = 0; v < m.images.size(); ++v)
        CHECK(dist(m.space, m.images[v], back.images[v]) == doctest::Approx(0.0));
    // doubles survive the trip bit-for-bit, so derived quantities agree exactly
    CHECK(k_volume(back) == k_volume(m));
    CHECK(back.domain.kind == ComplexKind::Sphere);

    auto j = to_json(m);
    j["images"][0] = json::array({json::array({1.0})});  // wrong arity
    CHECK_THROWS_AS(map_from_json(j), StructuralError);
}

TEST_CASE("fit record JSON round trip") {
    FitRecord fit;
    fit.kind = "exponential";
    fit.parameter = 0.97;
    fit.r_squared = 0.9991;
    fit.alt_kind = "polynomial";
    fit.alt_parameter = 3.4;
    fit.alt_r_squared = 0.72;
    auto back = fit_from_json(to_json(fit));
    CHECK(back.kind == fit.kind);
    CHECK(back.parameter == fit.parameter);
    CHECK(back.r_squared == fit.r_squared);
    CHECK(back.alt_kind == fit.alt_kind);
    CHECK(back.alt_parameter == fit.alt_parameter);
    CHECK(back.alt_r_squared == fit.alt_r_squared);
}

TEST_CASE("growth CSV is deterministic and round trips") {
    GrowthSeries series;
    for (int i = 1; i <= 5; ++i) {
        GrowthSeries::Point p;
        p.r = i * 0.7;
        p.value = std::sinh(p.r) * M_PI;  // non-round decimals
        p.admissible = i != 3;
        p.seed_best = 40 + i;
        series.points.push_back(p);
    }
    const std::string csv = growth_csv(series);
    CHECK(csv.substr(0, 30) == "r,volume,admissible,seed_best\n");
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(csv == growth_csv(series));  // rerun is byte-identical

    auto back = growth_from_csv(csv);
    REQUIRE(back.points.size() == series.points.size());
    for (std::size_t i = 0; i < back.points.size(); ++i) {
        // shortest round-trip rendering: doubles come back exactly
        CHECK(back.points[i].r == series.points[i].r);
        CHECK(back.points[i].value == series.points[i].value);
        CHECK(back.points[i].admissible == series.points[i].admissible);
        CHECK(back.points[i].seed_best == series.points[i].seed_best);
    }

    CHECK_THROWS_AS(growth_from_csv("radius,volume\n1,2\n"), StructuralError);
}

TEST_CASE("per-simplex volume CSV sums to the total volume") {
    auto m = sample_circle();
    const std::string csv = simplex_volume_csv(m);
    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "simplex_index,volume");
    int rows = 0;
    double total = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        REQUIRE(comma != std::string::npos);
        CHECK(std::stoi(line.substr(0, comma)) == rows);
        total += std::stod(line.substr(comma + 1));
        ++rows;
    }
    CHECK(rows == static_cast<int>(m.domain.simplices.size()));
    CHECK(total == doctest::Approx(k_volume(m)).epsilon(1e-9));
}

TEST_CASE("file helpers write and read bytes verbatim") {
    const std::string path = "/tmp/divkit_io_test.bin";
    const std::string payload = "line1\nline2\n\x01\x02 binary tail";
    write_file(path, payload);
    CHECK(read_file(path) == payload);
    CHECK_THROWS_AS(read_file("/tmp/divkit_missing_file_xyz"), StructuralError);
}
