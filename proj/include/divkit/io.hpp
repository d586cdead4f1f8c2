#pragma once

// Serialization: model spaces and manifold maps as JSON, growth series and
// per-simplex volumes as CSV. CSV output is fully deterministic ('.' decimal
// separator, LF line endings, shortest round-trip number rendering) so that
// reruns with identical seeds are byte-identical.

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "divkit/divergence.hpp"

namespace divkit {

using json = nlohmann::json;

namespace detail {

inline std::string render_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ModelSpace <-> JSON
// ---------------------------------------------------------------------------

inline json to_json(const ModelSpace& space) {
    json factors = json::array();
    for (const auto& f : space.factors)
        factors.push_back({{"kind", f.kind == FactorKind::Hyperbolic ? "hyperbolic"
                                                                     : "euclidean"},
                           {"dim", f.dim}});
    return {{"factors", factors}};
}

inline ModelSpace space_from_json(const json& j) {
    if (!j.contains("factors") || !j["factors"].is_array() || j["factors"].empty())
        throw StructuralError("space JSON: missing factors array");
    std::vector<Factor> factors;
    for (const auto& f : j["factors"]) {
        const std::string kind = f.at("kind").get<std::string>();
        const int dim = f.at("dim").get<int>();
        if (kind == "hyperbolic")
            factors.push_back({FactorKind::Hyperbolic, dim});
        else if (kind == "euclidean")
            factors.push_back({FactorKind::Euclidean, dim});
        else
            throw StructuralError("space JSON: unknown factor kind '" + kind + "'");
    }
    return ModelSpace::make(factors);
}

// ---------------------------------------------------------------------------
// ManifoldMap <-> JSON
// ---------------------------------------------------------------------------

inline json to_json(const ProductPoint& p) {
    json parts = json::array();
    for (const auto& part : p.parts) parts.push_back(part);
    return parts;
}

inline std::string kind_name(ComplexKind kind) {
    switch (kind) {
        case ComplexKind::Sphere: return "sphere";
        case ComplexKind::Ball: return "ball";
        case ComplexKind::Patch: return "patch";
    }
    throw StructuralError("unknown complex kind");
}

inline ComplexKind kind_from_name(const std::string& name) {
    if (name == "sphere") return ComplexKind::Sphere;
    if (name == "ball") return ComplexKind::Ball;
    if (name == "patch") return ComplexKind::Patch;
    throw StructuralError("unknown complex kind '" + name + "'");
}

inline json to_json(const ManifoldMap& m) {
    json images = json::array();
    for (const auto& img : m.images) images.push_back(to_json(img));
    return {{"space", to_json(m.space)},
            {"complex",
             {{"dim", m.domain.dim},
              {"kind", kind_name(m.domain.kind)},
              {"vertices", m.domain.vertices},
              {"simplices", m.domain.simplices}}},
            {"images", images}};
}

inline ManifoldMap map_from_json(const json& j) {
    ManifoldMap m;
    m.space = space_from_json(j.at("space"));
    const json& c = j.at("complex");
    m.domain.dim = c.at("dim").get<int>();
    m.domain.kind = kind_from_name(c.at("kind").get<std::string>());
    m.domain.vertices = c.at("vertices").get<std::vector<Vec>>();
    m.domain.simplices = c.at("simplices").get<std::vector<std::vector<int>>>();
    for (const auto& img : j.at("images")) {
        ProductPoint p;
        for (const auto& part : img) p.parts.push_back(part.get<Vec>());
        m.images.push_back(std::move(p));
    }
    check_map(m);
    return m;
}

// ---------------------------------------------------------------------------
// Fit record and growth series
// ---------------------------------------------------------------------------

inline json to_json(const FitRecord& fit) {
    return {{"kind", fit.kind},
            {"parameter", fit.parameter},
            {"r_squared", fit.r_squared},
            {"alternative",
             {{"kind", fit.alt_kind},
              {"parameter", fit.alt_parameter},
              {"r_squared", fit.alt_r_squared}}}};
}

inline FitRecord fit_from_json(const json& j) {
    FitRecord fit;
    fit.kind = j.at("kind").get<std::string>();
    fit.parameter = j.at("parameter").get<double>();
    fit.r_squared = j.at("r_squared").get<double>();
    const json& alt = j.at("alternative");
    fit.alt_kind = alt.at("kind").get<std::string>();
    fit.alt_parameter = alt.at("parameter").get<double>();
    fit.alt_r_squared = alt.at("r_squared").get<double>();
    return fit;
}

inline std::string growth_csv(const GrowthSeries& series) {
    std::string out = "r,volume,admissible,seed_best\n";
    for (const auto& p : series.points) {
        out += detail::render_double(p.r);
        out += ',';
        out += detail::render_double(p.value);
        out += ',';
        out += p.admissible ? '1' : '0';
        out += ',';
        out += std::to_string(p.seed_best);
        out += '\n';
    }
    return out;
}

inline GrowthSeries growth_from_csv(const std::string& csv) {
    GrowthSeries series;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "r,volume,admissible,seed_best")
        throw StructuralError("growth CSV: bad header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        GrowthSeries::Point p;
        std::istringstream row(line);
        std::string field;
        std::getline(row, field, ',');
        p.r = std::stod(field);
        std::getline(row, field, ',');
        p.value = std::stod(field);
        std::getline(row, field, ',');
        p.admissible = field == "1";
        std::getline(row, field, ',');
        p.seed_best = std::stoull(field);
        series.points.push_back(p);
    }
    return series;
}

inline std::string simplex_volume_csv(const ManifoldMap& m) {
    auto volumes = per_simplex_volumes(m);
    std::string out = "simplex_index,volume\n";
    for (std::size_t i = 0; i < volumes.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += detail::render_double(volumes[i]);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StructuralError("cannot open for writing: " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StructuralError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace divkit
