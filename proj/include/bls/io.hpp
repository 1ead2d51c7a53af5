#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bls/blocks.hpp"
#include "bls/correlators.hpp"
#include "bls/mark_distribution.hpp"
#include "bls/mc/loopsoup.hpp"

// Serialization: the {kind, params} distribution records, correlator configs
// and results, coefficient-table CSV, estimator records, and the binary loop
// dump. CSV headers are fixed and versioned via schema_version in the JSON.

namespace bls::io {

using json = nlohmann::json;
inline constexpr int schema_version = 1;

inline json to_json(const MarkDistribution& d) {
    switch (d.kind()) {
    case MarkKind::bernoulli:
        return {{"kind", "bernoulli"}};
    case MarkKind::gaussian_scalar:
        return {{"kind", "gaussian"}, {"sigma", d.gaussian_sigma()}};
    case MarkKind::unit_vector:
        return {{"kind", "unit_vector"}, {"d", d.unit_vector_dim()}};
    case MarkKind::lattice: {
        json atoms = json::array();
        for (const auto& [n, p] : d.lattice_atoms()) atoms.push_back({n, p});
        return {{"kind", "lattice"}, {"b", d.lattice_spacing()}, {"atoms", atoms}};
    }
    case MarkKind::custom:
        throw std::invalid_argument("serialize: custom distributions are not serializable");
    }
    return {};
}

inline MarkDistribution distribution_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bernoulli") return MarkDistribution::bernoulli();
    if (kind == "gaussian") return MarkDistribution::gaussian(j.at("sigma").get<double>());
    if (kind == "unit_vector") return MarkDistribution::unit_vector(j.at("d").get<int>());
    if (kind == "lattice") {
        std::vector<LatticeAtom> atoms;
        for (const auto& a : j.at("atoms"))
            atoms.push_back({a.at(0).get<int>(), a.at(1).get<double>()});
        return MarkDistribution::lattice(j.at("b").get<double>(), std::move(atoms));
    }
    throw std::invalid_argument("distribution: unknown kind '" + kind + "'");
}

/// Compact spec strings for --dist flags: "bernoulli", "gaussian:sigma=2",
/// "unit_vector:d=3", "lattice:b=1,atoms=1:0.5;-1:0.5".
inline MarkDistribution distribution_from_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    std::map<std::string, std::string> kv;
    if (colon != std::string::npos) {
        std::stringstream ss(spec.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("distribution spec: expected key=value in '" + item + "'");
            kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    if (kind == "bernoulli") return MarkDistribution::bernoulli();
    if (kind == "gaussian") return MarkDistribution::gaussian(std::stod(kv.at("sigma")));
    if (kind == "unit_vector") return MarkDistribution::unit_vector(std::stoi(kv.at("d")));
    if (kind == "lattice") {
        std::vector<LatticeAtom> atoms;
        std::stringstream ss(kv.at("atoms"));
        std::string atom;
        while (std::getline(ss, atom, ';')) {
            const auto sep = atom.find(':');
            atoms.push_back({std::stoi(atom.substr(0, sep)), std::stod(atom.substr(sep + 1))});
        }
        return MarkDistribution::lattice(std::stod(kv.at("b")), std::move(atoms));
    }
    throw std::invalid_argument("distribution spec: unknown kind '" + kind + "'");
}

inline json to_json(const CorrelatorConfig& cfg) {
    json points = json::array();
    for (const auto& p : cfg.points)
        points.push_back({{"re", p.z.real()}, {"im", p.z.imag()}, {"beta", p.beta}});
    return {{"lambda", cfg.lambda},
            {"distribution", to_json(cfg.dist)},
            {"domain", cfg.domain == Domain::plane ? "plane" : "upper_half_plane"},
            {"points", points}};
}

inline CorrelatorConfig correlator_config_from_json(const json& j) {
    CorrelatorConfig cfg;
    cfg.lambda = j.at("lambda").get<double>();
    cfg.dist = distribution_from_json(j.at("distribution"));
    const std::string dom = j.value("domain", "plane");
    if (dom == "plane") cfg.domain = Domain::plane;
    else if (dom == "upper_half_plane" || dom == "halfplane") cfg.domain = Domain::upper_half_plane;
    else throw std::invalid_argument("config: unknown domain '" + dom + "'");
    for (const auto& p : j.at("points"))
        cfg.points.push_back(
            {cplx(p.at("re").get<double>(), p.at("im").get<double>()), p.at("beta").get<double>()});
    return cfg;
}

inline json to_json(const CorrelatorResult& res) {
    json flags = json::array();
    if (res.vanishes_by_charge) flags.push_back("vanishes_by_charge_conservation");
    json diag;
    if (res.cross_ratio) {
        diag["x_re"] = res.cross_ratio->real();
        diag["x_im"] = res.cross_ratio->imag();
    }
    if (res.a_value) diag["A"] = *res.a_value;
    diag["dims"] = res.deltas;
    return {{"value", res.value}, {"flags", flags}, {"diagnostics", diag}};
}

inline json to_json(const mc::EstimatorResult& r) {
    return {{"estimate", r.mean},
            {"stderr", r.std_error},
            {"n", r.n_samples},
            {"bias_notes", r.bias_notes}};
}

inline std::string coeff_table_csv(const blocks::CoeffTable& table) {
    std::ostringstream out;
    out << "p,p_bar,delta,delta_bar,coeff,residual\n";
    out << std::setprecision(17);
    for (const auto& e : table.entries)
        out << e.label.p << ',' << e.label.p_bar << ',' << e.delta << ',' << e.delta_bar << ','
            << e.coeff << ',' << table.residual << '\n';
    return out.str();
}

// --- binary loop dump: per record
//   u64 vertex_count, f64 center_re, f64 center_im, f64 duration,
//   then vertex_count interleaved (re, im) f64 pairs; all little-endian.
static_assert(std::endian::native == std::endian::little,
              "loop dump assumes a little-endian host");

inline void dump_loops(std::ostream& out, const std::vector<mc::LoopPath>& loops) {
    for (const auto& loop : loops) {
        const std::uint64_t n = loop.vertices.size();
        out.write(reinterpret_cast<const char*>(&n), sizeof n);
        const double header[3] = {loop.center.real(), loop.center.imag(), loop.duration};
        out.write(reinterpret_cast<const char*>(header), sizeof header);
        out.write(reinterpret_cast<const char*>(loop.vertices.data()),
                  static_cast<std::streamsize>(n * sizeof(cplx)));
    }
}

inline std::vector<mc::LoopPath> load_loops(std::istream& in) {
    std::vector<mc::LoopPath> loops;
    while (true) {
        std::uint64_t n = 0;
        in.read(reinterpret_cast<char*>(&n), sizeof n);
        if (!in) break;
        mc::LoopPath loop;
        double header[3];
        in.read(reinterpret_cast<char*>(header), sizeof header);
        loop.center = {header[0], header[1]};
        loop.duration = header[2];
        loop.vertices.resize(n);
        in.read(reinterpret_cast<char*>(loop.vertices.data()),
                static_cast<std::streamsize>(n * sizeof(cplx)));
        if (!in) throw std::runtime_error("load_loops: truncated record");
        loops.push_back(std::move(loop));
    }
    return loops;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

} // namespace bls::io
