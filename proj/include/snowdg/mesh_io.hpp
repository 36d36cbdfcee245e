#pragma once
// Mesh (de)serialization. The mesh file is a JSON document; exact
// quantities (word digits, levels, rotation indices, slots) are stored as
// integers, coordinates as doubles that round-trip bit-exactly.

#include <fstream>
#include <string>

#include <json.hpp>

#include "snowdg/errors.hpp"
#include "snowdg/mesh.hpp"

namespace snowdg::mesh {

inline nlohmann::json mesh_to_json(const Mesh& m) {
    nlohmann::json j;
    j["format"] = "snowdg-mesh";
    j["family"] = family_name(m.family);
    j["ell"] = m.ell;
    j["ellstar"] = m.ellstar;
    nlohmann::json elems = nlohmann::json::array();
    for (const auto& e : m.elements) {
        nlohmann::json je;
        je["word"] = e.word;
        je["level"] = e.level;
        je["rot"] = e.chart.rot;
        je["barycentre"] = {e.barycentre.x, e.barycentre.y};
        elems.push_back(std::move(je));
    }
    j["elements"] = std::move(elems);
    nlohmann::json faces = nlohmann::json::array();
    for (const auto& f : m.faces) {
        nlohmann::json jf;
        jf["kind"] = f.interior() ? "interior" : "boundary";
        jf["minus"] = f.minus;
        if (f.interior()) {
            jf["plus"] = f.plus;
            jf["slot_plus"] = f.slot_plus;
        }
        jf["slot_minus"] = f.slot_minus;
        jf["hf_level"] = f.hf_level;
        faces.push_back(std::move(jf));
    }
    j["faces"] = std::move(faces);
    return j;
}

inline Mesh mesh_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "snowdg-mesh") throw std::runtime_error("not a snowdg mesh file");
    Mesh m;
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "uniform")
        m.family = Family::uniform;
    else if (fam == "quasi_uniform")
        m.family = Family::quasi_uniform;
    else if (fam == "boundary_refined")
        m.family = Family::boundary_refined;
    else
        throw std::runtime_error("unknown mesh family: " + fam);
    m.ell = j.at("ell").get<int>();
    m.ellstar = j.value("ellstar", 0);
    for (const auto& je : j.at("elements")) {
        Element e = detail::make_element(je.at("word").get<std::vector<std::uint8_t>>());
        if (e.level != je.at("level").get<int>()) throw std::runtime_error("mesh file level mismatch");
        if (e.chart.rot != je.at("rot").get<int>()) throw std::runtime_error("mesh file rotation mismatch");
        m.elements.push_back(std::move(e));
    }
    for (const auto& jf : j.at("faces")) {
        Face f;
        f.kind = jf.at("kind").get<std::string>() == "interior" ? Face::Kind::interior : Face::Kind::boundary;
        f.minus = jf.at("minus").get<int>();
        f.slot_minus = jf.at("slot_minus").get<int>();
        if (f.interior()) {
            f.plus = jf.at("plus").get<int>();
            f.slot_plus = jf.at("slot_plus").get<int>();
        }
        f.hf_level = jf.at("hf_level").get<int>();
        m.faces.push_back(f);
    }
    // rebuild the slot table
    for (std::size_t fid = 0; fid < m.faces.size(); ++fid) {
        const Face& f = m.faces[fid];
        m.elements[static_cast<std::size_t>(f.minus)].slot_face[static_cast<std::size_t>(f.slot_minus - 1)] =
            static_cast<int>(fid);
        if (f.interior()) {
            auto& ep = m.elements[static_cast<std::size_t>(f.plus)];
            ep.slot_face[static_cast<std::size_t>(f.slot_plus - 1)] = static_cast<int>(fid);
            ep.slot_face[static_cast<std::size_t>(f.slot_plus % 6)] = static_cast<int>(fid);
        }
    }
    return m;
}

inline void export_mesh(const Mesh& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open mesh file for writing: " + path);
    out << mesh_to_json(m).dump(1) << "\n";
}

inline Mesh import_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mesh file: " + path);
    nlohmann::json j;
    in >> j;
    return mesh_from_json(j);
}

/// Per-element prefractal outlines for plotting: for each element one block
///   `element <index> <n_vertices>` followed by `x y` lines, the closed
/// polygon being the six face prefractals at the requested depth.
inline void export_polygons(const Mesh& m, int depth, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open polygon file for writing: " + path);
    const auto base = geom::sample_koch(depth);
    const auto& rc = geom::reference_charts();
    char buf[64];
    for (std::size_t i = 0; i < m.elements.size(); ++i) {
        const auto& chart = m.elements[i].chart;
        const std::size_t n = 6 * (base.size() - 1);
        out << "element " << i << " " << n << "\n";
        for (int s = 1; s <= 6; ++s) {
            const Similarity c = geom::compose(chart, rc.face_chart(s));
            for (std::size_t k = 0; k + 1 < base.size(); ++k) {
                const Vec2 p = c(base[k]);
                std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
                out << buf;
            }
        }
    }
}

} // namespace snowdg::mesh
