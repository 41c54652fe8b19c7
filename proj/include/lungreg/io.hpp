#pragma once

// Text file formats and case plumbing: indexed triangle surfaces, indexed tet
// meshes, centerline JSON trees, landmark files, registration config JSON,
// case manifests, and the CSV writers used by the batch CLI. All floats are
// serialized at 17 significant digits so load(save(x)) == x bit-for-bit.

#include "lungreg/analysis.hpp"
#include "lungreg/geometry.hpp"
#include "lungreg/metrics.hpp"
#include "lungreg/phantom.hpp"
#include "lungreg/registration.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace lungreg::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace detail {

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

inline json parse_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline const json& require(const json& j, const char* key, const fs::path& ctx) {
    if (!j.contains(key))
        throw IoError(ctx.string() + ": missing field \"" + key + "\"");
    return j.at(key);
}

inline Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw IoError("expected a 3-element array for a point");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Triangle surface: line-oriented text, `v x y z` and 1-based `f i j k`.

inline std::string surface_to_string(const TriangleSurface& s) {
    std::string out;
    for (const auto& v : s.vertices)
        out += "v " + format_double(v.x()) + ' ' + format_double(v.y()) + ' ' +
               format_double(v.z()) + '\n';
    for (const auto& t : s.triangles)
        out += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' +
               std::to_string(t[2] + 1) + '\n';
    return out;
}

inline TriangleSurface surface_from_string(const std::string& text,
                                           const std::string& ctx = "<surface>") {
    TriangleSurface s;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x() >> p.y() >> p.z()))
                throw IoError(ctx + ":" + std::to_string(lineno) + ": malformed vertex line");
            s.vertices.push_back(p);
        } else if (tag == "f") {
            std::array<int, 3> t{};
            if (!(ls >> t[0] >> t[1] >> t[2]))
                throw IoError(ctx + ":" + std::to_string(lineno) + ": malformed face line");
            for (int& i : t) --i;
            s.triangles.push_back(t);
        } else {
            throw IoError(ctx + ":" + std::to_string(lineno) + ": unknown tag \"" + tag +
                          "\"");
        }
    }
    update_normals(s);
    return s;
}

inline void save_surface(const fs::path& path, const TriangleSurface& s) {
    detail::write_text(path, surface_to_string(s));
}

inline TriangleSurface load_surface(const fs::path& path) {
    auto s = surface_from_string(detail::read_text(path), path.string());
    try {
        validate_surface(s);
    } catch (const GeometryError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Tet mesh: `v x y z` and 1-based `t a b c d`.

inline std::string tet_mesh_to_string(const TetrahedralMesh& m) {
    std::string out;
    for (const auto& v : m.vertices)
        out += "v " + format_double(v.x()) + ' ' + format_double(v.y()) + ' ' +
               format_double(v.z()) + '\n';
    for (const auto& t : m.tets)
        out += "t " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' +
               std::to_string(t[2] + 1) + ' ' + std::to_string(t[3] + 1) + '\n';
    return out;
}

inline TetrahedralMesh tet_mesh_from_string(const std::string& text,
                                            const std::string& ctx = "<tetmesh>") {
    TetrahedralMesh m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x() >> p.y() >> p.z()))
                throw IoError(ctx + ":" + std::to_string(lineno) + ": malformed vertex line");
            m.vertices.push_back(p);
        } else if (tag == "t") {
            std::array<int, 4> t{};
            if (!(ls >> t[0] >> t[1] >> t[2] >> t[3]))
                throw IoError(ctx + ":" + std::to_string(lineno) + ": malformed tet line");
            for (int& i : t) --i;
            m.tets.push_back(t);
        } else {
            throw IoError(ctx + ":" + std::to_string(lineno) + ": unknown tag \"" + tag +
                          "\"");
        }
    }
    return m;
}

inline void save_tet_mesh(const fs::path& path, const TetrahedralMesh& m) {
    detail::write_text(path, tet_mesh_to_string(m));
}

inline TetrahedralMesh load_tet_mesh(const fs::path& path) {
    return tet_mesh_from_string(detail::read_text(path), path.string());
}

// ---------------------------------------------------------------------------
// Centerline: JSON tree with node kinds and parent indices.

inline const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Root: return "root";
        case NodeKind::Junction: return "junction";
        case NodeKind::Internal: return "internal";
        case NodeKind::Terminal: return "terminal";
    }
    throw IoError("unknown node kind");
}

inline NodeKind node_kind_from_name(const std::string& s) {
    if (s == "root") return NodeKind::Root;
    if (s == "junction") return NodeKind::Junction;
    if (s == "internal") return NodeKind::Internal;
    if (s == "terminal") return NodeKind::Terminal;
    throw IoError("unknown node kind \"" + s + "\"");
}

inline json centerline_to_json(const CenterlineTree& c) {
    json nodes = json::array();
    for (const auto& n : c.nodes)
        nodes.push_back({{"position", detail::vec3_to_json(n.position)},
                         {"kind", node_kind_name(n.kind)},
                         {"parent", n.parent}});
    return {{"nodes", nodes}};
}

inline CenterlineTree centerline_from_json(const json& j, const fs::path& ctx) {
    CenterlineTree c;
    for (const auto& nj : detail::require(j, "nodes", ctx)) {
        CenterlineNode n;
        n.position = detail::vec3_from_json(detail::require(nj, "position", ctx));
        n.kind = node_kind_from_name(detail::require(nj, "kind", ctx).get<std::string>());
        n.parent = detail::require(nj, "parent", ctx).get<int>();
        c.nodes.push_back(n);
    }
    try {
        validate_centerline(c);
    } catch (const GeometryError& e) {
        throw IoError(ctx.string() + ": " + e.what());
    }
    return c;
}

inline void save_centerline(const fs::path& path, const CenterlineTree& c) {
    detail::write_text(path, centerline_to_json(c).dump(2) + "\n");
}

inline CenterlineTree load_centerline(const fs::path& path) {
    return centerline_from_json(detail::parse_json(path), path);
}

// ---------------------------------------------------------------------------
// Landmarks: paired indices + positions.

inline json landmarks_to_json(const std::vector<Landmark>& lms) {
    json arr = json::array();
    for (const auto& lm : lms)
        arr.push_back({{"on_surface", lm.on_surface},
                       {"index", lm.index},
                       {"inflated", detail::vec3_to_json(lm.inflated)},
                       {"deflated", detail::vec3_to_json(lm.deflated)}});
    return arr;
}

inline std::vector<Landmark> landmarks_from_json(const json& j, const fs::path& ctx) {
    std::vector<Landmark> out;
    for (const auto& lj : j) {
        Landmark lm;
        lm.on_surface = detail::require(lj, "on_surface", ctx).get<bool>();
        lm.index = detail::require(lj, "index", ctx).get<int>();
        lm.inflated = detail::vec3_from_json(detail::require(lj, "inflated", ctx));
        lm.deflated = detail::vec3_from_json(detail::require(lj, "deflated", ctx));
        out.push_back(lm);
    }
    return out;
}

inline void save_landmarks(const fs::path& path, const std::vector<Landmark>& lms) {
    detail::write_text(path, landmarks_to_json(lms).dump(2) + "\n");
}

inline std::vector<Landmark> load_landmarks(const fs::path& path) {
    return landmarks_from_json(detail::parse_json(path), path);
}

// ---------------------------------------------------------------------------
// Registration config JSON. Defaults: alpha 2, beta 2, gamma 1, patience 20,
// max_iters 1000, grid_cells [4,4,4]. Unknown keys are rejected.

inline json config_to_json(const RegistrationConfig& c) {
    return {{"alpha", c.alpha},
            {"beta", c.beta},
            {"gamma", c.gamma},
            {"patience", c.patience},
            {"max_iters", c.max_iters},
            {"improvement_eps", c.improvement_eps},
            {"step_cap_factor", c.step_cap_factor},
            {"min_step", c.min_step},
            {"grid_cells", {c.grid_cells[0], c.grid_cells[1], c.grid_cells[2]}},
            {"grid_margin", c.grid_margin},
            {"run_affine", c.run_affine},
            {"run_pwa", c.run_pwa},
            {"run_local", c.run_local},
            {"regularize_model_vertices", c.regularize_model_vertices}};
}

inline RegistrationConfig config_from_json(const json& j, const fs::path& ctx,
                                           RegistrationConfig base = {}) {
    RegistrationConfig c = base;
    for (const auto& [key, val] : j.items()) {
        if (key == "alpha") c.alpha = val.get<double>();
        else if (key == "beta") c.beta = val.get<double>();
        else if (key == "gamma") c.gamma = val.get<double>();
        else if (key == "patience") c.patience = val.get<int>();
        else if (key == "max_iters") c.max_iters = val.get<int>();
        else if (key == "improvement_eps") c.improvement_eps = val.get<double>();
        else if (key == "step_cap_factor") c.step_cap_factor = val.get<double>();
        else if (key == "min_step") c.min_step = val.get<double>();
        else if (key == "grid_cells") {
            if (!val.is_array() || val.size() != 3)
                throw IoError(ctx.string() + ": grid_cells must be a 3-element array");
            for (int i = 0; i < 3; ++i) c.grid_cells[i] = val[i].get<int>();
        } else if (key == "grid_margin") c.grid_margin = val.get<double>();
        else if (key == "run_affine") c.run_affine = val.get<bool>();
        else if (key == "run_pwa") c.run_pwa = val.get<bool>();
        else if (key == "run_local") c.run_local = val.get<bool>();
        else if (key == "regularize_model_vertices")
            c.regularize_model_vertices = val.get<bool>();
        else throw IoError(ctx.string() + ": unknown config key \"" + key + "\"");
    }
    c.validate();
    return c;
}

inline void save_config(const fs::path& path, const RegistrationConfig& c) {
    detail::write_text(path, config_to_json(c).dump(2) + "\n");
}

inline RegistrationConfig load_config(const fs::path& path) {
    return config_from_json(detail::parse_json(path), path);
}

// ---------------------------------------------------------------------------
// Phantom spec JSON.

inline json phantom_spec_to_json(const PhantomSpec& s) {
    return {{"seed", s.seed},
            {"half_axes", detail::vec3_to_json(s.half_axes)},
            {"target_triangles", s.target_triangles},
            {"branch_depth", s.branch_depth},
            {"fan_out", s.fan_out},
            {"bronchus_strain", s.bronchus_strain},
            {"parenchyma_strain", s.parenchyma_strain},
            {"rotation_axis", detail::vec3_to_json(s.rotation_axis)},
            {"rotation_angle_deg", s.rotation_angle_deg},
            {"prune_fraction", s.prune_fraction},
            {"noise_amplitude", s.noise_amplitude},
            {"landmark_count", s.landmark_count}};
}

inline PhantomSpec phantom_spec_from_json(const json& j, const fs::path& ctx) {
    PhantomSpec s;
    for (const auto& [key, val] : j.items()) {
        if (key == "seed") s.seed = val.get<std::uint64_t>();
        else if (key == "half_axes") s.half_axes = detail::vec3_from_json(val);
        else if (key == "target_triangles") s.target_triangles = val.get<int>();
        else if (key == "branch_depth") s.branch_depth = val.get<int>();
        else if (key == "fan_out") s.fan_out = val.get<int>();
        else if (key == "bronchus_strain") s.bronchus_strain = val.get<double>();
        else if (key == "parenchyma_strain") s.parenchyma_strain = val.get<double>();
        else if (key == "rotation_axis") s.rotation_axis = detail::vec3_from_json(val);
        else if (key == "rotation_angle_deg") s.rotation_angle_deg = val.get<double>();
        else if (key == "prune_fraction") s.prune_fraction = val.get<double>();
        else if (key == "noise_amplitude") s.noise_amplitude = val.get<double>();
        else if (key == "landmark_count") s.landmark_count = val.get<int>();
        else throw IoError(ctx.string() + ": unknown phantom spec key \"" + key + "\"");
    }
    s.validate();
    return s;
}

inline void save_phantom_spec(const fs::path& path, const PhantomSpec& s) {
    detail::write_text(path, phantom_spec_to_json(s).dump(2) + "\n");
}

inline PhantomSpec load_phantom_spec(const fs::path& path) {
    return phantom_spec_from_json(detail::parse_json(path), path);
}

// ---------------------------------------------------------------------------
// Case manifest.

struct ManifestLobe {
    std::string label;  // "upper" or "lower", unique per case
    std::string inflated_surface, inflated_tet, inflated_centerline;
    std::string deflated_surface, deflated_tet, deflated_centerline;
    std::string surface_landmarks;   // optional
    std::string bronchus_landmarks;  // optional
};

struct CaseManifest {
    std::string case_id;
    std::vector<ManifestLobe> lobes;
    json config_overrides = json::object();
};

inline json manifest_to_json(const CaseManifest& m) {
    json lobes = json::array();
    for (const auto& l : m.lobes) {
        json lj = {{"label", l.label},
                   {"inflated",
                    {{"surface", l.inflated_surface},
                     {"tet_mesh", l.inflated_tet},
                     {"centerline", l.inflated_centerline}}},
                   {"deflated",
                    {{"surface", l.deflated_surface},
                     {"tet_mesh", l.deflated_tet},
                     {"centerline", l.deflated_centerline}}}};
        if (!l.surface_landmarks.empty()) lj["surface_landmarks"] = l.surface_landmarks;
        if (!l.bronchus_landmarks.empty()) lj["bronchus_landmarks"] = l.bronchus_landmarks;
        lobes.push_back(lj);
    }
    json j = {{"case_id", m.case_id}, {"lobes", lobes}};
    if (!m.config_overrides.empty()) j["config_overrides"] = m.config_overrides;
    return j;
}

inline CaseManifest manifest_from_json(const json& j, const fs::path& ctx) {
    CaseManifest m;
    m.case_id = detail::require(j, "case_id", ctx).get<std::string>();
    for (const auto& lj : detail::require(j, "lobes", ctx)) {
        ManifestLobe l;
        l.label = detail::require(lj, "label", ctx).get<std::string>();
        const auto& inf = detail::require(lj, "inflated", ctx);
        const auto& def = detail::require(lj, "deflated", ctx);
        l.inflated_surface = detail::require(inf, "surface", ctx).get<std::string>();
        l.inflated_tet = detail::require(inf, "tet_mesh", ctx).get<std::string>();
        l.inflated_centerline = detail::require(inf, "centerline", ctx).get<std::string>();
        l.deflated_surface = detail::require(def, "surface", ctx).get<std::string>();
        l.deflated_tet = detail::require(def, "tet_mesh", ctx).get<std::string>();
        l.deflated_centerline = detail::require(def, "centerline", ctx).get<std::string>();
        if (lj.contains("surface_landmarks"))
            l.surface_landmarks = lj["surface_landmarks"].get<std::string>();
        if (lj.contains("bronchus_landmarks"))
            l.bronchus_landmarks = lj["bronchus_landmarks"].get<std::string>();
        m.lobes.push_back(l);
    }
    if (j.contains("config_overrides")) m.config_overrides = j["config_overrides"];
    std::vector<std::string> labels;
    for (const auto& l : m.lobes) labels.push_back(l.label);
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
        throw IoError(ctx.string() + ": duplicate lobe label in manifest");
    return m;
}

inline void save_manifest(const fs::path& path, const CaseManifest& m) {
    detail::write_text(path, manifest_to_json(m).dump(2) + "\n");
}

inline CaseManifest load_manifest(const fs::path& path) {
    return manifest_from_json(detail::parse_json(path), path);
}

inline LobeLabel lobe_label_from_string(const std::string& s) {
    if (s == "upper") return LobeLabel::Upper;
    if (s == "lower") return LobeLabel::Lower;
    throw IoError("unknown lobe label \"" + s + "\" (expected \"upper\" or \"lower\")");
}

struct LoadedLobe {
    std::string label;
    LobePair pair;
};

struct LoadedCase {
    std::string id;
    std::vector<LoadedLobe> lobes;
    json config_overrides = json::object();
};

// Loads every model referenced by the manifest (paths relative to the
// manifest's directory) and enforces all geometric invariants.
inline LoadedCase load_case(const fs::path& manifest_path) {
    CaseManifest m = load_manifest(manifest_path);
    fs::path base = manifest_path.parent_path();
    LoadedCase out;
    out.id = m.case_id;
    out.config_overrides = m.config_overrides;
    for (const auto& l : m.lobes) {
        LoadedLobe ll;
        ll.label = l.label;
        LobeLabel label = lobe_label_from_string(l.label);
        auto load_model = [&](const std::string& surf, const std::string& tet,
                              const std::string& cl) {
            LobeModel model;
            model.label = label;
            model.surface = load_surface(base / surf);
            model.tet_mesh = load_tet_mesh(base / tet);
            model.centerline = load_centerline(base / cl);
            try {
                validate_lobe(model);
            } catch (const std::exception& e) {
                throw IoError(manifest_path.string() + ": lobe \"" + l.label +
                              "\": " + e.what());
            }
            return model;
        };
        ll.pair.inflated =
            load_model(l.inflated_surface, l.inflated_tet, l.inflated_centerline);
        ll.pair.deflated =
            load_model(l.deflated_surface, l.deflated_tet, l.deflated_centerline);
        if (!l.surface_landmarks.empty())
            ll.pair.surface_landmarks = load_landmarks(base / l.surface_landmarks);
        if (!l.bronchus_landmarks.empty())
            ll.pair.bronchus_landmarks = load_landmarks(base / l.bronchus_landmarks);
        out.lobes.push_back(std::move(ll));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Phantom case emission: writes all model files, landmarks, ground-truth
// sidecar, and the manifest. Returns the manifest path.

inline fs::path save_phantom_case(const fs::path& dir, const std::string& case_id,
                                  const std::vector<std::pair<std::string, PhantomCase>>&
                                      lobes,
                                  const std::vector<PhantomSpec>& specs) {
    fs::create_directories(dir);
    CaseManifest m;
    m.case_id = case_id;
    json truth = json::object();
    for (std::size_t i = 0; i < lobes.size(); ++i) {
        const auto& [label, pc] = lobes[i];
        ManifestLobe l;
        l.label = label;
        auto name = [&](const char* what) { return label + "_" + what; };
        l.inflated_surface = name("inflated_surface.txt");
        l.inflated_tet = name("inflated_tet.txt");
        l.inflated_centerline = name("inflated_centerline.json");
        l.deflated_surface = name("deflated_surface.txt");
        l.deflated_tet = name("deflated_tet.txt");
        l.deflated_centerline = name("deflated_centerline.json");
        l.surface_landmarks = name("surface_landmarks.json");
        l.bronchus_landmarks = name("bronchus_landmarks.json");
        save_surface(dir / l.inflated_surface, pc.inflated.surface);
        save_tet_mesh(dir / l.inflated_tet, pc.inflated.tet_mesh);
        save_centerline(dir / l.inflated_centerline, pc.inflated.centerline);
        save_surface(dir / l.deflated_surface, pc.deflated.surface);
        save_tet_mesh(dir / l.deflated_tet, pc.deflated.tet_mesh);
        save_centerline(dir / l.deflated_centerline, pc.deflated.centerline);
        save_landmarks(dir / l.surface_landmarks, pc.surface_landmarks);
        save_landmarks(dir / l.bronchus_landmarks, pc.bronchus_landmarks);
        m.lobes.push_back(l);

        // ground truth: noise-free deformed models sharing inflated topology
        LobeModel truth_model = pc.true_model();
        save_surface(dir / name("true_surface.txt"), truth_model.surface);
        save_tet_mesh(dir / name("true_tet.txt"), truth_model.tet_mesh);
        save_centerline(dir / name("true_centerline.json"), truth_model.centerline);
        json tl = {{"spec", phantom_spec_to_json(specs.at(i))},
                   {"true_bronchus_strain", pc.true_bronchus_strain},
                   {"true_parenchyma_strain", pc.true_parenchyma_strain},
                   {"region_boundary_radius", pc.region_boundary_radius},
                   {"hilum", detail::vec3_to_json(pc.hilum)},
                   {"true_surface", name("true_surface.txt")},
                   {"true_tet", name("true_tet.txt")},
                   {"true_centerline", name("true_centerline.json")}};
        truth[label] = tl;
    }
    detail::write_text(dir / "ground_truth.json", truth.dump(2) + "\n");
    fs::path manifest = dir / "case.json";
    save_manifest(manifest, m);
    return manifest;
}

// ---------------------------------------------------------------------------
// CSV writers.

inline void write_metrics_csv(std::ostream& os,
                              const std::vector<std::pair<std::string, MetricReport>>& rows) {
    os << "lobe,md,hd,cd_mean,cd_max,tre_surface,tre_bronchus\n";
    for (const auto& [label, r] : rows) {
        os << label << ',' << format_double(r.mean_distance) << ','
           << format_double(r.hausdorff) << ',' << format_double(r.centerline_mean) << ','
           << format_double(r.centerline_max) << ','
           << format_double(summarize(r.tre_surface).mean) << ','
           << format_double(summarize(r.tre_bronchus).mean) << '\n';
    }
}

inline void write_trace_csv(std::ostream& os,
                            const std::vector<std::pair<std::string, StepTrace>>& traces) {
    os << "lobe,step,iteration,best_objective\n";
    for (const auto& [label, t] : traces)
        for (std::size_t i = 0; i < t.best_objective.size(); ++i)
            os << label << ',' << t.name << ',' << i << ','
               << format_double(t.best_objective[i]) << '\n';
}

// Per-case region summary: one row per lobe, bronchus and parenchyma columns.
inline void write_strain_summary_csv(
    std::ostream& os, const std::vector<std::pair<std::string, StrainReport>>& rows) {
    os << "lobe,bronchus_mean,bronchus_sd,parenchyma_mean,parenchyma_sd\n";
    for (const auto& [label, r] : rows)
        os << label << ',' << format_double(r.bronchus.mean) << ','
           << format_double(r.bronchus.sd) << ',' << format_double(r.parenchyma.mean) << ','
           << format_double(r.parenchyma.sd) << '\n';
}

inline void write_strain_samples_csv(std::ostream& os, const StrainReport& r) {
    os << "region,branch,strain\n";
    for (double s : r.bronchus_samples) os << "bronchus,-1," << format_double(s) << '\n';
    for (std::size_t i = 0; i < r.parenchyma_samples.size(); ++i)
        os << "parenchyma," << r.branches[i].terminal << ','
           << format_double(r.parenchyma_samples[i]) << '\n';
}

// 2D plot data: deflated radial distance vs contraction magnitude for every
// sampled point of the field.
inline void write_contraction_plot_csv(std::ostream& os, const DeformationField& field) {
    os << "kind,index,reference_distance,contraction_mag\n";
    auto row = [&](const char* kind, std::size_t i, const Vec3& v, const Vec3& u) {
        if (v.norm() <= 1e-6) return;
        auto d = decompose_displacement(v, u);
        os << kind << ',' << i << ',' << format_double((v + u).norm()) << ','
           << format_double(d.contraction.norm()) << '\n';
    };
    for (std::size_t i = 0; i < field.surface_v.size(); ++i)
        row("surface", i, field.surface_v[i], field.surface_u[i]);
    for (std::size_t i = 0; i < field.centerline_v.size(); ++i)
        row("centerline", i, field.centerline_v[i], field.centerline_u[i]);
}

// Single-component field export (contraction or rotation); per-record sums of
// the two component files equal the full displacement export.
enum class FieldComponent { Displacement, Contraction, Rotation };

inline void write_component_csv(std::ostream& os, const DeformationField& field,
                                FieldComponent comp) {
    os << "kind,index,ox,oy,oz,vx,vy,vz\n";
    auto row = [&](const char* kind, std::size_t i, const Vec3& v, const Vec3& u) {
        Vec3 val = u;
        if (comp != FieldComponent::Displacement) {
            DisplacementDecomposition d;
            if (v.norm() > 1e-6) d = decompose_displacement(v, u);
            else d.rotation = u;
            val = comp == FieldComponent::Contraction ? d.contraction : d.rotation;
        }
        os << kind << ',' << i;
        for (int k = 0; k < 3; ++k) os << ',' << format_double(v[k]);
        for (int k = 0; k < 3; ++k) os << ',' << format_double(val[k]);
        os << '\n';
    };
    for (std::size_t i = 0; i < field.surface_v.size(); ++i)
        row("surface", i, field.surface_v[i], field.surface_u[i]);
    for (std::size_t i = 0; i < field.centerline_v.size(); ++i)
        row("centerline", i, field.centerline_v[i], field.centerline_u[i]);
}

}  // namespace lungreg::io
