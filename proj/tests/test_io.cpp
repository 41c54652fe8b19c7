#include "lungreg/io.hpp"
#include "lungreg/phantom.hpp"

#include <doctest.h>

#include <filesystem>
#include <unistd.h>

using namespace lungreg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("lungreg_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

PhantomCase small_case(std::uint64_t seed) {
    PhantomSpec s;
    s.seed = seed;
    s.target_triangles = 150;
    s.branch_depth = 3;
    return generate_case(s);
}

}  // namespace

TEST_CASE("surface text round trip is bit exact") {
    auto pc = small_case(1);
    const auto& s = pc.inflated.surface;
    auto text = io::surface_to_string(s);
    auto s2 = io::surface_from_string(text);
    REQUIRE(s2.vertices.size() == s.vertices.size());
    REQUIRE(s2.triangles == s.triangles);
    for (std::size_t i = 0; i < s.vertices.size(); ++i)
        CHECK(s2.vertices[i] == s.vertices[i]);  // bitwise, 17 significant digits
    // serialization is stable
    CHECK(io::surface_to_string(s2) == text);

    SUBCASE("comments and blank lines are ignored") {
        auto s3 = io::surface_from_string("# header\n\n" + text);
        CHECK(s3.vertices.size() == s.vertices.size());
    }
    SUBCASE("malformed lines carry the line number") {
        try {
            io::surface_from_string("v 1 2 3\nf 1 oops 2\n", "bad.txt");
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("bad.txt:2") != std::string::npos);
        }
        CHECK_THROWS_AS(io::surface_from_string("q 1 2 3\n"), IoError);
    }
}

TEST_CASE("tet mesh text round trip is bit exact") {
    auto pc = small_case(2);
    const auto& m = pc.inflated.tet_mesh;
    auto m2 = io::tet_mesh_from_string(io::tet_mesh_to_string(m));
    REQUIRE(m2.tets == m.tets);
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
        CHECK(m2.vertices[i] == m.vertices[i]);
}

TEST_CASE("centerline JSON round trip preserves kinds, parents and positions") {
    auto pc = small_case(3);
    const auto& c = pc.inflated.centerline;
    TempDir tmp;
    auto path = tmp.path / "cl.json";
    io::save_centerline(path, c);
    auto c2 = io::load_centerline(path);
    REQUIRE(c2.nodes.size() == c.nodes.size());
    for (std::size_t i = 0; i < c.nodes.size(); ++i) {
        CHECK(c2.nodes[i].position == c.nodes[i].position);
        CHECK(c2.nodes[i].kind == c.nodes[i].kind);
        CHECK(c2.nodes[i].parent == c.nodes[i].parent);
    }

    SUBCASE("missing field names the file") {
        io::detail::write_text(path, R"({"nodes": [{"kind": "root", "parent": -1}]})");
        try {
            io::load_centerline(path);
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("position") != std::string::npos);
        }
    }
    SUBCASE("structurally invalid tree is rejected on load") {
        auto broken = c;
        broken.nodes[1].parent = -1;  // second root
        auto j = io::centerline_to_json(broken);
        io::detail::write_text(path, j.dump());
        CHECK_THROWS_AS(io::load_centerline(path), IoError);
    }
}

TEST_CASE("landmark JSON round trip") {
    auto pc = small_case(4);
    TempDir tmp;
    auto path = tmp.path / "lm.json";
    io::save_landmarks(path, pc.surface_landmarks);
    auto lms = io::load_landmarks(path);
    REQUIRE(lms.size() == pc.surface_landmarks.size());
    for (std::size_t i = 0; i < lms.size(); ++i) {
        CHECK(lms[i].on_surface == pc.surface_landmarks[i].on_surface);
        CHECK(lms[i].index == pc.surface_landmarks[i].index);
        CHECK(lms[i].inflated == pc.surface_landmarks[i].inflated);
        CHECK(lms[i].deflated == pc.surface_landmarks[i].deflated);
    }
}

TEST_CASE("registration config JSON") {
    RegistrationConfig c;
    c.alpha = 3.5;
    c.grid_cells = {5, 4, 3};
    c.run_local = false;
    TempDir tmp;
    auto path = tmp.path / "config.json";
    io::save_config(path, c);
    auto c2 = io::load_config(path);
    CHECK(c2.alpha == c.alpha);
    CHECK(c2.grid_cells == c.grid_cells);
    CHECK(c2.run_local == c.run_local);
    CHECK(c2.beta == c.beta);

    SUBCASE("unknown key is rejected") {
        io::detail::write_text(path, R"({"alpha": 2.0, "alhpa": 1.0})");
        CHECK_THROWS_AS(io::load_config(path), IoError);
    }
    SUBCASE("partial override keeps base defaults") {
        auto c3 = io::config_from_json(nlohmann::json{{"beta", 9.0}}, "inline", c);
        CHECK(c3.beta == 9.0);
        CHECK(c3.alpha == 3.5);
        CHECK(c3.run_local == false);
    }
    SUBCASE("invalid values fail validation on load") {
        io::detail::write_text(path, R"({"alpha": -2.0})");
        CHECK_THROWS_AS(io::load_config(path), ConfigError);
    }
}

TEST_CASE("phantom spec JSON round trip") {
    PhantomSpec s;
    s.seed = 77;
    s.rotation_angle_deg = -12.5;
    s.prune_fraction = 0.3;
    TempDir tmp;
    auto path = tmp.path / "spec.json";
    io::save_phantom_spec(path, s);
    auto s2 = io::load_phantom_spec(path);
    CHECK(s2.seed == s.seed);
    CHECK(s2.rotation_angle_deg == s.rotation_angle_deg);
    CHECK(s2.prune_fraction == s.prune_fraction);
    CHECK(s2.half_axes == s.half_axes);
}

TEST_CASE("phantom case files load back into an identical valid case") {
    auto pc = small_case(5);
    PhantomSpec spec;
    spec.seed = 5;
    spec.target_triangles = 150;
    spec.branch_depth = 3;
    TempDir tmp;
    auto manifest = io::save_phantom_case(tmp.path / "case7", "case7", {{"upper", pc}},
                                          {spec});
    CHECK(fs::exists(tmp.path / "case7" / "ground_truth.json"));

    auto loaded = io::load_case(manifest);
    CHECK(loaded.id == "case7");
    REQUIRE(loaded.lobes.size() == 1);
    const auto& pair = loaded.lobes[0].pair;
    REQUIRE(pair.inflated.surface.vertices.size() == pc.inflated.surface.vertices.size());
    for (std::size_t i = 0; i < pc.inflated.surface.vertices.size(); ++i)
        CHECK(pair.inflated.surface.vertices[i] == pc.inflated.surface.vertices[i]);
    CHECK(pair.deflated.centerline.nodes.size() == pc.deflated.centerline.nodes.size());
    CHECK(pair.surface_landmarks.size() == pc.surface_landmarks.size());
    CHECK(pair.bronchus_landmarks.size() == pc.bronchus_landmarks.size());
}

TEST_CASE("manifest errors") {
    TempDir tmp;
    auto path = tmp.path / "case.json";

    SUBCASE("duplicate lobe label") {
        io::CaseManifest m;
        m.case_id = "x";
        io::ManifestLobe l;
        l.label = "upper";
        l.inflated_surface = l.inflated_tet = l.inflated_centerline = "a";
        l.deflated_surface = l.deflated_tet = l.deflated_centerline = "b";
        m.lobes = {l, l};
        io::save_manifest(path, m);
        CHECK_THROWS_AS(io::load_manifest(path), IoError);
    }
    SUBCASE("unknown lobe label") {
        CHECK_THROWS_AS(io::lobe_label_from_string("middle"), IoError);
    }
    SUBCASE("missing referenced file") {
        io::CaseManifest m;
        m.case_id = "x";
        io::ManifestLobe l;
        l.label = "upper";
        l.inflated_surface = "nope.txt";
        l.inflated_tet = l.inflated_centerline = "nope";
        l.deflated_surface = l.deflated_tet = l.deflated_centerline = "nope";
        m.lobes = {l};
        io::save_manifest(path, m);
        CHECK_THROWS_AS(io::load_case(path), IoError);
    }
    SUBCASE("missing manifest file") {
        CHECK_THROWS_AS(io::load_manifest(tmp.path / "absent.json"), IoError);
    }
}

TEST_CASE("CSV writers emit the documented headers and row counts") {
    auto pc = small_case(6);
    auto field = make_deformation_field(pc.inflated, pc.true_model());
    auto report = strain_report(pc.inflated, field);

    SUBCASE("strain summary") {
        std::ostringstream os;
        io::write_strain_summary_csv(os, {{"upper", report}});
        auto text = os.str();
        CHECK(text.rfind("lobe,bronchus_mean", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    }
    SUBCASE("strain samples") {
        std::ostringstream os;
        io::write_strain_samples_csv(os, report);
        auto text = os.str();
        CHECK(std::count(text.begin(), text.end(), '\n') ==
              1 + static_cast<long>(report.bronchus_samples.size() +
                                    report.parenchyma_samples.size()));
    }
    SUBCASE("component CSVs sum to the displacement CSV") {
        std::ostringstream disp, contr, rot;
        io::write_component_csv(disp, field, io::FieldComponent::Displacement);
        io::write_component_csv(contr, field, io::FieldComponent::Contraction);
        io::write_component_csv(rot, field, io::FieldComponent::Rotation);
        std::istringstream di(disp.str()), ci(contr.str()), ri(rot.str());
        std::string dl, cl, rl;
        std::getline(di, dl);
        std::getline(ci, cl);
        std::getline(ri, rl);
        while (std::getline(di, dl)) {
            REQUIRE(std::getline(ci, cl));
            REQUIRE(std::getline(ri, rl));
            auto split = [](const std::string& s) {
                std::vector<std::string> out;
                std::stringstream ss(s);
                std::string c;
                while (std::getline(ss, c, ',')) out.push_back(c);
                return out;
            };
            auto d = split(dl), c = split(cl), r = split(rl);
            REQUIRE(d.size() == 8);
            for (int k = 5; k < 8; ++k)
                CHECK(std::stod(d[k]) ==
                      doctest::Approx(std::stod(c[k]) + std::stod(r[k])).epsilon(1e-12));
        }
    }
    SUBCASE("metrics CSV") {
        MetricReport r;
        r.mean_distance = 0.5;
        r.tre_surface = {1.0, 3.0};
        std::ostringstream os;
        io::write_metrics_csv(os, {{"upper", r}});
        CHECK(os.str().find("upper,0.5,") != std::string::npos);
        CHECK(os.str().find(",2,") != std::string::npos);  // mean TRE
    }
    SUBCASE("trace CSV") {
        StepTrace t;
        t.name = "affine";
        t.best_objective = {3.0, 2.0, 2.0};
        std::ostringstream os;
        io::write_trace_csv(os, {{"upper", t}});
        auto text = os.str();
        CHECK(std::count(text.begin(), text.end(), '\n') == 4);
        CHECK(text.find("upper,affine,2,2") != std::string::npos);
    }
}
