#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>
#include <string>

// End-to-end checks of the batch executable via std::system. The binary path
// is injected at compile time by the build.
#ifndef LUNGREG_CLI_PATH
#error "LUNGREG_CLI_PATH must be defined"
#endif

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("lungreg_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& log) {
    std::string cmd = std::string(LUNGREG_CLI_PATH) + " " + args + " >" + log.string() +
                      " 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// generates a quick case and returns the manifest path
fs::path make_case(const TempDir& tmp, const std::string& id, const std::string& extra = "") {
    fs::path dir = tmp.path / id;
    fs::path log = tmp.path / (id + "_phantom.log");
    // small spec for speed
    fs::path spec = tmp.path / (id + "_spec.json");
    std::ofstream(spec) << R"({"target_triangles": 150, "branch_depth": 3})";
    int rc = run("phantom --spec " + spec.string() + " --out " + dir.string() +
                     " --case-id " + id + " " + extra,
                 log);
    REQUIRE(rc == 0);
    return dir / "case.json";
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    TempDir tmp;
    CHECK(run("", tmp.path / "a.log") == 2);                      // missing subcommand
    CHECK(run("registerx", tmp.path / "b.log") == 2);             // unknown subcommand
    CHECK(run("register --out x", tmp.path / "c.log") == 2);      // missing --case
    CHECK(run("phantom --lobes 3", tmp.path / "d.log") == 2);     // out-of-range option
    CHECK(run("--help", tmp.path / "e.log") == 0);                // help is success
    CHECK(slurp(tmp.path / "e.log").find("phantom") != std::string::npos);
}

TEST_CASE("runtime failures exit with code 1 and a diagnostic") {
    TempDir tmp;
    fs::path log = tmp.path / "run.log";
    CHECK(run("register --case /nonexistent/case.json --out " + (tmp.path / "o").string(),
              log) == 1);
    CHECK(slurp(log).find("error:") != std::string::npos);

    // analyze before register: actionable message
    auto manifest = make_case(tmp, "pre");
    CHECK(run("analyze --case " + manifest.string() + " --registration " +
                  (tmp.path / "none").string() + " --out " + (tmp.path / "a").string(),
              log) == 1);
    CHECK(slurp(log).find("run `register` first") != std::string::npos);
}

TEST_CASE("phantom generation is deterministic under a fixed seed") {
    TempDir tmp;
    auto m1 = make_case(tmp, "s7a", "--seed 7");
    auto m2 = make_case(tmp, "s7b", "--seed 7");
    auto m3 = make_case(tmp, "s8", "--seed 8");
    auto s1 = slurp(m1.parent_path() / "upper_inflated_surface.txt");
    auto s2 = slurp(m2.parent_path() / "upper_inflated_surface.txt");
    CHECK(s1 == s2);
    // the seed drives the centerline jitter, so different seeds diverge there
    auto c1 = slurp(m1.parent_path() / "upper_inflated_centerline.json");
    auto c2 = slurp(m2.parent_path() / "upper_inflated_centerline.json");
    auto c3 = slurp(m3.parent_path() / "upper_inflated_centerline.json");
    CHECK(c1 == c2);
    CHECK(c1 != c3);
}

TEST_CASE("prune override reduces the deflated centerline") {
    TempDir tmp;
    auto m_full = make_case(tmp, "full", "--seed 4");
    auto m_pruned = make_case(tmp, "pruned", "--seed 4 --prune 0.4");
    auto full = slurp(m_full.parent_path() / "upper_deflated_centerline.json");
    auto pruned = slurp(m_pruned.parent_path() / "upper_deflated_centerline.json");
    auto count = [](const std::string& s) {
        std::size_t n = 0, pos = 0;
        while ((pos = s.find("\"kind\"", pos)) != std::string::npos) {
            ++n;
            ++pos;
        }
        return n;
    };
    CHECK(count(pruned) < count(full));
}

TEST_CASE("full pipeline: phantom, register, evaluate, analyze") {
    TempDir tmp;
    auto manifest = make_case(tmp, "pipe", "--seed 2");
    fs::path reg = tmp.path / "reg";
    fs::path log = tmp.path / "log.txt";

    REQUIRE(run("register --case " + manifest.string() + " --out " + reg.string(), log) == 0);
    CHECK(fs::exists(reg / "pipe" / "upper_deformed_surface.txt"));
    CHECK(fs::exists(reg / "pipe" / "metrics.csv"));
    CHECK(fs::exists(reg / "pipe" / "trace.csv"));
    CHECK(fs::exists(reg / "pipe" / "config_used.json"));
    CHECK(fs::exists(reg / "pipe" / "upper_displacement.csv"));

    // evaluate to stdout
    REQUIRE(run("evaluate --case " + manifest.string() + " --registration " + reg.string(),
                log) == 0);
    auto out = slurp(log);
    CHECK(out.find("lobe,md,hd,cd_mean,cd_max,tre_surface,tre_bronchus") !=
          std::string::npos);
    CHECK(out.find("upper,") != std::string::npos);

    // evaluate to a file
    fs::path metrics = tmp.path / "metrics.csv";
    REQUIRE(run("evaluate --case " + manifest.string() + " --registration " + reg.string() +
                    " --out " + metrics.string(),
                log) == 0);
    CHECK(fs::exists(metrics));

    // analyze with component export
    fs::path ana = tmp.path / "ana";
    REQUIRE(run("analyze --case " + manifest.string() + " --registration " + reg.string() +
                    " --out " + ana.string() + " --components contraction,rotation",
                log) == 0);
    CHECK(fs::exists(ana / "strain_summary.csv"));
    CHECK(fs::exists(ana / "upper_strain_samples.csv"));
    CHECK(fs::exists(ana / "upper_contraction_plot.csv"));
    CHECK(fs::exists(ana / "upper_field.csv"));
    CHECK(fs::exists(ana / "upper_contraction.csv"));
    CHECK(fs::exists(ana / "upper_rotation.csv"));
    CHECK(slurp(ana / "strain_summary.csv").rfind("lobe,bronchus_mean", 0) == 0);

    SUBCASE("unknown component is a runtime error") {
        CHECK(run("analyze --case " + manifest.string() + " --registration " + reg.string() +
                      " --out " + (tmp.path / "ana2").string() + " --components shear",
                  log) == 1);
    }
}

TEST_CASE("two-lobe cases and truncated pipelines register") {
    TempDir tmp;
    auto manifest = make_case(tmp, "duo", "--seed 3 --lobes 2");
    fs::path reg = tmp.path / "reg";
    fs::path log = tmp.path / "log.txt";
    REQUIRE(run("register --case " + manifest.string() + " --out " + reg.string() +
                    " --steps affine",
                log) == 0);
    CHECK(fs::exists(reg / "duo" / "upper_deformed_surface.txt"));
    CHECK(fs::exists(reg / "duo" / "lower_deformed_surface.txt"));
    // affine-only run records a single step trace per lobe
    auto trace = slurp(reg / "duo" / "trace.csv");
    CHECK(trace.find("affine") != std::string::npos);
    CHECK(trace.find("pwa") == std::string::npos);

    SUBCASE("unknown ablation or steps value fails") {
        CHECK(run("register --case " + manifest.string() + " --out " + reg.string() +
                      " --ablation warp",
                  log) == 1);
        CHECK(run("register --case " + manifest.string() + " --out " + reg.string() +
                      " --steps half",
                  log) == 1);
    }
}
