// Batch CLI: phantom generation, registration, strain analysis, and metric
// evaluation for paired lobe models.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include "lungreg/analysis.hpp"
#include "lungreg/io.hpp"
#include "lungreg/phantom.hpp"
#include "lungreg/registration.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <future>
#include <iostream>

namespace fs = std::filesystem;
using namespace lungreg;

namespace {

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    fn(out);
}

// displacement CSV shared by register (writer) and analyze (reader)
void write_displacement_csv(std::ostream& os, const RegistrationResult& r) {
    os << "kind,index,ux,uy,uz\n";
    auto rows = [&](const char* kind, const std::vector<Vec3>& u) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            os << kind << ',' << i;
            for (int k = 0; k < 3; ++k) os << ',' << format_double(u[i][k]);
            os << '\n';
        }
    };
    rows("surface", r.surface_displacement);
    rows("tet", r.tet_displacement);
    rows("centerline", r.centerline_displacement);
}

struct RegisterOptions {
    std::vector<std::string> cases;
    std::string config_path;
    std::string out_dir;
    std::string ablation;
    std::string steps = "full";
    int jobs = 1;
};

RegistrationConfig effective_config(const RegisterOptions& opt,
                                    const nlohmann::json& overrides) {
    RegistrationConfig cfg;
    if (!opt.config_path.empty()) cfg = io::load_config(opt.config_path);
    if (!overrides.empty()) cfg = io::config_from_json(overrides, "<manifest overrides>", cfg);
    if (opt.ablation == "lsm") cfg.alpha = 0.0;  // surface-only baseline
    else if (!opt.ablation.empty())
        throw ConfigError("unknown ablation \"" + opt.ablation + "\" (expected: lsm)");
    if (opt.steps == "affine") cfg.run_pwa = cfg.run_local = false;
    else if (opt.steps == "pwa") cfg.run_local = false;
    else if (opt.steps != "full")
        throw ConfigError("unknown --steps value \"" + opt.steps +
                          "\" (expected: affine, pwa, full)");
    return cfg;
}

void run_register_case(const fs::path& case_path, const RegisterOptions& opt) {
    io::LoadedCase lc = io::load_case(case_path);
    RegistrationConfig cfg = effective_config(opt, lc.config_overrides);
    fs::path out = fs::path(opt.out_dir) / lc.id;
    fs::create_directories(out);
    io::save_config(out / "config_used.json", cfg);

    std::vector<std::pair<std::string, MetricReport>> metric_rows;
    std::vector<std::pair<std::string, StepTrace>> trace_rows;
    for (const auto& lobe : lc.lobes) {
        RegistrationResult r =
            register_lobe(lobe.pair.inflated, lobe.pair.deflated, cfg,
                          lobe.pair.surface_landmarks, lobe.pair.bronchus_landmarks);
        io::save_surface(out / (lobe.label + "_deformed_surface.txt"), r.deformed.surface);
        io::save_tet_mesh(out / (lobe.label + "_deformed_tet.txt"), r.deformed.tet_mesh);
        io::save_centerline(out / (lobe.label + "_deformed_centerline.json"),
                            r.deformed.centerline);
        write_file(out / (lobe.label + "_displacement.csv"),
                   [&](std::ostream& os) { write_displacement_csv(os, r); });
        metric_rows.emplace_back(lobe.label, r.metrics);
        for (const auto& t : r.traces) {
            trace_rows.emplace_back(lobe.label, t);
            for (const auto& w : t.warnings)
                std::cerr << lc.id << "/" << lobe.label << ": warning: " << w << "\n";
        }
    }
    write_file(out / "metrics.csv",
               [&](std::ostream& os) { io::write_metrics_csv(os, metric_rows); });
    write_file(out / "trace.csv",
               [&](std::ostream& os) { io::write_trace_csv(os, trace_rows); });
    std::cout << lc.id << ": wrote " << (out / "metrics.csv").string() << "\n";
}

// loads a registered (deformed) model with the same topology as `like`
LobeModel load_deformed(const fs::path& dir, const std::string& label,
                        const LobeModel& like) {
    LobeModel m = like;
    fs::path surf = dir / (label + "_deformed_surface.txt");
    if (!fs::exists(surf))
        throw IoError("missing registration artifact " + surf.string() +
                      " (run `register` first)");
    m.surface = io::load_surface(surf);
    m.tet_mesh = io::load_tet_mesh(dir / (label + "_deformed_tet.txt"));
    m.centerline = io::load_centerline(dir / (label + "_deformed_centerline.json"));
    if (m.surface.vertices.size() != like.surface.vertices.size() ||
        m.centerline.nodes.size() != like.centerline.nodes.size())
        throw IoError("registration artifacts for \"" + label +
                      "\" do not match the case topology");
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-based lobe registration and strain analysis"};
    app.require_subcommand(1);

    // --- phantom ---
    auto* cmd_phantom = app.add_subcommand("phantom", "generate a synthetic case");
    std::string ph_spec, ph_out = "phantom_case", ph_case_id = "phantom";
    std::optional<std::uint64_t> ph_seed;
    std::optional<double> ph_prune;
    int ph_lobes = 1;
    cmd_phantom->add_option("--spec", ph_spec, "phantom spec JSON (defaults if omitted)");
    cmd_phantom->add_option("--out", ph_out, "output directory");
    cmd_phantom->add_option("--case-id", ph_case_id, "case identifier");
    cmd_phantom->add_option("--seed", ph_seed, "override the spec seed");
    cmd_phantom->add_option("--prune", ph_prune, "override the terminal prune fraction");
    cmd_phantom->add_option("--lobes", ph_lobes, "number of lobes (1 or 2)")
        ->check(CLI::Range(1, 2));

    // --- register ---
    auto* cmd_register = app.add_subcommand("register", "register case lobes");
    RegisterOptions reg;
    cmd_register->add_option("--case", reg.cases, "case manifest path(s)")->required();
    cmd_register->add_option("--config", reg.config_path, "registration config JSON");
    cmd_register->add_option("--out", reg.out_dir, "output directory")->required();
    cmd_register->add_option("--ablation", reg.ablation, "baseline variant (lsm)");
    cmd_register->add_option("--steps", reg.steps, "pipeline truncation: affine, pwa, full");
    cmd_register->add_option("--jobs", reg.jobs, "parallel cases")->check(CLI::Range(1, 64));

    // --- analyze ---
    auto* cmd_analyze = app.add_subcommand("analyze", "strain analysis of a registration");
    std::string an_case, an_reg, an_out, an_components;
    cmd_analyze->add_option("--case", an_case, "case manifest path")->required();
    cmd_analyze->add_option("--registration", an_reg, "registration output directory")
        ->required();
    cmd_analyze->add_option("--out", an_out, "output directory")->required();
    cmd_analyze->add_option("--components", an_components,
                            "comma-separated field components to export "
                            "(contraction,rotation)");

    // --- evaluate ---
    auto* cmd_evaluate = app.add_subcommand("evaluate", "metrics for a registration");
    std::string ev_case, ev_reg, ev_out;
    cmd_evaluate->add_option("--case", ev_case, "case manifest path")->required();
    cmd_evaluate->add_option("--registration", ev_reg, "registration output directory")
        ->required();
    cmd_evaluate->add_option("--out", ev_out, "metrics CSV path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cmd_phantom) {
            PhantomSpec spec;
            if (!ph_spec.empty()) spec = io::load_phantom_spec(ph_spec);
            if (ph_seed) spec.seed = *ph_seed;
            if (ph_prune) spec.prune_fraction = *ph_prune;
            spec.validate();
            std::vector<std::pair<std::string, PhantomCase>> lobes;
            std::vector<PhantomSpec> specs;
            lobes.emplace_back("upper", generate_case(spec));
            specs.push_back(spec);
            if (ph_lobes == 2) {
                PhantomSpec lower = spec;
                lower.seed = spec.seed + 1;
                lower.rotation_angle_deg = -spec.rotation_angle_deg;
                lobes.emplace_back("lower", generate_case(lower));
                specs.push_back(lower);
            }
            fs::path manifest = io::save_phantom_case(ph_out, ph_case_id, lobes, specs);
            std::cout << "wrote " << manifest.string() << "\n";
        } else if (*cmd_register) {
            if (reg.jobs <= 1 || reg.cases.size() <= 1) {
                for (const auto& c : reg.cases) run_register_case(c, reg);
            } else {
                std::vector<std::future<void>> futs;
                std::size_t next = 0;
                while (next < reg.cases.size()) {
                    while (futs.size() < static_cast<std::size_t>(reg.jobs) &&
                           next < reg.cases.size())
                        futs.push_back(std::async(std::launch::async, run_register_case,
                                                  fs::path(reg.cases[next++]), reg));
                    for (auto& f : futs) f.get();
                    futs.clear();
                }
            }
        } else if (*cmd_analyze) {
            io::LoadedCase lc = io::load_case(an_case);
            fs::path regdir = fs::path(an_reg) / lc.id;
            if (!fs::exists(regdir)) regdir = an_reg;  // allow pointing at the case dir
            fs::path out = an_out;
            fs::create_directories(out);
            std::vector<std::pair<std::string, StrainReport>> summaries;
            for (const auto& lobe : lc.lobes) {
                LobeModel deformed = load_deformed(regdir, lobe.label, lobe.pair.inflated);
                DeformationField field = make_deformation_field(lobe.pair.inflated, deformed);
                StrainReport report = strain_report(lobe.pair.inflated, field);
                summaries.emplace_back(lobe.label, report);
                write_file(out / (lobe.label + "_strain_samples.csv"),
                           [&](std::ostream& os) { io::write_strain_samples_csv(os, report); });
                write_file(out / (lobe.label + "_contraction_plot.csv"), [&](std::ostream& os) {
                    io::write_contraction_plot_csv(os, field);
                });
                write_file(out / (lobe.label + "_field.csv"), [&](std::ostream& os) {
                    export_field_visualization(field, os);
                });
                if (!an_components.empty()) {
                    std::stringstream ss(an_components);
                    std::string comp;
                    while (std::getline(ss, comp, ',')) {
                        io::FieldComponent fc;
                        if (comp == "contraction") fc = io::FieldComponent::Contraction;
                        else if (comp == "rotation") fc = io::FieldComponent::Rotation;
                        else if (comp == "displacement") fc = io::FieldComponent::Displacement;
                        else throw ConfigError("unknown field component \"" + comp + "\"");
                        write_file(out / (lobe.label + "_" + comp + ".csv"),
                                   [&](std::ostream& os) {
                                       io::write_component_csv(os, field, fc);
                                   });
                    }
                }
            }
            write_file(out / "strain_summary.csv", [&](std::ostream& os) {
                io::write_strain_summary_csv(os, summaries);
            });
            std::cout << lc.id << ": wrote " << (out / "strain_summary.csv").string() << "\n";
        } else if (*cmd_evaluate) {
            io::LoadedCase lc = io::load_case(ev_case);
            fs::path regdir = fs::path(ev_reg) / lc.id;
            if (!fs::exists(regdir)) regdir = ev_reg;
            std::vector<std::pair<std::string, MetricReport>> rows;
            for (const auto& lobe : lc.lobes) {
                LobeModel deformed = load_deformed(regdir, lobe.label, lobe.pair.inflated);
                std::vector<Vec3> ds, ts, db, tb;
                for (const auto& lm : lobe.pair.surface_landmarks) {
                    ds.push_back(deformed.surface.vertices[lm.index]);
                    ts.push_back(lm.deflated);
                }
                for (const auto& lm : lobe.pair.bronchus_landmarks) {
                    db.push_back(deformed.centerline.nodes[lm.index].position);
                    tb.push_back(lm.deflated);
                }
                rows.emplace_back(lobe.label,
                                  compute_metric_report(
                                      deformed.surface, deformed.centerline,
                                      lobe.pair.deflated.surface,
                                      lobe.pair.deflated.centerline, ds, ts, db, tb));
            }
            if (ev_out.empty()) {
                io::write_metrics_csv(std::cout, rows);
            } else {
                write_file(ev_out, [&](std::ostream& os) { io::write_metrics_csv(os, rows); });
                std::cout << lc.id << ": wrote " << ev_out << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
