// Command-line front end: spectrum export, gate compilation, full-model
// gate validation, protocol runs and ratio sweeps.

#include "qrsim/constants.hpp"
#include "qrsim/experiment.hpp"
#include "qrsim/kernels.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace qrsim;

harness::ExperimentConfig load_config(const std::string& path, std::uint64_t seed_override,
                                      bool has_seed) {
    harness::ExperimentConfig cfg =
        path.empty() ? harness::default_config() : harness::load_config_file(path);
    if (has_seed) cfg.sampling.seed = seed_override;
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::string stem_suffix(const std::string& path, const std::string& suffix) {
    const auto dot = path.rfind('.');
    if (dot == std::string::npos) return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

int cmd_spectrum(const std::string& config_path, const std::string& species,
                 const std::string& output) {
    auto cfg = load_config(config_path, 0, false);
    auto sys = harness::build_system(cfg);
    if (species == "a" || species == "both")
        harness::emit_spectrum_csv(sys->site_a.spectrum,
                                   species == "both" ? stem_suffix(output, "_a") : output);
    if (species == "b" || species == "both")
        harness::emit_spectrum_csv(sys->site_b.spectrum,
                                   species == "both" ? stem_suffix(output, "_b") : output);
    std::cout << "spectrum written to " << output << "\n";
    return 0;
}

int cmd_compile(const std::string& config_path, const std::string& schedule_path) {
    auto cfg = load_config(config_path, 0, false);
    auto sys = harness::build_system(cfg);
    const auto& compiler = *sys->compiler;

    std::printf("P = %.6e rad/s, Q = %.6e rad/s, sqrt(QQ) = %.6e rad/s\n", sys->p, sys->q,
                compiler.coupling_scale());
    std::printf("xy margin  = %.6e rad/s (%.4f GHz)\n", compiler.xy_margin(),
                compiler.xy_margin() / constants::ghz(1.0));
    std::printf("xx margin  = %.6e rad/s (%.4f GHz)\n", compiler.xx_margin(),
                compiler.xx_margin() / constants::ghz(1.0));
    std::printf("rot margin = %.6e rad/s (%.4f GHz)\n", compiler.rotation_margin(),
                compiler.rotation_margin() / constants::ghz(1.0));

    const harness::ResolvedProtocol rp =
        harness::resolve_protocol(cfg, compiler.coupling_scale());
    const double probe_c = rp.c_xy > 0.0 ? rp.c_xy : 0.01 * compiler.xy_margin();
    const auto xy = compiler.compile_xy(probe_c / compiler.coupling_scale());
    std::printf("xy gate at C = %.6e rad/s (ratio %.4g):\n", xy.strength, xy.rwa_ratio);
    for (const auto& tone : xy.signal.tones)
        std::printf("  tone: amplitude %+.6e, omega %.6e rad/s (%.4f GHz)\n",
                    tone.amplitude, tone.omega, tone.omega / constants::ghz(1.0));

    if (!schedule_path.empty()) {
        const auto schedule = harness::build_schedule(cfg, *sys);
        write_text(schedule_path, schedule.to_json());
        std::printf("schedule written to %s (total duration %.6e s)\n",
                    schedule_path.c_str(), schedule.total_duration);
    }
    return 0;
}

int cmd_validate(const std::string& config_path, const std::string& gate,
                 const std::string& output) {
    auto cfg = load_config(config_path, 0, false);
    const auto report = harness::validate_gate(cfg, gate.empty() ? cfg.validation.gate : gate);
    std::printf("gate %s: C = %.6e rad/s, margin = %.6e rad/s, ratio = %.4g\n",
                report.gate.c_str(), report.strength, report.margin, report.ratio);
    std::printf("  gate time  = %.6e s\n", report.gate_time);
    std::printf("  infidelity = %.6e\n", report.infidelity);
    std::printf("  leakage    = %.6e\n", report.leakage);
    std::printf("  peak flux  = %.4f (linearization warns above 0.1)\n", report.peak_flux);
    if (report.peak_flux > 0.1)
        std::printf("  warning: flux amplitude beyond the small-signal expansion\n");
    if (!output.empty()) {
        write_text(output, report.to_json() + "\n");
        std::printf("report written to %s\n", output.c_str());
    }
    return 0;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, bool has_seed,
            const std::string& output, bool force, const std::string& schedule_path) {
    auto cfg = load_config(config_path, seed, has_seed);
    const std::string path = output.empty() ? cfg.output_path : output;
    const auto report = harness::run_experiment(cfg);
    harness::emit_csv(report, path, force);
    std::printf("run complete: %d states, %zu samples, total duration %.6e s\n",
                report.n_states, report.time_s.size(), report.total_duration_s);
    std::printf("final mean fidelity %.6f (min %.6f, max %.6f)\n",
                report.fid_mean.back(), report.fid_min.back(), report.fid_max.back());
    std::printf("report written to %s\n", path.c_str());
    if (!schedule_path.empty()) {
        auto sys = harness::build_system(cfg);
        write_text(schedule_path, harness::build_schedule(cfg, *sys).to_json());
        std::printf("schedule written to %s\n", schedule_path.c_str());
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& gate,
              const std::string& ratios_csv, const std::string& output) {
    auto cfg = load_config(config_path, 0, false);
    std::vector<double> ratios;
    std::stringstream ss(ratios_csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) ratios.push_back(std::stod(cell));
    if (ratios.empty()) throw std::runtime_error("sweep: no ratios given");

    const auto reports = harness::sweep_gate(cfg, gate, ratios);
    std::ostringstream csv;
    csv << "ratio,strength_rad_s,gate_time_s,infidelity,leakage\n";
    for (const auto& r : reports) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.ratio,
                      r.strength, r.gate_time, r.infidelity, r.leakage);
        csv << buf;
        std::printf("ratio %.4g -> infidelity %.3e, leakage %.3e\n", r.ratio, r.infidelity,
                    r.leakage);
    }
    if (!output.empty()) {
        write_text(output, csv.str());
        std::printf("sweep written to %s\n", output.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qrsim: spin-1 chain dynamics from ultrastrongly coupled "
                 "qubit-resonator pairs"};
    app.require_subcommand(0, 1);

    std::string config_path, output, species = "both", gate, ratios = "0.01,0.005";
    std::string schedule_path, dump_path;
    std::uint64_t seed = 0;
    bool force = false;

    app.add_option("--dump-default-config", dump_path,
                   "write the built-in configuration to a file and exit");

    auto* sp = app.add_subcommand("spectrum", "export dressed spectra as CSV");
    sp->add_option("--config", config_path, "configuration file");
    sp->add_option("--species", species, "a, b or both")->check(CLI::IsMember({"a", "b", "both"}));
    sp->add_option("--output", output, "CSV path")->required();

    auto* cp = app.add_subcommand("compile", "print gap tables and compiled tones");
    cp->add_option("--config", config_path, "configuration file");
    cp->add_option("--emit-schedule", schedule_path, "write the protocol schedule JSON");

    auto* vg = app.add_subcommand("validate-gate",
                                  "full flux-driven propagation vs effective gate");
    vg->add_option("--config", config_path, "configuration file");
    vg->add_option("--gate", gate, "xy, xx or rot")->check(CLI::IsMember({"xy", "xx", "rot", ""}));
    vg->add_option("--output", output, "JSON report path");

    auto* rn = app.add_subcommand("run", "protocol fidelity benchmark");
    rn->add_option("--config", config_path, "configuration file");
    auto* seed_opt = rn->add_option("--seed", seed, "override sampling seed");
    rn->add_option("--output", output, "CSV report path");
    rn->add_flag("--force", force, "overwrite reports from other configurations");
    rn->add_option("--emit-schedule", schedule_path, "write the protocol schedule JSON");

    auto* sw = app.add_subcommand("sweep", "gate validation over a ratio list");
    sw->add_option("--config", config_path, "configuration file");
    sw->add_option("--gate", gate, "xy, xx or rot")->check(CLI::IsMember({"xy", "xx", "rot", ""}));
    sw->add_option("--ratios", ratios, "comma-separated strength/margin ratios");
    sw->add_option("--output", output, "CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!dump_path.empty()) {
            std::ofstream out(dump_path, std::ios::trunc);
            out << qrsim::harness::default_config_text();
            std::printf("default configuration written to %s\n", dump_path.c_str());
            return 0;
        }
        if (sp->parsed()) return cmd_spectrum(config_path, species, output);
        if (cp->parsed()) return cmd_compile(config_path, schedule_path);
        if (vg->parsed()) return cmd_validate(config_path, gate, output);
        if (rn->parsed())
            return cmd_run(config_path, seed, seed_opt->count() > 0, output, force,
                           schedule_path);
        if (sw->parsed())
            return cmd_sweep(config_path, gate.empty() ? "xy" : gate, ratios, output);
        std::cerr << "a subcommand is required; run with --help\n";
        return 106;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
