// Command-line front end: loads a scenario (shipped preset or JSON config),
// runs one of the four scenarios, and writes plot-ready CSV/JSON into the
// output directory. Failures exit nonzero with a machine-readable error JSON
// on stdout.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "oamqkd/config.hpp"
#include "oamqkd/io.hpp"
#include "oamqkd/presets.hpp"
#include "oamqkd/scenario.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string outdir = "out";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Path to a scenario config JSON");
    cmd->add_option("--preset", args.preset, "Shipped preset: 2mode, 3mode or stability");
    cmd->add_option("--out", args.outdir, "Output directory");
    cmd->add_option("--seed", args.seed, "Master seed (overrides run.master_seed)")
        ->each([&args](const std::string&) { args.seed_given = true; });
}

std::string load_config_text(const CommonArgs& args) {
    if (!args.config_path.empty()) return oamqkd::read_text_file(args.config_path);
    if (!args.preset.empty()) return oamqkd::preset_text(args.preset);
    throw std::invalid_argument("either --config or --preset is required");
}

oamqkd::ScenarioConfig load_config(const CommonArgs& args, std::string* text_out) {
    const std::string text = load_config_text(args);
    if (text_out) *text_out = text;
    oamqkd::ScenarioConfig cfg = oamqkd::parse_config_text(text);
    if (args.seed_given) cfg.run.master_seed = args.seed;
    return cfg;
}

void write_config_echo(const std::string& outdir, const std::string& text,
                       const oamqkd::ScenarioConfig& cfg) {
    std::filesystem::create_directories(outdir);
    nlohmann::json j = nlohmann::json::parse(text);
    j["run"]["master_seed"] = cfg.run.master_seed;
    oamqkd::write_text_file(outdir + "/config.json", j.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"oamqkd: OAM-multiplexed time-bin QKD link simulator"};
    app.require_subcommand(1);

    CommonArgs xt_args, qkd_args, stab_args, opt_args;
    CLI::App* xt = app.add_subcommand("crosstalk", "Heater calibration and crosstalk matrices");
    add_common(xt, xt_args);
    CLI::App* qkd = app.add_subcommand("qkd", "Multiplexed key-generation run");
    add_common(qkd, qkd_args);
    CLI::App* stab = app.add_subcommand("stability", "Long QBER stability run");
    add_common(stab, stab_args);
    bool no_pll = false;
    stab->add_flag("--no-pll", no_pll, "Disable the interferometer phase feedback");
    CLI::App* opt = app.add_subcommand("optimize-mu", "Grid optimization of the mean photon numbers");
    add_common(opt, opt_args);
    int opt_mode = 0;
    bool opt_mode_given = false;
    opt->add_option("--mode", opt_mode, "Mode to optimize (default: first configured mode)")
        ->each([&opt_mode_given](const std::string&) { opt_mode_given = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (xt->parsed()) {
            std::string text;
            const oamqkd::ScenarioConfig cfg = load_config(xt_args, &text);
            const auto result = oamqkd::run_crosstalk(cfg, cfg.run.master_seed);
            oamqkd::emit_crosstalk_outputs(xt_args.outdir, result);
            write_config_echo(xt_args.outdir, text, cfg);
            std::printf("crosstalk: worst off-diagonal %.2f dB (power method), outputs in %s\n",
                        result.power.worst_offdiagonal_db(), xt_args.outdir.c_str());
        } else if (qkd->parsed()) {
            std::string text;
            const oamqkd::ScenarioConfig cfg = load_config(qkd_args, &text);
            const auto result = oamqkd::run_qkd(cfg, cfg.run.qkd_modes, cfg.run.master_seed);
            oamqkd::emit_qkd_outputs(qkd_args.outdir, result);
            write_config_echo(qkd_args.outdir, text, cfg);
            std::printf("qkd: %zu mode(s), total SKR %.1f b/s, outputs in %s\n",
                        result.report.per_mode.size(), result.report.total_skr(),
                        qkd_args.outdir.c_str());
        } else if (stab->parsed()) {
            std::string text;
            oamqkd::ScenarioConfig cfg = load_config(stab_args, &text);
            if (no_pll) cfg.run.pll_enabled = false;
            const auto result = oamqkd::run_stability(cfg, cfg.run.master_seed, cfg.run.pll_enabled);
            oamqkd::emit_stability_outputs(stab_args.outdir, result);
            write_config_echo(stab_args.outdir, text, cfg);
            double worst_z = 0.0, worst_x = 0.0;
            for (const auto& w : result.windows) {
                worst_z = std::max(worst_z, w.qber_z);
                worst_x = std::max(worst_x, w.qber_x);
            }
            std::printf("stability: %zu windows, worst Q_Z %.2f%%, worst Q_X %.2f%%, outputs in %s\n",
                        result.windows.size(), 100.0 * worst_z, 100.0 * worst_x,
                        stab_args.outdir.c_str());
        } else if (opt->parsed()) {
            std::string text;
            const oamqkd::ScenarioConfig cfg = load_config(opt_args, &text);
            const int mode = opt_mode_given ? opt_mode : cfg.run.qkd_modes.front();
            const auto result = oamqkd::run_optimize_mu(cfg, mode, cfg.run.master_seed);
            oamqkd::emit_optimize_outputs(opt_args.outdir, result);
            write_config_echo(opt_args.outdir, text, cfg);
            std::printf("optimize-mu: mode %d optimum mu1=%.2f mu2=%.2f, predicted SKR %.1f b/s\n",
                        result.mode, result.best.mu1, result.best.mu2, result.best.skr_bps);
        }
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        std::cout << err.dump() << std::endl;
        return 1;
    }
    return 0;
}
