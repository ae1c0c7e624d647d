// Scenario runners behind the CLI subcommands: crosstalk characterization,
// multiplexed QKD key runs, long stability runs with the drift processes
// active, and the mean-photon-number optimization. All randomness derives
// from the master seed through named streams, so a given (config, seed) pair
// reproduces byte-identical outputs.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oamqkd/aggregate.hpp"
#include "oamqkd/channel.hpp"
#include "oamqkd/config.hpp"
#include "oamqkd/detection.hpp"
#include "oamqkd/emitter.hpp"
#include "oamqkd/io.hpp"
#include "oamqkd/rng.hpp"
#include "oamqkd/security.hpp"

namespace oamqkd {

struct CrosstalkRunResult {
    HeaterState initial;
    HeaterState calibrated;
    double initial_worst_db = 0.0;
    double calibrated_worst_db = 0.0;
    CrosstalkMatrix power;
    CrosstalkMatrix time_of_flight;
};

inline HeaterState draw_heater_noise(const ScenarioConfig& cfg, std::uint64_t seed) {
    HeaterState h = HeaterState::zeros(cfg.chip.num_outputs);
    std::mt19937_64 rng(derive_seed(seed, "heater-noise"));
    std::normal_distribution<double> gauss(0.0, cfg.heater.noise_sigma_rad);
    if (cfg.heater.noise_sigma_rad > 0.0)
        for (double& d : h.phase_trim) d = gauss(rng);
    return h;
}

/// Heater objective used for calibration: worst-pair crosstalk (dB) of the
/// chip output itself, measured as azimuthal leakage between the active
/// modes. The optimization targets the launcher, so the fiber's own mixing is
/// deliberately outside the loop.
inline HeaterObjective make_crosstalk_objective(const ScenarioConfig& cfg,
                                                const std::vector<int>& modes) {
    const ChipGeometry chip = cfg.chip;
    return [chip, modes](const HeaterState& h) {
        double worst = -1e300;
        for (int in : modes) {
            const ModeVector mv = project(emit_field(in, chip, h, 1.0), modes);
            const double own = std::norm(mv.amps[static_cast<size_t>(mv.index_of(in))]);
            for (int out : modes) {
                if (out == in) continue;
                const double leak = std::norm(mv.amps[static_cast<size_t>(mv.index_of(out))]);
                worst = std::max(worst, power_to_db(leak / own));
            }
        }
        return worst;
    };
}

inline CrosstalkRunResult run_crosstalk(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    CrosstalkRunResult result;
    result.initial = draw_heater_noise(cfg, seed);
    const HeaterObjective objective = make_crosstalk_objective(cfg, cfg.run.qkd_modes);
    result.initial_worst_db = objective(result.initial);
    result.calibrated = calibrate_heaters(cfg.run.qkd_modes, result.initial,
                                          cfg.heater.calibration_rounds, objective,
                                          cfg.heater.grid_points);
    result.calibrated_worst_db = objective(result.calibrated);
    const MuxLink link = cfg.build_link(result.calibrated);
    result.power = crosstalk_power(link, cfg.run.qkd_modes);
    result.time_of_flight = crosstalk_time_of_flight(link, cfg.run.qkd_modes,
                                                     cfg.run.crosstalk_bin_width_ns);
    return result;
}

struct QkdRunResult {
    KeyRateReport report;
    std::vector<QberTableEntry> qber_table;
};

/// All requested modes transmit simultaneously; each one is demultiplexed and
/// analyzed in turn, every other active mode contributing leakage.
inline QkdRunResult run_qkd(const ScenarioConfig& cfg, const std::vector<int>& modes,
                            std::uint64_t seed) {
    cfg.validate();
    if (modes.empty()) fail_precondition("run_qkd: modes must be non-empty");
    QkdRunResult result;
    const HeaterState heaters = HeaterState::zeros(cfg.chip.num_outputs);
    const auto n_pulses =
        static_cast<std::int64_t>(std::llround(cfg.run.duration_s * cfg.protocol.qubit_rate_hz));
    for (int mode : modes) {
        const ModeLinkContext ctx = cfg.build_mode_context(mode, modes, heaters);
        const double cos_phi = stationary_cos_phi(ctx.receiver);
        const TallyBlock tally = simulate_tally_aggregate(
            ctx, n_pulses, derive_seed(seed, "qkd-block", static_cast<std::uint64_t>(mode + 512)),
            cos_phi);
        result.report.per_mode.push_back(
            analyze_tally(mode, tally, ctx.protocol.mu1, ctx.protocol.mu2, ctx.protocol.p_mu1,
                          cfg.security));
        QberTableEntry entry;
        entry.mode = mode;
        entry.mu1 = ctx.protocol.mu1;
        entry.mu2 = ctx.protocol.mu2;
        entry.qz_mu1 = 100.0 * tally.qber_z(0);
        entry.qz_mu2 = 100.0 * tally.qber_z(1);
        entry.qx_mu1 = 100.0 * tally.qber_x(0);
        entry.qx_mu2 = 100.0 * tally.qber_x(1);
        result.qber_table.push_back(entry);
    }
    return result;
}

struct StabilityRunResult {
    std::vector<StabilityWindow> windows;
    bool pll_enabled = true;
};

/// Long acquisition on one mode with the interferometer phase process and the
/// slow heater drift running; QBERs are reported per averaging window.
inline StabilityRunResult run_stability(const ScenarioConfig& cfg, std::uint64_t seed,
                                        bool pll_enabled) {
    cfg.validate();
    StabilityRunResult result;
    result.pll_enabled = pll_enabled;
    const int mode = cfg.run.stability_mode;
    const auto n_windows =
        static_cast<int>(std::llround(cfg.run.stability_duration_s / cfg.run.stability_window_s));
    const auto pulses_per_window = static_cast<std::int64_t>(
        std::llround(cfg.run.stability_window_s * cfg.protocol.qubit_rate_hz));

    // Interferometer phase over the whole run; feedback off means gain 0.
    PllParams pll = cfg.receiver.pll;
    pll.diffusion_rad_rt_s = cfg.pll_diffusion();
    if (!pll_enabled) pll.gain_per_s = 0.0;
    const std::vector<double> phase =
        pll_phase_process(pll, cfg.run.stability_duration_s, derive_seed(seed, "stability-pll"));
    const auto steps_per_window = static_cast<std::size_t>(
        std::llround(cfg.run.stability_window_s / pll.dt_s));

    // Slow per-spot heater drift, stepped once per window around the
    // calibrated operating point.
    HeaterState drift = HeaterState::zeros(cfg.chip.num_outputs);
    std::mt19937_64 drift_rng(derive_seed(seed, "stability-heater"));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sigma_h = cfg.run.heater_drift.sigma_rad;
    const double relax = std::exp(-cfg.run.heater_drift.rate_per_s * cfg.run.stability_window_s);
    const double kick = sigma_h * std::sqrt(std::max(0.0, 1.0 - relax * relax));
    if (sigma_h > 0.0)
        for (double& d : drift.phase_trim) d = sigma_h * gauss(drift_rng);

    ScenarioConfig local = cfg;
    for (auto& tx : local.transmitters) {
        if (tx.mode == mode) {
            tx.mu1 = cfg.run.stability_mu;
            tx.mu2 = 0.5 * cfg.run.stability_mu;
        }
    }

    for (int w = 0; w < n_windows; ++w) {
        double cos_sum = 0.0;
        const std::size_t base = static_cast<std::size_t>(w) * steps_per_window;
        for (std::size_t i = 0; i < steps_per_window; ++i)
            cos_sum += std::cos(phase[std::min(base + i, phase.size() - 1)]);
        const double cos_phi = cos_sum / static_cast<double>(steps_per_window);

        const ModeLinkContext ctx = local.build_mode_context(mode, {mode}, drift);
        const TallyBlock tally = simulate_tally_aggregate(
            ctx, pulses_per_window, derive_seed(seed, "stability-window", static_cast<std::uint64_t>(w)),
            cos_phi);
        StabilityWindow win;
        win.start_s = w * cfg.run.stability_window_s;
        const double nz = tally.n_z[0] + tally.n_z[1];
        const double nx = tally.n_x[0] + tally.n_x[1];
        win.qber_z = nz > 0 ? (tally.m_z[0] + tally.m_z[1]) / nz : 0.0;
        win.qber_x = nx > 0 ? (tally.m_x[0] + tally.m_x[1]) / nx : 0.0;
        result.windows.push_back(win);

        if (sigma_h > 0.0)
            for (double& d : drift.phase_trim) d = relax * d + kick * gauss(drift_rng);
    }
    return result;
}

struct OptimizeRunResult {
    int mode = 0;
    MuOptimum best;
    std::vector<MuOptimum> surface;  // full grid, for plotting
};

inline OptimizeRunResult run_optimize_mu(const ScenarioConfig& cfg, int mode, std::uint64_t seed) {
    (void)seed;  // the analytic model is deterministic
    cfg.validate();
    OptimizeRunResult result;
    result.mode = mode;
    const HeaterState heaters = HeaterState::zeros(cfg.chip.num_outputs);
    const ModeLinkContext ctx = cfg.build_mode_context(mode, cfg.run.qkd_modes, heaters);
    const double cos_phi = stationary_cos_phi(ctx.receiver);
    const double n_pulses = cfg.run.duration_s * cfg.protocol.qubit_rate_hz;
    result.best = optimize_mu(ctx, n_pulses, cos_phi, cfg.run.optimize_grid, cfg.security);

    const MuGrid& g = cfg.run.optimize_grid;
    for (double mu1 = g.mu2_min + g.step; mu1 <= g.mu1_max + 1e-12; mu1 += g.step) {
        for (double mu2 = g.mu2_min; mu2 < mu1 - g.step * 0.5; mu2 += g.step) {
            ModeLinkContext pt = ctx;
            pt.protocol.mu1 = mu1;
            pt.protocol.mu2 = mu2;
            const TallyBlock t = expected_tally(pt, n_pulses, cos_phi);
            double skr = 0.0;
            if (t.n_z[0] > 0.0 && t.n_z[1] > 0.0) {
                const DecoyBounds b = decoy_bounds(t, mu1, mu2, pt.protocol.p_mu1, cfg.security);
                skr = secret_key_rate(key_length(t, b, cfg.security), t.duration_s);
            }
            result.surface.push_back({mu1, mu2, skr});
        }
    }
    return result;
}

// ---- file emission ----

inline void emit_crosstalk_outputs(const std::string& outdir, const CrosstalkRunResult& r) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    write_text_file(outdir + "/crosstalk.csv", crosstalk_to_csv(r.power));
    write_text_file(outdir + "/crosstalk_tof.csv", crosstalk_to_csv(r.time_of_flight));
    nlohmann::json j;
    j["power_method"] = crosstalk_to_json(r.power);
    j["time_of_flight"] = crosstalk_to_json(r.time_of_flight);
    j["initial_worst_db"] = r.initial_worst_db;
    j["calibrated_worst_db"] = r.calibrated_worst_db;
    write_text_file(outdir + "/crosstalk.json", j.dump(2) + "\n");
    write_text_file(outdir + "/heaters.json", heaters_to_json(r.calibrated) + "\n");
}

inline void emit_qkd_outputs(const std::string& outdir, const QkdRunResult& r) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    write_text_file(outdir + "/qber_table.csv", qber_table_to_csv(r.qber_table));
    write_text_file(outdir + "/skr.csv", skr_to_csv(r.report));
    write_text_file(outdir + "/report.json", report_to_json(r.report).dump(2) + "\n");
    for (const ModeKeyResult& m : r.report.per_mode)
        write_text_file(outdir + "/tally_mode_" + std::to_string(m.mode) + ".json",
                        tally_to_json(m.tally).dump(2) + "\n");
}

inline void emit_stability_outputs(const std::string& outdir, const StabilityRunResult& r) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    write_text_file(outdir + "/stability.csv", stability_to_csv(r.windows));
}

inline void emit_optimize_outputs(const std::string& outdir, const OptimizeRunResult& r) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    std::ostringstream out;
    out << "mu1,mu2,predicted_skr_bps\n";
    for (const MuOptimum& p : r.surface)
        out << format_full(p.mu1) << ',' << format_full(p.mu2) << ',' << format_full(p.skr_bps)
            << '\n';
    write_text_file(outdir + "/mu_surface.csv", out.str());
    nlohmann::json j;
    j["mode"] = r.mode;
    j["mu1"] = r.best.mu1;
    j["mu2"] = r.best.mu2;
    j["predicted_skr_bps"] = r.best.skr_bps;
    write_text_file(outdir + "/mu_optimum.json", j.dump(2) + "\n");
}

}  // namespace oamqkd
