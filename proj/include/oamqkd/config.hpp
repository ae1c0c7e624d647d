// Scenario configuration: one JSON document describes the chip, fiber,
// per-mode transmitters, receiver, detector, security parameters, and run
// controls. Parsing validates against the schema and reports violations with
// full field paths. The config also resolves itself into per-mode simulation
// contexts (linear gains, leak paths, derived seeds).
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oamqkd/channel.hpp"
#include "oamqkd/common.hpp"
#include "oamqkd/detection.hpp"
#include "oamqkd/emitter.hpp"
#include "oamqkd/link_model.hpp"
#include "oamqkd/protocol.hpp"
#include "oamqkd/rng.hpp"
#include "oamqkd/security.hpp"

namespace oamqkd {

struct TransmitterConfig {
    int mode = 0;
    double mu1 = 0.26;
    double mu2 = 0.13;
    double extinction_db = 200.0;
};

struct PerModeReceiverConfig {
    int mode = 0;
    double visibility = -1.0;  // < 0 means "use the shared receiver value"
    double background_z_scale = 1.0;
    double background_x_scale = 1.0;
    double path_loss_db = 0.0;
};

struct HeaterConfig {
    double noise_sigma_rad = 0.2;
    int calibration_rounds = 6;
    int grid_points = 64;
};

struct HeaterDriftConfig {
    double sigma_rad = 0.0;    // stationary RMS of the per-spot drift
    double rate_per_s = 0.005; // mean-reversion rate
};

struct RunConfig {
    double duration_s = 300.0;
    double stability_duration_s = 4500.0;
    double stability_window_s = 75.0;
    double stability_mu = 0.24;
    std::uint64_t master_seed = 1;
    std::vector<int> qkd_modes;
    int stability_mode = -7;
    double crosstalk_bin_width_ns = 0.1;
    HeaterDriftConfig heater_drift;
    bool pll_enabled = true;
    MuGrid optimize_grid;
};

struct ScenarioConfig {
    ChipGeometry chip;
    HeaterConfig heater;
    FiberSpec fiber;  // coupling built from perturbation below
    std::vector<PairCoupling> perturbation_pairs;
    double perturbation_strength = 0.0;
    std::map<int, double> demux_coupling_db;
    ProtocolParams protocol;  // shared clock/probability/pulse-shape settings
    std::vector<TransmitterConfig> transmitters;
    ReceiverSpec receiver;
    std::vector<PerModeReceiverConfig> per_mode_receiver;
    DetectorSpec detector;
    SecurityParams security;
    RunConfig run;

    const TransmitterConfig& transmitter(int mode) const {
        for (const auto& t : transmitters)
            if (t.mode == mode) return t;
        fail_precondition("transmitters: no entry for mode " + std::to_string(mode));
    }

    const PerModeReceiverConfig* per_mode(int mode) const {
        for (const auto& p : per_mode_receiver)
            if (p.mode == mode) return &p;
        return nullptr;
    }

    void validate() const {
        chip.validate();
        fiber.validate();
        protocol.validate();
        receiver.validate();
        detector.validate();
        security.validate();
        if (heater.calibration_rounds < 1) fail_precondition("heater.calibration_rounds: must be >= 1");
        if (heater.grid_points < 2) fail_precondition("heater.grid_points: must be >= 2");
        if (heater.noise_sigma_rad < 0.0) fail_precondition("heater.noise_sigma_rad: must be >= 0");
        if (transmitters.empty()) fail_precondition("transmitters: at least one entry required");
        for (size_t i = 0; i < transmitters.size(); ++i) {
            const auto& t = transmitters[i];
            const std::string path = "transmitters[" + std::to_string(i) + "]";
            if (fiber.index_of(t.mode) < 0)
                fail_precondition(path + ".mode: mode " + std::to_string(t.mode) +
                                  " not in fiber.modes");
            if (!chip.supports(t.mode))
                fail_precondition(path + ".mode: mode " + std::to_string(t.mode) +
                                  " outside chip ports");
            if (!(t.mu2 > 0.0 && t.mu1 > t.mu2))
                fail_precondition(path + ": require 0 < mu2 < mu1");
            if (t.extinction_db <= 0.0) fail_precondition(path + ".extinction_db: must be > 0");
        }
        for (size_t i = 0; i < per_mode_receiver.size(); ++i) {
            const auto& p = per_mode_receiver[i];
            const std::string path = "per_mode_receiver[" + std::to_string(i) + "]";
            if (fiber.index_of(p.mode) < 0)
                fail_precondition(path + ".mode: mode " + std::to_string(p.mode) +
                                  " not in fiber.modes");
            if (p.background_z_scale < 0.0 || p.background_x_scale < 0.0)
                fail_precondition(path + ": background scales must be >= 0");
            if (p.path_loss_db < 0.0) fail_precondition(path + ".path_loss_db: must be >= 0");
        }
        for (int m : fiber.mode_set)
            if (demux_coupling_db.find(m) == demux_coupling_db.end())
                fail_precondition("demux_coupling_db: missing entry for mode " + std::to_string(m));
        if (run.duration_s <= 0.0) fail_precondition("run.duration_s: must be > 0");
        if (run.stability_window_s <= 0.0 || run.stability_duration_s <= 0.0)
            fail_precondition("run.stability: durations must be > 0");
        const double ratio = run.stability_duration_s / run.stability_window_s;
        if (std::abs(ratio - std::llround(ratio)) > 1e-9)
            fail_precondition("run.stability_window_s: must divide stability_duration_s");
        if (run.qkd_modes.empty()) fail_precondition("run.qkd_modes: must be non-empty");
        for (size_t i = 0; i < run.qkd_modes.size(); ++i)
            if (fiber.index_of(run.qkd_modes[i]) < 0)
                fail_precondition("run.qkd_modes[" + std::to_string(i) + "]: mode " +
                                  std::to_string(run.qkd_modes[i]) + " not in fiber.modes");
        if (fiber.index_of(run.stability_mode) < 0)
            fail_precondition("run.stability_mode: not in fiber.modes");
        if (run.crosstalk_bin_width_ns <= 0.0)
            fail_precondition("run.crosstalk_bin_width_ns: must be > 0");
    }

    MuxLink build_link(const HeaterState& heaters) const {
        MuxLink link;
        link.chip = chip;
        link.heaters = heaters;
        link.fiber = fiber;
        link.fiber.coupling = perturbation_unitary(fiber.mode_set, perturbation_pairs,
                                                   perturbation_strength);
        link.demux_coupling_db = demux_coupling_db;
        return link;
    }

    // Linear power gain from transmitter-side chip output (mode in) to the
    // demux output for mode out, through projection, fiber mixing/loss and
    // demux coupling. The launch normalization keeps the chip output at unit
    // power, matching the convention that mu is set at the chip output.
    static double mode_pair_gain(const MuxLink& link, int mode_in, int mode_out) {
        const double pre = db_to_power(link.chip.insertion_loss_db);
        const EmitterField field = emit_field(mode_in, link.chip, link.heaters, pre);
        const PropagationResult prop = propagate(project(field, link.fiber.mode_set), link.fiber);
        return std::norm(demux_slm(prop.modes, mode_out, link.coupling_db(mode_out)));
    }

    std::uint16_t prbs_seed_for(int mode) const {
        return static_cast<std::uint16_t>(
            derive_seed(run.master_seed, "prbs", static_cast<std::uint64_t>(mode + 512)) % 4095 + 1);
    }

    double pll_diffusion() const {
        return receiver.residual_phase_rms_rad * std::sqrt(2.0 * receiver.pll.gain_per_s);
    }

    /// Resolve the full simulation context of one demultiplexed mode, with
    /// every other active mode attached as a leak path.
    ModeLinkContext build_mode_context(int mode, const std::vector<int>& active_modes,
                                       const HeaterState& heaters) const {
        if (fiber.index_of(mode) < 0)
            fail_precondition("mode context: mode not in fiber.modes");
        const MuxLink link = build_link(heaters);
        ModeLinkContext ctx;
        ctx.mode = mode;
        ctx.protocol = protocol;
        const TransmitterConfig& tx = transmitter(mode);
        ctx.protocol.mu1 = tx.mu1;
        ctx.protocol.mu2 = tx.mu2;
        ctx.protocol.extinction_db = tx.extinction_db;
        ctx.receiver = receiver;
        ctx.receiver.pll.diffusion_rad_rt_s = pll_diffusion();
        ctx.detector = detector;
        ctx.visibility = receiver.visibility;
        double path_db = 0.0;
        if (const PerModeReceiverConfig* pm = per_mode(mode)) {
            if (pm->visibility >= 0.0) ctx.visibility = pm->visibility;
            ctx.receiver.background_z_cps *= pm->background_z_scale;
            ctx.receiver.background_x_cps *= pm->background_x_scale;
            path_db = pm->path_loss_db;
        }
        const double rx_chain = db_loss_to_transmittance(receiver.sync_loss_db + path_db);
        ctx.signal_scale = mode_pair_gain(link, mode, mode) * rx_chain;
        ctx.prbs_seed = prbs_seed_for(mode);

        const int own_idx = fiber.index_of(mode);
        for (int other : active_modes) {
            if (other == mode) continue;
            if (fiber.index_of(other) < 0)
                fail_precondition("mode context: active mode not in fiber.modes");
            LeakContext leak;
            leak.protocol = protocol;
            const TransmitterConfig& otx = transmitter(other);
            leak.protocol.mu1 = otx.mu1;
            leak.protocol.mu2 = otx.mu2;
            leak.protocol.extinction_db = otx.extinction_db;
            leak.leak_scale = mode_pair_gain(link, other, mode) * rx_chain;
            const int oi = fiber.index_of(other);
            leak.delay_offset_ps = (fiber.group_delay_ns[static_cast<size_t>(oi)] -
                                    fiber.group_delay_ns[static_cast<size_t>(own_idx)]) *
                                   1e3;
            leak.prbs_seed = prbs_seed_for(other);
            ctx.leaks.push_back(leak);
        }
        return ctx;
    }
};

namespace configdetail {

template <typename T>
T get_field(const nlohmann::json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) fail_precondition(path + key + ": missing required field");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail_precondition(path + key + ": wrong type");
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& path, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail_precondition(path + key + ": wrong type");
    }
}

}  // namespace configdetail

inline ScenarioConfig parse_config(const nlohmann::json& j) {
    using configdetail::get_field;
    using configdetail::get_or;
    ScenarioConfig cfg;

    if (j.contains("chip")) {
        const auto& c = j.at("chip");
        cfg.chip.num_outputs = get_or(c, "chip.", "num_outputs", cfg.chip.num_outputs);
        cfg.chip.port_min = get_or(c, "chip.", "port_min", cfg.chip.port_min);
        cfg.chip.port_max = get_or(c, "chip.", "port_max", cfg.chip.port_max);
        cfg.chip.insertion_loss_db = get_or(c, "chip.", "insertion_loss_db", cfg.chip.insertion_loss_db);
    }
    if (j.contains("heater")) {
        const auto& h = j.at("heater");
        cfg.heater.noise_sigma_rad = get_or(h, "heater.", "noise_sigma_rad", cfg.heater.noise_sigma_rad);
        cfg.heater.calibration_rounds =
            get_or(h, "heater.", "calibration_rounds", cfg.heater.calibration_rounds);
        cfg.heater.grid_points = get_or(h, "heater.", "grid_points", cfg.heater.grid_points);
    }

    if (!j.contains("fiber")) fail_precondition("fiber: missing required section");
    {
        const auto& f = j.at("fiber");
        cfg.fiber.length_m = get_or(f, "fiber.", "length_m", cfg.fiber.length_m);
        cfg.fiber.loss_db = get_or(f, "fiber.", "loss_db", cfg.fiber.loss_db);
        cfg.fiber.mode_set = get_field<std::vector<int>>(f, "fiber.", "modes");
        cfg.fiber.group_delay_ns = get_field<std::vector<double>>(f, "fiber.", "group_delay_ns");
        if (f.contains("perturbation")) {
            const auto& p = f.at("perturbation");
            cfg.perturbation_strength = get_or(p, "fiber.perturbation.", "strength", 0.0);
            if (p.contains("pairs")) {
                size_t i = 0;
                for (const auto& pj : p.at("pairs")) {
                    const std::string path = "fiber.perturbation.pairs[" + std::to_string(i) + "].";
                    PairCoupling pc;
                    pc.mode_a = get_field<int>(pj, path, "mode_a");
                    pc.mode_b = get_field<int>(pj, path, "mode_b");
                    pc.value = cplx(get_or(pj, path, "re", 1.0), get_or(pj, path, "im", 0.0));
                    cfg.perturbation_pairs.push_back(pc);
                    ++i;
                }
            }
        }
        cfg.fiber.coupling =
            perturbation_unitary(cfg.fiber.mode_set, cfg.perturbation_pairs, cfg.perturbation_strength);
    }

    if (!j.contains("demux_coupling_db")) fail_precondition("demux_coupling_db: missing required section");
    for (const auto& [key, val] : j.at("demux_coupling_db").items()) {
        try {
            cfg.demux_coupling_db[std::stoi(key)] = val.get<double>();
        } catch (const std::exception&) {
            fail_precondition("demux_coupling_db." + key + ": keys must be modes, values dB");
        }
    }

    if (j.contains("protocol")) {
        const auto& p = j.at("protocol");
        cfg.protocol.qubit_rate_hz = get_or(p, "protocol.", "qubit_rate_hz", cfg.protocol.qubit_rate_hz);
        cfg.protocol.bin_separation_ps =
            get_or(p, "protocol.", "bin_separation_ps", cfg.protocol.bin_separation_ps);
        cfg.protocol.p_z = get_or(p, "protocol.", "p_z", cfg.protocol.p_z);
        cfg.protocol.p_mu1 = get_or(p, "protocol.", "p_mu1", cfg.protocol.p_mu1);
        cfg.protocol.pulse_sigma_ps = get_or(p, "protocol.", "pulse_sigma_ps", cfg.protocol.pulse_sigma_ps);
    }

    if (!j.contains("transmitters")) fail_precondition("transmitters: missing required section");
    {
        size_t i = 0;
        for (const auto& tj : j.at("transmitters")) {
            const std::string path = "transmitters[" + std::to_string(i) + "].";
            TransmitterConfig t;
            t.mode = get_field<int>(tj, path, "mode");
            t.mu1 = get_field<double>(tj, path, "mu1");
            t.mu2 = get_field<double>(tj, path, "mu2");
            t.extinction_db = get_or(tj, path, "extinction_db", t.extinction_db);
            cfg.transmitters.push_back(t);
            ++i;
        }
    }

    if (j.contains("receiver")) {
        const auto& r = j.at("receiver");
        cfg.receiver.split_z = get_or(r, "receiver.", "split_z", cfg.receiver.split_z);
        cfg.receiver.split_x = 1.0 - cfg.receiver.split_z;
        cfg.receiver.interferometer_delay_ps =
            get_or(r, "receiver.", "interferometer_delay_ps", cfg.receiver.interferometer_delay_ps);
        cfg.receiver.visibility = get_or(r, "receiver.", "visibility", cfg.receiver.visibility);
        cfg.receiver.residual_phase_rms_rad =
            get_or(r, "receiver.", "residual_phase_rms_rad", cfg.receiver.residual_phase_rms_rad);
        cfg.receiver.background_z_cps =
            get_or(r, "receiver.", "background_z_cps", cfg.receiver.background_z_cps);
        cfg.receiver.background_x_cps =
            get_or(r, "receiver.", "background_x_cps", cfg.receiver.background_x_cps);
        cfg.receiver.background_z_uniform_fraction = get_or(
            r, "receiver.", "background_z_uniform_fraction", cfg.receiver.background_z_uniform_fraction);
        cfg.receiver.background_x_uniform_fraction = get_or(
            r, "receiver.", "background_x_uniform_fraction", cfg.receiver.background_x_uniform_fraction);
        cfg.receiver.sync_loss_db = get_or(r, "receiver.", "sync_loss_db", cfg.receiver.sync_loss_db);
        cfg.receiver.gate_halfwidth_ps =
            get_or(r, "receiver.", "gate_halfwidth_ps", cfg.receiver.gate_halfwidth_ps);
        if (r.contains("pll")) {
            const auto& pll = r.at("pll");
            cfg.receiver.pll.gain_per_s =
                get_or(pll, "receiver.pll.", "gain_per_s", cfg.receiver.pll.gain_per_s);
            cfg.receiver.pll.dt_s = get_or(pll, "receiver.pll.", "dt_s", cfg.receiver.pll.dt_s);
        }
    }

    if (j.contains("per_mode_receiver")) {
        size_t i = 0;
        for (const auto& pj : j.at("per_mode_receiver")) {
            const std::string path = "per_mode_receiver[" + std::to_string(i) + "].";
            PerModeReceiverConfig p;
            p.mode = get_field<int>(pj, path, "mode");
            p.visibility = get_or(pj, path, "visibility", p.visibility);
            p.background_z_scale = get_or(pj, path, "background_z_scale", p.background_z_scale);
            p.background_x_scale = get_or(pj, path, "background_x_scale", p.background_x_scale);
            p.path_loss_db = get_or(pj, path, "path_loss_db", p.path_loss_db);
            cfg.per_mode_receiver.push_back(p);
            ++i;
        }
    }

    if (j.contains("detector")) {
        const auto& d = j.at("detector");
        cfg.detector.efficiency = get_or(d, "detector.", "efficiency", cfg.detector.efficiency);
        cfg.detector.dark_cps = get_or(d, "detector.", "dark_cps", cfg.detector.dark_cps);
        cfg.detector.dead_time_ps = get_or(d, "detector.", "dead_time_ps", cfg.detector.dead_time_ps);
        cfg.detector.tag_resolution_ps =
            get_or(d, "detector.", "tag_resolution_ps", cfg.detector.tag_resolution_ps);
    }
    if (j.contains("security")) {
        const auto& s = j.at("security");
        cfg.security.eps_sec = get_or(s, "security.", "eps_sec", cfg.security.eps_sec);
        cfg.security.eps_corr = get_or(s, "security.", "eps_corr", cfg.security.eps_corr);
        cfg.security.f_ec = get_or(s, "security.", "f_ec", cfg.security.f_ec);
    }

    if (!j.contains("run")) fail_precondition("run: missing required section");
    {
        const auto& r = j.at("run");
        cfg.run.duration_s = get_or(r, "run.", "duration_s", cfg.run.duration_s);
        cfg.run.stability_duration_s =
            get_or(r, "run.", "stability_duration_s", cfg.run.stability_duration_s);
        cfg.run.stability_window_s = get_or(r, "run.", "stability_window_s", cfg.run.stability_window_s);
        cfg.run.stability_mu = get_or(r, "run.", "stability_mu", cfg.run.stability_mu);
        cfg.run.master_seed = get_or<std::uint64_t>(r, "run.", "master_seed", cfg.run.master_seed);
        cfg.run.qkd_modes = get_field<std::vector<int>>(r, "run.", "qkd_modes");
        cfg.run.stability_mode = get_or(r, "run.", "stability_mode", cfg.run.qkd_modes.front());
        cfg.run.crosstalk_bin_width_ns =
            get_or(r, "run.", "crosstalk_bin_width_ns", cfg.run.crosstalk_bin_width_ns);
        cfg.run.pll_enabled = get_or(r, "run.", "pll_enabled", cfg.run.pll_enabled);
        if (r.contains("heater_drift")) {
            const auto& hd = r.at("heater_drift");
            cfg.run.heater_drift.sigma_rad =
                get_or(hd, "run.heater_drift.", "sigma_rad", cfg.run.heater_drift.sigma_rad);
            cfg.run.heater_drift.rate_per_s =
                get_or(hd, "run.heater_drift.", "rate_per_s", cfg.run.heater_drift.rate_per_s);
        }
        if (r.contains("optimize")) {
            const auto& o = r.at("optimize");
            cfg.run.optimize_grid.mu1_max = get_or(o, "run.optimize.", "mu1_max", 1.0);
            cfg.run.optimize_grid.mu2_min = get_or(o, "run.optimize.", "mu2_min", 0.01);
            cfg.run.optimize_grid.step = get_or(o, "run.optimize.", "step", 0.01);
        }
    }

    cfg.validate();
    return cfg;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail_precondition(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace oamqkd
