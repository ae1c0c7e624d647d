// Shipped scenario presets. The 2-mode and 3-mode presets reproduce the
// reference multiplexing experiments (crosstalk level, loss budget, QBER
// working points); the stability preset drives the 75-minute drift run.
// Numeric working points were fitted against the simulator itself; see
// README.md for the knobs involved.
#pragma once

#include <string>

#include "oamqkd/common.hpp"

namespace oamqkd {

inline const char* kPreset2Mode = R"PRESET({
  "chip": {"num_outputs": 26, "port_min": -7, "port_max": 7, "insertion_loss_db": 22.0},
  "heater": {"noise_sigma_rad": 0.2, "calibration_rounds": 6, "grid_points": 64},
  "fiber": {
    "length_m": 800.0,
    "loss_db": 1.0,
    "modes": [-7, -5],
    "group_delay_ns": [0.0, 3.761344],
    "perturbation": {
      "strength": 0.24609707641601558,
      "pairs": [{"mode_a": -7, "mode_b": -5, "re": 1.0, "im": 0.0}]
    }
  },
  "demux_coupling_db": {"-7": 14.9, "-5": 15.1},
  "protocol": {"qubit_rate_hz": 595000000.0, "bin_separation_ps": 800.0,
               "p_z": 0.9, "p_mu1": 0.7, "pulse_sigma_ps": 45.0},
  "transmitters": [
    {"mode": -7, "mu1": 0.26, "mu2": 0.13, "extinction_db": 16.6097},
    {"mode": -5, "mu1": 0.36, "mu2": 0.13, "extinction_db": 20.0685}
  ],
  "receiver": {
    "split_z": 0.9,
    "interferometer_delay_ps": 800.0,
    "visibility": 0.92,
    "residual_phase_rms_rad": 0.1,
    "pll": {"gain_per_s": 20.0, "dt_s": 0.001},
    "background_z_cps": 4000.0,
    "background_x_cps": 200000.0,
    "background_z_uniform_fraction": 1.0,
    "background_x_uniform_fraction": 0.0015,
    "sync_loss_db": 9.15,
    "gate_halfwidth_ps": 150.0
  },
  "per_mode_receiver": [
    {"mode": -7, "visibility": 0.9228, "background_z_scale": 0.0, "background_x_scale": 0.0,
     "path_loss_db": 0.0},
    {"mode": -5, "visibility": 0.9409, "background_z_scale": 2.2504, "background_x_scale": 2.8493,
     "path_loss_db": 0.3}
  ],
  "detector": {"efficiency": 0.83, "dark_cps": 50.0, "dead_time_ps": 33.0, "tag_resolution_ps": 1.0},
  "security": {"eps_sec": 1e-9, "eps_corr": 1e-9, "f_ec": 1.16},
  "run": {
    "duration_s": 300.0,
    "stability_duration_s": 4500.0,
    "stability_window_s": 75.0,
    "stability_mu": 0.24,
    "stability_mode": -7,
    "master_seed": 1,
    "qkd_modes": [-7, -5],
    "crosstalk_bin_width_ns": 0.1,
    "heater_drift": {"sigma_rad": 0.02, "rate_per_s": 0.005},
    "pll_enabled": true,
    "optimize": {"mu1_max": 1.0, "mu2_min": 0.01, "step": 0.01}
  }
})PRESET";

inline const char* kPreset3Mode = R"PRESET({
  "chip": {"num_outputs": 26, "port_min": -7, "port_max": 7, "insertion_loss_db": 22.0},
  "heater": {"noise_sigma_rad": 0.2, "calibration_rounds": 6, "grid_points": 64},
  "fiber": {
    "length_m": 800.0,
    "loss_db": 1.0,
    "modes": [-7, -5, 6],
    "group_delay_ns": [0.0, 3.641344, 3.060672],
    "perturbation": {
      "strength": 0.29859582519531258,
      "pairs": [
        {"mode_a": -7, "mode_b": -5, "re": 0.4, "im": 0.0},
        {"mode_a": -7, "mode_b": 6, "re": 1.0, "im": 0.0},
        {"mode_a": -5, "mode_b": 6, "re": 0.8, "im": 0.0}
      ]
    }
  },
  "demux_coupling_db": {"-7": 14.9, "-5": 15.1, "6": 15.0},
  "protocol": {"qubit_rate_hz": 595000000.0, "bin_separation_ps": 800.0,
               "p_z": 0.9, "p_mu1": 0.7, "pulse_sigma_ps": 45.0},
  "transmitters": [
    {"mode": -7, "mu1": 0.28, "mu2": 0.18, "extinction_db": 17.8593},
    {"mode": -5, "mu1": 0.46, "mu2": 0.305, "extinction_db": 16.6997},
    {"mode": 6, "mu1": 0.41, "mu2": 0.28, "extinction_db": 13.5331}
  ],
  "receiver": {
    "split_z": 0.9,
    "interferometer_delay_ps": 800.0,
    "visibility": 0.92,
    "residual_phase_rms_rad": 0.1,
    "pll": {"gain_per_s": 20.0, "dt_s": 0.001},
    "background_z_cps": 4000.0,
    "background_x_cps": 200000.0,
    "background_z_uniform_fraction": 1.0,
    "background_x_uniform_fraction": 0.0015,
    "sync_loss_db": 9.15,
    "gate_halfwidth_ps": 150.0
  },
  "per_mode_receiver": [
    {"mode": -7, "visibility": 0.88346, "background_z_scale": 0.6317, "background_x_scale": 0.0,
     "path_loss_db": 1.8},
    {"mode": -5, "visibility": 0.92095, "background_z_scale": 0.0, "background_x_scale": 16.0944,
     "path_loss_db": 1.2},
    {"mode": 6, "visibility": 0.90808, "background_z_scale": 0.0, "background_x_scale": 12.7023,
     "path_loss_db": 2.0}
  ],
  "detector": {"efficiency": 0.83, "dark_cps": 50.0, "dead_time_ps": 33.0, "tag_resolution_ps": 1.0},
  "security": {"eps_sec": 1e-9, "eps_corr": 1e-9, "f_ec": 1.16},
  "run": {
    "duration_s": 300.0,
    "stability_duration_s": 4500.0,
    "stability_window_s": 75.0,
    "stability_mu": 0.24,
    "stability_mode": -7,
    "master_seed": 1,
    "qkd_modes": [-7, -5, 6],
    "crosstalk_bin_width_ns": 0.1,
    "heater_drift": {"sigma_rad": 0.02, "rate_per_s": 0.005},
    "pll_enabled": true,
    "optimize": {"mu1_max": 1.0, "mu2_min": 0.01, "step": 0.01}
  }
})PRESET";

inline const char* kPresetStability = R"PRESET({
  "chip": {"num_outputs": 26, "port_min": -7, "port_max": 7, "insertion_loss_db": 22.0},
  "heater": {"noise_sigma_rad": 0.2, "calibration_rounds": 6, "grid_points": 64},
  "fiber": {
    "length_m": 800.0,
    "loss_db": 1.0,
    "modes": [-7],
    "group_delay_ns": [0.0],
    "perturbation": {"strength": 0.0, "pairs": []}
  },
  "demux_coupling_db": {"-7": 15.0},
  "protocol": {"qubit_rate_hz": 595000000.0, "bin_separation_ps": 800.0,
               "p_z": 0.9, "p_mu1": 0.7, "pulse_sigma_ps": 45.0},
  "transmitters": [
    {"mode": -7, "mu1": 0.24, "mu2": 0.12, "extinction_db": 18.5}
  ],
  "receiver": {
    "split_z": 0.9,
    "interferometer_delay_ps": 800.0,
    "visibility": 0.93,
    "residual_phase_rms_rad": 0.1,
    "pll": {"gain_per_s": 20.0, "dt_s": 0.001},
    "background_z_cps": 4000.0,
    "background_x_cps": 200000.0,
    "background_z_uniform_fraction": 1.0,
    "background_x_uniform_fraction": 0.0015,
    "sync_loss_db": 9.15,
    "gate_halfwidth_ps": 150.0
  },
  "per_mode_receiver": [],
  "detector": {"efficiency": 0.83, "dark_cps": 50.0, "dead_time_ps": 33.0, "tag_resolution_ps": 1.0},
  "security": {"eps_sec": 1e-9, "eps_corr": 1e-9, "f_ec": 1.16},
  "run": {
    "duration_s": 300.0,
    "stability_duration_s": 4500.0,
    "stability_window_s": 75.0,
    "stability_mu": 0.24,
    "stability_mode": -7,
    "master_seed": 1,
    "qkd_modes": [-7],
    "crosstalk_bin_width_ns": 0.1,
    "heater_drift": {"sigma_rad": 0.02, "rate_per_s": 0.005},
    "pll_enabled": true,
    "optimize": {"mu1_max": 1.0, "mu2_min": 0.01, "step": 0.01}
  }
})PRESET";

inline std::string preset_text(const std::string& name) {
    if (name == "2mode") return kPreset2Mode;
    if (name == "3mode") return kPreset3Mode;
    if (name == "stability") return kPresetStability;
    fail_precondition("preset: unknown name '" + name + "' (expected 2mode, 3mode or stability)");
}

}  // namespace oamqkd
