// Star-coupler emitter model. An input port selects the topological charge l;
// the chip fans the input out to a ring of K output spots carrying the phase
// ramp 2*pi*l*k/K plus per-spot heater trims, attenuated by the insertion loss.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "oamqkd/common.hpp"

namespace oamqkd {

struct ChipGeometry {
    int num_outputs = 26;  // K
    int port_min = -7;
    int port_max = 7;
    double insertion_loss_db = 22.0;

    bool supports(int port) const { return port >= port_min && port <= port_max; }

    void validate() const {
        if (num_outputs < 2) fail_precondition("chip.num_outputs: must be >= 2");
        if (port_min > port_max) fail_precondition("chip.port_min: exceeds port_max");
        const int max_abs = std::max(std::abs(port_min), std::abs(port_max));
        // K >= 2*max|l|+1 keeps the winding of every supported port unambiguous.
        if (num_outputs < 2 * max_abs + 1)
            fail_precondition("chip.num_outputs: K must be >= 2*max|l|+1 for the supported ports");
        if (insertion_loss_db < 0.0) fail_precondition("chip.insertion_loss_db: must be >= 0");
    }
};

struct HeaterState {
    std::vector<double> phase_trim;  // one offset per output spot, radians

    static HeaterState zeros(int k) {
        HeaterState h;
        h.phase_trim.assign(static_cast<size_t>(k), 0.0);
        return h;
    }

    void normalize() {
        for (double& d : phase_trim) d = wrap_phase(d);
    }
};

struct EmitterField {
    std::vector<cplx> amplitudes;  // length K, sqrt-power units

    double total_power() const {
        double p = 0.0;
        for (const cplx& a : amplitudes) p += std::norm(a);
        return p;
    }
};

/// Field emitted when `input_power` is injected into the given port.
/// a_k = sqrt(P*10^(-loss/10)/K) * exp(i*(2*pi*l*k/K + delta_k))
inline EmitterField emit_field(int port, const ChipGeometry& geometry, const HeaterState& heaters,
                               double input_power = 1.0) {
    geometry.validate();
    if (!geometry.supports(port)) fail_precondition("emit_field: port outside supported range");
    if (input_power <= 0.0) fail_precondition("emit_field: input_power must be > 0");
    if (heaters.phase_trim.size() != static_cast<size_t>(geometry.num_outputs))
        fail_precondition("emit_field: heater vector length must equal K");

    const int k_out = geometry.num_outputs;
    const double amp = std::sqrt(input_power * db_loss_to_transmittance(geometry.insertion_loss_db) /
                                 static_cast<double>(k_out));
    EmitterField field;
    field.amplitudes.resize(static_cast<size_t>(k_out));
    for (int k = 0; k < k_out; ++k) {
        const double phase = 2.0 * kPi * port * k / k_out + heaters.phase_trim[static_cast<size_t>(k)];
        field.amplitudes[static_cast<size_t>(k)] = amp * cplx(std::cos(phase), std::sin(phase));
    }
    return field;
}

/// Coherent sum of per-port fields, each scaled by its complex input amplitude.
inline EmitterField multiplex(const std::vector<std::pair<int, cplx>>& excitations,
                              const ChipGeometry& geometry, const HeaterState& heaters) {
    geometry.validate();
    if (excitations.empty()) fail_precondition("multiplex: at least one excitation required");
    for (size_t i = 0; i < excitations.size(); ++i)
        for (size_t j = i + 1; j < excitations.size(); ++j)
            if (excitations[i].first == excitations[j].first)
                fail_precondition("multiplex: duplicate port");

    EmitterField sum;
    sum.amplitudes.assign(static_cast<size_t>(geometry.num_outputs), cplx(0.0, 0.0));
    for (const auto& [port, amp] : excitations) {
        EmitterField f = emit_field(port, geometry, heaters, 1.0);
        for (size_t k = 0; k < f.amplitudes.size(); ++k) sum.amplitudes[k] += amp * f.amplitudes[k];
    }
    return sum;
}

/// Crosstalk evaluator: maps a heater setting to the worst-pair crosstalk in dB.
using HeaterObjective = std::function<double(const HeaterState&)>;

/// Cyclic coordinate descent over the K heater phases. Each coordinate is
/// line-searched over a fixed phase grid (plus the current value, so a sweep
/// can never increase the objective); ties go to the smaller |delta_k|.
/// Deterministic for a fixed grid.
inline HeaterState calibrate_heaters(const std::vector<int>& target_ports, const HeaterState& misaligned,
                                     int rounds, const HeaterObjective& objective, int grid_points = 64) {
    if (target_ports.empty()) fail_precondition("calibrate_heaters: target_ports must be non-empty");
    if (rounds < 1) fail_precondition("calibrate_heaters: rounds must be >= 1");
    if (grid_points < 2) fail_precondition("calibrate_heaters: grid must have >= 2 points");

    HeaterState state = misaligned;
    state.normalize();
    double best = objective(state);
    const int k_count = static_cast<int>(state.phase_trim.size());
    for (int round = 0; round < rounds; ++round) {
        for (int k = 0; k < k_count; ++k) {
            double best_phase = state.phase_trim[static_cast<size_t>(k)];
            for (int g = 0; g < grid_points; ++g) {
                const double cand = wrap_phase(-kPi + 2.0 * kPi * g / grid_points);
                state.phase_trim[static_cast<size_t>(k)] = cand;
                const double val = objective(state);
                const bool better = val < best;
                const bool tie_smaller = val == best && std::abs(cand) < std::abs(best_phase);
                if (better || tie_smaller) {
                    best = val;
                    best_phase = cand;
                }
            }
            state.phase_trim[static_cast<size_t>(k)] = best_phase;
        }
    }
    return state;
}

}  // namespace oamqkd
