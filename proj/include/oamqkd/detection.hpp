// Receiver-side primitives: detector and receiver specs, click logs, the
// unbalanced-Michelson bin arithmetic, the interferometer phase-lock process,
// and sifting of time-tagged clicks into per-basis/per-intensity tallies.
//
// Detector ids in every ClickLog: 0 = Z arm SNSPD, 1 = X dark output,
// 2 = X bright output.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "oamqkd/common.hpp"
#include "oamqkd/protocol.hpp"

namespace oamqkd {

inline constexpr int kDetZ = 0;
inline constexpr int kDetXDark = 1;
inline constexpr int kDetXBright = 2;

struct DetectorSpec {
    double efficiency = 0.83;
    double dark_cps = 50.0;
    double dead_time_ps = 33.0;
    double tag_resolution_ps = 1.0;

    void validate() const {
        if (!(efficiency > 0.0 && efficiency <= 1.0))
            fail_precondition("detector.efficiency: must lie in (0,1]");
        if (dark_cps < 0.0 || dead_time_ps < 0.0 || tag_resolution_ps <= 0.0)
            fail_precondition("detector: rates/times must be non-negative, tag resolution positive");
    }
};

struct PllParams {
    double gain_per_s = 20.0;            // proportional feedback strength
    double diffusion_rad_rt_s = 0.632;   // phase diffusion, rad per sqrt(second)
    double dt_s = 1e-3;                  // integration step
};

struct ReceiverSpec {
    double split_z = 0.9;
    double split_x = 0.1;
    double interferometer_delay_ps = 800.0;
    double visibility = 0.92;
    double residual_phase_rms_rad = 0.1;  // locked-loop stationary RMS
    PllParams pll;
    double background_z_cps = 4000.0;
    double background_x_cps = 200000.0;
    // Fraction of each background that behaves as a time-uniform process at
    // the detector; the rest is synchronous with the clock exchange and never
    // lands inside the qubit gates.
    double background_z_uniform_fraction = 1.0;
    double background_x_uniform_fraction = 1.0;
    double sync_loss_db = 9.15;
    double gate_halfwidth_ps = 250.0;

    void validate() const {
        if (std::abs(split_z + split_x - 1.0) > 1e-9)
            fail_precondition("receiver.split: split_z + split_x must equal 1");
        if (!(split_z > 0.0 && split_z < 1.0)) fail_precondition("receiver.split_z: must lie in (0,1)");
        if (!(visibility >= 0.0 && visibility <= 1.0))
            fail_precondition("receiver.visibility: must lie in [0,1]");
        if (residual_phase_rms_rad < 0.0) fail_precondition("receiver.residual_phase_rms_rad: must be >= 0");
        if (background_z_cps < 0.0 || background_x_cps < 0.0)
            fail_precondition("receiver.background: rates must be >= 0");
        if (background_z_uniform_fraction < 0.0 || background_z_uniform_fraction > 1.0 ||
            background_x_uniform_fraction < 0.0 || background_x_uniform_fraction > 1.0)
            fail_precondition("receiver.background_uniform_fraction: must lie in [0,1]");
        if (sync_loss_db < 0.0) fail_precondition("receiver.sync_loss_db: must be >= 0");
        if (gate_halfwidth_ps <= 0.0) fail_precondition("receiver.gate_halfwidth_ps: must be > 0");
    }
};

struct ClickEvent {
    int detector = 0;
    std::int64_t time_ps = 0;
};

struct ClickLog {
    std::vector<ClickEvent> events;  // time-ordered
};

// Sifted counts and errors per (basis, intensity); index 0 = mu1, 1 = mu2.
// Counts are doubles so the same type carries expected values in the analytic
// rate model; sampled tallies always hold integers. The transmitter-side
// class totals (pulses sent per basis/intensity) travel with the tally: the
// decoy analysis normalizes by them exactly, since the pattern generator's
// realized class fractions deviate from the nominal probabilities by the
// chooser-cycle quantization.
struct TallyBlock {
    double duration_s = 0.0;
    std::array<double, 2> n_z{0.0, 0.0};
    std::array<double, 2> m_z{0.0, 0.0};
    std::array<double, 2> n_x{0.0, 0.0};
    std::array<double, 2> m_x{0.0, 0.0};
    std::array<double, 2> sent_z{0.0, 0.0};
    std::array<double, 2> sent_x{0.0, 0.0};

    void validate() const {
        for (int k = 0; k < 2; ++k) {
            if (m_z[static_cast<size_t>(k)] < 0 || n_z[static_cast<size_t>(k)] < 0 ||
                m_x[static_cast<size_t>(k)] < 0 || n_x[static_cast<size_t>(k)] < 0)
                fail_precondition("tally: counts must be non-negative");
            if (m_z[static_cast<size_t>(k)] > n_z[static_cast<size_t>(k)] ||
                m_x[static_cast<size_t>(k)] > n_x[static_cast<size_t>(k)])
                fail_precondition("tally: errors cannot exceed counts");
        }
        if (duration_s <= 0.0) fail_precondition("tally: duration must be > 0");
    }

    double qber_z(int k) const {
        return n_z[static_cast<size_t>(k)] > 0 ? m_z[static_cast<size_t>(k)] / n_z[static_cast<size_t>(k)]
                                               : 0.0;
    }
    double qber_x(int k) const {
        return n_x[static_cast<size_t>(k)] > 0 ? m_x[static_cast<size_t>(k)] / n_x[static_cast<size_t>(k)]
                                               : 0.0;
    }

    TallyBlock& merge(const TallyBlock& other) {
        duration_s += other.duration_s;
        for (size_t k = 0; k < 2; ++k) {
            n_z[k] += other.n_z[k];
            m_z[k] += other.m_z[k];
            n_x[k] += other.n_x[k];
            m_x[k] += other.m_x[k];
            sent_z[k] += other.sent_z[k];
            sent_x[k] += other.sent_x[k];
        }
        return *this;
    }
};

// Mean photon number per output time bin of the unbalanced Michelson, for a
// pulse pair whose early/late means are taken at the interferometer input.
// Bins are (first, central, last), spaced by the arm delay.
struct InterferenceBins {
    std::array<double, 3> dark{0.0, 0.0, 0.0};
    std::array<double, 3> bright{0.0, 0.0, 0.0};
};

/// Central-bin fringe: early light through the long arm overlaps late light
/// through the short arm. Z states place only one pulse in the pair, so their
/// central bin carries no fringe. The dark output is the one locked toward
/// destructive interference at zero residual phase.
inline InterferenceBins interfere(const PulsePair& pair, double delay_ps, double bin_separation_ps,
                                  double visibility, double residual_phase_rad) {
    if (std::abs(delay_ps - bin_separation_ps) > 1e-9)
        fail_precondition("interfere: interferometer delay must equal the bin separation");
    const double e = pair.early, l = pair.late;
    const double fringe = 0.5 * std::sqrt(e * l) * visibility * std::cos(residual_phase_rad);
    InterferenceBins bins;
    bins.dark = {0.25 * e, 0.25 * (e + l) - fringe, 0.25 * l};
    bins.bright = {0.25 * e, 0.25 * (e + l) + fringe, 0.25 * l};
    return bins;
}

/// Probability that a central-bin detection lands on the dark output for an
/// X+ state: (1 - V cos(phi))/2.
inline double intrinsic_x_error(double visibility, double residual_phase_rad) {
    return 0.5 * (1.0 - visibility * std::cos(residual_phase_rad));
}

/// Interferometer phase under proportional feedback: a mean-reverting random
/// walk phi' = phi - gain*phi*dt + diffusion*sqrt(dt)*N(0,1). With gain 0 the
/// phase diffuses without bound; with gain > 0 the stationary RMS is
/// diffusion / sqrt(2*gain).
inline std::vector<double> pll_phase_process(const PllParams& params, double duration_s,
                                             std::uint64_t seed, double initial_phase_rad = 0.0) {
    if (params.gain_per_s < 0.0) fail_precondition("pll: gain must be >= 0");
    if (params.dt_s <= 0.0) fail_precondition("pll: dt must be > 0");
    const std::size_t steps = static_cast<std::size_t>(std::ceil(duration_s / params.dt_s));
    std::vector<double> phase(steps + 1);
    phase[0] = initial_phase_rad;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double kick = params.diffusion_rad_rt_s * std::sqrt(params.dt_s);
    for (std::size_t i = 0; i < steps; ++i)
        phase[i + 1] = phase[i] - params.gain_per_s * phase[i] * params.dt_s + kick * gauss(rng);
    return phase;
}

inline double stationary_pll_rms(const PllParams& params) {
    if (params.gain_per_s <= 0.0) fail_precondition("pll: stationary RMS undefined for gain 0");
    return params.diffusion_rad_rt_s / std::sqrt(2.0 * params.gain_per_s);
}

/// Match time-tagged clicks to pulse slots and accumulate sifted counts.
/// Z errors are clicks in the opposite bin of the sent Z state; X errors are
/// dark-output central-bin clicks on X+ slots. The first accepted click per
/// (slot, arm) wins; transmitter and receiver share the same clock origin.
inline TallyBlock sift(const SymbolSequence& symbols, const ClickLog& clicks,
                       const ProtocolParams& params, double gate_halfwidth_ps) {
    params.validate();
    const double period = params.qubit_period_ps();
    if (2.0 * gate_halfwidth_ps > period)
        fail_precondition("sift: gating window larger than the qubit period is ambiguous");
    if (gate_halfwidth_ps <= 0.0) fail_precondition("sift: gate width must be > 0");

    const std::int64_t n_slots = static_cast<std::int64_t>(symbols.symbols.size());
    TallyBlock tally;
    tally.duration_s = n_slots * period * 1e-12;
    for (const Symbol& s : symbols.symbols) {
        if (s.state == State::Xp)
            tally.sent_x[s.intensity] += 1.0;
        else
            tally.sent_z[s.intensity] += 1.0;
    }

    std::vector<std::uint8_t> z_claimed(symbols.symbols.size(), 0);
    std::vector<std::uint8_t> x_claimed(symbols.symbols.size(), 0);

    for (const ClickEvent& ev : clicks.events) {
        const double t = static_cast<double>(ev.time_ps);
        // Candidate (slot, bin) windows for this arm; pick the nearest center.
        double best_dt = 1e300;
        std::int64_t slot = -1;
        int bin = -1;  // 0 = early, 1 = late (Z arm); 1 = central (X arm)
        const std::int64_t s0 = static_cast<std::int64_t>(std::floor(t / period)) - 1;
        for (std::int64_t s = s0; s <= s0 + 2; ++s) {
            if (s < 0 || s >= n_slots) continue;
            const std::array<double, 2> centers{s * period, s * period + params.bin_separation_ps};
            const int first_bin = (ev.detector == kDetZ) ? 0 : 1;
            for (int b = first_bin; b < 2; ++b) {
                const double dt = std::abs(t - centers[static_cast<size_t>(b)]);
                if (dt < best_dt) {
                    best_dt = dt;
                    slot = s;
                    bin = b;
                }
            }
        }
        if (slot < 0 || best_dt > gate_halfwidth_ps) continue;

        const Symbol& sym = symbols.symbols[static_cast<size_t>(slot)];
        const size_t k = sym.intensity;
        if (ev.detector == kDetZ) {
            if (sym.state == State::Xp) continue;  // basis mismatch, discarded
            if (z_claimed[static_cast<size_t>(slot)]) continue;
            z_claimed[static_cast<size_t>(slot)] = 1;
            tally.n_z[k] += 1.0;
            const int sent_bin = (sym.state == State::Z1) ? 1 : 0;
            if (bin != sent_bin) tally.m_z[k] += 1.0;
        } else {
            if (sym.state != State::Xp) continue;
            if (x_claimed[static_cast<size_t>(slot)]) continue;
            x_claimed[static_cast<size_t>(slot)] = 1;
            tally.n_x[k] += 1.0;
            if (ev.detector == kDetXDark) tally.m_x[k] += 1.0;
        }
    }
    return tally;
}

}  // namespace oamqkd
