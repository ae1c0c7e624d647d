// Resolved per-mode link context and the per-window mean photon arithmetic
// shared by the pulse-level Monte Carlo and the aggregated tally sampler.
//
// Time axis per qubit slot: the early bin sits at the slot origin, the late
// bin at +bin_separation. The X arm sees three Michelson bins (0, bin, 2*bin);
// only the central one is gated for the X tally. Leaked light from other
// modes arrives shifted by the differential group delay and is folded over
// neighbouring slots when computing window overlaps.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "oamqkd/common.hpp"
#include "oamqkd/detection.hpp"
#include "oamqkd/protocol.hpp"

namespace oamqkd {

// One interfering transmitter as seen after the demux: its symbol statistics,
// the linear power leakage into this receiver, and the arrival-time offset.
struct LeakContext {
    ProtocolParams protocol;
    double leak_scale = 0.0;       // linear power factor, chip output -> this receiver
    double delay_offset_ps = 0.0;  // leaking mode's group delay minus own
    std::uint16_t prbs_seed = 1;
};

// Everything needed to simulate one demultiplexed mode.
struct ModeLinkContext {
    int mode = 0;
    ProtocolParams protocol;
    ReceiverSpec receiver;
    DetectorSpec detector;
    double signal_scale = 1.0;  // linear power factor, chip output -> receiver input
    double visibility = 0.92;
    std::uint16_t prbs_seed = 1;
    std::vector<LeakContext> leaks;
};

struct WindowMeans {
    double z_early = 0.0;
    double z_late = 0.0;
    double x_dark = 0.0;
    double x_bright = 0.0;

    WindowMeans& operator+=(const WindowMeans& o) {
        z_early += o.z_early;
        z_late += o.z_late;
        x_dark += o.x_dark;
        x_bright += o.x_bright;
        return *this;
    }
};

/// Extinction redistributes a small fraction of each qubit's mean into the
/// nominally empty bin (finite carving on/off ratio).
inline double extinction_fraction(double extinction_db) {
    const double r = db_loss_to_transmittance(extinction_db);
    return r / (1.0 + r);
}

inline PulsePair apply_extinction(const PulsePair& pair, double fraction) {
    return {pair.early * (1.0 - fraction) + pair.late * fraction,
            pair.late * (1.0 - fraction) + pair.early * fraction};
}

/// Michelson output bin means with the fringe term expressed through cos(phi),
/// so block-averaged fringes can be fed in directly.
inline InterferenceBins michelson_bins(const PulsePair& in, double visibility, double cos_phi) {
    const double fringe = 0.5 * std::sqrt(in.early * in.late) * visibility * cos_phi;
    InterferenceBins bins;
    bins.dark = {0.25 * in.early, 0.25 * (in.early + in.late) - fringe, 0.25 * in.late};
    bins.bright = {0.25 * in.early, 0.25 * (in.early + in.late) + fringe, 0.25 * in.late};
    return bins;
}

/// Fraction of a pulse centered at `center_ps` (relative to the slot origin)
/// accepted by the gate around `window_center_ps`, folded over +-2 slots.
inline double folded_window_overlap(const ProtocolParams& p, double gate_halfwidth_ps,
                                    double center_ps, double window_center_ps) {
    const double period = p.qubit_period_ps();
    double total = 0.0;
    for (int k = -2; k <= 2; ++k)
        total += gaussian_window_overlap(center_ps + k * period, window_center_ps - gate_halfwidth_ps,
                                         window_center_ps + gate_halfwidth_ps, p.pulse_sigma_ps);
    return total;
}

/// Window means contributed by one transmitted symbol arriving with the given
/// power scale and time offset. Used for the mode's own light (offset 0) and
/// for each leaked stream (offset = differential delay).
inline WindowMeans symbol_window_means(const ModeLinkContext& ctx, const ProtocolParams& tx,
                                       State state, double mu, double ext_fraction, double power_scale,
                                       double offset_ps, double cos_phi) {
    const ProtocolParams& own = ctx.protocol;
    const double gate = ctx.receiver.gate_halfwidth_ps;
    const double bin = own.bin_separation_ps;
    const PulsePair pair = apply_extinction(pair_for(state, mu), ext_fraction);

    WindowMeans wm;
    const double sz = power_scale * ctx.receiver.split_z * ctx.detector.efficiency;
    const std::array<double, 2> z_means{pair.early * sz, pair.late * sz};
    const std::array<double, 2> z_centers{offset_ps, offset_ps + tx.bin_separation_ps};
    for (int b = 0; b < 2; ++b) {
        wm.z_early += z_means[static_cast<size_t>(b)] *
                      folded_window_overlap(own, gate, z_centers[static_cast<size_t>(b)], 0.0);
        wm.z_late += z_means[static_cast<size_t>(b)] *
                     folded_window_overlap(own, gate, z_centers[static_cast<size_t>(b)], bin);
    }

    const double sx = power_scale * ctx.receiver.split_x * ctx.detector.efficiency;
    const InterferenceBins bins =
        michelson_bins({pair.early * sx, pair.late * sx}, ctx.visibility, cos_phi);
    for (int b = 0; b < 3; ++b) {
        const double center = offset_ps + b * tx.bin_separation_ps;
        const double ov = folded_window_overlap(own, gate, center, bin);
        wm.x_dark += bins.dark[static_cast<size_t>(b)] * ov;
        wm.x_bright += bins.bright[static_cast<size_t>(b)] * ov;
    }
    return wm;
}

inline WindowMeans own_window_means(const ModeLinkContext& ctx, State state, double mu, double cos_phi) {
    return symbol_window_means(ctx, ctx.protocol, state, mu,
                               extinction_fraction(ctx.protocol.extinction_db), ctx.signal_scale, 0.0,
                               cos_phi);
}

/// Stationary average over a leaking transmitter's symbol law.
inline WindowMeans leak_window_means_avg(const ModeLinkContext& ctx, const LeakContext& leak,
                                         double cos_phi) {
    WindowMeans wm;
    const ProtocolParams& lp = leak.protocol;
    const double ext = extinction_fraction(lp.extinction_db);
    const std::array<State, 3> states{State::Z0, State::Z1, State::Xp};
    const std::array<double, 3> p_state{0.5 * lp.p_z, 0.5 * lp.p_z, 1.0 - lp.p_z};
    const std::array<double, 2> mus{lp.mu1, lp.mu2};
    const std::array<double, 2> p_mu{lp.p_mu1, 1.0 - lp.p_mu1};
    for (int s = 0; s < 3; ++s) {
        for (int k = 0; k < 2; ++k) {
            const double w = p_state[static_cast<size_t>(s)] * p_mu[static_cast<size_t>(k)];
            const WindowMeans one =
                symbol_window_means(ctx, lp, states[static_cast<size_t>(s)], mus[static_cast<size_t>(k)],
                                    ext, leak.leak_scale, leak.delay_offset_ps, cos_phi);
            wm.z_early += w * one.z_early;
            wm.z_late += w * one.z_late;
            wm.x_dark += w * one.x_dark;
            wm.x_bright += w * one.x_bright;
        }
    }
    return wm;
}

inline WindowMeans all_leak_window_means(const ModeLinkContext& ctx, double cos_phi) {
    WindowMeans wm;
    for (const LeakContext& leak : ctx.leaks) wm += leak_window_means_avg(ctx, leak, cos_phi);
    return wm;
}

/// Uniform-background and dark-count means per gate window.
inline WindowMeans background_window_means(const ModeLinkContext& ctx) {
    const double width_s = 2.0 * ctx.receiver.gate_halfwidth_ps * 1e-12;
    const double rate_z =
        ctx.receiver.background_z_cps * ctx.receiver.background_z_uniform_fraction + ctx.detector.dark_cps;
    const double rate_x_each =
        0.5 * ctx.receiver.background_x_cps * ctx.receiver.background_x_uniform_fraction +
        ctx.detector.dark_cps;
    WindowMeans wm;
    wm.z_early = rate_z * width_s;
    wm.z_late = rate_z * width_s;
    wm.x_dark = rate_x_each * width_s;
    wm.x_bright = rate_x_each * width_s;
    return wm;
}

/// Stationary fringe average over the locked interferometer phase.
inline double stationary_cos_phi(const ReceiverSpec& receiver) {
    const double r = receiver.residual_phase_rms_rad;
    return std::exp(-0.5 * r * r);
}

}  // namespace oamqkd
