// Pulse-level Monte Carlo of the receiver: every transmitted qubit (own and
// leaked) contributes Poisson photons per time-bin component, photon arrival
// times get the carved-pulse spread, backgrounds and dark counts run as
// uniform Poisson processes, and each detector enforces its dead time.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "oamqkd/common.hpp"
#include "oamqkd/detection.hpp"
#include "oamqkd/link_model.hpp"
#include "oamqkd/protocol.hpp"

namespace oamqkd {

// Residual interferometer phase sampled on a fixed grid; empty means phi = 0.
struct PhaseTrace {
    std::vector<double> phase_rad;
    double dt_s = 1e-3;

    double at(double t_s) const {
        if (phase_rad.empty()) return 0.0;
        const auto idx = static_cast<std::size_t>(std::max(0.0, t_s / dt_s));
        return phase_rad[std::min(idx, phase_rad.size() - 1)];
    }
};

namespace detail {

inline int sample_poisson_small(double mean, std::mt19937_64& rng) {
    if (mean <= 0.0) return 0;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng);
    double p = std::exp(-mean);
    double cum = p;
    int k = 0;
    while (u > cum && k < 200) {
        ++k;
        p *= mean / k;
        cum += p;
    }
    return k;
}

struct RawClickBuffer {
    std::vector<ClickEvent> events;

    void emit(int detector, double time_ps, double sigma_ps, double tag_res_ps,
              std::mt19937_64& rng) {
        double t = time_ps;
        if (sigma_ps > 0.0) {
            std::normal_distribution<double> jitter(0.0, sigma_ps);
            t += jitter(rng);
        }
        const double quantized = static_cast<double>(std::llround(t / tag_res_ps)) * tag_res_ps;
        events.push_back({detector, static_cast<std::int64_t>(std::llround(quantized))});
    }
};

inline void emit_symbol_clicks(RawClickBuffer& buf, const ModeLinkContext& ctx,
                               const ProtocolParams& tx, const Symbol& sym, double power_scale,
                               double ext_fraction, double slot_time_ps, double offset_ps,
                               double cos_phi, std::mt19937_64& rng) {
    const double mu = sym.intensity == 0 ? tx.mu1 : tx.mu2;
    const PulsePair pair = apply_extinction(pair_for(sym.state, mu), ext_fraction);
    const double tag = ctx.detector.tag_resolution_ps;

    const double sz = power_scale * ctx.receiver.split_z * ctx.detector.efficiency;
    const std::array<double, 2> z_means{pair.early * sz, pair.late * sz};
    for (int b = 0; b < 2; ++b) {
        const int n = sample_poisson_small(z_means[static_cast<size_t>(b)], rng);
        for (int i = 0; i < n; ++i)
            buf.emit(kDetZ, slot_time_ps + offset_ps + b * tx.bin_separation_ps, tx.pulse_sigma_ps,
                     tag, rng);
    }

    const double sx = power_scale * ctx.receiver.split_x * ctx.detector.efficiency;
    const InterferenceBins bins =
        michelson_bins({pair.early * sx, pair.late * sx}, ctx.visibility, cos_phi);
    for (int b = 0; b < 3; ++b) {
        const double center = slot_time_ps + offset_ps + b * tx.bin_separation_ps;
        int n = sample_poisson_small(bins.dark[static_cast<size_t>(b)], rng);
        for (int i = 0; i < n; ++i) buf.emit(kDetXDark, center, tx.pulse_sigma_ps, tag, rng);
        n = sample_poisson_small(bins.bright[static_cast<size_t>(b)], rng);
        for (int i = 0; i < n; ++i) buf.emit(kDetXBright, center, tx.pulse_sigma_ps, tag, rng);
    }
}

inline void emit_uniform_process(RawClickBuffer& buf, int detector, double rate_cps,
                                 double duration_s, double tag_res_ps, std::mt19937_64& rng) {
    if (rate_cps <= 0.0 || duration_s <= 0.0) return;
    std::poisson_distribution<long long> count(rate_cps * duration_s);
    std::uniform_real_distribution<double> uni(0.0, duration_s * 1e12);
    const long long n = count(rng);
    for (long long i = 0; i < n; ++i) buf.emit(detector, uni(rng), 0.0, tag_res_ps, rng);
}

inline ClickLog finalize_clicks(RawClickBuffer& buf, const DetectorSpec& detector) {
    std::sort(buf.events.begin(), buf.events.end(), [](const ClickEvent& a, const ClickEvent& b) {
        return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.detector < b.detector;
    });
    ClickLog log;
    std::array<std::int64_t, 3> last{-1, -1, -1};
    const auto dead = static_cast<std::int64_t>(std::llround(detector.dead_time_ps));
    for (const ClickEvent& ev : buf.events) {
        auto& prev = last[static_cast<size_t>(ev.detector)];
        if (prev >= 0 && ev.time_ps - prev < dead) continue;  // detector still recovering
        prev = ev.time_ps;
        log.events.push_back(ev);
    }
    return log;
}

}  // namespace detail

/// Full multi-stream receiver simulation for one block. `leak_symbols` must
/// align with `ctx.leaks`.
inline ClickLog detect_block_multi(const ModeLinkContext& ctx, const SymbolSequence& own,
                                   const std::vector<SymbolSequence>& leak_symbols,
                                   std::uint64_t seed, const PhaseTrace& phase = {}) {
    ctx.protocol.validate();
    ctx.receiver.validate();
    ctx.detector.validate();
    if (leak_symbols.size() != ctx.leaks.size())
        fail_precondition("detect_block_multi: one symbol stream per leak required");

    std::mt19937_64 rng(seed);
    detail::RawClickBuffer buf;
    const double period = ctx.protocol.qubit_period_ps();
    const double own_ext = extinction_fraction(ctx.protocol.extinction_db);

    for (std::size_t n = 0; n < own.symbols.size(); ++n) {
        const double t_slot = static_cast<double>(n) * period;
        const double cphi = std::cos(phase.at(t_slot * 1e-12));
        detail::emit_symbol_clicks(buf, ctx, ctx.protocol, own.symbols[n], ctx.signal_scale, own_ext,
                                   t_slot, 0.0, cphi, rng);
    }
    for (std::size_t li = 0; li < ctx.leaks.size(); ++li) {
        const LeakContext& leak = ctx.leaks[li];
        const double ext = extinction_fraction(leak.protocol.extinction_db);
        for (std::size_t m = 0; m < leak_symbols[li].symbols.size(); ++m) {
            const double t_slot = static_cast<double>(m) * period;
            const double cphi = std::cos(phase.at((t_slot + leak.delay_offset_ps) * 1e-12));
            detail::emit_symbol_clicks(buf, ctx, leak.protocol, leak_symbols[li].symbols[m],
                                       leak.leak_scale, ext, t_slot, leak.delay_offset_ps, cphi, rng);
        }
    }

    const double duration_s = static_cast<double>(own.symbols.size()) * period * 1e-12;
    const double tag = ctx.detector.tag_resolution_ps;
    detail::emit_uniform_process(
        buf, kDetZ,
        ctx.receiver.background_z_cps * ctx.receiver.background_z_uniform_fraction +
            ctx.detector.dark_cps,
        duration_s, tag, rng);
    const double x_each =
        0.5 * ctx.receiver.background_x_cps * ctx.receiver.background_x_uniform_fraction +
        ctx.detector.dark_cps;
    detail::emit_uniform_process(buf, kDetXDark, x_each, duration_s, tag, rng);
    detail::emit_uniform_process(buf, kDetXBright, x_each, duration_s, tag, rng);

    return detail::finalize_clicks(buf, ctx.detector);
}

/// Single-stream receiver simulation: one transmitter, one total link loss.
inline ClickLog detect_block(const SymbolSequence& symbols, const ProtocolParams& params,
                             double link_loss_db, const ReceiverSpec& receiver,
                             const DetectorSpec& detector, std::uint64_t seed,
                             const PhaseTrace& phase = {}) {
    if (link_loss_db < 0.0) fail_precondition("detect_block: link loss must be >= 0");
    ModeLinkContext ctx;
    ctx.protocol = params;
    ctx.receiver = receiver;
    ctx.detector = detector;
    ctx.signal_scale = db_loss_to_transmittance(link_loss_db);
    ctx.visibility = receiver.visibility;
    return detect_block_multi(ctx, symbols, {}, seed, phase);
}

/// ClickLog invariant used throughout the tests.
inline bool dead_time_respected(const ClickLog& log, const DetectorSpec& detector) {
    std::array<std::int64_t, 3> last{-1, -1, -1};
    const auto dead = static_cast<std::int64_t>(std::llround(detector.dead_time_ps));
    for (const ClickEvent& ev : log.events) {
        auto& prev = last[static_cast<size_t>(ev.detector)];
        if (prev >= 0 && ev.time_ps - prev < dead) return false;
        prev = ev.time_ps;
    }
    return true;
}

}  // namespace oamqkd
