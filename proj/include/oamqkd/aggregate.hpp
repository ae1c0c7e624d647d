// Aggregated block simulation: pulses of the same (state, intensity) type are
// exchangeable, so a block's tally is sampled exactly from per-type binomial
// draws instead of a pulse-by-pulse loop. Type counts come from the PRBS
// chooser's cycle structure, so both simulation paths see the same symbol
// composition. Detector dead time is neglected here (click rates are far
// below 1/dead_time); the pulse-level path enforces it.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "oamqkd/common.hpp"
#include "oamqkd/detection.hpp"
#include "oamqkd/link_model.hpp"
#include "oamqkd/protocol.hpp"

namespace oamqkd {

// Type index: state*2 + intensity (intensity 0 = mu1).
inline constexpr int kNumPulseTypes = 6;

// The 33-bit-per-pulse chooser walks the 4095-bit PRBS, so the type sequence
// repeats after 4095/gcd(33,4095) = 1365 pulses.
inline constexpr std::int64_t kChooserCyclePulses = 1365;

inline std::array<std::int64_t, kNumPulseTypes> prbs_type_counts(const ProtocolParams& params,
                                                                 std::uint16_t seed,
                                                                 std::int64_t n_pulses) {
    params.validate();
    if (n_pulses < 0) fail_precondition("prbs_type_counts: negative pulse count");
    const std::vector<std::uint8_t> bits = prbs_stream(seed, kPrbsPeriod);
    std::array<std::int64_t, kNumPulseTypes> cycle{};
    std::array<std::int64_t, kNumPulseTypes> counts{};
    std::array<std::uint8_t, kBitsPerPulse> window{};
    const std::int64_t rem = n_pulses % kChooserCyclePulses;
    for (std::int64_t i = 0; i < kChooserCyclePulses; ++i) {
        for (std::size_t j = 0; j < kBitsPerPulse; ++j)
            window[j] = bits[(static_cast<std::size_t>(i) * kBitsPerPulse + j) % kPrbsPeriod];
        const Symbol s = symbol_from_bits(window.data(), params);
        const int type = static_cast<int>(s.state) * 2 + s.intensity;
        cycle[static_cast<size_t>(type)] += 1;
        if (i < rem) counts[static_cast<size_t>(type)] += 1;
    }
    const std::int64_t full = n_pulses / kChooserCyclePulses;
    for (int t = 0; t < kNumPulseTypes; ++t) counts[static_cast<size_t>(t)] += full * cycle[static_cast<size_t>(t)];
    return counts;
}

// Per-type window click probabilities (shared by the sampled and the
// expected-value tally).
struct TypeClickProbs {
    double p_early = 0.0;
    double p_late = 0.0;
    double p_dark = 0.0;
    double p_bright = 0.0;
};

inline std::array<TypeClickProbs, kNumPulseTypes> type_click_probs(const ModeLinkContext& ctx,
                                                                   double cos_phi) {
    const WindowMeans extra_base = [&] {
        WindowMeans w = all_leak_window_means(ctx, cos_phi);
        w += background_window_means(ctx);
        return w;
    }();
    std::array<TypeClickProbs, kNumPulseTypes> probs;
    const std::array<State, 3> states{State::Z0, State::Z1, State::Xp};
    const std::array<double, 2> mus{ctx.protocol.mu1, ctx.protocol.mu2};
    for (int s = 0; s < 3; ++s) {
        for (int k = 0; k < 2; ++k) {
            WindowMeans wm = own_window_means(ctx, states[static_cast<size_t>(s)],
                                              mus[static_cast<size_t>(k)], cos_phi);
            wm += extra_base;
            TypeClickProbs& p = probs[static_cast<size_t>(s * 2 + k)];
            p.p_early = 1.0 - std::exp(-wm.z_early);
            p.p_late = 1.0 - std::exp(-wm.z_late);
            p.p_dark = 1.0 - std::exp(-wm.x_dark);
            p.p_bright = 1.0 - std::exp(-wm.x_bright);
        }
    }
    return probs;
}

/// Sample one block's tally. Within a slot the chronologically first accepted
/// click wins, which for the Z arm means the early window preempts the late
/// one; the two X outputs share a window, where simultaneous clicks are
/// vanishingly rare and resolved toward the dark output.
inline TallyBlock simulate_tally_aggregate(const ModeLinkContext& ctx, std::int64_t n_pulses,
                                           std::uint64_t seed, double cos_phi) {
    ctx.protocol.validate();
    ctx.receiver.validate();
    ctx.detector.validate();
    const std::array<std::int64_t, kNumPulseTypes> counts =
        prbs_type_counts(ctx.protocol, ctx.prbs_seed, n_pulses);
    const std::array<TypeClickProbs, kNumPulseTypes> probs = type_click_probs(ctx, cos_phi);

    std::mt19937_64 rng(seed);
    auto binom = [&rng](std::int64_t n, double p) -> std::int64_t {
        if (n <= 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        std::binomial_distribution<std::int64_t> dist(n, p);
        return dist(rng);
    };

    TallyBlock tally;
    tally.duration_s = static_cast<double>(n_pulses) * ctx.protocol.qubit_period_ps() * 1e-12;
    for (int s = 0; s < 3; ++s) {
        for (int k = 0; k < 2; ++k) {
            const std::int64_t n = counts[static_cast<size_t>(s * 2 + k)];
            const TypeClickProbs& p = probs[static_cast<size_t>(s * 2 + k)];
            if (s < 2)
                tally.sent_z[static_cast<size_t>(k)] += static_cast<double>(n);
            else
                tally.sent_x[static_cast<size_t>(k)] += static_cast<double>(n);
            if (s < 2) {
                const std::int64_t early = binom(n, p.p_early);
                const std::int64_t late = binom(n - early, p.p_late);
                tally.n_z[static_cast<size_t>(k)] += static_cast<double>(early + late);
                tally.m_z[static_cast<size_t>(k)] += static_cast<double>(s == 0 ? late : early);
            } else {
                const std::int64_t dark = binom(n, p.p_dark);
                const std::int64_t bright = binom(n - dark, p.p_bright);
                tally.n_x[static_cast<size_t>(k)] += static_cast<double>(dark + bright);
                tally.m_x[static_cast<size_t>(k)] += static_cast<double>(dark);
            }
        }
    }
    return tally;
}

/// Deterministic expected tally (no sampling): the analytic rate model used
/// by the mean-photon-number optimizer. Uses the nominal state/intensity
/// probabilities rather than a concrete PRBS phase.
inline TallyBlock expected_tally(const ModeLinkContext& ctx, double n_pulses, double cos_phi) {
    ctx.protocol.validate();
    const std::array<TypeClickProbs, kNumPulseTypes> probs = type_click_probs(ctx, cos_phi);
    const std::array<double, 3> p_state{0.5 * ctx.protocol.p_z, 0.5 * ctx.protocol.p_z,
                                        1.0 - ctx.protocol.p_z};
    const std::array<double, 2> p_mu{ctx.protocol.p_mu1, 1.0 - ctx.protocol.p_mu1};
    TallyBlock tally;
    tally.duration_s = n_pulses * ctx.protocol.qubit_period_ps() * 1e-12;
    for (int s = 0; s < 3; ++s) {
        for (int k = 0; k < 2; ++k) {
            const double n = n_pulses * p_state[static_cast<size_t>(s)] * p_mu[static_cast<size_t>(k)];
            const TypeClickProbs& p = probs[static_cast<size_t>(s * 2 + k)];
            if (s < 2)
                tally.sent_z[static_cast<size_t>(k)] += n;
            else
                tally.sent_x[static_cast<size_t>(k)] += n;
            if (s < 2) {
                const double early = n * p.p_early;
                const double late = (n - early) * p.p_late;
                tally.n_z[static_cast<size_t>(k)] += early + late;
                tally.m_z[static_cast<size_t>(k)] += (s == 0) ? late : early;
            } else {
                const double dark = n * p.p_dark;
                const double bright = (n - dark) * p.p_bright;
                tally.n_x[static_cast<size_t>(k)] += dark + bright;
                tally.m_x[static_cast<size_t>(k)] += dark;
            }
        }
    }
    return tally;
}

}  // namespace oamqkd
