#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oamqkd/aggregate.hpp"
#include "oamqkd/monte_carlo.hpp"

using namespace oamqkd;

namespace {

// A deliberately lossy-but-busy context: one leak path, uniform backgrounds,
// finite extinction, imperfect visibility.
ModeLinkContext busy_context() {
    ModeLinkContext ctx;
    ctx.protocol.mu1 = 0.3;
    ctx.protocol.mu2 = 0.15;
    ctx.protocol.extinction_db = 16.0;
    ctx.protocol.pulse_sigma_ps = 45.0;
    ctx.receiver.visibility = 0.93;
    ctx.receiver.background_z_cps = 4000.0;
    ctx.receiver.background_x_cps = 200000.0;
    ctx.receiver.background_x_uniform_fraction = 0.002;
    ctx.receiver.gate_halfwidth_ps = 150.0;
    ctx.detector.dark_cps = 50.0;
    ctx.signal_scale = db_loss_to_transmittance(22.0);
    ctx.visibility = 0.93;
    ctx.prbs_seed = 101;
    LeakContext leak;
    leak.protocol = ctx.protocol;
    leak.protocol.mu1 = 0.4;
    leak.protocol.mu2 = 0.2;
    leak.leak_scale = ctx.signal_scale * db_to_power(-9.0);
    leak.delay_offset_ps = 3641.344;  // 280 ps modulo the qubit period
    leak.prbs_seed = 707;
    ctx.leaks.push_back(leak);
    return ctx;
}

}  // namespace

TEST_CASE("prbs_type_counts: exact match against pulse-by-pulse generation") {
    ProtocolParams params;
    params.p_z = 0.9;
    params.p_mu1 = 0.7;
    const std::int64_t n = 10000;
    const auto counts = prbs_type_counts(params, 321, n);
    const auto bits = prbs_stream(321, static_cast<size_t>(n) * kBitsPerPulse);
    const SymbolSequence seq = generate_symbols(params, static_cast<size_t>(n), bits);
    std::array<std::int64_t, kNumPulseTypes> direct{};
    for (const Symbol& s : seq.symbols)
        direct[static_cast<size_t>(static_cast<int>(s.state) * 2 + s.intensity)] += 1;
    for (int t = 0; t < kNumPulseTypes; ++t)
        REQUIRE(counts[static_cast<size_t>(t)] == direct[static_cast<size_t>(t)]);
}

TEST_CASE("prbs_type_counts: totals always sum to the pulse count") {
    ProtocolParams params;
    for (std::int64_t n : {0LL, 1LL, 1364LL, 1365LL, 999999LL}) {
        const auto counts = prbs_type_counts(params, 77, n);
        std::int64_t total = 0;
        for (auto c : counts) total += c;
        REQUIRE(total == n);
    }
}

TEST_CASE("aggregate sampler agrees with the pulse-level Monte Carlo") {
    const ModeLinkContext ctx = busy_context();
    const std::int64_t n = 1500000;
    const double phi = 0.12;

    // Pulse-level.
    const auto own_bits = prbs_stream(ctx.prbs_seed, static_cast<size_t>(n) * kBitsPerPulse);
    const SymbolSequence own = generate_symbols(ctx.protocol, static_cast<size_t>(n), own_bits);
    const auto leak_bits =
        prbs_stream(ctx.leaks[0].prbs_seed, static_cast<size_t>(n) * kBitsPerPulse);
    const SymbolSequence leak =
        generate_symbols(ctx.leaks[0].protocol, static_cast<size_t>(n), leak_bits);
    PhaseTrace trace;
    trace.phase_rad = {phi};
    trace.dt_s = 1e9;
    const ClickLog log = detect_block_multi(ctx, own, {leak}, 31337, trace);
    const TallyBlock mc = sift(own, log, ctx.protocol, ctx.receiver.gate_halfwidth_ps);

    // Aggregated.
    const TallyBlock agg = simulate_tally_aggregate(ctx, n, 77777, std::cos(phi));

    auto close = [](double a, double b) {
        const double sigma = std::sqrt(std::max(a, b) + 1.0);
        REQUIRE(std::abs(a - b) < 5.0 * sigma);
    };
    for (size_t k = 0; k < 2; ++k) {
        close(mc.n_z[k], agg.n_z[k]);
        close(mc.m_z[k], agg.m_z[k]);
        close(mc.n_x[k], agg.n_x[k]);
        close(mc.m_x[k], agg.m_x[k]);
    }
}

TEST_CASE("expected_tally matches the mean of aggregate samples") {
    // The analytic model draws the symbol mix from the nominal probabilities
    // while the sampler counts the actual chooser cycle, so agreement is
    // expected only up to the ~1% composition quantization of one cycle.
    ModeLinkContext ctx = busy_context();
    ctx.leaks.clear();
    const std::int64_t n = 4000000;
    const double cos_phi = 0.95;
    const TallyBlock expected = expected_tally(ctx, static_cast<double>(n), cos_phi);
    TallyBlock sum;
    const int reps = 12;
    for (int r = 0; r < reps; ++r)
        sum.merge(simulate_tally_aggregate(ctx, n, 900 + static_cast<std::uint64_t>(r), cos_phi));
    for (size_t k = 0; k < 2; ++k) {
        const double band_z =
            0.02 * expected.n_z[k] + 5.0 * std::sqrt(expected.n_z[k] / reps) + 1.0;
        const double band_x =
            0.02 * expected.n_x[k] + 5.0 * std::sqrt(expected.n_x[k] / reps) + 1.0;
        REQUIRE(sum.n_z[k] / reps == Catch::Approx(expected.n_z[k]).margin(band_z));
        REQUIRE(sum.n_x[k] / reps == Catch::Approx(expected.n_x[k]).margin(band_x));
        // Error fractions are composition-independent; hold them tighter.
        const double q_sample = sum.m_z[k] / std::max(sum.n_z[k], 1.0);
        const double q_expected = expected.m_z[k] / std::max(expected.n_z[k], 1.0);
        REQUIRE(q_sample == Catch::Approx(q_expected)
                                .margin(5.0 * std::sqrt(q_expected / std::max(sum.n_z[k], 1.0)) + 1e-4));
    }
}

TEST_CASE("aggregate sampler is deterministic for a fixed seed") {
    const ModeLinkContext ctx = busy_context();
    const TallyBlock a = simulate_tally_aggregate(ctx, 500000, 5, 0.99);
    const TallyBlock b = simulate_tally_aggregate(ctx, 500000, 5, 0.99);
    REQUIRE(a.n_z == b.n_z);
    REQUIRE(a.m_z == b.m_z);
    REQUIRE(a.n_x == b.n_x);
    REQUIRE(a.m_x == b.m_x);
}
