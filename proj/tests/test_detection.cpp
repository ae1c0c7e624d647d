#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oamqkd/detection.hpp"
#include "oamqkd/monte_carlo.hpp"
#include "oamqkd/protocol.hpp"

using namespace oamqkd;

namespace {

SymbolSequence constant_stream(State state, std::uint8_t intensity, size_t n) {
    SymbolSequence seq;
    seq.symbols.assign(n, Symbol{state, intensity});
    return seq;
}

ReceiverSpec quiet_receiver() {
    ReceiverSpec r;
    r.background_z_cps = 0.0;
    r.background_x_cps = 0.0;
    r.gate_halfwidth_ps = 250.0;
    return r;
}

DetectorSpec quiet_detector() {
    DetectorSpec d;
    d.dark_cps = 0.0;
    return d;
}

}  // namespace

TEST_CASE("interfere: perfect X+ interference nulls the dark central bin") {
    const PulsePair xplus{0.5, 0.5};
    const InterferenceBins bins = interfere(xplus, 800.0, 800.0, 1.0, 0.0);
    REQUIRE(bins.dark[1] == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(bins.bright[1] == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(bins.dark[0] == Catch::Approx(0.125));
    REQUIRE(bins.dark[2] == Catch::Approx(0.125));
}

TEST_CASE("interfere: pi residual phase flips the fringe") {
    const PulsePair xplus{0.5, 0.5};
    const InterferenceBins bins = interfere(xplus, 800.0, 800.0, 1.0, kPi);
    REQUIRE(bins.dark[1] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(bins.bright[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("interfere: intrinsic X error rate is (1-V)/2") {
    REQUIRE(intrinsic_x_error(0.92, 0.0) == Catch::Approx(0.04).epsilon(1e-12));
    const InterferenceBins bins = interfere({0.5, 0.5}, 800.0, 800.0, 0.92, 0.0);
    REQUIRE(bins.dark[1] / (bins.dark[1] + bins.bright[1]) == Catch::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("interfere: Z states carry no central-bin fringe") {
    const InterferenceBins z0 = interfere({1.0, 0.0}, 800.0, 800.0, 1.0, 0.3);
    REQUIRE(z0.dark[1] == Catch::Approx(0.25));
    REQUIRE(z0.bright[1] == Catch::Approx(0.25));
    REQUIRE(z0.dark[2] == 0.0);
}

TEST_CASE("interfere: delay mismatch rejected") {
    REQUIRE_THROWS_AS(interfere({0.5, 0.5}, 700.0, 800.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("pll: zero gain and zero diffusion give a constant phase") {
    PllParams p;
    p.gain_per_s = 0.0;
    p.diffusion_rad_rt_s = 0.0;
    const auto phase = pll_phase_process(p, 1.0, 5, 0.4);
    for (double v : phase) REQUIRE(v == 0.4);
}

TEST_CASE("pll: stationary RMS matches diffusion/sqrt(2*gain) within 10%") {
    PllParams p;
    p.gain_per_s = 20.0;
    p.diffusion_rad_rt_s = 0.632;
    p.dt_s = 1e-3;
    const double expected = stationary_pll_rms(p);
    const auto phase = pll_phase_process(p, 4000.0, 99);
    double sum2 = 0.0;
    size_t count = 0;
    for (size_t i = phase.size() / 10; i < phase.size(); ++i) {
        sum2 += phase[i] * phase[i];
        ++count;
    }
    const double rms = std::sqrt(sum2 / static_cast<double>(count));
    REQUIRE(rms == Catch::Approx(expected).epsilon(0.10));
}

TEST_CASE("pll: residual RMS 0.29 rad maps to roughly 2% X error") {
    PllParams p;
    p.gain_per_s = 20.0;
    p.diffusion_rad_rt_s = 0.29 * std::sqrt(2.0 * p.gain_per_s);
    const auto phase = pll_phase_process(p, 3000.0, 7);
    double err_sum = 0.0;
    for (double v : phase) err_sum += intrinsic_x_error(1.0, v);
    const double mean_err = err_sum / static_cast<double>(phase.size());
    // Oracle: E[(1-cos phi)/2] = (1-exp(-sigma^2/2))/2 = 2.06% at sigma 0.29.
    REQUIRE(mean_err == Catch::Approx(0.0206).epsilon(0.15));
}

TEST_CASE("pll: feedback reduces the long-run X-error variance versus gain 0") {
    PllParams on;
    on.gain_per_s = 20.0;
    on.diffusion_rad_rt_s = 0.632;
    PllParams off = on;
    off.gain_per_s = 0.0;
    const auto locked = pll_phase_process(on, 1500.0, 1234);
    const auto free = pll_phase_process(off, 1500.0, 1234);
    auto qx_variance = [](const std::vector<double>& phase) {
        double m = 0.0, m2 = 0.0;
        for (double v : phase) {
            const double q = intrinsic_x_error(1.0, v);
            m += q;
            m2 += q * q;
        }
        m /= static_cast<double>(phase.size());
        return m2 / static_cast<double>(phase.size()) - m * m;
    };
    REQUIRE(qx_variance(locked) < qx_variance(free));
}

TEST_CASE("detect_block: vacuum input with no noise gives an empty log") {
    ProtocolParams params;
    params.mu1 = 2e-300;
    params.mu2 = 1e-300;
    const SymbolSequence seq = constant_stream(State::Z0, 0, 20000);
    const ClickLog log = detect_block(seq, params, 0.0, quiet_receiver(), quiet_detector(), 42);
    REQUIRE(log.events.empty());
}

TEST_CASE("detect_block: Z click rate matches the closed-form mean") {
    // mu1 = 0.26 through 25.15 dB, 90:10 split, 83% efficiency:
    // p approx 0.26*10^-2.515*0.9*0.83 = 5.94e-4 per pulse.
    ProtocolParams params;
    params.pulse_sigma_ps = 45.0;
    const size_t n = 2000000;
    const SymbolSequence seq = constant_stream(State::Z0, 0, n);
    const ClickLog log = detect_block(seq, params, 25.15, quiet_receiver(), quiet_detector(), 11);
    size_t z_clicks = 0;
    for (const ClickEvent& ev : log.events) z_clicks += ev.detector == kDetZ ? 1 : 0;
    const double expected = 5.933e-4;  // gate-free closed form; all clicks logged
    const double sigma = std::sqrt(expected / static_cast<double>(n));
    REQUIRE(std::abs(static_cast<double>(z_clicks) / n - expected) < 3.5 * sigma);
}

TEST_CASE("detect_block: dark counts accumulate at the configured rate") {
    ProtocolParams params;
    params.mu1 = 2e-300;
    params.mu2 = 1e-300;
    DetectorSpec det = quiet_detector();
    det.dark_cps = 5000.0;
    const size_t n = static_cast<size_t>(0.05 * params.qubit_rate_hz);  // 50 ms block
    const SymbolSequence seq = constant_stream(State::Z0, 0, n);
    const ClickLog log = detect_block(seq, params, 0.0, quiet_receiver(), det, 3);
    size_t z_clicks = 0;
    for (const ClickEvent& ev : log.events) z_clicks += ev.detector == kDetZ ? 1 : 0;
    const double expected = det.dark_cps * 0.05;  // 250
    REQUIRE(std::abs(static_cast<double>(z_clicks) - expected) < 3.0 * std::sqrt(expected));
}

TEST_CASE("detect_block: dead time enforced on every log") {
    ProtocolParams params;
    params.mu1 = 2e-300;
    params.mu2 = 1e-300;
    DetectorSpec det = quiet_detector();
    det.dark_cps = 2e8;       // saturating rate
    det.dead_time_ps = 5000;  // exaggerated dead time
    const size_t n = 200000;
    const SymbolSequence seq = constant_stream(State::Z0, 0, n);
    const ClickLog log = detect_block(seq, params, 0.0, quiet_receiver(), det, 9);
    REQUIRE_FALSE(log.events.empty());
    REQUIRE(dead_time_respected(log, det));
    // The raw Poisson process at this rate would have violated it: with
    // lambda*dead = 1 the accepted per-detector rate drops to ~lambda/2.
    const double duration_s = n * params.qubit_period_ps() * 1e-12;
    size_t z_clicks = 0;
    for (const ClickEvent& ev : log.events) z_clicks += ev.detector == kDetZ ? 1 : 0;
    REQUIRE(static_cast<double>(z_clicks) < 0.75 * det.dark_cps * duration_s);
}

TEST_CASE("detect_block: fringe law traced over residual phase") {
    ProtocolParams params;
    params.mu1 = 0.9;
    params.mu2 = 0.45;
    ReceiverSpec rec = quiet_receiver();
    rec.visibility = 1.0;
    const size_t n = 150000;
    const SymbolSequence seq = constant_stream(State::Xp, 0, n);
    for (double phi : {0.0, kPi / 3, kPi / 2, kPi, 4.0}) {
        PhaseTrace trace;
        trace.phase_rad = {phi};
        trace.dt_s = 1e9;  // constant over the block
        ModeLinkContext ctx;
        ctx.protocol = params;
        ctx.receiver = rec;
        ctx.detector = quiet_detector();
        ctx.signal_scale = db_loss_to_transmittance(10.0);
        ctx.visibility = 1.0;
        const ClickLog log = detect_block_multi(ctx, seq, {}, 77, trace);
        const TallyBlock tally = sift(seq, log, params, rec.gate_halfwidth_ps);
        const double q = (tally.m_x[0] + tally.m_x[1]) /
                         std::max(tally.n_x[0] + tally.n_x[1], 1.0);
        const double expected = intrinsic_x_error(1.0, phi);
        const double n_x = tally.n_x[0] + tally.n_x[1];
        const double band = 4.0 * std::sqrt(std::max(expected * (1 - expected), 1e-4) / n_x);
        REQUIRE(std::abs(q - expected) < band + 2e-3);
    }
}

TEST_CASE("sift: clean Z0 stream has zero errors, and zero-noise QBERs vanish") {
    ProtocolParams params;
    params.extinction_db = 2000.0;  // numerically exact zero leakage
    ReceiverSpec rec = quiet_receiver();
    rec.visibility = 1.0;
    const size_t n = 300000;
    const SymbolSequence z0 = constant_stream(State::Z0, 0, n);
    const ClickLog log = detect_block(z0, params, 10.0, rec, quiet_detector(), 21);
    const TallyBlock tally = sift(z0, log, params, rec.gate_halfwidth_ps);
    REQUIRE(tally.n_z[0] > 0);
    REQUIRE(tally.m_z[0] == 0.0);
    REQUIRE(tally.m_z[1] == 0.0);

    // X side with perfect visibility and zero phase: no dark-port clicks.
    const SymbolSequence xp = constant_stream(State::Xp, 0, n);
    const ClickLog xlog = detect_block(xp, params, 10.0, rec, quiet_detector(), 22);
    const TallyBlock xtally = sift(xp, xlog, params, rec.gate_halfwidth_ps);
    REQUIRE(xtally.n_x[0] > 0);
    REQUIRE(xtally.m_x[0] == 0.0);
}

TEST_CASE("sift: pure background drives Q_Z toward one half") {
    ProtocolParams params;
    params.mu1 = 2e-300;
    params.mu2 = 1e-300;
    ReceiverSpec rec = quiet_receiver();
    rec.background_z_cps = 3e6;
    const size_t n = 1000000;
    SymbolSequence seq;
    seq.symbols.reserve(n);
    std::mt19937_64 rng(13);
    std::bernoulli_distribution coin(0.5);
    for (size_t i = 0; i < n; ++i)
        seq.symbols.push_back({coin(rng) ? State::Z0 : State::Z1, 0});
    const ClickLog log = detect_block(seq, params, 0.0, rec, quiet_detector(), 5);
    const TallyBlock tally = sift(seq, log, params, rec.gate_halfwidth_ps);
    const double n_z = tally.n_z[0] + tally.n_z[1];
    REQUIRE(n_z > 1000);
    const double q = (tally.m_z[0] + tally.m_z[1]) / n_z;
    REQUIRE(std::abs(q - 0.5) < 4.0 * std::sqrt(0.25 / n_z));
}

TEST_CASE("sift: rejects a window wider than the qubit period") {
    ProtocolParams params;
    const SymbolSequence seq = constant_stream(State::Z0, 0, 10);
    ClickLog log;
    REQUIRE_THROWS_AS(sift(seq, log, params, 900.0), std::invalid_argument);
}

TEST_CASE("sift: hand-placed clicks are classified deterministically") {
    ProtocolParams params;  // period 1680.67 ps, bins at 0 / 800
    SymbolSequence seq;
    seq.symbols = {{State::Z0, 0}, {State::Z1, 1}, {State::Xp, 0}, {State::Xp, 1}, {State::Z0, 1}};
    const auto slot = [&](int i) { return static_cast<std::int64_t>(std::llround(i * params.qubit_period_ps())); };
    ClickLog log;
    log.events.push_back({kDetZ, slot(0) + 0});          // correct early bin -> n_z[0]
    log.events.push_back({kDetZ, slot(1) + 10});         // Z1 sent, early click -> error in mu2
    log.events.push_back({kDetXDark, slot(2) + 800});    // X+ central dark -> error
    log.events.push_back({kDetXBright, slot(3) + 805});  // X+ central bright -> count only
    log.events.push_back({kDetXDark, slot(3) + 1600});   // satellite, ignored
    log.events.push_back({kDetZ, slot(2) + 800});        // Z click on X+ slot, ignored
    log.events.push_back({kDetXDark, slot(4) + 800});    // X click on Z slot, ignored
    const TallyBlock tally = sift(seq, log, params, 250.0);
    REQUIRE(tally.n_z[0] == 1.0);
    REQUIRE(tally.m_z[0] == 0.0);
    REQUIRE(tally.n_z[1] == 1.0);
    REQUIRE(tally.m_z[1] == 1.0);
    REQUIRE(tally.n_x[0] == 1.0);
    REQUIRE(tally.m_x[0] == 1.0);
    REQUIRE(tally.n_x[1] == 1.0);
    REQUIRE(tally.m_x[1] == 0.0);
}

TEST_CASE("tally: merge is associative and commutative") {
    TallyBlock a, b, c;
    a.duration_s = b.duration_s = c.duration_s = 1.0;
    a.n_z = {10, 5};
    a.m_z = {1, 0};
    b.n_x = {7, 2};
    b.m_x = {1, 1};
    c.n_z = {3, 3};
    TallyBlock ab = a;
    ab.merge(b);
    TallyBlock ab_c = ab;
    ab_c.merge(c);
    TallyBlock bc = b;
    bc.merge(c);
    TallyBlock a_bc = a;
    a_bc.merge(bc);
    REQUIRE(ab_c.n_z == a_bc.n_z);
    REQUIRE(ab_c.m_x == a_bc.m_x);
    REQUIRE(ab_c.duration_s == a_bc.duration_s);
    TallyBlock ba = b;
    ba.merge(a);
    REQUIRE(ab.n_z == ba.n_z);
    REQUIRE(ab.n_x == ba.n_x);
}
