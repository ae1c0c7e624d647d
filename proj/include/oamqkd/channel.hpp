// Ring-core fiber channel: azimuthal decomposition of the emitted ring field,
// propagation with per-mode group delay and a passive mode-coupling matrix,
// SLM demultiplexing, and the two crosstalk-characterization procedures
// (single-mode power probing and time-of-flight peak attribution).
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "oamqkd/common.hpp"
#include "oamqkd/emitter.hpp"
#include "oamqkd/linalg.hpp"

namespace oamqkd {

struct ModeVector {
    std::vector<int> modes;
    std::vector<cplx> amps;

    double total_power() const {
        double p = 0.0;
        for (const cplx& a : amps) p += std::norm(a);
        return p;
    }

    int index_of(int mode) const {
        for (size_t i = 0; i < modes.size(); ++i)
            if (modes[i] == mode) return static_cast<int>(i);
        return -1;
    }
};

// One off-diagonal Hermitian coupling term between two modes.
struct PairCoupling {
    int mode_a = 0;
    int mode_b = 0;
    cplx value{0.0, 0.0};
};

struct FiberSpec {
    double length_m = 800.0;
    double loss_db = 1.0;
    std::vector<int> mode_set;
    std::vector<double> group_delay_ns;  // aligned with mode_set
    CMatrix coupling;                    // mode transfer matrix over mode_set

    void validate() const {
        if (loss_db < 0.0) fail_precondition("fiber.loss_db: must be >= 0");
        if (mode_set.empty()) fail_precondition("fiber.mode_set: must be non-empty");
        for (size_t i = 0; i < mode_set.size(); ++i)
            for (size_t j = i + 1; j < mode_set.size(); ++j)
                if (mode_set[i] == mode_set[j]) fail_precondition("fiber.mode_set: modes must be distinct");
        if (group_delay_ns.size() != mode_set.size())
            fail_precondition("fiber.group_delay_ns: one delay per mode required");
        for (double d : group_delay_ns)
            if (!std::isfinite(d)) fail_precondition("fiber.group_delay_ns: delays must be finite");
        if (coupling.n != static_cast<int>(mode_set.size()))
            fail_precondition("fiber.coupling: dimension must match mode_set");
        if (spectral_norm(coupling) > 1.0 + 1e-9)
            fail_precondition("fiber.coupling: passive channel requires singular values <= 1");
    }

    int index_of(int mode) const {
        for (size_t i = 0; i < mode_set.size(); ++i)
            if (mode_set[i] == mode) return static_cast<int>(i);
        return -1;
    }
};

// Crosstalk in dB, entry (out m, in l), normalized so each input's own mode
// reads 0 dB. Degenerate inputs (no power in their own mode) yield NaN.
struct CrosstalkMatrix {
    std::vector<int> modes;
    std::vector<double> db;  // row-major, rows = output mode, cols = input mode
    std::vector<int> degenerate_inputs;

    double at(int out_mode, int in_mode) const {
        int r = -1, c = -1;
        for (size_t i = 0; i < modes.size(); ++i) {
            if (modes[i] == out_mode) r = static_cast<int>(i);
            if (modes[i] == in_mode) c = static_cast<int>(i);
        }
        if (r < 0 || c < 0) fail_precondition("crosstalk.at: mode not present");
        return db[static_cast<size_t>(r) * modes.size() + static_cast<size_t>(c)];
    }

    double worst_offdiagonal_db() const {
        double w = -1e300;
        for (size_t r = 0; r < modes.size(); ++r)
            for (size_t c = 0; c < modes.size(); ++c)
                if (r != c && std::isfinite(db[r * modes.size() + c]))
                    w = std::max(w, db[r * modes.size() + c]);
        return w;
    }

    double best_offdiagonal_db() const {
        double b = 1e300;
        for (size_t r = 0; r < modes.size(); ++r)
            for (size_t c = 0; c < modes.size(); ++c)
                if (r != c && std::isfinite(db[r * modes.size() + c]))
                    b = std::min(b, db[r * modes.size() + c]);
        return b;
    }
};

/// Discrete azimuthal decomposition of the K-spot ring field:
/// c_m = (1/sqrt(K)) * sum_k a_k * exp(-i*2*pi*m*k/K).
inline ModeVector project(const EmitterField& field, const std::vector<int>& mode_set) {
    const int k_count = static_cast<int>(field.amplitudes.size());
    if (k_count == 0) fail_precondition("project: empty field");
    for (size_t i = 0; i < mode_set.size(); ++i) {
        if (2 * std::abs(mode_set[i]) >= k_count)
            fail_precondition("project: |mode| must be < K/2");
        for (size_t j = i + 1; j < mode_set.size(); ++j)
            if (mode_set[i] == mode_set[j]) fail_precondition("project: duplicate mode");
    }
    ModeVector mv;
    mv.modes = mode_set;
    mv.amps.resize(mode_set.size());
    const double norm = 1.0 / std::sqrt(static_cast<double>(k_count));
    for (size_t i = 0; i < mode_set.size(); ++i) {
        cplx c(0.0, 0.0);
        for (int k = 0; k < k_count; ++k) {
            const double ang = -2.0 * kPi * mode_set[i] * k / k_count;
            c += field.amplitudes[static_cast<size_t>(k)] * cplx(std::cos(ang), std::sin(ang));
        }
        mv.amps[i] = norm * c;
    }
    return mv;
}

struct PropagationResult {
    ModeVector modes;
    std::vector<double> delay_ns;  // per mode, aligned with modes
};

/// Mode mixing then uniform loss; per-mode group delays returned alongside.
inline PropagationResult propagate(const ModeVector& input, const FiberSpec& fiber) {
    fiber.validate();
    if (input.modes != fiber.mode_set)
        fail_precondition("propagate: mode vector must be expressed over the fiber mode_set");
    PropagationResult out;
    out.modes.modes = fiber.mode_set;
    out.modes.amps = matvec(fiber.coupling, input.amps);
    const double amp_scale = db_loss_to_amplitude(fiber.loss_db);
    for (cplx& a : out.modes.amps) a *= amp_scale;
    out.delay_ns = fiber.group_delay_ns;
    return out;
}

/// SLM demux to a single mode: ideal projection plus a scalar coupling loss.
/// The single-mode fiber behind the SLM rejects every other mode.
inline cplx demux_slm(const ModeVector& modes, int target, double coupling_loss_db) {
    const int idx = modes.index_of(target);
    if (idx < 0) fail_precondition("demux_slm: target not in mode set");
    return modes.amps[static_cast<size_t>(idx)] * db_loss_to_amplitude(coupling_loss_db);
}

/// Hermitian perturbation over the mode set from explicit pair couplings.
inline CMatrix coupling_hamiltonian(const std::vector<int>& mode_set,
                                    const std::vector<PairCoupling>& pairs) {
    const int n = static_cast<int>(mode_set.size());
    CMatrix h(n);
    auto idx = [&](int mode) {
        for (int i = 0; i < n; ++i)
            if (mode_set[static_cast<size_t>(i)] == mode) return i;
        fail_precondition("coupling_hamiltonian: pair references mode outside mode_set");
    };
    for (const PairCoupling& p : pairs) {
        const int i = idx(p.mode_a), j = idx(p.mode_b);
        if (i == j) fail_precondition("coupling_hamiltonian: self-coupling not allowed");
        h(i, j) += p.value;
        h(j, i) += std::conj(p.value);
    }
    return h;
}

/// Near-identity unitary exp(i*strength*H): the intra-fiber mixing model.
inline CMatrix perturbation_unitary(const std::vector<int>& mode_set,
                                    const std::vector<PairCoupling>& pairs, double strength) {
    return expi_hermitian(coupling_hamiltonian(mode_set, pairs), strength);
}

inline double offdiagonal_db_statistic(const CMatrix& u, bool worst) {
    double stat = worst ? -1e300 : 1e300;
    for (int c = 0; c < u.n; ++c) {
        const double diag = std::norm(u(c, c));
        for (int r = 0; r < u.n; ++r) {
            if (r == c) continue;
            const double val = power_to_db(std::norm(u(r, c)) / diag);
            stat = worst ? std::max(stat, val) : std::min(stat, val);
        }
    }
    return stat;
}

/// Bisect the perturbation strength until the chosen off-diagonal statistic of
/// exp(i*s*H) (worst or best entry, dB, per-input normalized) hits target_db.
inline double calibrate_perturbation_strength(const std::vector<int>& mode_set,
                                              const std::vector<PairCoupling>& pairs, double target_db,
                                              bool use_worst = true, double tol_db = 1e-6) {
    if (target_db >= 0.0) fail_precondition("calibrate_perturbation_strength: target must be < 0 dB");
    const CMatrix h = coupling_hamiltonian(mode_set, pairs);
    auto stat = [&](double s) { return offdiagonal_db_statistic(expi_hermitian(h, s), use_worst); };
    double lo = 0.0, hi = 1e-3;
    while (stat(hi) < target_db) {
        hi *= 2.0;
        if (hi > 4.0) fail_precondition("calibrate_perturbation_strength: target unreachable");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (stat(mid) < target_db)
            lo = mid;
        else
            hi = mid;
        if (std::abs(stat(hi) - target_db) < tol_db) break;
    }
    return hi;
}

// Everything between the laser input ports and the demux output: the chip, its
// heater state, the fiber, and the per-mode demux coupling loss.
struct MuxLink {
    ChipGeometry chip;
    HeaterState heaters;
    FiberSpec fiber;
    std::map<int, double> demux_coupling_db;

    double coupling_db(int mode) const {
        auto it = demux_coupling_db.find(mode);
        if (it == demux_coupling_db.end()) fail_precondition("link: no demux coupling for mode");
        return it->second;
    }
};

/// Power-method characterization: excite one input at a time, demux every
/// probe mode, compare powers against the excited mode's own output.
inline CrosstalkMatrix crosstalk_power(const MuxLink& link, const std::vector<int>& probe_modes) {
    if (probe_modes.empty()) fail_precondition("crosstalk_power: probe_modes must be non-empty");
    const size_t n = probe_modes.size();
    CrosstalkMatrix xt;
    xt.modes = probe_modes;
    xt.db.assign(n * n, 0.0);
    for (size_t c = 0; c < n; ++c) {
        const int in_mode = probe_modes[c];
        const EmitterField field = emit_field(in_mode, link.chip, link.heaters, 1.0);
        const PropagationResult prop = propagate(project(field, link.fiber.mode_set), link.fiber);
        std::vector<double> received(n, 0.0);
        for (size_t r = 0; r < n; ++r)
            received[r] = std::norm(demux_slm(prop.modes, probe_modes[r], link.coupling_db(probe_modes[r])));
        const double own = received[c];
        if (own <= 0.0) {
            xt.degenerate_inputs.push_back(in_mode);
            for (size_t r = 0; r < n; ++r) xt.db[r * n + c] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        for (size_t r = 0; r < n; ++r) xt.db[r * n + c] = power_to_db(received[r] / own);
        xt.db[c * n + c] = 0.0;
    }
    return xt;
}

struct TofImpulse {
    int mode = 0;
    double delay_ns = 0.0;
    double power = 0.0;
};

/// One time-of-flight column: histogram the arrival-time impulse response and
/// attribute each peak to the mode whose configured delay matches.
/// Requires the configured delays to be pairwise separated by > 2*bin_width.
inline std::vector<double> tof_attribute_peaks(const std::vector<TofImpulse>& impulse,
                                               double bin_width_ns, const std::vector<int>& modes,
                                               const std::vector<double>& expected_delay_ns) {
    if (bin_width_ns <= 0.0) fail_precondition("tof: bin width must be > 0");
    for (size_t i = 0; i < modes.size(); ++i)
        for (size_t j = i + 1; j < modes.size(); ++j)
            if (std::abs(expected_delay_ns[i] - expected_delay_ns[j]) <= 2.0 * bin_width_ns)
                throw std::runtime_error("tof: unresolvable delay peaks for modes " +
                                         std::to_string(modes[i]) + " and " + std::to_string(modes[j]));
    // Histogram on a grid of bin_width, then integrate +-1 bin around each
    // expected arrival.
    std::map<long long, double> hist;
    for (const TofImpulse& p : impulse)
        hist[static_cast<long long>(std::llround(p.delay_ns / bin_width_ns))] += p.power;
    std::vector<double> attributed(modes.size(), 0.0);
    for (size_t i = 0; i < modes.size(); ++i) {
        const long long center = static_cast<long long>(std::llround(expected_delay_ns[i] / bin_width_ns));
        for (long long b = center - 1; b <= center + 1; ++b) {
            auto it = hist.find(b);
            if (it != hist.end()) attributed[i] += it->second;
        }
    }
    return attributed;
}

/// Full time-of-flight matrix over the probe modes: the detector at the fiber
/// output sees every mode's power at its own group delay, no demux involved.
inline CrosstalkMatrix crosstalk_time_of_flight(const MuxLink& link, const std::vector<int>& probe_modes,
                                                double bin_width_ns) {
    if (probe_modes.empty()) fail_precondition("crosstalk_time_of_flight: probe_modes must be non-empty");
    const size_t n = probe_modes.size();
    std::vector<double> delays(n);
    for (size_t i = 0; i < n; ++i) {
        const int idx = link.fiber.index_of(probe_modes[i]);
        if (idx < 0) fail_precondition("crosstalk_time_of_flight: probe mode not guided by fiber");
        delays[i] = link.fiber.group_delay_ns[static_cast<size_t>(idx)];
    }
    CrosstalkMatrix xt;
    xt.modes = probe_modes;
    xt.db.assign(n * n, 0.0);
    for (size_t c = 0; c < n; ++c) {
        const EmitterField field = emit_field(probe_modes[c], link.chip, link.heaters, 1.0);
        const PropagationResult prop = propagate(project(field, link.fiber.mode_set), link.fiber);
        std::vector<TofImpulse> impulse;
        for (size_t m = 0; m < link.fiber.mode_set.size(); ++m)
            impulse.push_back({link.fiber.mode_set[m], prop.delay_ns[m], std::norm(prop.modes.amps[m])});
        const std::vector<double> received = tof_attribute_peaks(impulse, bin_width_ns, probe_modes, delays);
        const double own = received[c];
        if (own <= 0.0) {
            xt.degenerate_inputs.push_back(probe_modes[c]);
            for (size_t r = 0; r < n; ++r) xt.db[r * n + c] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        for (size_t r = 0; r < n; ++r) xt.db[r * n + c] = power_to_db(received[r] / own);
        xt.db[c * n + c] = 0.0;
    }
    return xt;
}

}  // namespace oamqkd
