// 1-decoy finite-key analysis for the three-state time-bin protocol:
// Hoeffding-corrected vacuum and single-photon event bounds, the phase-error
// upper bound from X-basis statistics with a random-sampling correction, the
// secret-key length, and a deterministic grid optimizer for the two mean
// photon numbers driven by the analytic rate model.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "oamqkd/aggregate.hpp"
#include "oamqkd/common.hpp"
#include "oamqkd/detection.hpp"

namespace oamqkd {

struct SecurityParams {
    double eps_sec = 1e-9;
    double eps_corr = 1e-9;
    double f_ec = 1.16;

    void validate() const {
        if (!(eps_sec > 0.0 && eps_sec < 1.0)) fail_precondition("security.eps_sec: must lie in (0,1)");
        if (!(eps_corr > 0.0 && eps_corr < 1.0)) fail_precondition("security.eps_corr: must lie in (0,1)");
        if (f_ec < 1.0) fail_precondition("security.f_ec: must be >= 1");
    }
};

/// Shannon binary entropy in bits, defined on [0, 1/2]; h(0) = 0 by continuity.
inline double binary_entropy(double p) {
    if (p < 0.0 || p > 0.5) fail_precondition("binary_entropy: argument must lie in [0, 0.5]");
    if (p == 0.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

struct DecoyBounds {
    double s0 = 0.0;     // lower bound on vacuum events in Z
    double s1 = 0.0;     // lower bound on single-photon events in Z
    double phi_z = 0.5;  // upper bound on the single-photon phase error rate
    double s1_x = 0.0;   // lower bound on single-photon events in X (diagnostic)
    double v1_x = 0.0;   // upper bound on single-photon errors in X (diagnostic)
};

namespace securitydetail {

// Random-sampling correction linking the X-basis error rate of single-photon
// events to the Z-basis phase error rate.
inline double gamma_correction(double a, double b, double c, double d) {
    if (c <= 0.0 || d <= 0.0) return 0.5;
    b = std::clamp(b, 1e-12, 1.0 - 1e-12);
    const double front = (c + d) * (1.0 - b) * b / (c * d * std::log(2.0));
    const double inside = (c + d) / (c * d * (1.0 - b) * b) * (21.0 / a) * (21.0 / a);
    if (inside <= 1.0) return 0.0;
    return std::sqrt(std::max(front * std::log2(inside), 0.0));
}

struct BasisBounds {
    double s0_low = 0.0;
    double s0_high = 0.0;
    double s1_low = 0.0;
    double tau1 = 0.0;
};

// Decoy-state separation of vacuum and single-photon contributions within one
// basis. `f1` is the fraction of this basis' pulses sent at mu1; the pattern
// generator's realized class fractions are used when available, since the
// normalization e^{mu_k}/f_k is what converts class counts into per-pulse
// yields. Hoeffding deviations use the basis' total detection count as the
// sample size, so they stay strictly positive even for zero observed errors.
inline BasisBounds basis_bounds(double n1, double n2, double m1, double m2, double mu1, double mu2,
                                double f1, double eps_term) {
    const double f2 = 1.0 - f1;
    const double n_tot = n1 + n2;
    const double m_tot = m1 + m2;
    const double delta = std::sqrt(0.5 * n_tot * std::log(1.0 / eps_term));
    const double tau0 = f1 * std::exp(-mu1) + f2 * std::exp(-mu2);
    const double tau1 = f1 * std::exp(-mu1) * mu1 + f2 * std::exp(-mu2) * mu2;

    const double n1_plus = std::exp(mu1) / f1 * (n1 + delta);
    const double n2_minus = std::exp(mu2) / f2 * std::max(n2 - delta, 0.0);

    BasisBounds b;
    b.tau1 = tau1;
    b.s0_low = std::clamp(tau0 * (mu1 * n2_minus - mu2 * n1_plus) / (mu1 - mu2), 0.0, n_tot);
    // Vacuum events err half the time, so twice the (fluctuation-padded)
    // error count bounds them from above.
    b.s0_high = std::clamp(2.0 * (m_tot + delta), 0.0, n_tot);
    const double bracket = n2_minus - (mu2 * mu2) / (mu1 * mu1) * n1_plus -
                           (mu1 * mu1 - mu2 * mu2) / (mu1 * mu1) * (b.s0_high / tau0);
    b.s1_low = std::clamp(tau1 * mu1 / (mu2 * (mu1 - mu2)) * bracket, 0.0, n_tot);
    return b;
}

// Realized mu1 fraction of one basis' transmitted pulses, falling back to the
// configured probability when the tally does not carry sent counts.
inline double sent_fraction(const std::array<double, 2>& sent, double p_mu1) {
    const double total = sent[0] + sent[1];
    if (total <= 0.0) return p_mu1;
    return sent[0] / total;
}

}  // namespace securitydetail

/// Vacuum/single-photon lower bounds in Z and the phase-error upper bound
/// from the X statistics, all at the failure budget carried by `params`.
inline DecoyBounds decoy_bounds(const TallyBlock& tally, double mu1, double mu2, double p_mu1,
                                const SecurityParams& params) {
    params.validate();
    tally.validate();
    if (!(mu2 > 0.0 && mu1 > mu2)) fail_precondition("decoy_bounds: require 0 < mu2 < mu1");
    if (!(p_mu1 > 0.0 && p_mu1 < 1.0)) fail_precondition("decoy_bounds: p_mu1 must lie in (0,1)");
    if (tally.n_z[0] <= 0.0 || tally.n_z[1] <= 0.0)
        fail_precondition("decoy_bounds: Z tallies required at both intensities");

    const double eps_term = params.eps_sec / 19.0;
    const double fz1 = securitydetail::sent_fraction(tally.sent_z, p_mu1);
    const double fx1 = securitydetail::sent_fraction(tally.sent_x, p_mu1);
    if (!(fz1 > 0.0 && fz1 < 1.0 && fx1 > 0.0 && fx1 < 1.0))
        fail_precondition("decoy_bounds: both intensities must appear in each basis");
    const securitydetail::BasisBounds z = securitydetail::basis_bounds(
        tally.n_z[0], tally.n_z[1], tally.m_z[0], tally.m_z[1], mu1, mu2, fz1, eps_term);
    const securitydetail::BasisBounds x = securitydetail::basis_bounds(
        tally.n_x[0], tally.n_x[1], tally.m_x[0], tally.m_x[1], mu1, mu2, fx1, eps_term);

    DecoyBounds out;
    out.s0 = z.s0_low;
    // Joint consistency: vacuum plus single-photon events can never exceed
    // the sifted sample, so the pair of lower bounds is clamped accordingly.
    out.s1 = std::min(z.s1_low, std::max((tally.n_z[0] + tally.n_z[1]) - out.s0, 0.0));
    out.s1_x = std::min(x.s1_low, std::max((tally.n_x[0] + tally.n_x[1]) - x.s0_low, 0.0));

    // Single-photon errors in X, bounded from above.
    const double n_x = tally.n_x[0] + tally.n_x[1];
    const double delta_x = std::sqrt(0.5 * n_x * std::log(1.0 / eps_term));
    const double m1_plus = std::exp(mu1) / fx1 * (tally.m_x[0] + delta_x);
    const double m2_minus = std::exp(mu2) / (1.0 - fx1) * std::max(tally.m_x[1] - delta_x, 0.0);
    out.v1_x = std::clamp(x.tau1 * (m1_plus - m2_minus) / (mu1 - mu2), 0.0, n_x);

    if (out.s1_x <= 0.0) {
        out.phi_z = 0.5;
        return out;
    }
    const double ratio = std::min(out.v1_x / out.s1_x, 0.5);
    out.phi_z =
        std::min(0.5, ratio + securitydetail::gamma_correction(eps_term, ratio, out.s1, out.s1_x));
    return out;
}

/// Secret-key length for one block:
/// l = s0 + s1*(1 - h(phi_Z)) - f_ec*n_Z*h(Q_Z) - 6*log2(19/eps_sec) - log2(2/eps_corr),
/// floored at zero.
inline double key_length(const TallyBlock& tally, const DecoyBounds& bounds,
                         const SecurityParams& params) {
    params.validate();
    const double n_z = tally.n_z[0] + tally.n_z[1];
    if (n_z <= 0.0) return 0.0;
    const double q_z = std::min((tally.m_z[0] + tally.m_z[1]) / n_z, 0.5);
    const double penalty = 6.0 * std::log2(19.0 / params.eps_sec) + std::log2(2.0 / params.eps_corr);
    const double l = bounds.s0 + bounds.s1 * (1.0 - binary_entropy(std::min(bounds.phi_z, 0.5))) -
                     params.f_ec * n_z * binary_entropy(q_z) - penalty;
    return std::max(l, 0.0);
}

inline double secret_key_rate(double key_length_bits, double duration_s) {
    if (duration_s <= 0.0) fail_precondition("secret_key_rate: duration must be > 0");
    return key_length_bits / duration_s;
}

struct ModeKeyResult {
    int mode = 0;
    TallyBlock tally;
    DecoyBounds bounds;
    double key_bits = 0.0;
    double skr_bps = 0.0;
};

struct KeyRateReport {
    std::vector<ModeKeyResult> per_mode;

    double total_skr() const {
        double s = 0.0;
        for (const ModeKeyResult& r : per_mode) s += r.skr_bps;
        return s;
    }
};

inline ModeKeyResult analyze_tally(int mode, const TallyBlock& tally, double mu1, double mu2,
                                   double p_mu1, const SecurityParams& params) {
    ModeKeyResult r;
    r.mode = mode;
    r.tally = tally;
    r.bounds = decoy_bounds(tally, mu1, mu2, p_mu1, params);
    r.key_bits = key_length(tally, r.bounds, params);
    r.skr_bps = secret_key_rate(r.key_bits, tally.duration_s);
    return r;
}

struct MuGrid {
    double mu1_max = 1.0;
    double mu2_min = 0.01;
    double step = 0.01;
};

struct MuOptimum {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double skr_bps = 0.0;
};

/// Exhaustive grid search of the predicted secret-key rate over (mu1, mu2),
/// using the deterministic expected-tally model (no sampling inside the
/// loop). Ties resolve toward the smaller mu1 (then the smaller mu2).
inline MuOptimum optimize_mu(const ModeLinkContext& base_ctx, double n_pulses, double cos_phi,
                             const MuGrid& grid, const SecurityParams& params) {
    params.validate();
    if (!(grid.mu2_min > 0.0 && grid.mu1_max <= 1.0 && grid.step > 0.0 &&
          grid.mu2_min + grid.step <= grid.mu1_max))
        fail_precondition("optimize_mu: empty feasible grid");

    MuOptimum best;
    bool found = false;
    for (double mu1 = grid.mu2_min + grid.step; mu1 <= grid.mu1_max + 1e-12; mu1 += grid.step) {
        for (double mu2 = grid.mu2_min; mu2 < mu1 - grid.step * 0.5; mu2 += grid.step) {
            ModeLinkContext ctx = base_ctx;
            ctx.protocol.mu1 = mu1;
            ctx.protocol.mu2 = mu2;
            const TallyBlock t = expected_tally(ctx, n_pulses, cos_phi);
            double skr = 0.0;
            if (t.n_z[0] > 0.0 && t.n_z[1] > 0.0) {
                const DecoyBounds b = decoy_bounds(t, mu1, mu2, ctx.protocol.p_mu1, params);
                skr = secret_key_rate(key_length(t, b, params), t.duration_s);
            }
            if (!found || skr > best.skr_bps) {
                best = {mu1, mu2, skr};
                found = true;
            }
        }
    }
    if (!found) fail_precondition("optimize_mu: empty feasible grid");
    return best;
}

}  // namespace oamqkd
