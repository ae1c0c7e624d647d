// Shared numeric helpers and conventions used across the library.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace oamqkd {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Power-ratio dB conventions (10*log10 for power, 20*log10 for amplitude).
inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
inline double power_to_db(double ratio) { return 10.0 * std::log10(ratio); }
inline double db_loss_to_transmittance(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }
inline double db_loss_to_amplitude(double loss_db) { return std::pow(10.0, -loss_db / 20.0); }

// Wrap an angle to (-pi, pi].
inline double wrap_phase(double rad) {
    double w = std::fmod(rad, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    if (w > kPi) w -= 2.0 * kPi;
    return w;
}

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Probability mass a Gaussian of width sigma centered at `center` places in [lo, hi].
inline double gaussian_window_overlap(double center, double lo, double hi, double sigma) {
    if (sigma <= 0.0) return (center >= lo && center <= hi) ? 1.0 : 0.0;
    return normal_cdf((hi - center) / sigma) - normal_cdf((lo - center) / sigma);
}

[[noreturn]] inline void fail_precondition(const std::string& what) {
    throw std::invalid_argument(what);
}

}  // namespace oamqkd
