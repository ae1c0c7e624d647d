// Transmitter side of the three-state time-bin protocol: the PRBS generator
// that drives the modulators, state/intensity selection, and the early/late
// pulse-pair encoding.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oamqkd/common.hpp"

namespace oamqkd {

struct ProtocolParams {
    double qubit_rate_hz = 595e6;
    double mu1 = 0.26;  // signal mean photon number per qubit
    double mu2 = 0.13;  // decoy mean photon number per qubit
    double p_mu1 = 0.7;
    double p_z = 0.9;
    double bin_separation_ps = 800.0;
    double pulse_sigma_ps = 45.0;      // temporal 1-sigma width of a carved pulse
    double extinction_db = 200.0;      // carving on/off ratio; leaks mean into the empty bin

    double qubit_period_ps() const { return 1e12 / qubit_rate_hz; }

    void validate() const {
        if (qubit_rate_hz <= 0.0) fail_precondition("protocol.qubit_rate_hz: must be > 0");
        if (!(mu2 > 0.0 && mu1 > mu2)) fail_precondition("protocol.mu1/mu2: require 0 < mu2 < mu1");
        // The generator tolerates the degenerate all-Z / all-mu1 boundary; the
        // security analysis separately requires strictly mixed choices.
        if (!(p_mu1 > 0.0 && p_mu1 <= 1.0)) fail_precondition("protocol.p_mu1: must lie in (0,1]");
        if (!(p_z > 0.0 && p_z <= 1.0)) fail_precondition("protocol.p_z: must lie in (0,1]");
        if (!(bin_separation_ps > 0.0 && bin_separation_ps < qubit_period_ps()))
            fail_precondition("protocol.bin_separation_ps: must be positive and below the qubit period");
        if (pulse_sigma_ps < 0.0) fail_precondition("protocol.pulse_sigma_ps: must be >= 0");
        if (extinction_db <= 0.0) fail_precondition("protocol.extinction_db: must be > 0");
    }
};

enum class State : std::uint8_t { Z0 = 0, Z1 = 1, Xp = 2 };

inline const char* state_name(State s) {
    switch (s) {
        case State::Z0: return "Z0";
        case State::Z1: return "Z1";
        default: return "X+";
    }
}

struct Symbol {
    State state = State::Z0;
    std::uint8_t intensity = 0;  // 0 -> mu1, 1 -> mu2
};

struct SymbolSequence {
    std::vector<Symbol> symbols;
};

// Mean photon number placed in the early and late bin of one qubit.
struct PulsePair {
    double early = 0.0;
    double late = 0.0;
};

// 12-bit maximal-length Fibonacci LFSR, primitive polynomial
// x^12 + x^11 + x^8 + x^6 + 1 (period 4095).
class Lfsr12 {
  public:
    explicit Lfsr12(std::uint16_t seed) : state_(seed & 0x0fff) {
        if (state_ == 0) fail_precondition("prbs: zero seed is a degenerate LFSR state");
    }

    std::uint8_t next() {
        const std::uint8_t out = static_cast<std::uint8_t>(state_ & 1u);
        const std::uint16_t fb = static_cast<std::uint16_t>(
            ((state_ >> 0) ^ (state_ >> 6) ^ (state_ >> 8) ^ (state_ >> 11)) & 1u);
        state_ = static_cast<std::uint16_t>((state_ >> 1) | (fb << 11));
        return out;
    }

  private:
    std::uint16_t state_;
};

inline constexpr std::size_t kPrbsPeriod = 4095;  // 2^12 - 1

/// Maximal-length PRBS bits from a nonzero 12-bit seed.
inline std::vector<std::uint8_t> prbs_stream(std::uint16_t seed, std::size_t length) {
    Lfsr12 lfsr(seed);
    std::vector<std::uint8_t> bits(length);
    for (std::size_t i = 0; i < length; ++i) bits[i] = lfsr.next();
    return bits;
}

// Fixed bit-to-choice mapping, 33 bits per pulse, consumed MSB-first:
//   bits [0,16):  u16; state is Z when u16 < floor(p_z * 65536)
//   bit  16:      Z bit (0 -> Z0, 1 -> Z1); ignored for X+
//   bits [17,33): v16; intensity is mu1 when v16 < floor(p_mu1 * 65536)
inline constexpr std::size_t kBitsPerPulse = 33;

inline Symbol symbol_from_bits(const std::uint8_t* bits, const ProtocolParams& params) {
    std::uint32_t u = 0, v = 0;
    for (int i = 0; i < 16; ++i) u = (u << 1) | bits[i];
    const std::uint8_t zbit = bits[16];
    for (int i = 17; i < 33; ++i) v = (v << 1) | bits[i];
    Symbol s;
    const auto z_threshold = static_cast<std::uint32_t>(params.p_z * 65536.0);
    const auto mu1_threshold = static_cast<std::uint32_t>(params.p_mu1 * 65536.0);
    s.state = (u < z_threshold) ? (zbit ? State::Z1 : State::Z0) : State::Xp;
    s.intensity = (v < mu1_threshold) ? 0 : 1;
    return s;
}

/// Draw n_pulses symbols from the supplied entropy bits (33 per pulse).
inline SymbolSequence generate_symbols(const ProtocolParams& params, std::size_t n_pulses,
                                       const std::vector<std::uint8_t>& entropy) {
    params.validate();
    if (entropy.size() < n_pulses * kBitsPerPulse)
        fail_precondition("generate_symbols: entropy exhausted (need " +
                          std::to_string(n_pulses * kBitsPerPulse) + " bits)");
    SymbolSequence seq;
    seq.symbols.resize(n_pulses);
    for (std::size_t i = 0; i < n_pulses; ++i)
        seq.symbols[i] = symbol_from_bits(entropy.data() + i * kBitsPerPulse, params);
    return seq;
}

inline PulsePair pair_for(State state, double mu) {
    switch (state) {
        case State::Z0: return {mu, 0.0};
        case State::Z1: return {0.0, mu};
        default: return {0.5 * mu, 0.5 * mu};
    }
}

/// Time-bin amplitude encoding: Z0 -> (mu, 0), Z1 -> (0, mu), X+ -> (mu/2, mu/2).
inline PulsePair encode(const Symbol& symbol, const ProtocolParams& params) {
    return pair_for(symbol.state, symbol.intensity == 0 ? params.mu1 : params.mu2);
}

// Compact binary log: 3 bits per pulse (2-bit state, 1-bit intensity), packed
// little-endian into bytes after an 8-byte pulse count.
inline std::vector<std::uint8_t> pack_symbols(const SymbolSequence& seq) {
    std::vector<std::uint8_t> out(8 + (seq.symbols.size() * 3 + 7) / 8, 0);
    const std::uint64_t n = seq.symbols.size();
    for (int i = 0; i < 8; ++i) out[static_cast<size_t>(i)] = static_cast<std::uint8_t>(n >> (8 * i));
    std::size_t bit = 64;
    for (const Symbol& s : seq.symbols) {
        const std::uint8_t val = static_cast<std::uint8_t>(
            (static_cast<std::uint8_t>(s.state) & 0x3) | ((s.intensity & 0x1) << 2));
        for (int b = 0; b < 3; ++b, ++bit)
            if (val & (1u << b)) out[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
    }
    return out;
}

inline SymbolSequence unpack_symbols(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) fail_precondition("unpack_symbols: truncated header");
    std::uint64_t n = 0;
    for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(bytes[static_cast<size_t>(i)]) << (8 * i);
    if (bytes.size() < 8 + (n * 3 + 7) / 8) fail_precondition("unpack_symbols: truncated payload");
    SymbolSequence seq;
    seq.symbols.resize(n);
    std::size_t bit = 64;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint8_t val = 0;
        for (int b = 0; b < 3; ++b, ++bit)
            if (bytes[bit / 8] & (1u << (bit % 8))) val |= static_cast<std::uint8_t>(1u << b);
        seq.symbols[i].state = static_cast<State>(val & 0x3);
        seq.symbols[i].intensity = static_cast<std::uint8_t>((val >> 2) & 0x1);
    }
    return seq;
}

}  // namespace oamqkd
