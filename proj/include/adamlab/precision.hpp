#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "adamlab/errors.hpp"

namespace adamlab {

/// Arithmetic format used for every stored value and intermediate result.
struct PrecisionMode {
    enum class Kind : std::uint8_t { native64 = 0, native32 = 1, emulated = 2 };

    Kind kind = Kind::native32;
    int exponent_bits = 0;  // emulated only
    int mantissa_bits = 0;  // emulated only, excluding the implicit bit

    static constexpr PrecisionMode native64() { return {Kind::native64, 11, 52}; }
    static constexpr PrecisionMode native32() { return {Kind::native32, 8, 23}; }
    static PrecisionMode emulated(int exponent_bits, int mantissa_bits) {
        PrecisionMode mode{Kind::emulated, exponent_bits, mantissa_bits};
        mode.validate();
        return mode;
    }

    void validate() const {
        if (kind == Kind::emulated &&
            (exponent_bits < 2 || exponent_bits > 11 || mantissa_bits < 1 || mantissa_bits > 52)) {
            throw InvalidArgument("emulated precision needs exponent_bits in [2, 11] and "
                                  "mantissa_bits in [1, 52]");
        }
    }

    std::string to_string() const {
        switch (kind) {
            case Kind::native64:
                return "native64";
            case Kind::native32:
                return "native32";
            case Kind::emulated:
                break;
        }
        return "emulated(" + std::to_string(exponent_bits) + "," + std::to_string(mantissa_bits) + ")";
    }

    /// Accepts "native64", "native32" and "emulated(E,M)".
    static PrecisionMode parse(std::string_view text) {
        if (text == "native64") return native64();
        if (text == "native32") return native32();
        constexpr std::string_view prefix = "emulated(";
        if (text.starts_with(prefix) && text.ends_with(")")) {
            const std::string body(text.substr(prefix.size(), text.size() - prefix.size() - 1));
            const auto comma = body.find(',');
            if (comma != std::string::npos) {
                try {
                    std::size_t used_e = 0, used_m = 0;
                    const std::string e_text = body.substr(0, comma);
                    const std::string m_text = body.substr(comma + 1);
                    const int e = std::stoi(e_text, &used_e);
                    const int m = std::stoi(m_text, &used_m);
                    if (used_e == e_text.size() && used_m == m_text.size()) return emulated(e, m);
                } catch (const std::logic_error&) {
                }
            }
        }
        throw InvalidArgument("unknown precision mode '" + std::string(text) + "'");
    }

    friend bool operator==(const PrecisionMode&, const PrecisionMode&) = default;
};

/// Round x to the nearest value of a binary format with the given exponent
/// and mantissa widths (IEEE-style: subnormals, ties-to-even, overflow to
/// infinity). Signed zeros, infinities and NaN pass through.
inline double quantize_emulated(double x, int exponent_bits, int mantissa_bits) noexcept {
    if (x == 0.0 || !std::isfinite(x)) return x;
    const int bias = (1 << (exponent_bits - 1)) - 1;
    const int min_exponent = 1 - bias;
    int exponent = std::ilogb(x);
    if (exponent < min_exponent) exponent = min_exponent;
    // Power-of-two scaling is exact, so nearbyint does the only rounding
    // (the default FE_TONEAREST mode rounds ties to even).
    const double quantum = std::ldexp(1.0, exponent - mantissa_bits);
    const double rounded = std::nearbyint(x / quantum) * quantum;
    const double max_finite = std::ldexp(2.0 - std::ldexp(1.0, -mantissa_bits), bias);
    if (std::fabs(rounded) > max_finite) return std::copysign(std::numeric_limits<double>::infinity(), x);
    return rounded;
}

inline double quantize(double x, const PrecisionMode& mode) noexcept {
    switch (mode.kind) {
        case PrecisionMode::Kind::native64:
            return x;
        case PrecisionMode::Kind::native32:
            return static_cast<double>(static_cast<float>(x));
        case PrecisionMode::Kind::emulated:
            break;
    }
    return quantize_emulated(x, mode.exponent_bits, mode.mantissa_bits);
}

// Arithmetic policies. Values are carried as double; `q` rounds a freshly
// computed result into the target format. Algorithms apply `q` after every
// arithmetic operation, so each policy reproduces the rounding sequence of
// its format.

struct Native64Arith {
    static constexpr double q(double x) noexcept { return x; }
    static constexpr bool is_identity = true;
};

struct Native32Arith {
    static double q(double x) noexcept { return static_cast<double>(static_cast<float>(x)); }
    static constexpr bool is_identity = false;
};

struct EmulatedArith {
    int exponent_bits;
    int mantissa_bits;
    double q(double x) const noexcept { return quantize_emulated(x, exponent_bits, mantissa_bits); }
    static constexpr bool is_identity = false;
};

/// Call fn with the arithmetic policy matching mode.
template <class Fn>
decltype(auto) with_arith(const PrecisionMode& mode, Fn&& fn) {
    switch (mode.kind) {
        case PrecisionMode::Kind::native64:
            return fn(Native64Arith{});
        case PrecisionMode::Kind::native32:
            return fn(Native32Arith{});
        case PrecisionMode::Kind::emulated:
            break;
    }
    mode.validate();
    return fn(EmulatedArith{mode.exponent_bits, mode.mantissa_bits});
}

}  // namespace adamlab
