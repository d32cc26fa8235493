#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#ifdef __SSE2__
#include <immintrin.h>
#endif

namespace wips {

namespace detail {
/// llrint without the libm call: one cvtsd2si under the default
/// round-to-nearest-even mode, bit-identical to std::llrint.
inline long long fast_llrint(double x) {
#ifdef __SSE2__
    return _mm_cvtsd_si64(_mm_set_sd(x));
#else
    return std::llrint(x);
#endif
}
}  // namespace detail

inline constexpr double two_pi = 6.283185307179586476925286766559;
inline constexpr double pi = 3.141592653589793238462643383279;

/// Reduce an angle to [0, 2*pi).
inline double wrap_angle(double x) {
    double y = std::fmod(x, two_pi);
    if (y < 0.0)
        y += two_pi;
    // fmod of a slightly negative value can land exactly on 2*pi
    if (y >= two_pi)
        y -= two_pi;
    return y;
}

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fixed-point accumulator over quantized doubles.  Addition of integers is
/// associative and commutative, so sums accumulated through this type are
/// bit-identical under any permutation of the terms, which is what the
/// exchangeability and determinism contracts of the particle engine require.
/// Terms are quantized at 2^-52 (absolute).
class ExactSum {
public:
    void add(double x) {
        // scaling by an exact power of two is lossless below the overflow
        // range, so the fast path equals ldexp(x, 52) bit for bit
        if (x < 1024.0 && x > -1024.0) {
            acc_ += static_cast<__int128>(detail::fast_llrint(x * 0x1p52));
        } else {
            // split so the scaled fraction still fits in 64 bits
            const double hi = std::nearbyint(x);
            acc_ += static_cast<__int128>(detail::fast_llrint(hi)) << 52;
            acc_ += static_cast<__int128>(detail::fast_llrint((x - hi) * 0x1p52));
        }
    }
    double value() const { return std::ldexp(static_cast<double>(acc_), -52); }
    void reset() { acc_ = 0; }

private:
    __int128 acc_ = 0;
};

/// 64-bit FNV-1a hash, used for config fingerprints.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace wips
