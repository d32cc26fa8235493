#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "wips/common.hpp"

namespace wips {

namespace detail {

/// Philox4x32-10 counter-based generator.  Output is a pure function of
/// (key, counter), so draws are reproducible regardless of evaluation order
/// or thread scheduling.
struct Philox4x32 {
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                              std::uint64_t hi,
                                              std::uint64_t lo) {
        std::uint32_t c0 = static_cast<std::uint32_t>(lo);
        std::uint32_t c1 = static_cast<std::uint32_t>(lo >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(hi);
        std::uint32_t c3 = static_cast<std::uint32_t>(hi >> 32);
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c0;
            std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c2;
            std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            std::uint32_t n0 = hi1 ^ c1 ^ k0;
            std::uint32_t n2 = hi0 ^ c3 ^ k1;
            c0 = n0;
            c1 = lo1;
            c2 = n2;
            c3 = lo0;
            k0 += kW0;
            k1 += kW1;
        }
        return {c0, c1, c2, c3};
    }
};

inline double u32_pair_to_unit(std::uint32_t a, std::uint32_t b) {
    // 53-bit uniform in (0,1); offset keeps it away from 0 for log().
    std::uint64_t u = (static_cast<std::uint64_t>(a) << 32) | b;
    return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// One named substream of the master generator.  Draw i is independent of
/// every other (stream, draw) pair.
class Substream {
public:
    Substream() = default;
    Substream(std::uint64_t key, std::uint64_t stream_id)
        : key_(key), stream_(stream_id) {}

    double uniform(std::uint64_t index) const {
        auto r = detail::Philox4x32::block(key_, stream_, index);
        return detail::u32_pair_to_unit(r[0], r[1]);
    }

    /// Standard normal via Box-Muller (first component).
    double normal(std::uint64_t index) const {
        auto r = detail::Philox4x32::block(key_, stream_, index);
        double u1 = detail::u32_pair_to_unit(r[0], r[1]);
        double u2 = detail::u32_pair_to_unit(r[2], r[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    /// Second Box-Muller component of the same block; independent of
    /// normal(index).
    double normal2(std::uint64_t index) const {
        auto r = detail::Philox4x32::block(key_, stream_, index);
        double u1 = detail::u32_pair_to_unit(r[0], r[1]);
        double u2 = detail::u32_pair_to_unit(r[2], r[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::sin(two_pi * u2);
    }

    std::uint64_t stream_id() const { return stream_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t stream_ = 0;
};

/// Kinds of named substreams used across the artifact.
enum class StreamKind : std::uint64_t {
    particle = 1,    // idiosyncratic Brownian beta^i
    noise_mode = 2,  // common-noise mode w^z
    init = 3,        // initial (X0, A0) sampling
    reference = 4,   // reference-ensemble beta streams
    scratch = 5,
};

/// Master seed plus derivation of named substreams.  Identical seeds yield
/// bit-identical draw sequences regardless of thread count.
class RngStreams {
public:
    explicit RngStreams(std::uint64_t master_seed) : seed_(master_seed) {}

    /// Substream tagged by (kind, replication, index).  The index space per
    /// (kind, rep) is 2^40.
    Substream stream(StreamKind kind, std::uint64_t rep,
                     std::uint64_t index) const {
        std::uint64_t tag = (static_cast<std::uint64_t>(kind) << 56) |
                            ((rep & 0xFFFFull) << 40) |
                            (index & 0xFFFFFFFFFFull);
        return Substream(seed_, tag);
    }

    /// Substream for common-noise mode z (z may be negative).
    Substream mode_stream(std::uint64_t rep, int z) const {
        std::uint64_t idx = static_cast<std::uint64_t>(
            static_cast<std::int64_t>(z) + (1ll << 20));
        return stream(StreamKind::noise_mode, rep, idx);
    }

    std::uint64_t master_seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace wips
