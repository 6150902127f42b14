#pragma once

#include <array>
#include <cstdint>

namespace corrlab::rng {

// splitmix64 step; used to expand seeds and derive independent streams.
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic xoshiro256++ stream. Self-contained so that sequences are
// identical across standard libraries and platforms. One experiment owns a
// master seed; independent components derive their own streams from
// (master, purpose, index) so reruns of any component reproduce exactly.
class Stream {
public:
    explicit Stream(std::uint64_t seed);

    static Stream derive(std::uint64_t master, std::uint64_t purpose, std::uint64_t index = 0);

    std::uint64_t next_u64();

    // Uniform double in [0, 1) with 53-bit resolution.
    double uniform01();

    // Uniform integer in [0, n); n must be positive.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via Box-Muller (second value cached).
    double normal();

private:
    std::array<std::uint64_t, 4> state_{};
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

// Stream purposes. Fixed numbering is part of the reproducibility contract.
inline constexpr std::uint64_t kPurposeData = 1;       // dataset / batch sampling
inline constexpr std::uint64_t kPurposeInit = 2;       // parameter initialization
inline constexpr std::uint64_t kPurposeNoise = 3;      // reparameterization noise
inline constexpr std::uint64_t kPurposeEval = 4;       // evaluation sampling
inline constexpr std::uint64_t kPurposeLabels = 5;     // adaptation label sampling
inline constexpr std::uint64_t kPurposeSubstFit = 6;   // substitution function training

}  // namespace corrlab::rng
