#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kwb {

std::uint64_t splitmix64(std::uint64_t x);

// Seed of an independent generator for one named pipeline stage:
// splitmix64(seed ^ fnv1a64(stage)).
std::uint64_t substream_seed(std::uint64_t seed, std::string_view stage);

inline std::mt19937_64 substream(std::uint64_t seed, std::string_view stage) {
    return std::mt19937_64(substream_seed(seed, stage));
}

}  // namespace kwb
