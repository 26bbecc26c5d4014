#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kwb/color.hpp"

namespace kwb {

// A rectangular or arbitrary region lit by one illuminant.
struct IlluminantRegion {
    IlluminantVector illuminant;
    std::vector<std::uint8_t> mask;  // H*W, 1 inside
};

struct SceneSpec {
    int height = 64;
    int width = 64;
    std::vector<IlluminantVector> illuminants{IlluminantVector(1.0, 1.0, 1.0)};  // 1 or 2
    double split_fraction = 0.5;  // rows above round(split * H) take illuminant 0
    std::uint64_t texture_seed = 0;
    double noise_sigma = 0.0;
    Rgb texture_mean{1.0, 1.0, 1.0};  // chromaticity of the texture's mean; (1,1,1) is achromatic
    double chroma_spread = 0.4;       // per-channel relative spread of the texture chromaticity
};

struct SyntheticScene {
    LinearImage image;
    LinearImage texture;  // reflectance before lighting and noise
    std::vector<IlluminantRegion> regions;
};

// Random reflectance texture whose per-channel empirical mean is exactly
// 0.5 * texture_mean / max(texture_mean), lit per region by illuminant / max(illuminant)
// (so white light leaves the texture unchanged), plus Gaussian noise clamped at 0.
SyntheticScene synth_scene(const SceneSpec& spec);

// R/G and B/G drawn log-uniformly from [1/max_ratio, max_ratio].
IlluminantVector random_illuminant(std::mt19937_64& rng, double max_ratio = 1.6);

// Ground-truth corrected image: each region multiplied by its illuminant's gains.
LinearImage corrected_target(const LinearImage& image, const std::vector<IlluminantRegion>& regions);

}  // namespace kwb
