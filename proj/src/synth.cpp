#include "kwb/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace kwb {

SyntheticScene synth_scene(const SceneSpec& spec) {
    if (spec.height < 1 || spec.width < 1) throw InvalidArgument("synth_scene: dimensions must be >= 1");
    if (spec.illuminants.empty() || spec.illuminants.size() > 2) {
        throw InvalidArgument("synth_scene: one or two illuminants");
    }
    for (const auto& l : spec.illuminants) {
        if (!(l.r() > 0.0 && l.g() > 0.0 && l.b() > 0.0)) throw InvalidArgument("synth_scene: illuminant components must be > 0");
    }
    if (!(spec.split_fraction >= 0.0 && spec.split_fraction <= 1.0)) throw InvalidArgument("synth_scene: split in [0, 1]");
    if (!(spec.noise_sigma >= 0.0)) throw InvalidArgument("synth_scene: noise_sigma must be >= 0");
    const double mean_peak = std::max({spec.texture_mean[0], spec.texture_mean[1], spec.texture_mean[2]});
    if (!(mean_peak > 0.0) || *std::min_element(spec.texture_mean.begin(), spec.texture_mean.end()) <= 0.0) {
        throw InvalidArgument("synth_scene: texture_mean components must be > 0");
    }

    const int h = spec.height, w = spec.width;
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::mt19937_64 rng(spec.texture_seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    LinearImage texture(h, w);
    auto t = texture.data();
    for (std::size_t p = 0; p < n; ++p) {
        const double intensity = 0.25 + 0.5 * uni(rng);
        for (int c = 0; c < 3; ++c) {
            const double chroma = 1.0 + spec.chroma_spread * (uni(rng) - 0.5);
            t[3 * p + c] = intensity * chroma * spec.texture_mean[c] / mean_peak;
        }
    }
    // Pin the empirical mean exactly.
    for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p) s += t[3 * p + c];
        const double scale = 0.5 * spec.texture_mean[c] / mean_peak / (s / static_cast<double>(n));
        for (std::size_t p = 0; p < n; ++p) t[3 * p + c] *= scale;
    }

    SyntheticScene scene{texture, texture, {}};
    const int split_row = spec.illuminants.size() == 1 ? h : static_cast<int>(std::lround(spec.split_fraction * h));
    for (std::size_t i = 0; i < spec.illuminants.size(); ++i) {
        IlluminantRegion region{spec.illuminants[i], std::vector<std::uint8_t>(n, 0)};
        for (int y = 0; y < h; ++y) {
            const bool inside = (i == 0) ? y < split_row : y >= split_row;
            if (!inside) continue;
            std::fill_n(region.mask.begin() + static_cast<std::ptrdiff_t>(y) * w, w, std::uint8_t{1});
        }
        scene.regions.push_back(std::move(region));
    }

    auto img = scene.image.data();
    for (const auto& region : scene.regions) {
        const Rgb& l = region.illuminant.rgb();
        const double peak = std::max({l[0], l[1], l[2]});
        for (std::size_t p = 0; p < n; ++p) {
            if (!region.mask[p]) continue;
            for (int c = 0; c < 3; ++c) img[3 * p + c] = t[3 * p + c] * (l[c] / peak);
        }
    }

    if (spec.noise_sigma > 0.0) {
        std::mt19937_64 noise_rng(spec.texture_seed ^ 0x6E6F697365ULL);
        std::normal_distribution<double> normal(0.0, spec.noise_sigma);
        for (double& v : img) v = std::max(0.0, v + normal(noise_rng));
    }
    return scene;
}

IlluminantVector random_illuminant(std::mt19937_64& rng, double max_ratio) {
    if (!(max_ratio >= 1.0)) throw InvalidArgument("random_illuminant: max_ratio must be >= 1");
    std::uniform_real_distribution<double> u(-std::log(max_ratio), std::log(max_ratio));
    const double rg = std::exp(u(rng));
    const double bg = std::exp(u(rng));
    return IlluminantVector(rg, 1.0, bg);
}

LinearImage corrected_target(const LinearImage& image, const std::vector<IlluminantRegion>& regions) {
    LinearImage out = image;
    auto d = out.data();
    for (const auto& region : regions) {
        if (region.mask.size() != image.pixel_count()) throw InvalidArgument("corrected_target: mask size mismatch");
        const GainTriple g = gains_from_illuminant(region.illuminant);
        for (std::size_t p = 0; p < region.mask.size(); ++p) {
            if (!region.mask[p]) continue;
            for (int c = 0; c < 3; ++c) d[3 * p + c] = image.data()[3 * p + c] * g[c];
        }
    }
    return out;
}

}  // namespace kwb
