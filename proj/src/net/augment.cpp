#include "kwb/net/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kwb/resample.hpp"

namespace kwb::net {

void AugmentConfig::validate() const {
    if (!(crop_min > 0.0 && crop_min <= crop_max && crop_max <= 1.0)) {
        throw InvalidArgument("crop fractions must satisfy 0 < min <= max <= 1");
    }
    if (!(max_rotation_deg >= 0.0 && max_rotation_deg < 90.0)) throw InvalidArgument("max rotation in [0, 90)");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) throw InvalidArgument("flip probability in [0, 1]");
    if (!(concat_probability >= 0.0 && concat_probability <= 1.0)) {
        throw InvalidArgument("concat probability in [0, 1]");
    }
    if (min_crop < 1) throw InvalidArgument("min_crop must be >= 1");
}

namespace {

std::vector<std::uint8_t> resize_mask_nearest(const std::vector<std::uint8_t>& m, int h, int w, int oh, int ow) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        const int sy = std::min(h - 1, static_cast<int>((y + 0.5) * h / oh));
        for (int x = 0; x < ow; ++x) {
            const int sx = std::min(w - 1, static_cast<int>((x + 0.5) * w / ow));
            out[static_cast<std::size_t>(y) * ow + x] = m[static_cast<std::size_t>(sy) * w + sx];
        }
    }
    return out;
}

LinearImage flip(const LinearImage& img, bool lr, bool tb) {
    if (!lr && !tb) return img;
    const int h = img.height(), w = img.width();
    LinearImage out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.set_pixel(y, x, img.pixel(tb ? h - 1 - y : y, lr ? w - 1 - x : x));
    }
    return out;
}

std::vector<std::uint8_t> flip_mask(const std::vector<std::uint8_t>& m, int h, int w, bool lr, bool tb) {
    std::vector<std::uint8_t> out(m.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out[static_cast<std::size_t>(y) * w + x] =
                m[static_cast<std::size_t>(tb ? h - 1 - y : y) * w + (lr ? w - 1 - x : x)];
        }
    }
    return out;
}

Rgb bilinear(const LinearImage& img, double fy, double fx) {
    const int h = img.height(), w = img.width();
    fy = std::clamp(fy, 0.0, h - 1.0);
    fx = std::clamp(fx, 0.0, w - 1.0);
    const int y0 = static_cast<int>(std::floor(fy)), x0 = static_cast<int>(std::floor(fx));
    const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
    const double ty = fy - y0, tx = fx - x0;
    Rgb out{};
    for (int c = 0; c < 3; ++c) {
        const double top = img.at(y0, x0, c) * (1.0 - tx) + img.at(y0, x1, c) * tx;
        const double bot = img.at(y1, x0, c) * (1.0 - tx) + img.at(y1, x1, c) * tx;
        out[c] = top * (1.0 - ty) + bot * ty;
    }
    return out;
}

}  // namespace

TrainingSample make_sample(const SourceSample& source, int size) {
    const SourceSample view = apply_view(source, ViewParams{std::min(source.image.height(), source.image.width()), 0,
                                                            0, 0.0, false, false},
                                         size);
    return {view.image, corrected_target(view.image, view.regions), view.regions};
}

ViewParams sample_view(std::mt19937_64& rng, int height, int width, const AugmentConfig& cfg) {
    const int shorter = std::min(height, width);
    if (cfg.crop_max * shorter < cfg.min_crop) throw InvalidArgument("augment: source too small for the minimum crop");
    std::uniform_real_distribution<double> frac(cfg.crop_min, cfg.crop_max);
    ViewParams v;
    do {
        v.crop_side = static_cast<int>(std::lround(frac(rng) * shorter));
    } while (v.crop_side < cfg.min_crop);
    v.crop_y = std::uniform_int_distribution<int>(0, height - v.crop_side)(rng);
    v.crop_x = std::uniform_int_distribution<int>(0, width - v.crop_side)(rng);
    v.angle_deg = std::uniform_real_distribution<double>(-cfg.max_rotation_deg, cfg.max_rotation_deg)(rng);
    std::bernoulli_distribution flip(cfg.flip_probability);
    v.flip_lr = flip(rng);
    v.flip_tb = flip(rng);
    return v;
}

AugmentParams sample_augment(std::mt19937_64& rng, const SourceSample& a, const SourceSample& b, int size,
                             const AugmentConfig& cfg) {
    cfg.validate();
    AugmentParams p;
    p.a = sample_view(rng, a.image.height(), a.image.width(), cfg);
    p.concat = std::bernoulli_distribution(cfg.concat_probability)(rng);
    if (p.concat) {
        p.b = sample_view(rng, b.image.height(), b.image.width(), cfg);
        p.split_row = std::uniform_int_distribution<int>(size / 4, (3 * size) / 4)(rng);
    }
    return p;
}

SourceSample apply_view(const SourceSample& src, const ViewParams& v, int size) {
    const int h = src.image.height(), w = src.image.width();
    if (v.crop_side < 1 || v.crop_y < 0 || v.crop_x < 0 || v.crop_y + v.crop_side > h || v.crop_x + v.crop_side > w) {
        throw InvalidArgument("augment: crop outside the source");
    }
    const double theta = v.angle_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(theta), sn = std::sin(theta);

    LinearImage img;
    std::vector<std::vector<std::uint8_t>> masks;
    int side = v.crop_side;
    if (v.angle_deg == 0.0) {
        img = LinearImage(side, side);
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) img.set_pixel(y, x, src.image.pixel(v.crop_y + y, v.crop_x + x));
        }
        for (const auto& r : src.regions) {
            std::vector<std::uint8_t> m(static_cast<std::size_t>(side) * side);
            for (int y = 0; y < side; ++y) {
                for (int x = 0; x < side; ++x) {
                    m[static_cast<std::size_t>(y) * side + x] =
                        r.mask[static_cast<std::size_t>(v.crop_y + y) * w + v.crop_x + x];
                }
            }
            masks.push_back(std::move(m));
        }
    } else {
        // Largest axis-aligned square inside the rotated crop square.
        side = std::max(1, static_cast<int>(std::floor(v.crop_side / (std::abs(cs) + std::abs(sn)))));
        img = LinearImage(side, side);
        masks.assign(src.regions.size(), std::vector<std::uint8_t>(static_cast<std::size_t>(side) * side));
        const double cy = v.crop_y + v.crop_side / 2.0, cx = v.crop_x + v.crop_side / 2.0;
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const double oy = y + 0.5 - side / 2.0, ox = x + 0.5 - side / 2.0;
                // Source pixel-center coordinates.
                const double sy = cy + sn * ox + cs * oy - 0.5;
                const double sx = cx + cs * ox - sn * oy - 0.5;
                img.set_pixel(y, x, bilinear(src.image, sy, sx));
                const int ny = std::clamp(static_cast<int>(std::lround(sy)), 0, h - 1);
                const int nx = std::clamp(static_cast<int>(std::lround(sx)), 0, w - 1);
                for (std::size_t r = 0; r < src.regions.size(); ++r) {
                    masks[r][static_cast<std::size_t>(y) * side + x] =
                        src.regions[r].mask[static_cast<std::size_t>(ny) * w + nx];
                }
            }
        }
    }
    img = flip(img, v.flip_lr, v.flip_tb);
    SourceSample out;
    out.image = resize_area(img, size, size);
    for (std::size_t r = 0; r < src.regions.size(); ++r) {
        auto m = resize_mask_nearest(flip_mask(masks[r], side, side, v.flip_lr, v.flip_tb), side, side, size, size);
        if (std::find(m.begin(), m.end(), std::uint8_t{1}) == m.end()) continue;
        out.regions.push_back({src.regions[r].illuminant, std::move(m)});
    }
    return out;
}

TrainingSample apply_augment(const SourceSample& a, const SourceSample& b, const AugmentParams& p, int size) {
    SourceSample va = apply_view(a, p.a, size);
    if (p.concat) {
        const SourceSample vb = apply_view(b, p.b, size);
        const std::size_t cut = static_cast<std::size_t>(p.split_row) * size;
        auto d = va.image.data();
        const auto db = vb.image.data();
        std::copy(db.begin() + static_cast<std::ptrdiff_t>(3 * cut), db.end(),
                  d.begin() + static_cast<std::ptrdiff_t>(3 * cut));
        std::vector<IlluminantRegion> regions;
        auto keep = [&](const IlluminantRegion& r, bool top) {
            IlluminantRegion out{r.illuminant, r.mask};
            for (std::size_t i = 0; i < out.mask.size(); ++i) {
                if ((i < cut) != top) out.mask[i] = 0;
            }
            if (std::find(out.mask.begin(), out.mask.end(), std::uint8_t{1}) != out.mask.end()) {
                regions.push_back(std::move(out));
            }
        };
        for (const auto& r : va.regions) keep(r, true);
        for (const auto& r : vb.regions) keep(r, false);
        va.regions = std::move(regions);
    }
    LinearImage target = corrected_target(va.image, va.regions);
    return {std::move(va.image), std::move(target), std::move(va.regions)};
}

TrainingSample augment(const SourceSample& a, const SourceSample& b, std::mt19937_64& rng, int size,
                       const AugmentConfig& config) {
    return apply_augment(a, b, sample_augment(rng, a, b, size, config), size);
}

}  // namespace kwb::net
