#include "kwb/resample.hpp"

#include <algorithm>
#include <cmath>

namespace kwb {
namespace {

struct Tap {
    int index;
    double weight;
};

// For each output cell, the input cells it overlaps and the overlap fraction.
std::vector<std::vector<Tap>> area_taps(int in, int out) {
    std::vector<std::vector<Tap>> taps(out);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        const double lo = o * scale;
        const double hi = (o + 1) * scale;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(in - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int i = first; i <= last; ++i) {
            const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
            if (overlap > 0.0) taps[o].push_back({i, overlap / scale});
        }
    }
    return taps;
}

}  // namespace

std::vector<double> resize_area(const std::vector<double>& src, int height, int width, int channels,
                                int out_height, int out_width) {
    if (height < 1 || width < 1 || out_height < 1 || out_width < 1 || channels < 1) {
        throw InvalidArgument("resize_area: dimensions must be >= 1");
    }
    if (src.size() != static_cast<std::size_t>(height) * width * channels) {
        throw InvalidArgument("resize_area: buffer size mismatch");
    }
    const auto ty = area_taps(height, out_height);
    const auto tx = area_taps(width, out_width);

    // Horizontal pass then vertical pass.
    std::vector<double> tmp(static_cast<std::size_t>(height) * out_width * channels, 0.0);
    for (int y = 0; y < height; ++y) {
        for (int ox = 0; ox < out_width; ++ox) {
            double* dst = &tmp[(static_cast<std::size_t>(y) * out_width + ox) * channels];
            for (const Tap& t : tx[ox]) {
                const double* s = &src[(static_cast<std::size_t>(y) * width + t.index) * channels];
                for (int c = 0; c < channels; ++c) dst[c] += t.weight * s[c];
            }
        }
    }
    std::vector<double> out(static_cast<std::size_t>(out_height) * out_width * channels, 0.0);
    for (int oy = 0; oy < out_height; ++oy) {
        for (const Tap& t : ty[oy]) {
            const double* s = &tmp[static_cast<std::size_t>(t.index) * out_width * channels];
            double* dst = &out[static_cast<std::size_t>(oy) * out_width * channels];
            for (int i = 0; i < out_width * channels; ++i) dst[i] += t.weight * s[i];
        }
    }
    return out;
}

LinearImage resize_area(const LinearImage& image, int out_height, int out_width) {
    if (image.height() == out_height && image.width() == out_width) return image;
    std::vector<double> src(image.data().begin(), image.data().end());
    return LinearImage(out_height, out_width,
                       resize_area(src, image.height(), image.width(), 3, out_height, out_width));
}

std::vector<double> to_planar(const LinearImage& image) {
    const std::size_t n = image.pixel_count();
    std::vector<double> planar(n * 3);
    const auto d = image.data();
    for (std::size_t p = 0; p < n; ++p) {
        for (int c = 0; c < 3; ++c) planar[c * n + p] = d[p * 3 + c];
    }
    return planar;
}

LinearImage from_planar(const std::vector<double>& planar, int height, int width) {
    const std::size_t n = static_cast<std::size_t>(height) * width;
    if (planar.size() != n * 3) throw InvalidArgument("from_planar: size mismatch");
    std::vector<double> data(n * 3);
    for (std::size_t p = 0; p < n; ++p) {
        for (int c = 0; c < 3; ++c) data[p * 3 + c] = planar[c * n + p];
    }
    return LinearImage(height, width, std::move(data));
}

}  // namespace kwb
