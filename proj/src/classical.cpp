#include "kwb/classical.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace kwb {
namespace {

std::vector<bool> unsaturated_mask(const LinearImage& image, double threshold) {
    double peak = 0.0;
    for (double v : image.data()) peak = std::max(peak, v);
    if (!(peak > 0.0)) throw DegenerateScene("image is black");
    const double cut = threshold * peak;
    std::vector<bool> keep(image.pixel_count());
    const auto d = image.data();
    for (std::size_t p = 0; p < keep.size(); ++p) {
        keep[p] = d[3 * p] < cut && d[3 * p + 1] < cut && d[3 * p + 2] < cut;
    }
    // An image with nothing below the cut (e.g. uniform) has no saturated subset to drop.
    if (std::find(keep.begin(), keep.end(), true) == keep.end()) keep.assign(keep.size(), true);
    return keep;
}

// Minkowski-p mean of the kept samples of one channel. p == 1 is the plain mean.
double minkowski_mean(const std::vector<double>& values, const std::vector<bool>& keep, double p) {
    std::size_t n = 0;
    double peak = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!keep[i]) continue;
        ++n;
        peak = std::max(peak, std::fabs(values[i]));
    }
    if (n == 0) throw DegenerateScene("every pixel is excluded as saturated");
    if (p == 1.0) {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (keep[i]) s += std::fabs(values[i]);
        }
        return s / static_cast<double>(n);
    }
    if (peak == 0.0) return 0.0;
    // Normalizing by the peak keeps large p from underflowing.
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (keep[i]) s += std::pow(std::fabs(values[i]) / peak, p);
    }
    return std::pow(s / static_cast<double>(n), 1.0 / p) * peak;
}

std::vector<double> channel(const LinearImage& image, int c) {
    std::vector<double> out(image.pixel_count());
    const auto d = image.data();
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = d[3 * p + c];
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable Gaussian blur with edge replication.
std::vector<double> smooth(const std::vector<double>& plane, int h, int w, double sigma) {
    if (sigma <= 0.0) return plane;
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    std::vector<double> tmp(plane.size()), out(plane.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * plane[y * w + std::clamp(x + i, 0, w - 1)];
            tmp[y * w + x] = s;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * tmp[std::clamp(y + i, 0, h - 1) * w + x];
            out[y * w + x] = s;
        }
    }
    return out;
}

// Per-pixel derivative magnitude: first order sqrt(fx^2 + fy^2),
// second order sqrt(fxx^2 + 4 fxy^2 + fyy^2), central differences.
std::vector<double> edge_magnitude(const std::vector<double>& f, int h, int w, int order) {
    auto at = [&](int y, int x) { return f[std::clamp(y, 0, h - 1) * w + std::clamp(x, 0, w - 1)]; };
    std::vector<double> out(f.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (order == 1) {
                const double fx = 0.5 * (at(y, x + 1) - at(y, x - 1));
                const double fy = 0.5 * (at(y + 1, x) - at(y - 1, x));
                out[y * w + x] = std::sqrt(fx * fx + fy * fy);
            } else {
                const double fxx = at(y, x + 1) - 2.0 * at(y, x) + at(y, x - 1);
                const double fyy = at(y + 1, x) - 2.0 * at(y, x) + at(y - 1, x);
                const double fxy =
                    0.25 * (at(y + 1, x + 1) - at(y + 1, x - 1) - at(y - 1, x + 1) + at(y - 1, x - 1));
                out[y * w + x] = std::sqrt(fxx * fxx + 4.0 * fxy * fxy + fyy * fyy);
            }
        }
    }
    return out;
}

}  // namespace

void EstimatorConfig::validate() const {
    if (!(minkowski_p >= 1.0) || !std::isfinite(minkowski_p)) throw InvalidArgument("minkowski_p must be >= 1");
    if (!(saturation_threshold > 0.0 && saturation_threshold <= 1.0)) {
        throw InvalidArgument("saturation_threshold must be in (0, 1]");
    }
    if (!(smoothing_sigma >= 0.0)) throw InvalidArgument("smoothing_sigma must be >= 0");
}

std::string_view to_string(ClassicalMethod m) {
    switch (m) {
        case ClassicalMethod::WhitePatch: return "white_patch";
        case ClassicalMethod::GrayWorld: return "gray_world";
        case ClassicalMethod::ShadesOfGray: return "shades_of_gray";
        case ClassicalMethod::GrayEdge1: return "gray_edge_1";
        case ClassicalMethod::GrayEdge2: return "gray_edge_2";
    }
    return "unknown";
}

std::optional<ClassicalMethod> parse_classical_method(std::string_view name) {
    for (auto m : {ClassicalMethod::WhitePatch, ClassicalMethod::GrayWorld, ClassicalMethod::ShadesOfGray,
                   ClassicalMethod::GrayEdge1, ClassicalMethod::GrayEdge2}) {
        if (to_string(m) == name) return m;
    }
    return std::nullopt;
}

IlluminantVector estimate_classical(const LinearImage& image, const EstimatorConfig& config) {
    config.validate();
    image.validate();
    const auto keep = unsaturated_mask(image, config.saturation_threshold);
    const int h = image.height(), w = image.width();

    Rgb stat{};
    for (int c = 0; c < 3; ++c) {
        const auto values = channel(image, c);
        switch (config.method) {
            case ClassicalMethod::WhitePatch: {
                double m = 0.0;
                bool any = false;
                for (std::size_t p = 0; p < values.size(); ++p) {
                    if (keep[p]) {
                        m = std::max(m, values[p]);
                        any = true;
                    }
                }
                if (!any) throw DegenerateScene("every pixel is excluded as saturated");
                stat[c] = m;
                break;
            }
            case ClassicalMethod::GrayWorld:
                stat[c] = minkowski_mean(values, keep, 1.0);
                break;
            case ClassicalMethod::ShadesOfGray:
                stat[c] = minkowski_mean(values, keep, config.minkowski_p);
                break;
            case ClassicalMethod::GrayEdge1:
            case ClassicalMethod::GrayEdge2: {
                if (h < 3 || w < 3) throw InvalidArgument("gray_edge needs an image of at least 3x3");
                const int order = config.method == ClassicalMethod::GrayEdge1 ? 1 : 2;
                const auto edges = edge_magnitude(smooth(values, h, w, config.smoothing_sigma), h, w, order);
                stat[c] = minkowski_mean(edges, keep, config.minkowski_p);
                break;
            }
        }
    }
    for (double v : stat) {
        if (!std::isfinite(v)) throw DegenerateScene("estimator statistic is not finite");
    }
    if (stat[0] <= 0.0 && stat[1] <= 0.0 && stat[2] <= 0.0) {
        throw DegenerateScene("estimator statistic is the zero vector");
    }
    return IlluminantVector(stat);
}

}  // namespace kwb
