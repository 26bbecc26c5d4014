#include "kwb/color.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kwb/simd.hpp"

namespace kwb {

LinearImage::LinearImage(int height, int width, double fill)
    : height_(height), width_(width) {
    if (height < 1 || width < 1) throw InvalidArgument("image dimensions must be >= 1");
    data_.assign(static_cast<std::size_t>(height) * width * 3, fill);
}

LinearImage::LinearImage(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (height < 1 || width < 1) throw InvalidArgument("image dimensions must be >= 1");
    if (data_.size() != static_cast<std::size_t>(height) * width * 3) {
        throw InvalidArgument("image data size does not match dimensions");
    }
}

Rgb LinearImage::pixel(int y, int x) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {data_[i], data_[i + 1], data_[i + 2]};
}

void LinearImage::set_pixel(int y, int x, const Rgb& v) {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    data_[i] = v[0];
    data_[i + 1] = v[1];
    data_[i + 2] = v[2];
}

void LinearImage::validate() const {
    if (height_ < 1 || width_ < 1) throw InvalidArgument("empty image");
    for (double v : data_) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("image values must be finite and >= 0");
    }
}

IlluminantVector::IlluminantVector(double r, double g, double b) {
    for (double v : {r, g, b}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw InvalidArgument("illuminant components must be finite and >= 0");
        }
    }
    const double norm = std::sqrt(r * r + g * g + b * b);
    if (norm == 0.0) throw InvalidArgument("illuminant must be non-zero");
    v_ = {r / norm, g / norm, b / norm};
}

GainTriple::GainTriple(double r, double g, double b) {
    for (double v : {r, g, b}) {
        if (!std::isfinite(v) || v <= 0.0) throw InvalidArgument("gains must be finite and > 0");
    }
    v_ = {r, g, b};
}

LinearImage apply_diagonal(const LinearImage& image, const GainTriple& gains) {
    LinearImage out(image.height(), image.width());
    simd::kernels().scale_rgb(image.data().data(), out.data().data(), image.pixel_count(),
                              gains.rgb().data());
    return out;
}

GainTriple gains_from_illuminant(const IlluminantVector& illum) {
    if (illum.r() <= 0.0 || illum.g() <= 0.0 || illum.b() <= 0.0) {
        throw DegenerateIlluminant("illuminant has a zero component");
    }
    return {illum.g() / illum.r(), 1.0, illum.g() / illum.b()};
}

IlluminantVector illuminant_from_gains(const GainTriple& gains) {
    return {1.0 / gains.r(), 1.0 / gains.g(), 1.0 / gains.b()};
}

double angular_distance_rad(const Rgb& a, const Rgb& b) {
    const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    const double nb = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
    if (!(na > 0.0) || !(nb > 0.0) || !std::isfinite(na) || !std::isfinite(nb)) {
        throw InvalidArgument("angular distance of a zero or non-finite vector");
    }
    const Rgb u{a[0] / na, a[1] / na, a[2] / na};
    const Rgb v{b[0] / nb, b[1] / nb, b[2] / nb};
    const double cx = u[1] * v[2] - u[2] * v[1];
    const double cy = u[2] * v[0] - u[0] * v[2];
    const double cz = u[0] * v[1] - u[1] * v[0];
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), u[0] * v[0] + u[1] * v[1] + u[2] * v[2]);
}

double angular_distance(const Rgb& a, const Rgb& b) {
    return angular_distance_rad(a, b) * (180.0 / std::numbers::pi);
}

double angular_distance(const IlluminantVector& a, const IlluminantVector& b) {
    return angular_distance(a.rgb(), b.rgb());
}

double srgb_transfer(double x) {
    if (!(x >= 0.0)) throw InvalidArgument("srgb_transfer of a negative value");
    if (x <= kSrgbBreakpoint) return 12.92 * x;
    return 1.055 * std::pow(x, 1.0 / 2.4) - 0.055;
}

double srgb_transfer_derivative(double x) {
    if (x <= kSrgbBreakpoint) return 12.92;
    return (1.055 / 2.4) * std::pow(x, 1.0 / 2.4 - 1.0);
}

LinearImage gamma_encode_for_display(const LinearImage& image, double gamma) {
    LinearImage out = image;
    for (double& v : out.data()) v = std::pow(std::clamp(v, 0.0, 1.0), gamma);
    return out;
}

}  // namespace kwb
