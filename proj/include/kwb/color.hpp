#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "kwb/errors.hpp"

namespace kwb {

using Rgb = std::array<double, 3>;

// H x W x 3 linear RGB raster, row-major by (row, column, channel).
// Values are nominally in [0, 1] but are never clipped by the core.
class LinearImage {
public:
    static constexpr int kChannels = 3;

    LinearImage() = default;
    LinearImage(int height, int width, double fill = 0.0);
    LinearImage(int height, int width, std::vector<double> data);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return kChannels; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
    bool empty() const { return data_.empty(); }

    double& at(int y, int x, int c) { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }
    double at(int y, int x, int c) const { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }

    Rgb pixel(int y, int x) const;
    void set_pixel(int y, int x, const Rgb& v);

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    // Throws InvalidArgument unless every value is finite and >= 0.
    void validate() const;

    bool same_shape(const LinearImage& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const LinearImage&, const LinearImage&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

// Unit-L2 direction of a light source. Components are non-negative.
class IlluminantVector {
public:
    IlluminantVector() = default;
    // Normalizes; throws InvalidArgument for negative, non-finite or all-zero input.
    IlluminantVector(double r, double g, double b);
    explicit IlluminantVector(const Rgb& rgb) : IlluminantVector(rgb[0], rgb[1], rgb[2]) {}

    double r() const { return v_[0]; }
    double g() const { return v_[1]; }
    double b() const { return v_[2]; }
    const Rgb& rgb() const { return v_; }
    double operator[](int c) const { return v_[c]; }

    friend bool operator==(const IlluminantVector&, const IlluminantVector&) = default;

private:
    Rgb v_{0.5773502691896258, 0.5773502691896258, 0.5773502691896258};
};

// Per-channel multiplicative correction (the diagonal of the transform matrix).
class GainTriple {
public:
    GainTriple() = default;
    // Throws InvalidArgument unless all components are finite and > 0.
    GainTriple(double r, double g, double b);
    explicit GainTriple(const Rgb& rgb) : GainTriple(rgb[0], rgb[1], rgb[2]) {}

    double r() const { return v_[0]; }
    double g() const { return v_[1]; }
    double b() const { return v_[2]; }
    const Rgb& rgb() const { return v_; }
    double operator[](int c) const { return v_[c]; }

    friend bool operator==(const GainTriple&, const GainTriple&) = default;

private:
    Rgb v_{1.0, 1.0, 1.0};
};

LinearImage apply_diagonal(const LinearImage& image, const GainTriple& gains);

// Green-normalized gains (g/r, 1, g/b) that neutralize `illum`.
GainTriple gains_from_illuminant(const IlluminantVector& illum);

// The light direction a gain triple corrects: normalize(1/r, 1/g, 1/b).
IlluminantVector illuminant_from_gains(const GainTriple& gains);

// Angle between two non-zero vectors in degrees, in [0, 180].
double angular_distance(const Rgb& a, const Rgb& b);
double angular_distance(const IlluminantVector& a, const IlluminantVector& b);
// Same, in radians.
double angular_distance_rad(const Rgb& a, const Rgb& b);

// sRGB opto-electronic transfer; negative input throws InvalidArgument.
double srgb_transfer(double x);
// Derivative of srgb_transfer; the linear slope is used at the breakpoint.
double srgb_transfer_derivative(double x);

constexpr double kSrgbBreakpoint = 0.0031308;

// Clips to [0, 1] and applies v^gamma, the display path (gamma = 1/2.2).
LinearImage gamma_encode_for_display(const LinearImage& image, double gamma = 1.0 / 2.2);

}  // namespace kwb
