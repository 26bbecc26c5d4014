#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kwb/color.hpp"

namespace kwb {

// Per-pixel bank of 3x3 (output x input channel) K x K kernels.
// Weights are stored as [row][col][c_out][c_in][ky][kx].
class KernelField {
public:
    static constexpr int kChannels = 3;

    KernelField() = default;
    KernelField(int height, int width, int k);  // zero weights
    KernelField(int height, int width, int k, std::vector<double> weights);

    // Center-tap diagonal field: f_{c,c} = gains[c] at the center, zero elsewhere.
    static KernelField diagonal(int height, int width, int k, const Rgb& gains);
    static KernelField identity(int height, int width, int k) { return diagonal(height, width, k, {1.0, 1.0, 1.0}); }

    int height() const { return height_; }
    int width() const { return width_; }
    int k() const { return k_; }
    int c_out() const { return kChannels; }
    int c_in() const { return kChannels; }
    // Weights per pixel: 9 * K^2.
    int taps_per_pixel() const { return kChannels * kChannels * k_ * k_; }

    std::size_t index(int row, int col, int co, int ci, int ky, int kx) const {
        return ((((static_cast<std::size_t>(row) * width_ + col) * 3 + co) * 3 + ci) * k_ + ky) * k_ + kx;
    }
    double& at(int row, int col, int co, int ci, int ky, int kx) { return w_[index(row, col, co, ci, ky, kx)]; }
    double at(int row, int col, int co, int ci, int ky, int kx) const { return w_[index(row, col, co, ci, ky, kx)]; }

    std::span<double> weights() { return w_; }
    std::span<const double> weights() const { return w_; }

    void validate() const;

    friend bool operator==(const KernelField&, const KernelField&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    int k_ = 1;
    std::vector<double> w_;
};

// Output of kernel application at model resolution. May hold negative values.
struct ReferenceImage {
    LinearImage image;
    int height() const { return image.height(); }
    int width() const { return image.width(); }
};

// Y^p_c = sum_i <f^p_{c,i}, V^p(X_i)>, V^p the K x K neighborhood with edge replication.
ReferenceImage apply_kernels(const LinearImage& input, const KernelField& field);

// Sum of |w| over every cross-channel (c_out != c_in) weight of every pixel.
double regulation_penalty(const KernelField& field);

constexpr double kDefaultDarkThreshold = 0.02;

// Per-pixel gain triples with validity flags.
struct GainMap {
    int height = 0;
    int width = 0;
    std::vector<Rgb> gains;
    std::vector<std::uint8_t> valid;

    std::size_t size() const { return gains.size(); }
    std::size_t valid_count() const;
};

// gain[c] = reference / input. Pixels with an input channel below
// dark_threshold or a non-positive reference channel are flagged invalid.
GainMap illumination_vector_map(const LinearImage& input, const ReferenceImage& reference,
                                double dark_threshold = kDefaultDarkThreshold);

// Bilinear (aligned corners) for gains, nearest for validity. Stored gains of
// invalid pixels are interpolated as-is, so dark-region spikes stay visible.
GainMap upsample_gain_map(const GainMap& map, int target_height, int target_width);

// Multiplies each pixel by its map gain (the "kernel applying" output).
LinearImage apply_gain_map(const LinearImage& image, const GainMap& map);

// Tiled [a-b] visualization of the mean kernel weight per input/output
// channel pair, normalized to [0, 255] over the whole field. Tile (row b, col a)
// shows the weights that take input channel a into output channel b.
struct KernelVisualization {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;
};
KernelVisualization visualize_kernels(const KernelField& field);

// "KPF1" + u32 LE {H, W, C_out, C_in, K} + f32 LE weights in storage order.
std::string encode_kernel_field(const KernelField& field);
KernelField decode_kernel_field(const std::string& bytes);
void write_kernel_field(const std::filesystem::path& path, const KernelField& field);
KernelField read_kernel_field(const std::filesystem::path& path);

namespace planar {

// Kernel application on planar buffers: x is [3][H*W], field is
// [(co*3 + ci)*K*K + ky*K + kx][H*W], y is [3][H*W] and is overwritten.
// Per pixel the accumulation order is ci, ky, kx regardless of SIMD width.
void apply_kernels(const double* x, const double* field, int height, int width, int k, double* y);

// Edge-replicated copy of `plane` shifted by (dy, dx): out[y][x] = plane[y+dy][x+dx].
void shifted_plane(const double* plane, int height, int width, int dy, int dx, double* out);

std::vector<double> field_to_planar(const KernelField& field);
KernelField field_from_planar(const std::vector<double>& planar, int height, int width, int k);

}  // namespace planar

}  // namespace kwb
