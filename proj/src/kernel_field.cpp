#include "kwb/kernel_field.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "kwb/image_io.hpp"
#include "kwb/resample.hpp"
#include "kwb/simd.hpp"

namespace kwb {

KernelField::KernelField(int height, int width, int k) : height_(height), width_(width), k_(k) {
    if (height < 1 || width < 1) throw InvalidArgument("kernel field dimensions must be >= 1");
    if (k < 1 || k % 2 == 0) throw InvalidArgument("kernel order must be odd and >= 1");
    w_.assign(static_cast<std::size_t>(height) * width * taps_per_pixel(), 0.0);
}

KernelField::KernelField(int height, int width, int k, std::vector<double> weights) : KernelField(height, width, k) {
    if (weights.size() != w_.size()) throw InvalidArgument("kernel field weight count mismatch");
    w_ = std::move(weights);
}

KernelField KernelField::diagonal(int height, int width, int k, const Rgb& gains) {
    KernelField f(height, width, k);
    const int c = k / 2;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int ch = 0; ch < 3; ++ch) f.at(y, x, ch, ch, c, c) = gains[ch];
        }
    }
    return f;
}

void KernelField::validate() const {
    if (height_ < 1 || width_ < 1 || k_ < 1 || k_ % 2 == 0) throw InvalidArgument("invalid kernel field shape");
    for (double v : w_) {
        if (!std::isfinite(v)) throw InvalidArgument("kernel field weights must be finite");
    }
}

namespace planar {

void shifted_plane(const double* plane, int height, int width, int dy, int dx, double* out) {
    for (int y = 0; y < height; ++y) {
        const double* src = plane + static_cast<std::size_t>(std::clamp(y + dy, 0, height - 1)) * width;
        double* dst = out + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) dst[x] = src[std::clamp(x + dx, 0, width - 1)];
    }
}

void apply_kernels(const double* x, const double* field, int height, int width, int k, double* y) {
    const std::size_t n = static_cast<std::size_t>(height) * width;
    const int r = k / 2;
    const auto& kern = simd::kernels();
    std::fill(y, y + 3 * n, 0.0);
    std::vector<double> shifted(n);
    for (int ci = 0; ci < 3; ++ci) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* src = x + ci * n;
                if (k > 1) {
                    shifted_plane(x + ci * n, height, width, ky - r, kx - r, shifted.data());
                    src = shifted.data();
                }
                for (int co = 0; co < 3; ++co) {
                    const std::size_t ch = static_cast<std::size_t>((co * 3 + ci) * k * k + ky * k + kx);
                    kern.mul_acc(field + ch * n, src, y + co * n, n);
                }
            }
        }
    }
}

std::vector<double> field_to_planar(const KernelField& field) {
    const std::size_t n = static_cast<std::size_t>(field.height()) * field.width();
    const int taps = field.taps_per_pixel();
    std::vector<double> out(n * taps);
    const auto w = field.weights();
    for (std::size_t p = 0; p < n; ++p) {
        for (int t = 0; t < taps; ++t) out[t * n + p] = w[p * taps + t];
    }
    return out;
}

KernelField field_from_planar(const std::vector<double>& planar, int height, int width, int k) {
    KernelField field(height, width, k);
    const std::size_t n = static_cast<std::size_t>(height) * width;
    const int taps = field.taps_per_pixel();
    if (planar.size() != n * taps) throw InvalidArgument("planar field size mismatch");
    auto w = field.weights();
    for (std::size_t p = 0; p < n; ++p) {
        for (int t = 0; t < taps; ++t) w[p * taps + t] = planar[t * n + p];
    }
    return field;
}

}  // namespace planar

ReferenceImage apply_kernels(const LinearImage& input, const KernelField& field) {
    if (input.height() != field.height() || input.width() != field.width()) {
        throw InvalidArgument("apply_kernels: image and kernel field dimensions differ");
    }
    const auto x = to_planar(input);
    const auto f = planar::field_to_planar(field);
    std::vector<double> y(x.size());
    planar::apply_kernels(x.data(), f.data(), field.height(), field.width(), field.k(), y.data());
    return {from_planar(y, field.height(), field.width())};
}

double regulation_penalty(const KernelField& field) {
    const int kk = field.k() * field.k();
    const std::size_t n = static_cast<std::size_t>(field.height()) * field.width();
    const auto w = field.weights();
    const auto& kern = simd::kernels();
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double* px = w.data() + p * field.taps_per_pixel();
        for (int co = 0; co < 3; ++co) {
            for (int ci = 0; ci < 3; ++ci) {
                if (co != ci) total += kern.sum_abs(px + (co * 3 + ci) * kk, kk);
            }
        }
    }
    return total;
}

std::size_t GainMap::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

GainMap illumination_vector_map(const LinearImage& input, const ReferenceImage& reference, double dark_threshold) {
    if (!input.same_shape(reference.image)) throw InvalidArgument("illumination map: dimension mismatch");
    GainMap map{input.height(), input.width(), {}, {}};
    const std::size_t n = input.pixel_count();
    map.gains.resize(n);
    map.valid.resize(n);
    const auto x = input.data();
    const auto r = reference.image.data();
    for (std::size_t p = 0; p < n; ++p) {
        bool ok = true;
        for (int c = 0; c < 3; ++c) {
            const double xi = x[3 * p + c];
            const double ri = r[3 * p + c];
            map.gains[p][c] = xi > 0.0 ? ri / xi : 0.0;
            if (!(xi >= dark_threshold) || !(ri > 0.0) || !std::isfinite(map.gains[p][c])) ok = false;
        }
        map.valid[p] = ok ? 1 : 0;
    }
    return map;
}

GainMap upsample_gain_map(const GainMap& map, int target_height, int target_width) {
    if (target_height < map.height || target_width < map.width) {
        throw InvalidArgument("upsample_gain_map: target smaller than source");
    }
    if (target_height == map.height && target_width == map.width) return map;

    auto coord = [](int o, int src, int dst) { return dst == 1 ? 0.0 : o * static_cast<double>(src - 1) / (dst - 1); };
    GainMap out{target_height, target_width, {}, {}};
    out.gains.resize(static_cast<std::size_t>(target_height) * target_width);
    out.valid.resize(out.gains.size());
    for (int oy = 0; oy < target_height; ++oy) {
        const double sy = coord(oy, map.height, target_height);
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, map.height - 1);
        const double fy = sy - y0;
        const int ny = std::clamp(static_cast<int>(std::lround(sy)), 0, map.height - 1);
        for (int ox = 0; ox < target_width; ++ox) {
            const double sx = coord(ox, map.width, target_width);
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, map.width - 1);
            const double fx = sx - x0;
            const int nx = std::clamp(static_cast<int>(std::lround(sx)), 0, map.width - 1);
            const Rgb& a = map.gains[y0 * map.width + x0];
            const Rgb& b = map.gains[y0 * map.width + x1];
            const Rgb& c = map.gains[y1 * map.width + x0];
            const Rgb& d = map.gains[y1 * map.width + x1];
            Rgb& g = out.gains[static_cast<std::size_t>(oy) * target_width + ox];
            for (int ch = 0; ch < 3; ++ch) {
                const double top = a[ch] * (1.0 - fx) + b[ch] * fx;
                const double bottom = c[ch] * (1.0 - fx) + d[ch] * fx;
                g[ch] = top * (1.0 - fy) + bottom * fy;
            }
            out.valid[static_cast<std::size_t>(oy) * target_width + ox] = map.valid[ny * map.width + nx];
        }
    }
    return out;
}

LinearImage apply_gain_map(const LinearImage& image, const GainMap& map) {
    if (image.height() != map.height || image.width() != map.width) {
        throw InvalidArgument("apply_gain_map: dimension mismatch");
    }
    LinearImage out = image;
    auto d = out.data();
    for (std::size_t p = 0; p < map.size(); ++p) {
        for (int c = 0; c < 3; ++c) d[3 * p + c] *= map.gains[p][c];
    }
    return out;
}

KernelVisualization visualize_kernels(const KernelField& field) {
    const int h = field.height(), w = field.width(), kk = field.k() * field.k();
    std::vector<double> means(static_cast<std::size_t>(9) * h * w);
    const auto weights = field.weights();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double* px = weights.data() + field.index(y, x, 0, 0, 0, 0);
            for (int pair = 0; pair < 9; ++pair) {
                double s = 0.0;
                for (int t = 0; t < kk; ++t) s += px[pair * kk + t];
                means[(static_cast<std::size_t>(pair) * h + y) * w + x] = s / kk;
            }
        }
    }
    const auto [lo_it, hi_it] = std::minmax_element(means.begin(), means.end());
    const double lo = *lo_it, span = *hi_it - *lo_it;
    KernelVisualization vis{3 * h, 3 * w, std::vector<std::uint8_t>(static_cast<std::size_t>(9) * h * w)};
    for (int co = 0; co < 3; ++co) {
        for (int ci = 0; ci < 3; ++ci) {
            const int pair = co * 3 + ci;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const double v = means[(static_cast<std::size_t>(pair) * h + y) * w + x];
                    const double u = span > 0.0 ? (v - lo) / span : 0.0;
                    vis.values[static_cast<std::size_t>(co * h + y) * vis.width + ci * w + x] =
                        static_cast<std::uint8_t>(std::lround(u * 255.0));
                }
            }
        }
    }
    return vis;
}

std::string encode_kernel_field(const KernelField& field) {
    std::string out = "KPF1";
    for (int v : {field.height(), field.width(), field.c_out(), field.c_in(), field.k()}) {
        binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
    }
    out.reserve(out.size() + field.weights().size() * 4);
    for (double v : field.weights()) binary::put_f32(out, v);
    return out;
}

KernelField decode_kernel_field(const std::string& bytes) {
    binary::Reader in(bytes);
    in.expect_magic("KPF1");
    const auto h = in.get<std::uint32_t>();
    const auto w = in.get<std::uint32_t>();
    const auto co = in.get<std::uint32_t>();
    const auto ci = in.get<std::uint32_t>();
    const auto k = in.get<std::uint32_t>();
    if (co != 3 || ci != 3) throw FormatError("KPF1: only 3x3 channel fields are supported");
    if (h == 0 || w == 0 || k == 0 || k % 2 == 0 || h > 65536 || w > 65536 || k > 63) {
        throw FormatError("KPF1: invalid header");
    }
    const std::size_t count = static_cast<std::size_t>(h) * w * co * ci * k * k;
    if (in.remaining() != count * 4) throw FormatError("KPF1: payload size mismatch");
    std::vector<double> weights(count);
    for (double& v : weights) v = in.get_f32();
    return KernelField(static_cast<int>(h), static_cast<int>(w), static_cast<int>(k), std::move(weights));
}

void write_kernel_field(const std::filesystem::path& path, const KernelField& field) {
    write_text_file(path, encode_kernel_field(field));
}

KernelField read_kernel_field(const std::filesystem::path& path) { return decode_kernel_field(read_text_file(path)); }

}  // namespace kwb
