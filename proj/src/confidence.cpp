#include "kwb/confidence.hpp"

#include <algorithm>
#include <cmath>

#include "kwb/resample.hpp"
#include "kwb/simd.hpp"

namespace kwb {

ConfidenceMap channel_confidence(const LinearImage& input, const KernelField& field) {
    if (input.height() != field.height() || input.width() != field.width()) {
        throw InvalidArgument("channel_confidence: dimension mismatch");
    }
    const int h = field.height(), w = field.width(), k = field.k(), r = k / 2;
    const std::size_t n = static_cast<std::size_t>(h) * w;
    const auto x = to_planar(input);
    auto f = planar::field_to_planar(field);
    for (double& v : f) v = std::fabs(v);

    const auto& kern = simd::kernels();
    std::vector<double> numer(3 * n, 0.0), denom(3 * n, 0.0), shifted(n);
    for (int ci = 0; ci < 3; ++ci) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                planar::shifted_plane(x.data() + ci * n, h, w, ky - r, kx - r, shifted.data());
                for (int co = 0; co < 3; ++co) {
                    const double* fw = f.data() + static_cast<std::size_t>((co * 3 + ci) * k * k + ky * k + kx) * n;
                    kern.mul_acc(fw, shifted.data(), denom.data() + co * n, n);
                    if (co == ci) kern.mul_acc(fw, shifted.data(), numer.data() + co * n, n);
                }
            }
        }
    }
    ConfidenceMap out{h, w, std::vector<double>(3 * n)};
    for (std::size_t i = 0; i < 3 * n; ++i) {
        out.values[i] = std::clamp(numer[i] / (denom[i] + kConfidenceDivEpsilon), 0.0, 1.0);
    }
    return out;
}

namespace {

std::pair<double, double> mean_var(const double* v, std::size_t n) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += v[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
    return {mean, var / static_cast<double>(n)};
}

}  // namespace

double uniform_confidence(const ConfidenceMap& maps) {
    const std::size_t n = static_cast<std::size_t>(maps.height) * maps.width;
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const auto [mean, var] = mean_var(maps.channel(c), n);
        total += (mean + kConfidenceEpsilon) / (var + kConfidenceEpsilon);
    }
    return total / 3.0;
}

double rb_confidence(double mu_r, double mu_b) {
    if (mu_r == 0.0 && mu_b == 0.0) return 0.0;
    return (mu_r + mu_b) / ((std::fabs(mu_r - mu_b) + kConfidenceEpsilon) * std::sqrt(mu_r * mu_r + mu_b * mu_b));
}

double rb_confidence(const ConfidenceMap& maps) {
    const std::size_t n = static_cast<std::size_t>(maps.height) * maps.width;
    return rb_confidence(mean_var(maps.channel(0), n).first, mean_var(maps.channel(2), n).first);
}

int quantize_level(double value, double training_mean) {
    if (!(training_mean > 0.0) || !std::isfinite(training_mean)) {
        throw InvalidArgument("quantize_level: training mean must be positive");
    }
    const double top = 0.8 * training_mean;
    if (value > top) return 5;
    const double bin = std::floor(value / (0.2 * training_mean));
    return static_cast<int>(std::clamp(bin, 0.0, 3.0)) + 1;
}

ConfidenceReport confidence_report(const ConfidenceMap& maps, double training_mean) {
    const std::size_t n = static_cast<std::size_t>(maps.height) * maps.width;
    ConfidenceReport r;
    r.uniform_value = uniform_confidence(maps);
    r.mu_r = mean_var(maps.channel(0), n).first;
    r.mu_b = mean_var(maps.channel(2), n).first;
    r.rb_value = rb_confidence(r.mu_r, r.mu_b);
    r.epsilon = kConfidenceEpsilon;
    r.level = training_mean > 0.0 ? quantize_level(r.rb_value, training_mean) : 1;
    return r;
}

std::vector<std::uint8_t> confidence_to_gray8(const ConfidenceMap& maps, int channel) {
    const std::size_t n = static_cast<std::size_t>(maps.height) * maps.width;
    std::vector<std::uint8_t> out(n);
    const double* v = maps.channel(channel);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v[i], 0.0, 1.0) * 255.0));
    }
    return out;
}

}  // namespace kwb
