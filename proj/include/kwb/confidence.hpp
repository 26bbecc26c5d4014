#pragma once

#include <vector>

#include "kwb/color.hpp"
#include "kwb/kernel_field.hpp"

namespace kwb {

// Per-pixel, per-channel share of a reference pixel contributed by the
// matching input channel. Values in [0, 1], planar [3][H*W].
struct ConfidenceMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    const double* channel(int c) const { return values.data() + static_cast<std::size_t>(c) * height * width; }
    double at(int y, int x, int c) const {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

struct ConfidenceReport {
    double uniform_value = 0.0;
    double rb_value = 0.0;
    double mu_r = 0.0;
    double mu_b = 0.0;
    double epsilon = 1e-6;
    int level = 1;
};

constexpr double kConfidenceEpsilon = 1e-6;
constexpr double kConfidenceDivEpsilon = 1e-9;

// <|f_cc|, V(X_c)> / (sum_i <|f_ci|, V(X_i)> + eps_div).
ConfidenceMap channel_confidence(const LinearImage& input, const KernelField& field);

// (1/C) sum_c (mean_c + eps) / (var_c + eps), population variance.
double uniform_confidence(const ConfidenceMap& maps);

// (mu_R + mu_B) / ((|mu_R - mu_B| + eps) * sqrt(mu_R^2 + mu_B^2)); 0 when both means are 0.
double rb_confidence(double mu_r, double mu_b);
double rb_confidence(const ConfidenceMap& maps);

// 5 when value > 0.8 * training_mean; otherwise four equal bins on [0, 0.8 * training_mean].
int quantize_level(double value, double training_mean);

// Both statistics plus the level of the R/B statistic against `training_mean`
// (level 1 when no training mean is known, i.e. training_mean <= 0).
ConfidenceReport confidence_report(const ConfidenceMap& maps, double training_mean);

// value * 255, clipped and rounded, for one channel.
std::vector<std::uint8_t> confidence_to_gray8(const ConfidenceMap& maps, int channel);

}  // namespace kwb
