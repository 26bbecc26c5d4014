#pragma once

#include <vector>

#include "kwb/color.hpp"
#include "kwb/kernel_field.hpp"
#include "kwb/net/config.hpp"

namespace kwb::net {

struct ImageLoss {
    double l1 = 0.0;  // L1 of sRGB-domain gradient differences, per pixel
    double l2 = 0.0;  // RMS of sRGB-domain differences
};

struct LossTerms {
    double l1 = 0.0;
    double l2 = 0.0;
    double penalty = 0.0;  // cross-channel L1 per pixel
    double total = 0.0;
};

// Negative predictions are clamped to 0 before the sRGB transfer.
ImageLoss image_loss(const LinearImage& predicted, const LinearImage& target);

// lambda1 * l1(f(X), Y*) + lambda2 * l2(f(X), Y*) + lambda3 * R(F) / (H W).
double total_loss(const LinearImage& input, const LinearImage& target, const KernelField& field,
                  const TrainConfig& config);
LossTerms loss_terms(const LinearImage& input, const LinearImage& target, const KernelField& field,
                     const TrainConfig& config);

// Non-differentiable points crossed by the loss, recorded for gradient checks.
struct LossKinks {
    std::vector<unsigned char> bits;
};

// Planar core: x and target are [3][H*W], field is the planar kernel-field
// layout. When `field_grad` is non-null it receives dL/dfield (overwritten).
LossTerms loss_planar(const std::vector<double>& x, const std::vector<double>& field,
                      const std::vector<double>& target, int height, int width, int k, const TrainConfig& config,
                      std::vector<double>* field_grad, LossKinks* kinks = nullptr);

// Image-loss core on planar predictions. `pred_grad` receives
// (w1 * dl1 + w2 * dl2) / dpred when non-null.
ImageLoss image_loss_planar(const std::vector<double>& pred, const std::vector<double>& target, int height,
                            int width, double w1, double w2, std::vector<double>* pred_grad,
                            LossKinks* kinks = nullptr);

}  // namespace kwb::net
