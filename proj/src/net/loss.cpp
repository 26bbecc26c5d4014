#include "kwb/net/loss.hpp"

#include <algorithm>
#include <cmath>

#include "kwb/resample.hpp"

namespace kwb::net {
namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

unsigned char sign_bits(double v) { return v > 0.0 ? 1 : (v < 0.0 ? 2 : 0); }

}  // namespace

ImageLoss image_loss_planar(const std::vector<double>& pred, const std::vector<double>& target, int h, int w,
                            double w1, double w2, std::vector<double>* pred_grad, LossKinks* kinks) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    if (pred.size() != 3 * hw || target.size() != 3 * hw) throw InvalidArgument("loss: dimension mismatch");
    std::vector<double> d(3 * hw);
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = srgb_transfer(std::max(pred[i], 0.0)) - srgb_transfer(std::max(target[i], 0.0));
        if (kinks) {
            const unsigned char branch = pred[i] <= 0.0 ? 0 : (pred[i] <= kSrgbBreakpoint ? 1 : 2);
            kinks->bits.push_back(branch);
        }
    }
    const double n = static_cast<double>(hw);

    ImageLoss out;
    double sq = 0.0;
    for (double v : d) sq += v * v;
    out.l2 = std::sqrt(sq / n);

    std::vector<double> gd;
    if (pred_grad) gd.assign(3 * hw, 0.0);
    double l1 = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double* dc = d.data() + c * hw;
        double* gc = pred_grad ? gd.data() + c * hw : nullptr;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x + 1 < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const double diff = dc[i + 1] - dc[i];
                l1 += std::abs(diff);
                if (kinks) kinks->bits.push_back(sign_bits(diff));
                if (gc) {
                    const double s = sign(diff) * w1 / n;
                    gc[i + 1] += s;
                    gc[i] -= s;
                }
            }
        }
        for (int y = 0; y + 1 < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const double diff = dc[i + w] - dc[i];
                l1 += std::abs(diff);
                if (kinks) kinks->bits.push_back(sign_bits(diff));
                if (gc) {
                    const double s = sign(diff) * w1 / n;
                    gc[i + w] += s;
                    gc[i] -= s;
                }
            }
        }
    }
    out.l1 = l1 / n;

    if (pred_grad) {
        const double l2_scale = out.l2 > 0.0 ? w2 / (n * out.l2) : 0.0;
        pred_grad->resize(3 * hw);
        for (std::size_t i = 0; i < gd.size(); ++i) {
            const double g_d = gd[i] + l2_scale * d[i];
            (*pred_grad)[i] = pred[i] > 0.0 ? g_d * srgb_transfer_derivative(pred[i]) : 0.0;
        }
    }
    return out;
}

ImageLoss image_loss(const LinearImage& predicted, const LinearImage& target) {
    if (!predicted.same_shape(target)) throw InvalidArgument("image_loss: dimension mismatch");
    // Negative predictions are legal here; to_planar copies them unchanged.
    return image_loss_planar(to_planar(predicted), to_planar(target), predicted.height(), predicted.width(), 0.0,
                             0.0, nullptr);
}

LossTerms loss_planar(const std::vector<double>& x, const std::vector<double>& field,
                      const std::vector<double>& target, int h, int w, int k, const TrainConfig& cfg,
                      std::vector<double>* field_grad, LossKinks* kinks) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    const int kk = k * k;
    if (field.size() != static_cast<std::size_t>(9 * kk) * hw) throw InvalidArgument("loss: field size mismatch");
    std::vector<double> y(3 * hw);
    planar::apply_kernels(x.data(), field.data(), h, w, k, y.data());

    std::vector<double> gy;
    const ImageLoss il = image_loss_planar(y, target, h, w, cfg.lambda1, cfg.lambda2, field_grad ? &gy : nullptr, kinks);

    const double n = static_cast<double>(hw);
    double pen = 0.0;
    for (int co = 0; co < 3; ++co) {
        for (int ci = 0; ci < 3; ++ci) {
            if (co == ci) continue;
            const double* f = field.data() + static_cast<std::size_t>((co * 3 + ci) * kk) * hw;
            for (std::size_t i = 0; i < kk * hw; ++i) {
                pen += std::abs(f[i]);
                if (kinks) kinks->bits.push_back(sign_bits(f[i]));
            }
        }
    }
    LossTerms t{il.l1, il.l2, pen / n, 0.0};
    t.total = cfg.lambda1 * t.l1 + cfg.lambda2 * t.l2 + cfg.lambda3 * t.penalty;

    if (field_grad) {
        field_grad->assign(field.size(), 0.0);
        const int r = k / 2;
        std::vector<double> shifted(hw);
        for (int ci = 0; ci < 3; ++ci) {
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    planar::shifted_plane(x.data() + ci * hw, h, w, ky - r, kx - r, shifted.data());
                    for (int co = 0; co < 3; ++co) {
                        double* g = field_grad->data() + static_cast<std::size_t>((co * 3 + ci) * kk + ky * k + kx) * hw;
                        const double* gyc = gy.data() + co * hw;
                        for (std::size_t i = 0; i < hw; ++i) g[i] = gyc[i] * shifted[i];
                    }
                }
            }
        }
        if (cfg.lambda3 != 0.0) {
            const double s = cfg.lambda3 / n;
            for (int co = 0; co < 3; ++co) {
                for (int ci = 0; ci < 3; ++ci) {
                    if (co == ci) continue;
                    const std::size_t base = static_cast<std::size_t>((co * 3 + ci) * kk) * hw;
                    for (std::size_t i = 0; i < kk * hw; ++i) (*field_grad)[base + i] += s * sign(field[base + i]);
                }
            }
        }
    }
    return t;
}

LossTerms loss_terms(const LinearImage& input, const LinearImage& target, const KernelField& field,
                     const TrainConfig& config) {
    if (!input.same_shape(target) || input.height() != field.height() || input.width() != field.width()) {
        throw InvalidArgument("total_loss: dimension mismatch");
    }
    return loss_planar(to_planar(input), planar::field_to_planar(field), to_planar(target), input.height(),
                       input.width(), field.k(), config, nullptr);
}

double total_loss(const LinearImage& input, const LinearImage& target, const KernelField& field,
                  const TrainConfig& config) {
    return loss_terms(input, target, field, config).total;
}

}  // namespace kwb::net
