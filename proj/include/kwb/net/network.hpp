#pragma once

#include <cstddef>
#include <vector>

#include "kwb/color.hpp"
#include "kwb/kernel_field.hpp"
#include "kwb/net/config.hpp"

namespace kwb::net {

struct ConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    int ksize = 3;  // 3 (zero-padded "same") or 1
    std::size_t weight_offset = 0;  // [out][in][ky][kx]
    std::size_t bias_offset = 0;
    std::size_t weight_count() const { return static_cast<std::size_t>(out_channels) * in_channels * ksize * ksize; }
};

// Everything the backward pass needs from one forward pass. All tensors are
// planar [channel][row][col].
struct Activations {
    int size = 0;
    std::vector<double> input;                  // 3 x S x S
    std::vector<std::vector<double>> enc_pad;   // zero-padded encoder conv inputs
    std::vector<std::vector<double>> enc_out;   // post-ReLU encoder outputs (skip sources)
    std::vector<std::vector<double>> pool;      // 2x average-pooled encoder outputs
    std::vector<std::vector<double>> dec_pad;   // zero-padded [upsampled, skip] decoder inputs, by stage
    std::vector<std::vector<double>> dec_out;   // post-ReLU decoder outputs, by stage
    std::vector<double> field;                  // 9K^2 x S x S, planar kernel-field layout
};

// Encoder: per stage 3x3 conv + ReLU + 2x average pool. Decoder: per stage
// nearest 2x upsample, concatenation with the matching encoder output, 3x3
// conv + ReLU. A final 1x1 conv produces the kernel field without activation.
class Network {
public:
    Network() = default;
    // Fan-in-scaled uniform init (bound sqrt(6 / fan_in)), zero biases.
    explicit Network(const NetworkSpec& spec);

    // Hidden layers initialized as above; final layer weights zero and biases
    // set to the identity kernel, so every input maps to the identity field.
    static Network identity_init(const NetworkSpec& spec);

    const NetworkSpec& spec() const { return spec_; }
    const std::vector<ConvLayer>& layers() const { return layers_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::size_t param_count() const { return params_.size(); }

    const ConvLayer& encoder(int s) const { return layers_[s]; }
    const ConvLayer& decoder(int s) const { return layers_[2 * spec_.stages() - 1 - s]; }
    const ConvLayer& head() const { return layers_.back(); }
    int decoder_width(int s) const { return spec_.encoder_widths[s > 0 ? s - 1 : 0]; }

    // Planar input 3 x S x S.
    void forward(const std::vector<double>& planar_input, Activations& acts) const;
    KernelField forward(const LinearImage& input) const;

    // Accumulates dL/dparams into `grad` given dL/dfield (planar, like acts.field).
    void backward(const Activations& acts, const std::vector<double>& field_grad, std::vector<double>& grad) const;

private:
    NetworkSpec spec_;
    std::vector<ConvLayer> layers_;
    std::vector<double> params_;
};

namespace ops {

// out[o] = bias[o] + sum_i w[o][i] * in[i] over a zero-padded 3x3 window.
// `in_pad` is [cin][(h+2)(w+2)].
void conv3x3_forward(const double* in_pad, int cin, int h, int w, const double* weight, const double* bias, int cout,
                     double* out);
// Accumulates weight, bias and (if non-null) padded-input gradients.
void conv3x3_backward(const double* in_pad, int cin, int h, int w, const double* weight, int cout,
                      const double* gout, double* gweight, double* gbias, double* gin_pad);

void pad_planes(const double* in, int c, int h, int w, double* out);
void avgpool2(const double* in, int c, int h, int w, double* out);
void upsample2(const double* in, int c, int h, int w, double* out);

}  // namespace ops

}  // namespace kwb::net
