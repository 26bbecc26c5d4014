#include "kwb/net/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kwb/resample.hpp"
#include "kwb/rng.hpp"
#include "kwb/simd.hpp"

namespace kwb::net {

void NetworkSpec::validate() const {
    if (kernel_order != 1 && kernel_order != 3) throw InvalidArgument("kernel_order must be 1 or 3");
    if (encoder_widths.empty()) throw InvalidArgument("at least one encoder stage is required");
    for (int w : encoder_widths) {
        if (w < 1) throw InvalidArgument("encoder widths must be >= 1");
    }
    if (input_size < 1 || input_size % (1 << stages()) != 0) {
        throw InvalidArgument("input_size must be divisible by 2^stages");
    }
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
    if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0)) throw InvalidArgument("loss weights must be >= 0");
    if (max_steps < 0) throw InvalidArgument("max_steps must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw InvalidArgument("Adam betas must be in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw InvalidArgument("adam_eps must be > 0");
}

namespace ops {

void pad_planes(const double* in, int c, int h, int w, double* out) {
    const int pw = w + 2;
    std::fill(out, out + static_cast<std::size_t>(c) * (h + 2) * pw, 0.0);
    for (int ch = 0; ch < c; ++ch) {
        const double* src = in + static_cast<std::size_t>(ch) * h * w;
        double* dst = out + static_cast<std::size_t>(ch) * (h + 2) * pw;
        for (int y = 0; y < h; ++y) std::copy_n(src + static_cast<std::size_t>(y) * w, w, dst + (y + 1) * pw + 1);
    }
}

void avgpool2(const double* in, int c, int h, int w, double* out) {
    const int oh = h / 2, ow = w / 2;
    for (int ch = 0; ch < c; ++ch) {
        const double* src = in + static_cast<std::size_t>(ch) * h * w;
        double* dst = out + static_cast<std::size_t>(ch) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            const double* r0 = src + static_cast<std::size_t>(2 * y) * w;
            const double* r1 = r0 + w;
            for (int x = 0; x < ow; ++x) {
                dst[y * ow + x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
            }
        }
    }
}

void upsample2(const double* in, int c, int h, int w, double* out) {
    const int ow = 2 * w;
    for (int ch = 0; ch < c; ++ch) {
        const double* src = in + static_cast<std::size_t>(ch) * h * w;
        double* dst = out + static_cast<std::size_t>(ch) * 4 * h * w;
        for (int y = 0; y < 2 * h; ++y) {
            for (int x = 0; x < ow; ++x) dst[y * ow + x] = src[(y / 2) * w + x / 2];
        }
    }
}

// Outputs are computed in a row-padded layout of width w + 2 so every tap is a
// single contiguous axpy; the two trailing columns per row are discarded.
void conv3x3_forward(const double* in_pad, int cin, int h, int w, const double* weight, const double* bias, int cout,
                     double* out) {
    const auto& k = simd::kernels();
    const int pw = w + 2;
    const std::size_t plane = static_cast<std::size_t>(h + 2) * pw;
    const std::size_t n = static_cast<std::size_t>(h) * pw - 2;
    std::vector<double> acc(static_cast<std::size_t>(h) * pw);
    for (int o = 0; o < cout; ++o) {
        std::fill(acc.begin(), acc.end(), bias[o]);
        for (int i = 0; i < cin; ++i) {
            const double* src = in_pad + i * plane;
            const double* wt = weight + (static_cast<std::size_t>(o) * cin + i) * 9;
            for (int t = 0; t < 9; ++t) k.axpy(wt[t], src + (t / 3) * pw + t % 3, acc.data(), n);
        }
        double* dst = out + static_cast<std::size_t>(o) * h * w;
        for (int y = 0; y < h; ++y) std::copy_n(acc.data() + static_cast<std::size_t>(y) * pw, w, dst + y * w);
    }
}

void conv3x3_backward(const double* in_pad, int cin, int h, int w, const double* weight, int cout,
                      const double* gout, double* gweight, double* gbias, double* gin_pad) {
    const auto& k = simd::kernels();
    const int pw = w + 2;
    const std::size_t plane = static_cast<std::size_t>(h + 2) * pw;
    const std::size_t n = static_cast<std::size_t>(h) * pw - 2;
    std::vector<double> g(static_cast<std::size_t>(h) * pw, 0.0);
    for (int o = 0; o < cout; ++o) {
        const double* src = gout + static_cast<std::size_t>(o) * h * w;
        double bsum = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                g[static_cast<std::size_t>(y) * pw + x] = src[y * w + x];
                bsum += src[y * w + x];
            }
        }
        gbias[o] += bsum;
        for (int i = 0; i < cin; ++i) {
            const double* xin = in_pad + i * plane;
            const double* wt = weight + (static_cast<std::size_t>(o) * cin + i) * 9;
            double* gw = gweight + (static_cast<std::size_t>(o) * cin + i) * 9;
            for (int t = 0; t < 9; ++t) {
                const std::size_t off = (t / 3) * pw + t % 3;
                gw[t] += k.dot(g.data(), xin + off, n);
                if (gin_pad) k.axpy(wt[t], g.data(), gin_pad + i * plane + off, n);
            }
        }
    }
}

}  // namespace ops

namespace {

void conv1x1_forward(const double* in, int cin, std::size_t hw, const double* weight, const double* bias, int cout,
                     double* out) {
    const auto& k = simd::kernels();
    for (int o = 0; o < cout; ++o) {
        double* dst = out + o * hw;
        std::fill(dst, dst + hw, bias[o]);
        for (int i = 0; i < cin; ++i) k.axpy(weight[o * cin + i], in + i * hw, dst, hw);
    }
}

void relu_inplace(std::vector<double>& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

void relu_gate(const std::vector<double>& out, std::vector<double>& g) {
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(out[i] > 0.0)) g[i] = 0.0;
    }
}

// Interior of padded planes, accumulated into `dst`.
void unpad_accumulate(const double* pad, int c, int h, int w, double* dst) {
    const int pw = w + 2;
    for (int ch = 0; ch < c; ++ch) {
        const double* src = pad + static_cast<std::size_t>(ch) * (h + 2) * pw;
        double* d = dst + static_cast<std::size_t>(ch) * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) d[y * w + x] += src[(y + 1) * pw + x + 1];
        }
    }
}

}  // namespace

Network::Network(const NetworkSpec& spec) : spec_(spec) {
    spec_.validate();
    const int S = spec_.stages();
    const auto& wd = spec_.encoder_widths;
    std::size_t offset = 0;
    auto add = [&](int cin, int cout, int ks) {
        ConvLayer l{cin, cout, ks, offset, 0};
        offset += l.weight_count();
        l.bias_offset = offset;
        offset += static_cast<std::size_t>(cout);
        layers_.push_back(l);
    };
    for (int s = 0; s < S; ++s) add(s == 0 ? 3 : wd[s - 1], wd[s], 3);
    for (int s = S - 1; s >= 0; --s) {
        const int up = s == S - 1 ? wd[S - 1] : decoder_width(s + 1);
        add(up + wd[s], decoder_width(s), 3);
    }
    add(decoder_width(0), spec_.output_channels(), 1);

    params_.assign(offset, 0.0);
    auto rng = substream(spec_.seed, "net/init");
    for (const auto& l : layers_) {
        const double bound = std::sqrt(6.0 / (l.in_channels * l.ksize * l.ksize));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < l.weight_count(); ++i) params_[l.weight_offset + i] = u(rng);
    }
}

Network Network::identity_init(const NetworkSpec& spec) {
    Network net(spec);
    const ConvLayer& h = net.head();
    std::fill_n(net.params_.begin() + static_cast<std::ptrdiff_t>(h.weight_offset), h.weight_count(), 0.0);
    const int K = spec.kernel_order;
    const int center = (K / 2) * K + K / 2;
    for (int c = 0; c < 3; ++c) net.params_[h.bias_offset + (c * 3 + c) * K * K + center] = 1.0;
    return net;
}

void Network::forward(const std::vector<double>& x, Activations& a) const {
    const int S = spec_.stages();
    const int R = spec_.input_size;
    if (x.size() != static_cast<std::size_t>(3) * R * R) throw InvalidArgument("network input size mismatch");
    const double* p = params_.data();
    a.size = R;
    a.input = x;
    a.enc_pad.resize(S);
    a.enc_out.resize(S);
    a.pool.resize(S);
    a.dec_pad.resize(S);
    a.dec_out.resize(S);

    const double* cur = a.input.data();
    int cur_c = 3;
    for (int s = 0; s < S; ++s) {
        const int r = R >> s;
        const ConvLayer& l = encoder(s);
        a.enc_pad[s].resize(static_cast<std::size_t>(cur_c) * (r + 2) * (r + 2));
        ops::pad_planes(cur, cur_c, r, r, a.enc_pad[s].data());
        a.enc_out[s].resize(static_cast<std::size_t>(l.out_channels) * r * r);
        ops::conv3x3_forward(a.enc_pad[s].data(), cur_c, r, r, p + l.weight_offset, p + l.bias_offset,
                             l.out_channels, a.enc_out[s].data());
        relu_inplace(a.enc_out[s]);
        a.pool[s].resize(static_cast<std::size_t>(l.out_channels) * (r / 2) * (r / 2));
        ops::avgpool2(a.enc_out[s].data(), l.out_channels, r, r, a.pool[s].data());
        cur = a.pool[s].data();
        cur_c = l.out_channels;
    }
    std::vector<double> cat;
    for (int s = S - 1; s >= 0; --s) {
        const int r = R >> s;
        const ConvLayer& l = decoder(s);
        const int skip_c = spec_.encoder_widths[s];
        const std::size_t rr = static_cast<std::size_t>(r) * r;
        cat.resize(static_cast<std::size_t>(cur_c + skip_c) * rr);
        ops::upsample2(cur, cur_c, r / 2, r / 2, cat.data());
        std::copy(a.enc_out[s].begin(), a.enc_out[s].end(), cat.begin() + static_cast<std::ptrdiff_t>(cur_c * rr));
        a.dec_pad[s].resize(static_cast<std::size_t>(l.in_channels) * (r + 2) * (r + 2));
        ops::pad_planes(cat.data(), l.in_channels, r, r, a.dec_pad[s].data());
        a.dec_out[s].resize(static_cast<std::size_t>(l.out_channels) * rr);
        ops::conv3x3_forward(a.dec_pad[s].data(), l.in_channels, r, r, p + l.weight_offset, p + l.bias_offset,
                             l.out_channels, a.dec_out[s].data());
        relu_inplace(a.dec_out[s]);
        cur = a.dec_out[s].data();
        cur_c = l.out_channels;
    }
    const ConvLayer& h = head();
    const std::size_t hw = static_cast<std::size_t>(R) * R;
    a.field.resize(static_cast<std::size_t>(h.out_channels) * hw);
    conv1x1_forward(cur, cur_c, hw, p + h.weight_offset, p + h.bias_offset, h.out_channels, a.field.data());
}

KernelField Network::forward(const LinearImage& input) const {
    if (input.height() != spec_.input_size || input.width() != spec_.input_size) {
        throw InvalidArgument("network input must be input_size x input_size");
    }
    Activations acts;
    forward(to_planar(input), acts);
    return planar::field_from_planar(acts.field, spec_.input_size, spec_.input_size, spec_.kernel_order);
}

void Network::backward(const Activations& a, const std::vector<double>& field_grad, std::vector<double>& grad) const {
    const int S = spec_.stages();
    const int R = spec_.input_size;
    const double* p = params_.data();
    double* gp = grad.data();
    if (grad.size() != params_.size()) throw InvalidArgument("gradient buffer size mismatch");
    const auto& k = simd::kernels();

    // Head.
    const ConvLayer& h = head();
    const std::size_t hw = static_cast<std::size_t>(R) * R;
    std::vector<double> g(static_cast<std::size_t>(h.in_channels) * hw, 0.0);
    for (int o = 0; o < h.out_channels; ++o) {
        const double* go = field_grad.data() + o * hw;
        double bsum = 0.0;
        for (std::size_t i = 0; i < hw; ++i) bsum += go[i];
        gp[h.bias_offset + o] += bsum;
        for (int i = 0; i < h.in_channels; ++i) {
            gp[h.weight_offset + o * h.in_channels + i] += k.dot(go, a.dec_out[0].data() + i * hw, hw);
            k.axpy(p[h.weight_offset + o * h.in_channels + i], go, g.data() + i * hw, hw);
        }
    }

    // Decoder, output to bottleneck. `g` holds dL/d(dec_out[s]).
    std::vector<std::vector<double>> g_enc(S);
    for (int s = 0; s < S; ++s) g_enc[s].assign(a.enc_out[s].size(), 0.0);
    std::vector<double> gpad;
    for (int s = 0; s < S; ++s) {
        const int r = R >> s;
        const ConvLayer& l = decoder(s);
        const int skip_c = spec_.encoder_widths[s];
        const int up_c = l.in_channels - skip_c;
        relu_gate(a.dec_out[s], g);
        gpad.assign(a.dec_pad[s].size(), 0.0);
        ops::conv3x3_backward(a.dec_pad[s].data(), l.in_channels, r, r, p + l.weight_offset, l.out_channels,
                              g.data(), gp + l.weight_offset, gp + l.bias_offset, gpad.data());
        std::vector<double> gcat(static_cast<std::size_t>(l.in_channels) * r * r, 0.0);
        unpad_accumulate(gpad.data(), l.in_channels, r, r, gcat.data());
        const std::size_t rr = static_cast<std::size_t>(r) * r;
        for (std::size_t i = 0; i < g_enc[s].size(); ++i) g_enc[s][i] += gcat[up_c * rr + i];
        // Nearest upsample backward: sum each 2x2 block.
        const int hr = r / 2;
        std::vector<double> gprev(static_cast<std::size_t>(up_c) * hr * hr, 0.0);
        for (int c = 0; c < up_c; ++c) {
            for (int y = 0; y < r; ++y) {
                for (int x = 0; x < r; ++x) gprev[(c * hr + y / 2) * hr + x / 2] += gcat[c * rr + y * r + x];
            }
        }
        g = std::move(gprev);
    }

    // Encoder, bottleneck to input. `g` holds dL/d(pool[s]).
    for (int s = S - 1; s >= 0; --s) {
        const int r = R >> s;
        const int hr = r / 2;
        const ConvLayer& l = encoder(s);
        auto& ge = g_enc[s];
        for (int c = 0; c < l.out_channels; ++c) {
            for (int y = 0; y < r; ++y) {
                for (int x = 0; x < r; ++x) {
                    ge[(static_cast<std::size_t>(c) * r + y) * r + x] += 0.25 * g[(c * hr + y / 2) * hr + x / 2];
                }
            }
        }
        relu_gate(a.enc_out[s], ge);
        if (s > 0) {
            gpad.assign(a.enc_pad[s].size(), 0.0);
            ops::conv3x3_backward(a.enc_pad[s].data(), l.in_channels, r, r, p + l.weight_offset, l.out_channels,
                                  ge.data(), gp + l.weight_offset, gp + l.bias_offset, gpad.data());
            g.assign(static_cast<std::size_t>(l.in_channels) * hr * 2 * hr * 2, 0.0);
            unpad_accumulate(gpad.data(), l.in_channels, r, r, g.data());
        } else {
            ops::conv3x3_backward(a.enc_pad[s].data(), l.in_channels, r, r, p + l.weight_offset, l.out_channels,
                                  ge.data(), gp + l.weight_offset, gp + l.bias_offset, nullptr);
        }
    }
}

}  // namespace kwb::net
