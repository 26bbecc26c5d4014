// AArch64 variant. Uses separate vmulq/vaddq rather than vfmaq so results
// match the scalar reference (the build sets -ffp-contract=off).
#include <arm_neon.h>

#include <cmath>

#include "kwb/simd.hpp"

namespace kwb::simd {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void mul_acc(const double* w, const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(vld1q_f64(w + i), vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] += w[i] * x[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

double dot(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
        acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_abs(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(x + i)));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += std::fabs(x[i]);
    return s;
}

void scale_rgb(const double* in, double* out, std::size_t pixels, const double* gains) {
    const float64x2_t p0 = {gains[0], gains[1]};
    const float64x2_t p1 = {gains[2], gains[0]};
    const float64x2_t p2 = {gains[1], gains[2]};
    std::size_t p = 0;
    for (; p + 2 <= pixels; p += 2) {
        const double* src = in + 3 * p;
        double* dst = out + 3 * p;
        vst1q_f64(dst, vmulq_f64(vld1q_f64(src), p0));
        vst1q_f64(dst + 2, vmulq_f64(vld1q_f64(src + 2), p1));
        vst1q_f64(dst + 4, vmulq_f64(vld1q_f64(src + 4), p2));
    }
    for (; p < pixels; ++p) {
        out[3 * p + 0] = in[3 * p + 0] * gains[0];
        out[3 * p + 1] = in[3 * p + 1] * gains[1];
        out[3 * p + 2] = in[3 * p + 2] * gains[2];
    }
}

void matmul(const double* a, const double* x, double* out, std::size_t n, std::size_t m, std::size_t b) {
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out + i * b;
        std::size_t c = 0;
        for (; c + 2 <= b; c += 2) {
            float64x2_t acc = vdupq_n_f64(0.0);
            for (std::size_t j = 0; j < m; ++j) {
                acc = vaddq_f64(acc, vmulq_f64(vdupq_n_f64(a[i * m + j]), vld1q_f64(x + j * b + c)));
            }
            vst1q_f64(row + c, acc);
        }
        for (; c < b; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += a[i * m + j] * x[j * b + c];
            row[c] = s;
        }
    }
}

constexpr KernelTable kTable{"neon", axpy, mul_acc, mul, dot, sum_abs, scale_rgb, matmul};

}  // namespace

const KernelTable* neon_kernels() { return &kTable; }

}  // namespace kwb::simd
