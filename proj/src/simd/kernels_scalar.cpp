#include <cmath>

#include "kwb/simd.hpp"

namespace kwb::simd {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void mul_acc(const double* w, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += w[i] * x[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_abs(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i]);
    return s;
}

void scale_rgb(const double* in, double* out, std::size_t pixels, const double* gains) {
    const double g0 = gains[0], g1 = gains[1], g2 = gains[2];
    for (std::size_t p = 0; p < pixels; ++p) {
        out[3 * p + 0] = in[3 * p + 0] * g0;
        out[3 * p + 1] = in[3 * p + 1] * g1;
        out[3 * p + 2] = in[3 * p + 2] * g2;
    }
}

void matmul(const double* a, const double* x, double* out, std::size_t n, std::size_t m, std::size_t b) {
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out + i * b;
        for (std::size_t c = 0; c < b; ++c) row[c] = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double aij = a[i * m + j];
            const double* xr = x + j * b;
            for (std::size_t c = 0; c < b; ++c) row[c] += aij * xr[c];
        }
    }
}

constexpr KernelTable kTable{"scalar", axpy, mul_acc, mul, dot, sum_abs, scale_rgb, matmul};

}  // namespace

const KernelTable& scalar_kernels() { return kTable; }

}  // namespace kwb::simd
