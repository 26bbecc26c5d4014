// Compiled with -mavx2 only (no -mfma) so the element-wise kernels round
// exactly like the scalar reference.
#include <immintrin.h>

#include <cmath>

#include "kwb/simd.hpp"

namespace kwb::simd {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        y0 = _mm256_add_pd(y0, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        y1 = _mm256_add_pd(y1, _mm256_mul_pd(va, _mm256_loadu_pd(x + i + 4)));
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        y0 = _mm256_add_pd(y0, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, y0);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void mul_acc(const double* w, const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        y0 = _mm256_add_pd(y0, _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, y0);
    }
    for (; i < n; ++i) y[i] += w[i] * x[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_abs(const double* x, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, _mm256_loadu_pd(x + i)));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += std::fabs(x[i]);
    return s;
}

void scale_rgb(const double* in, double* out, std::size_t pixels, const double* gains) {
    // Four pixels are twelve doubles: three registers with a rotating gain pattern.
    const __m256d p0 = _mm256_setr_pd(gains[0], gains[1], gains[2], gains[0]);
    const __m256d p1 = _mm256_setr_pd(gains[1], gains[2], gains[0], gains[1]);
    const __m256d p2 = _mm256_setr_pd(gains[2], gains[0], gains[1], gains[2]);
    std::size_t p = 0;
    for (; p + 4 <= pixels; p += 4) {
        const double* src = in + 3 * p;
        double* dst = out + 3 * p;
        _mm256_storeu_pd(dst, _mm256_mul_pd(_mm256_loadu_pd(src), p0));
        _mm256_storeu_pd(dst + 4, _mm256_mul_pd(_mm256_loadu_pd(src + 4), p1));
        _mm256_storeu_pd(dst + 8, _mm256_mul_pd(_mm256_loadu_pd(src + 8), p2));
    }
    for (; p < pixels; ++p) {
        out[3 * p + 0] = in[3 * p + 0] * gains[0];
        out[3 * p + 1] = in[3 * p + 1] * gains[1];
        out[3 * p + 2] = in[3 * p + 2] * gains[2];
    }
}

// Four rows by V vectors of output per pass; each load of x serves four rows.
template <int V>
void matmul_block(const double* a, const double* x, double* out, std::size_t m, std::size_t b, std::size_t c) {
    __m256d acc[4][V];
    for (int r = 0; r < 4; ++r) {
        for (int v = 0; v < V; ++v) acc[r][v] = _mm256_setzero_pd();
    }
    for (std::size_t j = 0; j < m; ++j) {
        __m256d xv[V];
        for (int v = 0; v < V; ++v) xv[v] = _mm256_loadu_pd(x + j * b + c + 4 * v);
        for (int r = 0; r < 4; ++r) {
            const __m256d ar = _mm256_broadcast_sd(a + r * m + j);
            for (int v = 0; v < V; ++v) acc[r][v] = _mm256_add_pd(acc[r][v], _mm256_mul_pd(ar, xv[v]));
        }
    }
    for (int r = 0; r < 4; ++r) {
        for (int v = 0; v < V; ++v) _mm256_storeu_pd(out + r * b + c + 4 * v, acc[r][v]);
    }
}

void matmul(const double* a, const double* x, double* out, std::size_t n, std::size_t m, std::size_t b) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double* ai = a + i * m;
        double* oi = out + i * b;
        std::size_t c = 0;
        for (; c + 12 <= b; c += 12) matmul_block<3>(ai, x, oi, m, b, c);
        if (c + 8 <= b) {
            matmul_block<2>(ai, x, oi, m, b, c);
            c += 8;
        }
        if (c + 4 <= b) {
            matmul_block<1>(ai, x, oi, m, b, c);
            c += 4;
        }
        for (; c < b; ++c) {
            for (std::size_t r = 0; r < 4; ++r) {
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) s += ai[r * m + j] * x[j * b + c];
                oi[r * b + c] = s;
            }
        }
    }
    for (; i < n; ++i) {
        for (std::size_t c = 0; c < b; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += a[i * m + j] * x[j * b + c];
            out[i * b + c] = s;
        }
    }
}

constexpr KernelTable kTable{"avx2", axpy, mul_acc, mul, dot, sum_abs, scale_rgb, matmul};

}  // namespace

const KernelTable* avx2_kernels() {
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &kTable : nullptr;
}

}  // namespace kwb::simd
