#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops used by the kernel engine, the CNN and the
// clustering stage. Every table entry has a scalar reference in
// kernels_scalar.cpp; vector variants are selected once at startup.
//
// Element-wise kernels (axpy, mul_acc, mul, scale_rgb) and matmul are
// bit-identical to the scalar reference: each lane performs the same multiply
// then add in the same order, with no fused multiply-add. Reductions (dot, sum_abs) reassociate and only agree
// with the reference to rounding.

namespace kwb::simd {

struct KernelTable {
    const char* name;

    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // y[i] += w[i] * x[i]
    void (*mul_acc)(const double* w, const double* x, double* y, std::size_t n);
    // out[i] = a[i] * b[i]
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    // sum x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // sum |x[i]|
    double (*sum_abs)(const double* x, std::size_t n);
    // interleaved RGB: out[3p + c] = in[3p + c] * gains[c]
    void (*scale_rgb)(const double* in, double* out, std::size_t pixels, const double* gains);
    // Row-major out (n x b) = a (n x m) * x (m x b); each output sums over
    // j = 0..m-1 in order.
    void (*matmul)(const double* a, const double* x, double* out, std::size_t n, std::size_t m, std::size_t b);
};

const KernelTable& scalar_kernels();

// Null when the variant is not compiled in or the CPU lacks the extension.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// The table used by the library. Chosen on first use: the widest supported
// variant, unless KWB_SIMD=scalar|avx2|neon names another available one.
const KernelTable& kernels();

// Overrides the active table (tests and benchmarks). Returns false if `name`
// is not available on this machine.
bool select_kernels(std::string_view name);

}  // namespace kwb::simd
