#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kwb/simd.hpp"

namespace kwb::simd {

#if !defined(KWB_HAVE_AVX2)
const KernelTable* avx2_kernels() { return nullptr; }
#endif
#if !defined(KWB_HAVE_NEON)
const KernelTable* neon_kernels() { return nullptr; }
#endif

namespace {

const KernelTable* lookup(std::string_view name) {
    if (name == "scalar") return &scalar_kernels();
    if (name == "avx2") return avx2_kernels();
    if (name == "neon") return neon_kernels();
    return nullptr;
}

const KernelTable* best_available() {
    if (const char* env = std::getenv("KWB_SIMD")) {
        if (const KernelTable* t = lookup(env)) return t;
    }
    if (const KernelTable* t = avx2_kernels()) return t;
    if (const KernelTable* t = neon_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
    static std::atomic<const KernelTable*> table{best_available()};
    return table;
}

}  // namespace

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

bool select_kernels(std::string_view name) {
    const KernelTable* t = lookup(name);
    if (t == nullptr) return false;
    active().store(t, std::memory_order_release);
    return true;
}

}  // namespace kwb::simd
