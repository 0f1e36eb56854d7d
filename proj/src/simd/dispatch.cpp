#include <atomic>
#include <cstdlib>
#include <string>

#include "hsi/error.hpp"
#include "hsi/simd.hpp"

namespace hsi::simd {
namespace {

Isa detect_best() {
#if defined(HSI_HAVE_AVX2)
    if (supported(Isa::avx2)) return Isa::avx2;
#endif
#if defined(HSI_HAVE_NEON)
    return Isa::neon;
#endif
    return Isa::scalar;
}

Isa initial_isa() {
    if (const char* env = std::getenv("HSI_SIMD"); env != nullptr && *env != '\0') {
        const Isa requested = parse_isa(env);
        if (supported(requested)) return requested;
    }
    return detect_best();
}

struct ActiveState {
    std::atomic<Isa> isa;
    std::atomic<const KernelTable*> kernels;
};

ActiveState& current() {
    static ActiveState state = [] {
        const Isa isa = initial_isa();
        return ActiveState{isa, &table(isa)};
    }();
    return state;
}

}  // namespace

bool supported(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(HSI_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Isa::neon:
#if defined(HSI_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& table(Isa isa) {
    if (!supported(isa)) throw Error("SIMD variant '" + std::string(name(isa)) + "' is not available");
    switch (isa) {
#if defined(HSI_HAVE_AVX2)
    case Isa::avx2:
        return detail::avx2_table;
#endif
#if defined(HSI_HAVE_NEON)
    case Isa::neon:
        return detail::neon_table;
#endif
    default:
        return detail::scalar_table;
    }
}

const KernelTable& active() { return *current().kernels.load(std::memory_order_relaxed); }

Isa active_isa() { return current().isa.load(std::memory_order_relaxed); }

void select(Isa isa) {
    if (!supported(isa)) throw Error("SIMD variant '" + std::string(name(isa)) + "' is not available");
    current().isa.store(isa, std::memory_order_relaxed);
    current().kernels.store(&table(isa), std::memory_order_relaxed);
}

Isa parse_isa(std::string_view text) {
    if (text == "scalar") return Isa::scalar;
    if (text == "avx2") return Isa::avx2;
    if (text == "neon") return Isa::neon;
    if (text == "auto") return detect_best();
    throw Error("unknown SIMD variant '" + std::string(text) + "' (expected scalar, avx2, neon or auto)");
}

std::string_view name(Isa isa) {
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
    }
    return "unknown";
}

}  // namespace hsi::simd
