#pragma once

// Runtime-dispatched arithmetic kernels for the data-parallel inner loops:
// squared distances (Gaussian kernels, patch similarity), dot products and
// axpy-style updates (split-Bregman normal equations, conjugate gradient).
//
// Every ISA variant computes the same mathematical result; only the
// summation order differs, so results agree to rounding. The scalar table
// is the reference implementation.

#include <cstddef>
#include <span>
#include <string_view>

namespace hsi::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // y = x + b * y
    void (*xpby)(const double* x, double b, double* y, std::size_t n);
};

bool supported(Isa isa);
const KernelTable& table(Isa isa);

// The table used by the library. Defaults to the widest supported ISA,
// or to HSI_SIMD={scalar,avx2,neon} from the environment when set.
const KernelTable& active();
Isa active_isa();
// Throws hsi::Error if the ISA is not available on this machine/build.
void select(Isa isa);
Isa parse_isa(std::string_view name);
std::string_view name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    return active().squared_distance(a.data(), b.data(), a.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), x.size());
}

inline void xpby(std::span<const double> x, double b, std::span<double> y) {
    active().xpby(x.data(), b, y.data(), x.size());
}

namespace detail {
extern const KernelTable scalar_table;
#if defined(HSI_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(HSI_HAVE_NEON)
extern const KernelTable neon_table;
#endif
}  // namespace detail

}  // namespace hsi::simd
