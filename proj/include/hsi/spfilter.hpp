#pragma once

// Structural-profile extraction by adaptive texture smoothing.
//
// Around every pixel x a polynomial p of total degree <= L is fitted over the
// (2r+1)^2 window Omega(x). The fit minimizes
//
//     sum_i w_i |p(x_i) - I(x_i)|^2  +  lambda * sum_i |grad p(x_i)|_1
//
// where the similarity weights w_i compare the patches around x_i and x.
// The L1 gradient term is handled with split Bregman: a quadratic solve for
// the coefficients (Step 1), soft-thresholding of the auxiliary gradient d
// (Step 2) and the Bregman update of b (Step 3). The fitted polynomial
// evaluated at x is the smoothed spectrum. Bands share the weights and the
// left-hand matrix of the normal equations but are otherwise independent.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hsi/core.hpp"
#include "hsi/kpca.hpp"

namespace hsi::sp {

struct SmoothParams {
    double lambda = 1.2;     // TV weight
    int window_radius = 3;   // Omega(x) is (2r+1)^2
    int patch_radius = 1;    // comparison patch Y is (2q+1)^2
    int degree = 2;          // polynomial degree L
    double sigma = 1.0;      // patch Gaussian std, pixels
    double h0 = 1.0;         // similarity scale
    int max_iters = 20;
    double tol = 1e-4;       // relative change of p over the window

    void validate() const;
    friend bool operator==(const SmoothParams&, const SmoothParams&) = default;
};

// Monomials u^a v^b (a + b <= L) in window coordinates u = dx / r, v = dy / r,
// ordered by total degree, then by decreasing power of u:
// 1, u, v, u^2, uv, v^2, ...
struct Basis {
    int radius = 0;
    int degree = 0;
    std::vector<std::pair<int, int>> offsets;  // (drow, dcol), row-major over the window
    Eigen::MatrixXd values;                    // E:  N x m
    Eigen::MatrixXd dx;                        // Ex: d/dcol, N x m (includes the 1/r factor)
    Eigen::MatrixXd dy;                        // Ey: d/drow, N x m
    std::size_t center = 0;                    // row of the (0,0) offset

    std::size_t points() const noexcept { return offsets.size(); }
    std::size_t terms() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

Basis build_basis(int window_radius, int degree);

// Pixel-major read-only image with replicate-clamped access outside the raster.
class SpectralImage {
public:
    explicit SpectralImage(const HsiCube& cube);
    SpectralImage(std::size_t height, std::size_t width, Matrix spectra);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t bands() const noexcept { return static_cast<std::size_t>(spectra_.cols()); }

    std::span<const double> pixel(long row, long col) const;

private:
    std::size_t height_;
    std::size_t width_;
    Matrix spectra_;
};

// w(x_i, x) = exp(-sum_y |I(x_i + y) - I(x + y)|^2 G(|y|) / h0^2) for every
// window point x_i, with G(t) = exp(-t^2 / (2 sigma^2)). Ordered as basis.offsets.
std::vector<double> patch_weights(const SpectralImage& image, std::size_t row, std::size_t col,
                                  const SmoothParams& params, const Basis& basis);

// Step-1 inputs for one window. d and b are N x bands per gradient component.
struct LocalSystem {
    const Basis* basis = nullptr;
    Eigen::VectorXd weights;
    Matrix d_x, d_y, b_x, b_y;
};

// Solves (E'WE + 2 lambda Ex'WEx + 2 lambda Ey'WEy) c
//        = E'W I + 2 lambda Ex'W (d_x - b_x) + 2 lambda Ey'W (d_y - b_y)
// for every band column of `window` (N x bands). Returns m x bands. A ridge
// 1e-8 * trace / m is added when the left-hand matrix is rank deficient.
Matrix solve_coefficients(const LocalSystem& system, const Matrix& window, double lambda);

// soft(a, t) = sign(a) * max(|a| - t, 0)
double soft(double a, double threshold);
std::array<double, 2> shrink(std::array<double, 2> v, double threshold);

// Window objective of the smoothing model for fitted values p and gradients
// (gx, gy), all N x bands:  sum_i w_i |p_i - I_i|^2 + lambda sum_i (|gx_i|_1 + |gy_i|_1).
double tv_objective(std::span<const double> weights, const Matrix& window, const Matrix& p, const Matrix& gx,
                    const Matrix& gy, double lambda);

struct SmoothResult {
    std::vector<double> spectrum;   // p(x), one value per band
    std::vector<double> objective;  // tv_objective after each iteration
    std::size_t iterations = 0;
    std::size_t accepted = 0;       // 1-based iteration whose p is returned
    bool converged = false;
};

// Runs Steps 1-3 from d = b = 0 until the relative change of p over the window
// drops below tol or max_iters is reached. The returned p is the iterate with
// the lowest objective, so objective[accepted-1] <= objective[0].
SmoothResult smooth_pixel(const SpectralImage& image, std::size_t row, std::size_t col, const SmoothParams& params,
                          const Basis& basis);

// Initial structural profile: smooth_pixel at every pixel.
HsiCube smooth_cube(const HsiCube& cube, const SmoothParams& params, unsigned threads = 1);

struct StructuralProfile {
    HsiCube initial;         // smoothed cube, same bands as the input
    HsiCube features;        // K KPCA components of `initial`
    kpca::KpcaModel model;
};

// Smoothing followed by KPCA compaction to kpca.components bands.
StructuralProfile extract_sp_full(const HsiCube& reduced, const SmoothParams& params, const kpca::KpcaParams& kpca,
                                  std::uint64_t seed, unsigned threads = 1);

inline HsiCube extract_sp(const HsiCube& reduced, const SmoothParams& params, const kpca::KpcaParams& kpca,
                          std::uint64_t seed, unsigned threads = 1) {
    return extract_sp_full(reduced, params, kpca, seed, threads).features;
}

}  // namespace hsi::sp
