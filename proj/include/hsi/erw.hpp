#pragma once

// Extended random walker refinement of class probabilities.
//
// For every class t the refined probability Q_t minimizes
//     Q_t' L Q_t + gamma |Q_t - prior_t|^2
// over the pixel grid, i.e. solves (L + gamma I) Q_t = gamma prior_t, where L
// is the 4-connected graph Laplacian with edge weights
// w_ij = exp(-beta (v_i - v_j)^2) on a guidance image v in [0,1].

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hsi/core.hpp"
#include "hsi/kpca.hpp"

namespace hsi::erw {

struct ErwParams {
    double beta = 90.0;
    double gamma = 0.1;
    double cg_tol = 1e-6;           // relative residual |b - Ax| / |b|
    std::size_t cg_max_iters = 2000;

    void validate() const;
    friend bool operator==(const ErwParams&, const ErwParams&) = default;
};

// Stencil storage of the symmetric Laplacian. east[p] links p to its right
// neighbor, south[p] to the one below (zero on the last column / row).
struct GridLaplacian {
    std::size_t height = 0;
    std::size_t width = 0;
    double beta = 0.0;
    std::vector<double> east;
    std::vector<double> south;
    std::vector<double> diagonal;   // sum of incident weights

    std::size_t size() const noexcept { return height * width; }
    // y = (L + shift I) x
    void apply(std::span<const double> x, std::span<double> y, double shift = 0.0) const;
    Eigen::MatrixXd to_dense() const;
};

// First KPCA component of the cube rescaled to [0,1], as a one-band cube.
// A cube whose pixels all share one spectrum gives all zeros; so does a
// constant component.
HsiCube guidance_image(const HsiCube& cube, const kpca::KpcaParams& params, std::uint64_t seed,
                       unsigned threads = 1);

GridLaplacian build_laplacian(std::size_t height, std::size_t width, std::span<const double> guidance, double beta);
GridLaplacian build_laplacian(const HsiCube& guidance, double beta);

struct CgResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    // 1/2 x'Ax - b'x after each iteration (index 0 is the starting point).
    std::vector<double> energy;
};

class CgError : public Error {
public:
    CgError(const std::string& what, double residual, std::size_t iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}
    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

// Jacobi-preconditioned CG on (L + shift I) x = b from x0 (zero when empty).
// Throws CgError carrying the final residual when max_iters is exhausted.
CgResult conjugate_gradient(const GridLaplacian& laplacian, double shift, std::span<const double> b,
                            std::span<const double> x0, double tol, std::size_t max_iters);

// pixels x T refined probabilities before any clamping.
Matrix solve_probabilities(const GridLaplacian& laplacian, const ProbStack& priors, const ErwParams& params,
                           unsigned threads = 1);

struct ErwResult {
    ProbStack q;
    ProbStack c2;                       // per-pixel probability vector handed to fusion (= q)
    std::vector<std::size_t> iterations;  // CG iterations per class
};

ErwResult erw_optimize(const GridLaplacian& laplacian, const ProbStack& priors, const ErwParams& params,
                       unsigned threads = 1);

}  // namespace hsi::erw
