#include <algorithm>
#include <cmath>
#include <string>

#include "hsi/erw.hpp"
#include "hsi/parallel.hpp"
#include "hsi/simd.hpp"

namespace hsi::erw {

CgResult conjugate_gradient(const GridLaplacian& laplacian, double shift, std::span<const double> b,
                            std::span<const double> x0, double tol, std::size_t max_iters) {
    const std::size_t n = laplacian.size();
    if (b.size() != n || (!x0.empty() && x0.size() != n)) throw Error("CG: vector size does not match the grid");

    CgResult out;
    out.x.assign(n, 0.0);
    if (!x0.empty()) std::copy(x0.begin(), x0.end(), out.x.begin());

    std::vector<double> r(n), z(n), p(n), q(n), inv_diag(n);
    for (std::size_t i = 0; i < n; ++i) inv_diag[i] = 1.0 / (laplacian.diagonal[i] + shift);
    laplacian.apply(out.x, q, shift);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];

    // 1/2 x'Ax - b'x = -1/2 x'(b + r)
    const auto energy = [&] {
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i) e += out.x[i] * (b[i] + r[i]);
        return -0.5 * e;
    };

    const double b_norm = std::sqrt(simd::dot(b, b));
    out.energy.push_back(energy());
    if (b_norm == 0.0) {
        std::fill(out.x.begin(), out.x.end(), 0.0);
        out.energy.back() = 0.0;
        out.converged = true;
        return out;
    }
    out.relative_residual = std::sqrt(simd::dot(r, r)) / b_norm;
    if (out.relative_residual <= tol) {
        out.converged = true;
        return out;
    }

    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = simd::dot(r, z);
    while (out.iterations < max_iters) {
        laplacian.apply(p, q, shift);
        const double alpha = rz / simd::dot(p, q);
        simd::axpy(alpha, p, out.x);
        simd::axpy(-alpha, q, r);
        ++out.iterations;
        out.energy.push_back(energy());
        out.relative_residual = std::sqrt(simd::dot(r, r)) / b_norm;
        if (out.relative_residual <= tol) {
            out.converged = true;
            return out;
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_next = simd::dot(r, z);
        simd::xpby(z, rz_next / rz, p);
        rz = rz_next;
    }
    throw CgError("conjugate gradient did not converge in " + std::to_string(max_iters) +
                      " iterations (relative residual " + std::to_string(out.relative_residual) + ")",
                  out.relative_residual, out.iterations);
}

namespace {

Matrix solve_all(const GridLaplacian& laplacian, const ProbStack& priors, const ErwParams& params, unsigned threads,
                 std::vector<std::size_t>& iterations) {
    params.validate();
    if (priors.height() != laplacian.height || priors.width() != laplacian.width)
        throw Error("priors " + std::to_string(priors.height()) + "x" + std::to_string(priors.width()) +
                    " do not match the Laplacian grid " + std::to_string(laplacian.height) + "x" +
                    std::to_string(laplacian.width));
    priors.validate_simplex();
    const std::size_t n = laplacian.size();
    const int classes = priors.num_classes();
    Matrix q(static_cast<Eigen::Index>(n), classes);
    iterations.assign(static_cast<std::size_t>(classes), 0);
    // Each class starts from its prior, the solution of the gamma -> inf limit.
    parallel_for(static_cast<std::size_t>(classes), threads, [&](std::size_t t) {
        const auto plane = priors.plane(static_cast<int>(t));
        const std::vector<double> prior(plane.begin(), plane.end());
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = params.gamma * prior[i];
        const auto cg = conjugate_gradient(laplacian, params.gamma, rhs, prior, params.cg_tol, params.cg_max_iters);
        iterations[t] = cg.iterations;
        for (std::size_t i = 0; i < n; ++i) q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = cg.x[i];
    });
    return q;
}

}  // namespace

Matrix solve_probabilities(const GridLaplacian& laplacian, const ProbStack& priors, const ErwParams& params,
                           unsigned threads) {
    std::vector<std::size_t> iterations;
    return solve_all(laplacian, priors, params, threads, iterations);
}

ErwResult erw_optimize(const GridLaplacian& laplacian, const ProbStack& priors, const ErwParams& params,
                       unsigned threads) {
    ErwResult result;
    Matrix q = solve_all(laplacian, priors, params, threads, result.iterations);
    // The exact solution lies in [0,1] and sums to one; CG error is clipped to
    // the box and the sum is checked as the correctness sentinel.
    for (Eigen::Index p = 0; p < q.rows(); ++p) {
        const double sum = q.row(p).sum();
        if (!(std::abs(sum - 1.0) <= ProbStack::kSumTolerance))
            throw Error("refined probabilities at pixel " + std::to_string(p) + " sum to " + std::to_string(sum));
        for (Eigen::Index t = 0; t < q.cols(); ++t) q(p, t) = std::clamp(q(p, t), 0.0, 1.0);
    }
    result.q = ProbStack::from_rows(laplacian.height, laplacian.width, q);
    result.c2 = result.q;
    return result;
}

}  // namespace hsi::erw
