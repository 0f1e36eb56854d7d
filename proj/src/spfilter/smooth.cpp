#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "hsi/parallel.hpp"
#include "hsi/simd.hpp"
#include "hsi/spfilter.hpp"

namespace hsi::sp {
namespace {

std::span<const double> row_of(const Matrix& m, Eigen::Index r) {
    return {m.row(r).data(), static_cast<std::size_t>(m.cols())};
}

std::span<double> row_of(Matrix& m, Eigen::Index r) {
    return {m.row(r).data(), static_cast<std::size_t>(m.cols())};
}

// Cholesky factor of the Step-1 left-hand matrix for one window. The matrix
// depends only on the weights and lambda, so one factorization serves every
// band and every Bregman iteration.
class NormalEquations {
public:
    NormalEquations(const Basis& basis, const Eigen::VectorXd& weights, double lambda) {
        const auto w = weights.asDiagonal();
        Eigen::MatrixXd lhs = basis.values.transpose() * w * basis.values;
        if (lambda > 0.0)
            lhs += 2.0 * lambda * (basis.dx.transpose() * w * basis.dx + basis.dy.transpose() * w * basis.dy);
        llt_.compute(lhs);
        if (rank_deficient()) {
            const double ridge = 1e-8 * lhs.trace() / static_cast<double>(lhs.rows());
            lhs.diagonal().array() += std::max(ridge, std::numeric_limits<double>::min());
            llt_.compute(lhs);
            if (llt_.info() != Eigen::Success) throw Error("Step-1 normal equations are not positive definite");
        }
    }

    Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }

private:
    bool rank_deficient() const {
        if (llt_.info() != Eigen::Success) return true;
        const Eigen::VectorXd pivots = llt_.matrixLLT().diagonal();
        const double hi = pivots.maxCoeff();
        const double lo = pivots.minCoeff();
        return !(lo > 0.0) || (lo * lo) < 1e-12 * (hi * hi);
    }

    Eigen::LLT<Eigen::MatrixXd> llt_;
};

// rhs += 2 lambda (Ex' W (d_x - b_x) + Ey' W (d_y - b_y))
void add_bregman_rhs(const Basis& basis, const Eigen::VectorXd& weights, const Matrix& d_x, const Matrix& d_y,
                     const Matrix& b_x, const Matrix& b_y, double lambda, Matrix& rhs) {
    const auto bands = static_cast<std::size_t>(rhs.cols());
    std::vector<double> tx(bands), ty(bands);
    for (Eigen::Index i = 0; i < basis.dx.rows(); ++i) {
        for (std::size_t b = 0; b < bands; ++b) {
            tx[b] = d_x(i, static_cast<Eigen::Index>(b)) - b_x(i, static_cast<Eigen::Index>(b));
            ty[b] = d_y(i, static_cast<Eigen::Index>(b)) - b_y(i, static_cast<Eigen::Index>(b));
        }
        const double scale = 2.0 * lambda * weights(i);
        for (Eigen::Index l = 0; l < rhs.rows(); ++l) {
            if (const double ex = basis.dx(i, l); ex != 0.0) simd::axpy(scale * ex, tx, row_of(rhs, l));
            if (const double ey = basis.dy(i, l); ey != 0.0) simd::axpy(scale * ey, ty, row_of(rhs, l));
        }
    }
}

// rhs = E' W I
Matrix data_rhs(const Basis& basis, const Eigen::VectorXd& weights, const Matrix& window) {
    Matrix rhs = Matrix::Zero(basis.values.cols(), window.cols());
    for (Eigen::Index i = 0; i < window.rows(); ++i)
        for (Eigen::Index l = 0; l < rhs.rows(); ++l)
            if (const double e = basis.values(i, l); e != 0.0) simd::axpy(weights(i) * e, row_of(window, i), row_of(rhs, l));
    return rhs;
}

// out = M c, where M is one of the N x m basis matrices.
void evaluate(const Eigen::MatrixXd& basis_matrix, const Matrix& coefficients, Matrix& out) {
    out.setZero();
    for (Eigen::Index i = 0; i < basis_matrix.rows(); ++i)
        for (Eigen::Index l = 0; l < basis_matrix.cols(); ++l)
            if (const double e = basis_matrix(i, l); e != 0.0) simd::axpy(e, row_of(coefficients, l), row_of(out, i));
}

Matrix gather_window(const SpectralImage& image, std::size_t row, std::size_t col, const Basis& basis) {
    Matrix window(static_cast<Eigen::Index>(basis.points()), static_cast<Eigen::Index>(image.bands()));
    for (std::size_t i = 0; i < basis.points(); ++i) {
        const auto [dr, dc] = basis.offsets[i];
        const auto px = image.pixel(static_cast<long>(row) + dr, static_cast<long>(col) + dc);
        std::copy(px.begin(), px.end(), window.row(static_cast<Eigen::Index>(i)).data());
    }
    return window;
}

}  // namespace

Matrix solve_coefficients(const LocalSystem& system, const Matrix& window, double lambda) {
    if (system.basis == nullptr) throw Error("solve_coefficients: missing basis");
    const Basis& basis = *system.basis;
    if (static_cast<std::size_t>(window.rows()) != basis.points() ||
        static_cast<std::size_t>(system.weights.size()) != basis.points())
        throw Error("solve_coefficients: window/weights do not match the basis");
    if (!window.allFinite() || !system.weights.allFinite()) throw Error("solve_coefficients: non-finite input");

    NormalEquations normal(basis, system.weights, lambda);
    Matrix rhs = data_rhs(basis, system.weights, window);
    if (lambda > 0.0) {
        for (const Matrix* m : {&system.d_x, &system.d_y, &system.b_x, &system.b_y})
            if (m->rows() != window.rows() || m->cols() != window.cols() || !m->allFinite())
                throw Error("solve_coefficients: Bregman variables do not match the window");
        add_bregman_rhs(basis, system.weights, system.d_x, system.d_y, system.b_x, system.b_y, lambda, rhs);
    }
    return normal.solve(rhs);
}

double tv_objective(std::span<const double> weights, const Matrix& window, const Matrix& p, const Matrix& gx,
                    const Matrix& gy, double lambda) {
    double fidelity = 0.0;
    for (Eigen::Index i = 0; i < window.rows(); ++i)
        fidelity += weights[static_cast<std::size_t>(i)] * simd::squared_distance(row_of(p, i), row_of(window, i));
    if (lambda == 0.0) return fidelity;
    return fidelity + lambda * (gx.cwiseAbs().sum() + gy.cwiseAbs().sum());
}

SmoothResult smooth_pixel(const SpectralImage& image, std::size_t row, std::size_t col, const SmoothParams& params,
                          const Basis& basis) {
    params.validate();
    const auto n = static_cast<Eigen::Index>(basis.points());
    const auto bands = static_cast<Eigen::Index>(image.bands());
    const auto w = patch_weights(image, row, col, params, basis);
    const Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
    const Matrix window = gather_window(image, row, col, basis);
    const auto center = static_cast<Eigen::Index>(basis.center);
    const double lambda = params.lambda;

    const NormalEquations normal(basis, weights, lambda);
    const Matrix rhs_data = data_rhs(basis, weights, window);

    Matrix p(n, bands), p_prev(n, bands), gx(n, bands), gy(n, bands);
    Matrix d_x = Matrix::Zero(n, bands), d_y = Matrix::Zero(n, bands);
    Matrix b_x = Matrix::Zero(n, bands), b_y = Matrix::Zero(n, bands);

    SmoothResult result;
    result.spectrum.assign(static_cast<std::size_t>(bands), 0.0);
    double best = std::numeric_limits<double>::infinity();
    const double threshold = lambda > 0.0 ? 1.0 / lambda : 0.0;

    for (int iter = 1; iter <= params.max_iters; ++iter) {
        // Step 1
        Matrix rhs = rhs_data;
        if (lambda > 0.0) add_bregman_rhs(basis, weights, d_x, d_y, b_x, b_y, lambda, rhs);
        const Matrix c = normal.solve(rhs);
        evaluate(basis.values, c, p);
        evaluate(basis.dx, c, gx);
        evaluate(basis.dy, c, gy);

        const double objective = tv_objective(w, window, p, gx, gy, lambda);
        result.objective.push_back(objective);
        result.iterations = static_cast<std::size_t>(iter);
        if (objective < best || iter == 1) {
            best = objective;
            result.accepted = static_cast<std::size_t>(iter);
            for (Eigen::Index b = 0; b < bands; ++b) result.spectrum[static_cast<std::size_t>(b)] = p(center, b);
        }

        // With lambda = 0 the TV machinery is skipped: one exact solve.
        if (lambda == 0.0) {
            result.converged = true;
            break;
        }

        // Steps 2 and 3
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index b = 0; b < bands; ++b) {
                const double vx = gx(i, b) + b_x(i, b);
                const double vy = gy(i, b) + b_y(i, b);
                d_x(i, b) = soft(vx, threshold);
                d_y(i, b) = soft(vy, threshold);
                b_x(i, b) = vx - d_x(i, b);
                b_y(i, b) = vy - d_y(i, b);
            }

        if (iter > 1) {
            const double scale = p_prev.norm();
            const double change = (p - p_prev).norm();
            if (change <= params.tol * scale || (scale == 0.0 && change == 0.0)) {
                result.converged = true;
                break;
            }
        }
        std::swap(p, p_prev);
    }

    // A band that is constant over the window is an exact fixed point of all
    // three steps; return its value without rounding noise.
    for (Eigen::Index b = 0; b < bands; ++b) {
        const auto column = window.col(b);
        if (column.minCoeff() == column.maxCoeff()) result.spectrum[static_cast<std::size_t>(b)] = column(0);
    }
    return result;
}

HsiCube smooth_cube(const HsiCube& cube, const SmoothParams& params, unsigned threads) {
    params.validate();
    const SpectralImage image(cube);
    const Basis basis = build_basis(params.window_radius, params.degree);
    Matrix out(static_cast<Eigen::Index>(cube.pixels()), static_cast<Eigen::Index>(cube.bands()));
    parallel_for(cube.pixels(), threads, [&](std::size_t p) {
        const auto result = smooth_pixel(image, p / cube.width(), p % cube.width(), params, basis);
        std::copy(result.spectrum.begin(), result.spectrum.end(), out.row(static_cast<Eigen::Index>(p)).data());
    });
    return HsiCube::from_spectra(cube.height(), cube.width(), out);
}

StructuralProfile extract_sp_full(const HsiCube& reduced, const SmoothParams& params, const kpca::KpcaParams& kpca,
                                  std::uint64_t seed, unsigned threads) {
    params.validate();
    kpca.validate();
    if (kpca.components > reduced.pixels())
        throw Error("K=" + std::to_string(kpca.components) + " exceeds the pixel count " +
                    std::to_string(reduced.pixels()));
    if (kpca.components > reduced.bands())
        throw Error("K=" + std::to_string(kpca.components) + " exceeds the reduced band count M=" +
                    std::to_string(reduced.bands()));

    StructuralProfile sp;
    sp.initial = smooth_cube(reduced, params, threads);
    const Matrix spectra = sp.initial.spectra();
    sp.model = kpca::fit(spectra, kpca, seed);
    const Matrix scores = kpca::transform(sp.model, spectra, threads);
    sp.features = HsiCube::from_spectra(reduced.height(), reduced.width(), scores);
    return sp;
}

}  // namespace hsi::sp
