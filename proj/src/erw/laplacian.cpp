#include <algorithm>
#include <cmath>
#include <string>

#include "hsi/erw.hpp"

namespace hsi::erw {

void ErwParams::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error("ERW beta must be > 0");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error("ERW gamma must be > 0");
    if (!(cg_tol > 0.0)) throw Error("ERW cg_tol must be > 0");
    if (cg_max_iters < 1) throw Error("ERW cg_max_iters must be >= 1");
}

void GridLaplacian::apply(std::span<const double> x, std::span<double> y, double shift) const {
    const std::size_t n = size();
    for (std::size_t p = 0; p < n; ++p) y[p] = (diagonal[p] + shift) * x[p];
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t p = r * width + c;
            if (c + 1 < width) {
                y[p] -= east[p] * x[p + 1];
                y[p + 1] -= east[p] * x[p];
            }
            if (r + 1 < height) {
                y[p] -= south[p] * x[p + width];
                y[p + width] -= south[p] * x[p];
            }
        }
}

Eigen::MatrixXd GridLaplacian::to_dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            const auto p = static_cast<Eigen::Index>(r * width + c);
            m(p, p) = diagonal[static_cast<std::size_t>(p)];
            if (c + 1 < width) {
                m(p, p + 1) = -east[static_cast<std::size_t>(p)];
                m(p + 1, p) = -east[static_cast<std::size_t>(p)];
            }
            if (r + 1 < height) {
                const auto q = p + static_cast<Eigen::Index>(width);
                m(p, q) = -south[static_cast<std::size_t>(p)];
                m(q, p) = -south[static_cast<std::size_t>(p)];
            }
        }
    return m;
}

GridLaplacian build_laplacian(std::size_t height, std::size_t width, std::span<const double> guidance, double beta) {
    if (guidance.size() != height * width) throw Error("guidance size does not match the grid");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error("Laplacian beta must be > 0");
    for (double v : guidance)
        if (!std::isfinite(v)) throw Error("guidance contains non-finite values");

    GridLaplacian lap;
    lap.height = height;
    lap.width = width;
    lap.beta = beta;
    const std::size_t n = height * width;
    lap.east.assign(n, 0.0);
    lap.south.assign(n, 0.0);
    lap.diagonal.assign(n, 0.0);
    const auto weight = [beta](double a, double b) { return std::exp(-beta * (a - b) * (a - b)); };
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t p = r * width + c;
            if (c + 1 < width) lap.east[p] = weight(guidance[p], guidance[p + 1]);
            if (r + 1 < height) lap.south[p] = weight(guidance[p], guidance[p + width]);
        }
    // Incident weights in a fixed order: west, east, north, south.
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t p = r * width + c;
            double d = 0.0;
            if (c > 0) d += lap.east[p - 1];
            d += lap.east[p];
            if (r > 0) d += lap.south[p - width];
            d += lap.south[p];
            lap.diagonal[p] = d;
        }
    return lap;
}

GridLaplacian build_laplacian(const HsiCube& guidance, double beta) {
    if (guidance.bands() != 1) throw Error("guidance must have exactly one band, got " + std::to_string(guidance.bands()));
    const auto band = guidance.band(0);
    const std::vector<double> values(band.begin(), band.end());
    return build_laplacian(guidance.height(), guidance.width(), values, beta);
}

HsiCube guidance_image(const HsiCube& cube, const kpca::KpcaParams& params, std::uint64_t seed, unsigned threads) {
    if (cube.empty()) throw Error("guidance needs a non-empty cube");
    cube.require_finite();
    HsiCube out(cube.height(), cube.width(), 1);
    const Matrix spectra = cube.spectra();
    bool uniform = true;
    for (Eigen::Index p = 1; p < spectra.rows() && uniform; ++p) uniform = spectra.row(p) == spectra.row(0);
    if (uniform) return out;

    kpca::KpcaParams first = params;
    first.components = 1;
    const auto model = kpca::fit(spectra, first, seed);
    const Eigen::MatrixXd scores = kpca::transform(model, spectra, threads);
    const double lo = scores.col(0).minCoeff();
    const double hi = scores.col(0).maxCoeff();
    if (!(hi > lo)) return out;
    auto band = out.band(0);
    for (std::size_t p = 0; p < band.size(); ++p) {
        const double v = scores(static_cast<Eigen::Index>(p), 0);
        band[p] = v == hi ? 1.0f : static_cast<float>((v - lo) / (hi - lo));
    }
    return out;
}

}  // namespace hsi::erw
