#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hsi/simd.hpp"
#include "hsi/spfilter.hpp"

namespace hsi::sp {

void SmoothParams::validate() const {
    if (!(lambda >= 0.0)) throw Error("lambda must be >= 0");
    if (window_radius < 1) throw Error("window radius must be >= 1");
    if (patch_radius < 0) throw Error("patch radius must be >= 0");
    if (degree < 0) throw Error("polynomial degree must be >= 0");
    if (!(sigma > 0.0)) throw Error("sigma must be > 0");
    if (!(h0 > 0.0)) throw Error("h0 must be > 0");
    if (max_iters < 1) throw Error("max_iters must be >= 1");
    if (!(tol > 0.0)) throw Error("tol must be > 0");
}

Basis build_basis(int window_radius, int degree) {
    if (window_radius < 1) throw Error("window radius must be >= 1");
    if (degree < 0) throw Error("polynomial degree must be >= 0");

    Basis basis;
    basis.radius = window_radius;
    basis.degree = degree;
    for (int dr = -window_radius; dr <= window_radius; ++dr)
        for (int dc = -window_radius; dc <= window_radius; ++dc) {
            if (dr == 0 && dc == 0) basis.center = basis.offsets.size();
            basis.offsets.emplace_back(dr, dc);
        }

    std::vector<std::pair<int, int>> powers;  // (power of u, power of v)
    for (int total = 0; total <= degree; ++total)
        for (int a = total; a >= 0; --a) powers.emplace_back(a, total - a);

    const auto n = static_cast<Eigen::Index>(basis.offsets.size());
    const auto m = static_cast<Eigen::Index>(powers.size());
    basis.values.resize(n, m);
    basis.dx.resize(n, m);
    basis.dy.resize(n, m);
    const double r = window_radius;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = basis.offsets[static_cast<std::size_t>(i)].second / r;
        const double v = basis.offsets[static_cast<std::size_t>(i)].first / r;
        for (Eigen::Index l = 0; l < m; ++l) {
            const auto [a, b] = powers[static_cast<std::size_t>(l)];
            basis.values(i, l) = std::pow(u, a) * std::pow(v, b);
            basis.dx(i, l) = a == 0 ? 0.0 : a * std::pow(u, a - 1) * std::pow(v, b) / r;
            basis.dy(i, l) = b == 0 ? 0.0 : b * std::pow(u, a) * std::pow(v, b - 1) / r;
        }
    }
    return basis;
}

SpectralImage::SpectralImage(const HsiCube& cube) : SpectralImage(cube.height(), cube.width(), cube.spectra()) {}

SpectralImage::SpectralImage(std::size_t height, std::size_t width, Matrix spectra)
    : height_(height), width_(width), spectra_(std::move(spectra)) {
    if (static_cast<std::size_t>(spectra_.rows()) != height * width)
        throw Error("spectral image rows do not match raster size");
}

std::span<const double> SpectralImage::pixel(long row, long col) const {
    const long r = std::clamp(row, 0L, static_cast<long>(height_) - 1);
    const long c = std::clamp(col, 0L, static_cast<long>(width_) - 1);
    return {spectra_.row(r * static_cast<long>(width_) + c).data(), bands()};
}

std::vector<double> patch_weights(const SpectralImage& image, std::size_t row, std::size_t col,
                                  const SmoothParams& params, const Basis& basis) {
    const int q = params.patch_radius;
    std::vector<std::pair<int, int>> patch;
    std::vector<double> gauss;
    for (int pr = -q; pr <= q; ++pr)
        for (int pc = -q; pc <= q; ++pc) {
            patch.emplace_back(pr, pc);
            gauss.push_back(std::exp(-static_cast<double>(pr * pr + pc * pc) / (2.0 * params.sigma * params.sigma)));
        }

    const auto r0 = static_cast<long>(row);
    const auto c0 = static_cast<long>(col);
    const double inv_h2 = 1.0 / (params.h0 * params.h0);
    std::vector<double> weights(basis.points());
    for (std::size_t i = 0; i < basis.points(); ++i) {
        const auto [dr, dc] = basis.offsets[i];
        if (dr == 0 && dc == 0) {
            weights[i] = 1.0;
            continue;
        }
        double distance = 0.0;
        for (std::size_t k = 0; k < patch.size(); ++k) {
            const auto [pr, pc] = patch[k];
            distance += gauss[k] * simd::squared_distance(image.pixel(r0 + dr + pr, c0 + dc + pc),
                                                          image.pixel(r0 + pr, c0 + pc));
        }
        // Kept strictly positive when the exponential underflows.
        weights[i] = std::max(std::exp(-distance * inv_h2), std::numeric_limits<double>::min());
    }
    return weights;
}

double soft(double a, double threshold) {
    const double magnitude = std::abs(a) - threshold;
    if (magnitude <= 0.0) return 0.0;
    return a < 0.0 ? -magnitude : magnitude;
}

std::array<double, 2> shrink(std::array<double, 2> v, double threshold) {
    return {soft(v[0], threshold), soft(v[1], threshold)};
}

}  // namespace hsi::sp
