#include <doctest.h>

#include <cmath>
#include <string>

#include "hsi/rng.hpp"
#include "hsi/spfilter.hpp"
#include "oracles/oracles.hpp"

using namespace hsi;
using namespace hsi::sp;

namespace {

HsiCube random_cube(std::size_t h, std::size_t w, std::size_t bands, std::uint64_t seed) {
    Rng rng(seed);
    HsiCube cube(h, w, bands);
    for (auto& v : cube.data()) v = static_cast<float>(rng.uniform());
    return cube;
}

oracle::Image to_image(const HsiCube& cube) {
    oracle::Image img;
    img.height = static_cast<int>(cube.height());
    img.width = static_cast<int>(cube.width());
    img.bands = static_cast<int>(cube.bands());
    img.v.resize(cube.pixels() * cube.bands());
    for (std::size_t r = 0; r < cube.height(); ++r)
        for (std::size_t c = 0; c < cube.width(); ++c)
            for (std::size_t b = 0; b < cube.bands(); ++b)
                img.v[(r * cube.width() + c) * cube.bands() + b] = cube.at(r, c, b);
    return img;
}

oracle::SmoothSettings to_settings(const SmoothParams& p) {
    oracle::SmoothSettings s;
    s.lambda = p.lambda;
    s.window = p.window_radius;
    s.patch = p.patch_radius;
    s.degree = p.degree;
    s.sigma = p.sigma;
    s.h0 = p.h0;
    s.max_iters = p.max_iters;
    s.tol = p.tol;
    return s;
}

// One-band window with random weights and Step-1 targets.
struct RandomWindow {
    LocalSystem system;
    Matrix values;
    oracle::Vec w, v, tx, ty;
};

RandomWindow random_window(const Basis& basis, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(basis.points());
    RandomWindow out;
    out.system.basis = &basis;
    out.system.weights.resize(n);
    out.values.resize(n, 1);
    out.system.d_x.resize(n, 1);
    out.system.d_y.resize(n, 1);
    out.system.b_x.resize(n, 1);
    out.system.b_y.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.system.weights(i) = 0.05 + 0.95 * rng.uniform();
        out.values(i, 0) = rng.uniform();
        out.system.d_x(i, 0) = rng.normal() * 0.3;
        out.system.d_y(i, 0) = rng.normal() * 0.3;
        out.system.b_x(i, 0) = rng.normal() * 0.3;
        out.system.b_y(i, 0) = rng.normal() * 0.3;
    }
    out.w = out.system.weights;
    out.v = out.values.col(0);
    out.tx = out.system.d_x.col(0) - out.system.b_x.col(0);
    out.ty = out.system.d_y.col(0) - out.system.b_y.col(0);
    return out;
}

double band_variance(const HsiCube& cube, const LabelMap& labels, int cls, std::size_t band) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < cube.pixels(); ++p) {
        if (labels[p] != cls) continue;
        const double v = cube.band(band)[p];
        sum += v;
        sq += v * v;
        ++n;
    }
    const double mean = sum / static_cast<double>(n);
    return sq / static_cast<double>(n) - mean * mean;
}

}  // namespace

TEST_CASE("basis matches the monomial definition") {
    for (int r = 1; r <= 3; ++r)
        for (int degree = 0; degree <= 3; ++degree) {
            const Basis basis = build_basis(r, degree);
            const auto ref = oracle::poly_basis(r, degree);
            CHECK(basis.points() == static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)));
            CHECK(basis.terms() == static_cast<std::size_t>((degree + 1) * (degree + 2) / 2));
            CHECK(basis.offsets == ref.offsets);
            CHECK((basis.values - ref.e).cwiseAbs().maxCoeff() <= 1e-15);
            CHECK((basis.dx - ref.ex).cwiseAbs().maxCoeff() <= 1e-15);
            CHECK((basis.dy - ref.ey).cwiseAbs().maxCoeff() <= 1e-15);
            CHECK(basis.offsets[basis.center] == std::make_pair(0, 0));
        }
}

TEST_CASE("degree-1 basis derivatives") {
    const Basis basis = build_basis(1, 1);
    for (std::size_t i = 0; i < basis.points(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        CHECK(basis.dx(row, 1) == 1.0);
        CHECK(basis.dy(row, 1) == 0.0);
        CHECK(basis.dx(row, 2) == 0.0);
        CHECK(basis.dy(row, 2) == 1.0);
        CHECK(basis.dx(row, 0) == 0.0);
    }
}

TEST_CASE("soft threshold examples") {
    CHECK(soft(3.0, 1.0) == 2.0);
    CHECK(soft(-3.0, 1.0) == -2.0);
    CHECK(soft(0.5, 1.0) == 0.0);
    CHECK(soft(-1.0, 1.0) == 0.0);
    const auto s = shrink({1.5, -0.2}, 1.0);
    CHECK(s[0] == doctest::Approx(0.5));
    CHECK(s[1] == 0.0);
}

TEST_CASE("soft threshold is the proximal map of t|.|") {
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const double a = rng.normal() * 3.0;
        const double t = rng.uniform() * 2.0;
        const double z = soft(a, t);
        const auto f = [&](double x) { return 0.5 * (x - a) * (x - a) + t * std::abs(x); };
        for (double delta : {-1e-3, 1e-3, -0.5, 0.5}) CHECK(f(z) <= f(z + delta) + 1e-15);
        CHECK(std::abs(z) <= std::abs(a));
        CHECK(std::abs(a - z) <= t + 1e-15);
    }
}

TEST_CASE("patch weights on identical and constant content are one") {
    SmoothParams params;
    const Basis basis = build_basis(params.window_radius, params.degree);
    HsiCube constant(9, 9, 3);
    for (auto& v : constant.data()) v = 0.25f;
    const SpectralImage image(constant);
    for (double w : patch_weights(image, 4, 4, params, basis)) CHECK(w == 1.0);
}

TEST_CASE("patch weight with a single-pixel patch is exp(-1) for unit difference") {
    SmoothParams params;
    params.window_radius = 1;
    params.patch_radius = 0;
    const Basis basis = build_basis(1, params.degree);
    HsiCube cube(3, 3, 1);
    for (auto& v : cube.data()) v = 1.0f;
    cube.at(1, 1, 0) = 0.0f;
    const SpectralImage image(cube);
    const auto w = patch_weights(image, 1, 1, params, basis);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i == basis.center) CHECK(w[i] == 1.0);
        else CHECK(w[i] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    }
}

TEST_CASE("patch weights agree with the reference and lie in (0, 1]") {
    const HsiCube cube = random_cube(10, 11, 3, 5);
    const SpectralImage image(cube);
    const auto img = to_image(cube);
    for (double h0 : {0.5, 1.0, 2.0})
        for (int patch : {0, 1, 2}) {
            SmoothParams params;
            params.h0 = h0;
            params.patch_radius = patch;
            params.window_radius = 2;
            const Basis basis = build_basis(2, params.degree);
            for (std::size_t r : {0u, 4u, 9u})
                for (std::size_t c : {0u, 5u, 10u}) {
                    const auto w = patch_weights(image, r, c, params, basis);
                    const auto ref = oracle::reference_weights(img, static_cast<int>(r), static_cast<int>(c),
                                                               to_settings(params));
                    REQUIRE(w.size() == ref.size());
                    for (std::size_t i = 0; i < w.size(); ++i) {
                        CHECK(w[i] > 0.0);
                        CHECK(w[i] <= 1.0);
                        CHECK(std::abs(w[i] - ref[i]) <= 1e-12 * std::max(1.0, ref[i]));
                    }
                    CHECK(w[basis.center] == 1.0);
                }
        }
}

TEST_CASE("step-1 coefficients match a least-squares oracle") {
    Rng rng(11);
    for (int r : {1, 2, 3})
        for (int degree : {1, 2}) {
            const Basis basis = build_basis(r, degree);
            const auto ref_basis = oracle::poly_basis(r, degree);
            for (int k = 0; k < 30; ++k) {
                const double lambda = 0.1 + 2.0 * rng.uniform();
                auto win = random_window(basis, rng);
                const Matrix c = solve_coefficients(win.system, win.values, lambda);
                const oracle::Vec ref = oracle::step1_least_squares(ref_basis, win.w, win.v, win.tx, win.ty, lambda);
                CHECK((c.col(0) - ref).cwiseAbs().maxCoeff() <= 1e-8);
            }
        }
}

TEST_CASE("step-1 coefficients are stationary: analytic versus central-difference gradient") {
    Rng rng(12);
    for (int k = 0; k < 50; ++k) {
        const int r = 1 + static_cast<int>(rng.below(3));
        const int degree = 1 + static_cast<int>(rng.below(2));
        const Basis basis = build_basis(r, degree);
        const auto ref_basis = oracle::poly_basis(r, degree);
        const double lambda = 0.1 + 2.0 * rng.uniform();
        auto win = random_window(basis, rng);
        const oracle::Vec c = solve_coefficients(win.system, win.values, lambda).col(0);
        oracle::Vec delta(c.size());
        for (Eigen::Index l = 0; l < c.size(); ++l) delta(l) = 0.1 * rng.normal();
        // Quadratic objective stationary at c has gradient 2A(x - c).
        const oracle::Mat a = oracle::step1_half_hessian(ref_basis, win.w, lambda);
        const oracle::Vec analytic = 2.0 * a * delta;
        const oracle::Vec numeric =
            oracle::step1_numeric_gradient(ref_basis, win.w, win.v, win.tx, win.ty, lambda, c + delta, 1e-4);
        CHECK((analytic - numeric).norm() <= 1e-5 * numeric.norm());
    }
}

TEST_CASE("lambda zero with a constant basis gives the weighted mean") {
    Rng rng(13);
    const Basis basis = build_basis(2, 0);
    auto win = random_window(basis, rng);
    const Matrix c = solve_coefficients(win.system, win.values, 0.0);
    const double mean = win.w.dot(win.v) / win.w.sum();
    CHECK(c(0, 0) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("constant window with zero splitting variables is reproduced exactly") {
    const Basis basis = build_basis(3, 2);
    const auto n = static_cast<Eigen::Index>(basis.points());
    LocalSystem system;
    system.basis = &basis;
    system.weights = Eigen::VectorXd::Constant(n, 0.7);
    system.d_x = system.d_y = system.b_x = system.b_y = Matrix::Zero(n, 2);
    Matrix values(n, 2);
    values.col(0).setConstant(0.4);
    values.col(1).setConstant(0.9);
    const Matrix c = solve_coefficients(system, values, 1.2);
    CHECK(c(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(c(0, 1) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(c.bottomRows(c.rows() - 1).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("rank-deficient window falls back to a ridge-regularized fit") {
    // 9 window points, 10 cubic terms; u^3 = u on the grid so E is singular.
    Rng rng(14);
    const Basis basis = build_basis(1, 3);
    const auto ref_basis = oracle::poly_basis(1, 3);
    auto win = random_window(basis, rng);
    const Matrix c = solve_coefficients(win.system, win.values, 0.0);
    REQUIRE(c.allFinite());
    const oracle::Vec ref = oracle::step1_least_squares(ref_basis, win.w, win.v, win.tx, win.ty, 0.0);
    const Eigen::VectorXd fit = basis.values * c.col(0);
    CHECK((fit - ref_basis.e * ref).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("smoothing matches the reference implementation") {
    const HsiCube cube = random_cube(9, 10, 3, 21);
    const SpectralImage image(cube);
    const auto img = to_image(cube);
    for (double lambda : {0.0, 0.3, 1.2})
        for (int degree : {1, 2}) {
            SmoothParams params;
            params.lambda = lambda;
            params.degree = degree;
            params.window_radius = 2;
            params.max_iters = 12;
            const Basis basis = build_basis(params.window_radius, params.degree);
            for (std::size_t r : {0u, 4u, 8u})
                for (std::size_t c : {1u, 5u, 9u}) {
                    const auto got = smooth_pixel(image, r, c, params, basis);
                    const auto ref =
                        oracle::reference_smooth(img, static_cast<int>(r), static_cast<int>(c), to_settings(params));
                    for (std::size_t b = 0; b < 3; ++b) CHECK(got.spectrum[b] == doctest::Approx(ref[b]).epsilon(1e-8));
                }
        }
}

TEST_CASE("constant image is a fixed point") {
    HsiCube cube(12, 12, 4);
    for (std::size_t b = 0; b < 4; ++b)
        for (auto& v : cube.band(b)) v = 0.1f * static_cast<float>(b + 1);
    const HsiCube out = smooth_cube(cube, SmoothParams{});
    CHECK(out == cube);
}

TEST_CASE("returned iterate never has a larger objective than the first") {
    const HsiCube cube = random_cube(16, 16, 2, 31);
    const SpectralImage image(cube);
    SmoothParams params;
    const Basis basis = build_basis(params.window_radius, params.degree);
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 16; ++c) {
            const auto res = smooth_pixel(image, r, c, params, basis);
            REQUIRE(res.accepted >= 1);
            REQUIRE(res.accepted <= res.objective.size());
            CHECK(res.objective[res.accepted - 1] <= res.objective[0]);
            for (double o : res.objective) CHECK(res.objective[res.accepted - 1] <= o);
        }
}

TEST_CASE("interior smoothing is translation equivariant") {
    const HsiCube cube = random_cube(30, 30, 2, 41);
    HsiCube shifted(30, 30, 2);
    const std::size_t sr = 2, sc = 3;
    for (std::size_t r = 0; r < 30; ++r)
        for (std::size_t c = 0; c < 30; ++c)
            for (std::size_t b = 0; b < 2; ++b)
                shifted.at(r, c, b) = cube.at((r + 30 - sr) % 30, (c + 30 - sc) % 30, b);
    SmoothParams params;
    const HsiCube a = smooth_cube(cube, params);
    const HsiCube s = smooth_cube(shifted, params);
    const std::size_t margin = static_cast<std::size_t>(params.window_radius + params.patch_radius);
    for (std::size_t r = margin; r + margin < 30 - sr; ++r)
        for (std::size_t c = margin; c + margin < 30 - sc; ++c)
            for (std::size_t b = 0; b < 2; ++b) CHECK(s.at(r + sr, c + sc, b) == a.at(r, c, b));
}

TEST_CASE("noisy step edge is recovered away from the edges") {
    const std::size_t h = 24, w = 24;
    Rng rng(51);
    HsiCube clean(h, w, 3), noisy(h, w, 3);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            for (std::size_t b = 0; b < 3; ++b) {
                const double v = c < w / 2 ? 0.2 + 0.1 * static_cast<double>(b) : 0.8 - 0.1 * static_cast<double>(b);
                clean.at(r, c, b) = static_cast<float>(v);
                noisy.at(r, c, b) = static_cast<float>(v + 0.05 * rng.normal());
            }
    const SmoothParams params;
    const HsiCube out = smooth_cube(noisy, params);

    const auto img = to_image(noisy);
    for (std::size_t r : {3u, 12u})
        for (std::size_t c : {4u, 11u, 12u, 19u}) {
            const auto ref = oracle::reference_smooth(img, static_cast<int>(r), static_cast<int>(c), to_settings(params));
            for (std::size_t b = 0; b < 3; ++b) CHECK(out.at(r, c, b) == doctest::Approx(ref[b]).epsilon(1e-6));
        }

    // Spectrum error per pixel (RMS over bands), at least 3 px from the step
    // and from the image border.
    double worst = 0.0;
    for (std::size_t r = 3; r + 3 < h; ++r)
        for (std::size_t c = 3; c + 3 < w; ++c) {
            if (c + 3 > w / 2 - 1 && c < w / 2 + 3) continue;
            double sq = 0.0;
            for (std::size_t b = 0; b < 3; ++b) {
                const double e = static_cast<double>(out.at(r, c, b)) - clean.at(r, c, b);
                sq += e * e;
            }
            worst = std::max(worst, std::sqrt(sq / 3.0));
        }
    CHECK(worst <= 0.02);
}

TEST_CASE("threaded smoothing matches the single-threaded result") {
    const HsiCube cube = random_cube(14, 13, 2, 61);
    CHECK(smooth_cube(cube, SmoothParams{}, 3) == smooth_cube(cube, SmoothParams{}, 1));
}

TEST_CASE("structural profile has K bands and smooths each class") {
    SyntheticSpec spec;
    spec.height = 32;
    spec.width = 32;
    spec.num_classes = 4;
    spec.cells = 8;
    spec.bands = 8;
    spec.seed = 2;
    const auto scene = generate_synthetic(spec);
    kpca::KpcaParams kp;
    kp.components = 5;
    kp.max_anchors = 400;
    const HsiCube input = normalize_bands(scene.cube);
    const auto sp = extract_sp_full(input, SmoothParams{}, kp, 7);
    CHECK(sp.features.bands() == 5);
    CHECK(sp.features.height() == 32);
    CHECK(sp.initial.bands() == 8);
    for (int cls = 1; cls <= 4; ++cls)
        for (std::size_t b = 0; b < 8; ++b)
            CHECK(band_variance(sp.initial, scene.labels, cls, b) <= band_variance(input, scene.labels, cls, b));
}

TEST_CASE("constant cube gives an unchanged profile and zero kernel spectrum") {
    HsiCube cube(8, 8, 3);
    for (auto& v : cube.data()) v = 0.5f;
    kpca::KpcaParams kp;
    kp.components = 2;
    kp.kernel_width = 1.0;
    const auto sp = extract_sp_full(cube, SmoothParams{}, kp, 1);
    CHECK(sp.initial == cube);
    CHECK(sp.model.eigenvalues.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("invalid structural-profile requests are rejected") {
    const HsiCube cube = random_cube(6, 6, 3, 71);
    kpca::KpcaParams kp;
    kp.components = 4;
    CHECK_THROWS_AS(extract_sp(cube, SmoothParams{}, kp, 1), Error);
    kp.components = 2;
    SmoothParams bad;
    bad.max_iters = 0;
    CHECK_THROWS_AS(extract_sp(cube, bad, kp, 1), Error);
    bad = SmoothParams{};
    bad.lambda = -1.0;
    CHECK_THROWS_AS(extract_sp(cube, bad, kp, 1), Error);
    bad = SmoothParams{};
    bad.h0 = 0.0;
    CHECK_THROWS_AS(extract_sp(cube, bad, kp, 1), Error);
}
