#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hsi/dimred.hpp"
#include "hsi/rng.hpp"

using namespace hsi;

TEST_CASE("group layout") {
    const auto g = dimred::band_groups(5, 2);
    REQUIRE(g.size() == 2);
    CHECK(g[0] == std::pair<std::size_t, std::size_t>{0, 2});
    CHECK(g[1] == std::pair<std::size_t, std::size_t>{2, 5});
    CHECK_THROWS_AS(dimred::band_groups(4, 0), Error);
    CHECK_THROWS_AS(dimred::band_groups(4, 5), Error);
}

TEST_CASE("group means") {
    Matrix x(1, 4);
    x << 1, 3, 5, 7;
    const auto r = dimred::reduce_bands(x, 2);
    CHECK(r(0, 0) == 2.0);
    CHECK(r(0, 1) == 6.0);

    Matrix y(1, 5);
    y << 0, 2, 3, 6, 9;
    const auto s = dimred::reduce_bands(y, 2);
    CHECK(s(0, 0) == 1.0);
    CHECK(s(0, 1) == 6.0);

    CHECK(dimred::reduce_bands(y, 5) == y);
}

TEST_CASE("cube reduction keeps the raster and the identity case") {
    Rng rng(1);
    HsiCube cube(3, 4, 6);
    for (auto& v : cube.data()) v = static_cast<float>(rng.uniform());
    CHECK(dimred::reduce_bands(cube, 6) == cube);
    const auto r = dimred::reduce_bands(cube, 4);
    CHECK(r.bands() == 4);
    CHECK(r.height() == 3);
    CHECK(r.width() == 4);
    CHECK_THROWS_AS(dimred::reduce_bands(cube, 7), Error);
}

TEST_CASE("linear, constant preserving, bounded") {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto bands = static_cast<Eigen::Index>(3 + rng.below(40));
        const auto groups = 1 + rng.below(static_cast<std::uint64_t>(bands));
        Matrix x(5, bands), y(5, bands);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x.data()[i] = rng.normal();
            y.data()[i] = rng.normal();
        }
        const double a = rng.normal(), b = rng.normal();
        const Matrix lhs = dimred::reduce_bands(Matrix(a * x + b * y), groups);
        const Matrix rhs = a * dimred::reduce_bands(x, groups) + b * dimred::reduce_bands(y, groups);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);

        const Matrix rx = dimred::reduce_bands(x, groups);
        for (Eigen::Index p = 0; p < x.rows(); ++p) {
            CHECK(rx.row(p).minCoeff() >= x.row(p).minCoeff());
            CHECK(rx.row(p).maxCoeff() <= x.row(p).maxCoeff());
        }
        const Matrix c = Matrix::Constant(2, bands, 0.3);
        CHECK((dimred::reduce_bands(c, groups).array() - 0.3).abs().maxCoeff() <= 1e-15);
    }
}
