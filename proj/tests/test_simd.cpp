#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "hsi/error.hpp"
#include "hsi/rng.hpp"
#include "hsi/simd.hpp"

using namespace hsi;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
    return v;
}

std::vector<simd::Isa> available() {
    std::vector<simd::Isa> out;
    for (auto isa : {simd::Isa::scalar, simd::Isa::avx2, simd::Isa::neon})
        if (simd::supported(isa)) out.push_back(isa);
    return out;
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
    const auto& t = simd::table(simd::Isa::scalar);
    std::vector<double> a{1, 2, 3}, b{4, -5, 6};
    CHECK(t.dot(a.data(), b.data(), 3) == 12.0);
    CHECK(t.squared_distance(a.data(), b.data(), 3) == 9.0 + 49.0 + 9.0);
    std::vector<double> y{1, 1, 1};
    t.axpy(2.0, a.data(), y.data(), 3);
    CHECK(y == std::vector<double>{3, 5, 7});
    t.xpby(a.data(), 0.5, y.data(), 3);
    CHECK(y == std::vector<double>{2.5, 4.5, 6.5});
}

TEST_CASE("vector kernels agree with the scalar reference for every length") {
    Rng rng(11);
    const auto& ref = simd::table(simd::Isa::scalar);
    for (auto isa : available()) {
        const std::string isa_name(simd::name(isa));
        CAPTURE(isa_name);
        const auto& t = simd::table(isa);
        for (std::size_t n = 0; n <= 67; ++n) {
            const auto a = random_vector(rng, n);
            const auto b = random_vector(rng, n);
            const double scale = 1.0 + static_cast<double>(n);
            CHECK(std::abs(t.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= 1e-13 * scale);
            CHECK(std::abs(t.squared_distance(a.data(), b.data(), n) - ref.squared_distance(a.data(), b.data(), n)) <=
                  1e-13 * scale);
            auto y1 = random_vector(rng, n);
            auto y2 = y1;
            t.axpy(0.37, a.data(), y1.data(), n);
            ref.axpy(0.37, a.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15);
            t.xpby(b.data(), -1.3, y1.data(), n);
            ref.xpby(b.data(), -1.3, y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-14);
        }
    }
}

TEST_CASE("unaligned offsets") {
    Rng rng(3);
    auto a = random_vector(rng, 80);
    auto b = random_vector(rng, 80);
    const auto& ref = simd::table(simd::Isa::scalar);
    for (auto isa : available()) {
        const auto& t = simd::table(isa);
        for (std::size_t off = 0; off < 4; ++off)
            CHECK(std::abs(t.dot(a.data() + off, b.data() + off, 61) - ref.dot(a.data() + off, b.data() + off, 61)) <=
                  1e-12);
    }
}

TEST_CASE("dispatch") {
    CHECK(simd::supported(simd::Isa::scalar));
    CHECK(simd::parse_isa("scalar") == simd::Isa::scalar);
    CHECK_THROWS(simd::parse_isa("sse9"));
    const auto before = simd::active_isa();
    simd::select(simd::Isa::scalar);
    CHECK(simd::active_isa() == simd::Isa::scalar);
    CHECK(&simd::active() == &simd::table(simd::Isa::scalar));
    simd::select(before);
    if (!simd::supported(simd::Isa::neon)) CHECK_THROWS_AS(simd::table(simd::Isa::neon), Error);
}
