#include "hsi/dimred.hpp"

#include <string>

namespace hsi::dimred {

std::vector<std::pair<std::size_t, std::size_t>> band_groups(std::size_t bands, std::size_t groups) {
    if (groups < 1) throw Error("M must be >= 1");
    if (groups > bands)
        throw Error("M=" + std::to_string(groups) + " exceeds the band count " + std::to_string(bands));
    const std::size_t size = bands / groups;
    std::vector<std::pair<std::size_t, std::size_t>> out(groups);
    for (std::size_t g = 0; g < groups; ++g) out[g] = {g * size, g + 1 == groups ? bands : (g + 1) * size};
    return out;
}

void reduce_spectrum(std::span<const double> spectrum, std::span<const std::pair<std::size_t, std::size_t>> groups,
                     std::span<double> out) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto [begin, end] = groups[g];
        double sum = 0.0;
        for (std::size_t b = begin; b < end; ++b) sum += spectrum[b];
        out[g] = sum / static_cast<double>(end - begin);
    }
}

Matrix reduce_bands(const Matrix& spectra, std::size_t groups) {
    const auto ranges = band_groups(static_cast<std::size_t>(spectra.cols()), groups);
    Matrix out(spectra.rows(), static_cast<Eigen::Index>(groups));
    for (Eigen::Index p = 0; p < spectra.rows(); ++p)
        reduce_spectrum({spectra.row(p).data(), static_cast<std::size_t>(spectra.cols())}, ranges,
                        {out.row(p).data(), groups});
    return out;
}

HsiCube reduce_bands(const HsiCube& cube, std::size_t groups) {
    return HsiCube::from_spectra(cube.height(), cube.width(), reduce_bands(cube.spectra(), groups));
}

}  // namespace hsi::dimred
