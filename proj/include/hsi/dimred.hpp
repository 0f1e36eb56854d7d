#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hsi/core.hpp"

namespace hsi::dimred {

inline constexpr std::size_t kDefaultGroups = 40;

// Contiguous band groups of size floor(bands / groups); the last group
// absorbs the remainder. Returns [begin, end) index pairs.
std::vector<std::pair<std::size_t, std::size_t>> band_groups(std::size_t bands, std::size_t groups);

// Group means of one spectrum. Each mean is a left-to-right sum divided by
// the group size.
void reduce_spectrum(std::span<const double> spectrum, std::span<const std::pair<std::size_t, std::size_t>> groups,
                     std::span<double> out);

// Averages each band group of every pixel. 1 <= groups <= bands.
Matrix reduce_bands(const Matrix& spectra, std::size_t groups);
HsiCube reduce_bands(const HsiCube& cube, std::size_t groups);

}  // namespace hsi::dimred
