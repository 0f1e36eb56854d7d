#include <algorithm>
#include <cmath>
#include <string>

#include "hsi/core.hpp"

namespace hsi {

HsiCube::HsiCube(std::size_t height, std::size_t width, std::size_t bands)
    : HsiCube(height, width, bands, std::vector<float>(height * width * bands, 0.0f)) {}

HsiCube::HsiCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<float> data)
    : height_(height), width_(width), bands_(bands), data_(std::move(data)) {
    if (height == 0 || width == 0 || bands == 0) throw Error("cube dimensions must be >= 1");
    if (data_.size() != height * width * bands)
        throw Error("cube data length " + std::to_string(data_.size()) + " does not match " +
                    std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(bands));
}

Matrix HsiCube::spectra() const {
    Matrix out(static_cast<Eigen::Index>(pixels()), static_cast<Eigen::Index>(bands_));
    for (std::size_t b = 0; b < bands_; ++b) {
        const auto plane = band(b);
        for (std::size_t p = 0; p < pixels(); ++p) out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b)) = plane[p];
    }
    return out;
}

HsiCube HsiCube::from_spectra(std::size_t height, std::size_t width, const Matrix& spectra) {
    if (static_cast<std::size_t>(spectra.rows()) != height * width)
        throw Error("spectra row count does not match raster size");
    const auto bands = static_cast<std::size_t>(spectra.cols());
    HsiCube cube(height, width, bands);
    for (std::size_t b = 0; b < bands; ++b) {
        auto plane = cube.band(b);
        for (std::size_t p = 0; p < cube.pixels(); ++p)
            plane[p] = static_cast<float>(spectra(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b)));
    }
    return cube;
}

void HsiCube::require_finite() const {
    const auto it = std::find_if(data_.begin(), data_.end(), [](float v) { return !std::isfinite(v); });
    if (it != data_.end())
        throw Error("cube contains a non-finite value at flat index " + std::to_string(it - data_.begin()));
}

LabelMap::LabelMap(std::size_t height, std::size_t width, int num_classes)
    : LabelMap(height, width, num_classes, std::vector<int>(height * width, 0)) {}

LabelMap::LabelMap(std::size_t height, std::size_t width, int num_classes, std::vector<int> labels)
    : height_(height), width_(width), num_classes_(num_classes), labels_(std::move(labels)) {
    if (height == 0 || width == 0) throw Error("label map dimensions must be >= 1");
    if (num_classes < 1) throw Error("label map needs num_classes >= 1");
    if (labels_.size() != height * width)
        throw Error("label map has " + std::to_string(labels_.size()) + " entries, expected " +
                    std::to_string(height * width));
    for (int v : labels_)
        if (v < 0 || v > num_classes)
            throw Error("label " + std::to_string(v) + " outside 0.." + std::to_string(num_classes));
}

std::size_t LabelMap::count(int label) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

std::size_t LabelMap::labeled() const { return pixels() - count(0); }

ProbStack::ProbStack(std::size_t height, std::size_t width, int num_classes)
    : height_(height), width_(width), num_classes_(num_classes),
      probs_(height * width * static_cast<std::size_t>(std::max(num_classes, 0)), 0.0f) {
    if (height == 0 || width == 0) throw Error("probability stack dimensions must be >= 1");
    if (num_classes < 1) throw Error("probability stack needs num_classes >= 1");
}

ProbStack ProbStack::from_rows(std::size_t height, std::size_t width, const Matrix& rows) {
    if (static_cast<std::size_t>(rows.rows()) != height * width)
        throw Error("probability rows do not match raster size");
    ProbStack stack(height, width, static_cast<int>(rows.cols()));
    for (int t = 0; t < stack.num_classes(); ++t) {
        auto plane = stack.plane(t);
        for (std::size_t p = 0; p < stack.pixels(); ++p) {
            const double v = rows(static_cast<Eigen::Index>(p), t);
            if (!(v >= -1e-6 && v <= 1.0 + 1e-6))
                throw Error("probability " + std::to_string(v) + " outside [0,1] at pixel " + std::to_string(p));
            plane[p] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    stack.validate_simplex();
    return stack;
}

Matrix ProbStack::rows() const {
    Matrix out(static_cast<Eigen::Index>(pixels()), num_classes_);
    for (int t = 0; t < num_classes_; ++t) {
        const auto p = plane(t);
        for (std::size_t i = 0; i < pixels(); ++i) out(static_cast<Eigen::Index>(i), t) = p[i];
    }
    return out;
}

void ProbStack::validate_simplex() const {
    for (std::size_t i = 0; i < pixels(); ++i) {
        double sum = 0.0;
        for (int t = 0; t < num_classes_; ++t) {
            const double v = at(i, t);
            if (!(v >= 0.0 && v <= 1.0))
                throw Error("probability " + std::to_string(v) + " outside [0,1] at pixel " + std::to_string(i));
            sum += v;
        }
        if (std::abs(sum - 1.0) > kSumTolerance)
            throw Error("probabilities at pixel " + std::to_string(i) + " sum to " + std::to_string(sum));
    }
}

HsiCube ProbStack::to_cube() const {
    return HsiCube(height_, width_, static_cast<std::size_t>(num_classes_), probs_);
}

ProbStack ProbStack::from_cube(const HsiCube& cube) {
    ProbStack stack(cube.height(), cube.width(), static_cast<int>(cube.bands()));
    std::copy(cube.data().begin(), cube.data().end(), stack.probs_.begin());
    stack.validate_simplex();
    return stack;
}

HsiCube normalize_bands(const HsiCube& cube) {
    HsiCube out = cube;
    for (std::size_t b = 0; b < cube.bands(); ++b) {
        const auto in = cube.band(b);
        const auto [lo_it, hi_it] = std::minmax_element(in.begin(), in.end());
        const double lo = *lo_it;
        const double range = static_cast<double>(*hi_it) - lo;
        auto dst = out.band(b);
        for (std::size_t p = 0; p < in.size(); ++p)
            dst[p] = range > 0.0 ? static_cast<float>((in[p] - lo) / range) : 0.0f;
    }
    return out;
}

}  // namespace hsi
