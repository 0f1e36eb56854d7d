#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hsi/error.hpp"

namespace hsi {

// Row-major dense matrix; one sample (pixel spectrum) per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Hyperspectral raster, band-sequential: value(row, col, band) lives at
// data[band * height * width + row * width + col]. Values are stored as
// float32, the precision of the on-disk container.
class HsiCube {
public:
    HsiCube() = default;
    HsiCube(std::size_t height, std::size_t width, std::size_t bands);
    HsiCube(std::size_t height, std::size_t width, std::size_t bands, std::vector<float> data);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t bands() const noexcept { return bands_; }
    std::size_t pixels() const noexcept { return height_ * width_; }
    bool empty() const noexcept { return data_.empty(); }

    float& at(std::size_t row, std::size_t col, std::size_t band) {
        return data_[band * pixels() + row * width_ + col];
    }
    float at(std::size_t row, std::size_t col, std::size_t band) const {
        return data_[band * pixels() + row * width_ + col];
    }

    std::span<float> band(std::size_t b) { return {data_.data() + b * pixels(), pixels()}; }
    std::span<const float> band(std::size_t b) const { return {data_.data() + b * pixels(), pixels()}; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    // pixels() x bands matrix of spectra, pixel index = row * width + col.
    Matrix spectra() const;
    static HsiCube from_spectra(std::size_t height, std::size_t width, const Matrix& spectra);

    // Throws hsi::Error on NaN/Inf.
    void require_finite() const;

    friend bool operator==(const HsiCube&, const HsiCube&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t bands_ = 0;
    std::vector<float> data_;
};

// 0 = unlabeled, 1..num_classes = class identity. Row-major.
class LabelMap {
public:
    LabelMap() = default;
    LabelMap(std::size_t height, std::size_t width, int num_classes);
    LabelMap(std::size_t height, std::size_t width, int num_classes, std::vector<int> labels);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t pixels() const noexcept { return height_ * width_; }
    int num_classes() const noexcept { return num_classes_; }

    int& operator[](std::size_t pixel) { return labels_[pixel]; }
    int operator[](std::size_t pixel) const { return labels_[pixel]; }
    int at(std::size_t row, std::size_t col) const { return labels_[row * width_ + col]; }
    std::span<const int> labels() const noexcept { return labels_; }

    std::size_t count(int label) const;
    std::size_t labeled() const;

    friend bool operator==(const LabelMap&, const LabelMap&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    int num_classes_ = 0;
    std::vector<int> labels_;
};

// Per-pixel class probabilities, class-planar like HsiCube bands:
// prob(pixel, t) = probs[t * pixels + pixel], t = 0..num_classes-1 for
// class labels 1..num_classes.
class ProbStack {
public:
    static constexpr double kSumTolerance = 1e-5;

    ProbStack() = default;
    ProbStack(std::size_t height, std::size_t width, int num_classes);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t pixels() const noexcept { return height_ * width_; }
    int num_classes() const noexcept { return num_classes_; }

    float& at(std::size_t pixel, int cls) { return probs_[static_cast<std::size_t>(cls) * pixels() + pixel]; }
    float at(std::size_t pixel, int cls) const { return probs_[static_cast<std::size_t>(cls) * pixels() + pixel]; }
    std::span<float> plane(int cls) { return {probs_.data() + static_cast<std::size_t>(cls) * pixels(), pixels()}; }
    std::span<const float> plane(int cls) const {
        return {probs_.data() + static_cast<std::size_t>(cls) * pixels(), pixels()};
    }

    // Rows are pixels, columns classes. Entries within 1e-6 of [0,1] are
    // clamped; the result must satisfy validate_simplex().
    static ProbStack from_rows(std::size_t height, std::size_t width, const Matrix& rows);
    Matrix rows() const;

    // Throws unless every entry is in [0,1] and every pixel sums to one
    // within kSumTolerance.
    void validate_simplex() const;

    HsiCube to_cube() const;
    static ProbStack from_cube(const HsiCube& cube);

    friend bool operator==(const ProbStack&, const ProbStack&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    int num_classes_ = 0;
    std::vector<float> probs_;
};

// Container I/O. A cube is a text header (key=value lines) plus a raw
// little-endian float32 band-sequential companion file whose path is the
// header path with its extension replaced by ".raw".
std::filesystem::path raw_path_for(const std::filesystem::path& header);
HsiCube load_cube(const std::filesystem::path& header);
void write_cube(const HsiCube& cube, const std::filesystem::path& header);

// Text label map: "width height num_classes" then row-major integers.
LabelMap load_labels(const std::filesystem::path& path);
void write_labels(const LabelMap& labels, const std::filesystem::path& path);

// Each band affinely mapped to [0,1]; constant bands become all zeros.
HsiCube normalize_bands(const HsiCube& cube);

struct SyntheticSpec {
    std::size_t height = 64;
    std::size_t width = 64;
    int num_classes = 8;
    std::size_t bands = 40;
    double noise_sigma = 0.05;
    std::uint64_t seed = 0;
    std::size_t cells = 24;  // Voronoi cells; must be >= num_classes

    void validate() const;
    friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

struct SyntheticScene {
    HsiCube cube;
    LabelMap labels;
    // num_classes x bands, row t-1 is the clean signature of class t.
    Matrix signatures;
};

SyntheticScene generate_synthetic(const SyntheticSpec& spec);

struct TrainTestSplit {
    LabelMap train;
    LabelMap test;
};

// Exactly per_class training pixels per class; everything else labeled
// goes to the test mask.
TrainTestSplit sample_training(const LabelMap& labels, std::size_t per_class, std::uint64_t seed);

}  // namespace hsi
