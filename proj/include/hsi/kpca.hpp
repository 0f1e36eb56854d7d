#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "hsi/core.hpp"

namespace hsi::kpca {

enum class KernelKind {
    gaussian,  // exp(-|a-b|^2 / (2 width^2))
    linear,    // a.b; diagnostic only, reduces KPCA to ordinary PCA
};

struct KpcaParams {
    std::size_t components = 20;
    std::optional<double> kernel_width;  // nullopt: median pairwise anchor distance
    std::size_t max_anchors = 2000;
    KernelKind kernel = KernelKind::gaussian;

    void validate() const;
    friend bool operator==(const KpcaParams&, const KpcaParams&) = default;
};

// Fitted model. Scores of a query x are
//   score_k(x) = sum_i alphas(i,k) * kc(x, anchor_i)
// where kc is the kernel centered with the anchor statistics below.
struct KpcaModel {
    KernelKind kernel = KernelKind::gaussian;
    Matrix anchors;                  // n x d
    double kernel_width = 0.0;
    Eigen::MatrixXd alphas;          // n x K, eigenvectors / sqrt(eigenvalue)
    Eigen::VectorXd eigenvalues;     // K, descending, >= 0 (of the centered n x n kernel matrix)
    Eigen::VectorXd row_means;       // n, mean of each kernel-matrix row
    double total_mean = 0.0;         // mean of the whole kernel matrix
    Eigen::MatrixXd scores;          // n x K fit-time scores of the anchors

    std::size_t components() const noexcept { return static_cast<std::size_t>(alphas.cols()); }
    std::size_t dims() const noexcept { return static_cast<std::size_t>(anchors.cols()); }
};

// Uniformly subsampled (without replacement, order preserved) row indices;
// all rows when count <= limit.
std::vector<std::size_t> choose_anchors(std::size_t count, std::size_t limit, std::uint64_t seed);

// Median of the nonzero pairwise Euclidean distances between rows; zero only
// when all rows are identical. Coincident pairs are skipped so piecewise
// constant data (many exact repeats) still gets a usable width.
double median_pairwise_distance(const Matrix& samples);

double kernel_value(KernelKind kernel, double width, std::span<const double> a, std::span<const double> b);

// Throws when K > anchors, or when all anchors are identical and no width is
// given.
KpcaModel fit(const Matrix& samples, const KpcaParams& params, std::uint64_t seed);

// p x K scores. transform(model, model.anchors) reproduces model.scores.
Eigen::MatrixXd transform(const KpcaModel& model, const Matrix& pixels, unsigned threads = 1);

// Header (key=value) + raw little-endian float32 blob: anchors, alphas,
// eigenvalues. Centering statistics and scores are recomputed on load, so a
// reloaded model agrees with the original to float32 precision.
void save_model(const KpcaModel& model, const std::filesystem::path& header);
KpcaModel load_model(const std::filesystem::path& header);

}  // namespace hsi::kpca
