#pragma once

// Decision fusion, confusion matrices and accuracy metrics.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsi/core.hpp"

namespace hsi::decision {

struct FusionParams {
    double mu = 0.5;  // weight of C1; C2 gets 1 - mu

    void validate() const;
};

// Per pixel, argmax_t mu C1_t + (1 - mu) C2_t. Ties go to the smallest class.
LabelMap fuse_labels(const ProbStack& c1, const ProbStack& c2, double mu);

// Per pixel argmax of a single stack (same tie rule).
LabelMap argmax_labels(const ProbStack& probs);

// Rows = reference class, columns = predicted class.
struct ConfusionMatrix {
    int classes = 0;
    std::vector<std::uint64_t> counts;  // classes x classes, row-major

    explicit ConfusionMatrix(int num_classes = 0)
        : classes(num_classes), counts(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes)) {}
    std::uint64_t& operator()(int ref, int pred) { return counts[static_cast<std::size_t>(ref * classes + pred)]; }
    std::uint64_t operator()(int ref, int pred) const { return counts[static_cast<std::size_t>(ref * classes + pred)]; }
    std::uint64_t total() const;
};

// Counts over labeled reference pixels. T is the larger of the two maps'
// class counts.
ConfusionMatrix confusion(const LabelMap& ref, const LabelMap& pred);

struct Metrics {
    double oa = 0.0;
    double aa = 0.0;
    double kappa = 0.0;
    bool kappa_degenerate = false;         // chance agreement p_e = 1
    std::vector<double> per_class;         // NaN for classes without reference pixels
};

Metrics metrics(const ConfusionMatrix& cm);

// Fixed-order text block, four decimals.
std::string format_report(const Metrics& m);

struct Separability {
    double between = 0.0;     // mean pairwise distance between class centroids
    double within = 0.0;      // mean over classes of the mean distance to the centroid
    double ratio = 0.0;       // between / within; infinity when within == 0
    bool within_zero = false;
};

// features: one sample per row; labels >= 1 aligned with the rows.
Separability class_separability(const Matrix& features, std::span<const int> labels);

}  // namespace hsi::decision
