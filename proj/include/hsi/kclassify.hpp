#pragma once

// Gaussian-kernel SVM with probability outputs.
//
// Binary machines are trained by SMO on the dual
//     max_a  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j k(x_i, x_j)
//     s.t.   0 <= a_i <= C,  sum_i a_i y_i = 0
// with k(a, b) = exp(-gamma |a - b|^2). Multiclass problems are split one
// versus rest; each task's decision values are mapped to probabilities with
// a Platt sigmoid fitted on out-of-fold decision values, and the T task
// probabilities are normalized per pixel. Two classes need a single task.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hsi/core.hpp"

namespace hsi::svm {

struct TrainGrid {
    std::vector<double> kernel_widths;  // gamma values
    std::vector<double> penalties;      // C values
    int folds = 5;

    // gamma in 2^-5..2^5 (x2), C in 1e-2..1e4 (x10), fivefold.
    static TrainGrid standard();
    void validate() const;
    friend bool operator==(const TrainGrid&, const TrainGrid&) = default;
};

struct SmoParams {
    double tol = 1e-3;               // max KKT violation at exit
    std::size_t max_passes = 200;    // iteration budget = max_passes * max(n, 100)

    friend bool operator==(const SmoParams&, const SmoParams&) = default;
};

struct BinarySolution {
    std::vector<double> alpha;
    double bias = 0.0;               // f(x) = sum_i alpha_i y_i k(x_i, x) + bias
    std::size_t iterations = 0;
    double max_violation = 0.0;
    bool converged = false;
};

double gaussian_kernel(std::span<const double> a, std::span<const double> b, double gamma);
Eigen::MatrixXd kernel_matrix(const Matrix& x, double gamma);

// Labels are +1/-1 with at least one of each.
BinarySolution smo_solve(const Eigen::MatrixXd& kernel, std::span<const int> labels, double penalty,
                         const SmoParams& params = {});
BinarySolution smo_train_binary(const Matrix& features, std::span<const int> labels, double penalty, double gamma,
                                const SmoParams& params = {});

double dual_objective(const Eigen::MatrixXd& kernel, std::span<const int> labels, std::span<const double> alpha);

struct PlattModel {
    double a = 0.0;  // P(y = +1 | f) = 1 / (1 + exp(a f + b))
    double b = 0.0;
    std::size_t iterations = 0;
    bool converged = false;

    double probability(double decision) const;
};

// Regularized maximum likelihood with smoothed targets, Newton iterations
// with backtracking. Labels are +1/-1 with both present. If 100 iterations
// are not enough the last iterate is returned with converged = false.
PlattModel platt_calibrate(std::span<const double> decisions, std::span<const int> labels);

struct OneVsRestTask {
    Eigen::VectorXd coefficients;  // alpha_i * y_i over the stored training rows
    double bias = 0.0;
    PlattModel platt;
};

struct TrainedClassifier {
    std::vector<int> classes;       // sorted class labels; column t of predict_proba
    double gamma = 0.0;
    double penalty = 0.0;
    double cv_accuracy = 0.0;       // mean fold OA of the selected pair
    Matrix support;                 // training rows with a nonzero coefficient in some task
    std::vector<OneVsRestTask> tasks;  // one per class; one task (classes[0] positive) for two classes

    std::size_t dims() const noexcept { return static_cast<std::size_t>(support.cols()); }
};

// Stratified fold index (0..folds-1) per sample. Each class is shuffled with
// a stream derived from the seed and the index of its first sample, so
// relabeling the classes does not move any sample between folds.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

struct CrossValidation {
    double accuracy = 0.0;          // mean fold OA
    Eigen::MatrixXd decisions;      // n x tasks out-of-fold decision values
};

CrossValidation cross_validate(const Eigen::MatrixXd& kernel, std::span<const int> labels,
                               std::span<const int> classes, std::span<const int> folds, double penalty,
                               const SmoParams& params = {});

// Refit on all samples with fixed hyperparameters; Platt on the out-of-fold
// decision values of the given fold assignment.
TrainedClassifier fit_fixed(const Matrix& features, std::span<const int> labels, double gamma, double penalty,
                            std::span<const int> folds, const SmoParams& params = {});

// Grid search: (gamma, C) maximizing mean fold OA; ties go to the smaller C,
// then the smaller gamma.
TrainedClassifier train(const Matrix& features, std::span<const int> labels, const TrainGrid& grid,
                        std::uint64_t seed, unsigned threads = 1, const SmoParams& params = {});

// p x tasks one-vs-rest decision values.
Eigen::MatrixXd decision_values(const TrainedClassifier& model, const Matrix& features, unsigned threads = 1);

// p x T probabilities, rows summing to one.
Matrix predict_proba(const TrainedClassifier& model, const Matrix& features, unsigned threads = 1);

// Training pixels/labels from a label mask over a cube.
struct TrainingSet {
    Matrix features;
    std::vector<int> labels;
};
TrainingSet collect_training(const HsiCube& features, const LabelMap& mask);

// Header (key=value, exact decimal) + raw little-endian float64 blob.
void save_model(const TrainedClassifier& model, const std::filesystem::path& header);
TrainedClassifier load_model(const std::filesystem::path& header);

}  // namespace hsi::svm
