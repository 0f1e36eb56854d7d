#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hsi/kclassify.hpp"
#include "hsi/simd.hpp"

namespace hsi::svm {

double gaussian_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    return std::exp(-gamma * simd::squared_distance(a, b));
}

Eigen::MatrixXd kernel_matrix(const Matrix& x, double gamma) {
    const Eigen::Index n = x.rows();
    const auto d = static_cast<std::size_t>(x.cols());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = gaussian_kernel({x.row(i).data(), d}, {x.row(j).data(), d}, gamma);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

double dual_objective(const Eigen::MatrixXd& kernel, std::span<const int> labels, std::span<const double> alpha) {
    const auto n = static_cast<Eigen::Index>(alpha.size());
    double linear = 0.0, quadratic = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        linear += alpha[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j)
            quadratic += alpha[static_cast<std::size_t>(i)] * alpha[static_cast<std::size_t>(j)] *
                         labels[static_cast<std::size_t>(i)] * labels[static_cast<std::size_t>(j)] * kernel(i, j);
    }
    return linear - 0.5 * quadratic;
}

// Minimizes 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij. Working pair: the
// maximal violating pair (i from I_up maximizing -y G, j from I_low
// minimizing -y G); lowest index wins ties.
BinarySolution smo_solve(const Eigen::MatrixXd& kernel, std::span<const int> labels, double penalty,
                         const SmoParams& params) {
    const std::size_t n = labels.size();
    if (static_cast<std::size_t>(kernel.rows()) != n || static_cast<std::size_t>(kernel.cols()) != n)
        throw Error("SMO: kernel matrix does not match the label count");
    if (!(penalty > 0.0)) throw Error("SMO: penalty C must be > 0");
    if (!kernel.allFinite()) throw Error("SMO: non-finite kernel values");
    bool has_pos = false, has_neg = false;
    for (int y : labels) {
        if (y == 1) has_pos = true;
        else if (y == -1) has_neg = true;
        else throw Error("SMO: labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw Error("SMO: both classes must be present");

    constexpr double kTau = 1e-12;
    const double c = penalty;
    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);
    const auto y = [&](std::size_t t) { return static_cast<double>(labels[t]); };
    const auto in_up = [&](std::size_t t) { return (labels[t] == 1 && alpha[t] < c) || (labels[t] == -1 && alpha[t] > 0.0); };
    const auto in_low = [&](std::size_t t) { return (labels[t] == -1 && alpha[t] < c) || (labels[t] == 1 && alpha[t] > 0.0); };

    BinarySolution out;
    const std::size_t budget = params.max_passes * std::max<std::size_t>(n, 100);
    while (true) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y(t) * grad[t];
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        out.max_violation = (i == n || j == n) ? 0.0 : std::max(gmax - gmin, 0.0);
        if (i == n || j == n || gmax - gmin <= params.tol) {
            out.converged = true;
            break;
        }
        if (out.iterations >= budget) break;
        ++out.iterations;

        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        const double old_i = alpha[i];
        const double old_j = alpha[j];
        if (labels[i] != labels[j]) {
            double quad = kernel(ii, ii) + kernel(jj, jj) - 2.0 * kernel(ii, jj);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            double quad = kernel(ii, ii) + kernel(jj, jj) - 2.0 * kernel(ii, jj);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        const double di = alpha[i] - old_i;
        const double dj = alpha[j] - old_j;
        for (std::size_t t = 0; t < n; ++t) {
            const auto tt = static_cast<Eigen::Index>(t);
            grad[t] += y(t) * (y(i) * kernel(tt, ii) * di + y(j) * kernel(tt, jj) * dj);
        }
    }

    // Offset: average over free variables, else the midpoint of the feasible range.
    double upper = std::numeric_limits<double>::infinity();
    double lower = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y(t) * grad[t];
        if (alpha[t] >= c) {
            if (labels[t] == -1) upper = std::min(upper, yg);
            else lower = std::max(lower, yg);
        } else if (alpha[t] <= 0.0) {
            if (labels[t] == 1) upper = std::min(upper, yg);
            else lower = std::max(lower, yg);
        } else {
            free_sum += yg;
            ++free_count;
        }
    }
    const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : 0.5 * (upper + lower);
    out.bias = -rho;
    out.alpha = std::move(alpha);
    return out;
}

BinarySolution smo_train_binary(const Matrix& features, std::span<const int> labels, double penalty, double gamma,
                                const SmoParams& params) {
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw Error("SMO: feature rows do not match the label count");
    if (!features.allFinite()) throw Error("SMO: non-finite features");
    if (!(gamma > 0.0)) throw Error("SMO: kernel width must be > 0");
    return smo_solve(kernel_matrix(features, gamma), labels, penalty, params);
}

}  // namespace hsi::svm
