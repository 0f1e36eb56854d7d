#pragma once

// Straightforward reference implementations used as test oracles. Nothing
// here calls into the library, so agreement with it is a real cross-check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Binary SVM dual by enumeration of every face of the box {0, C, free}^n.

struct SvmDual {
    double objective = -std::numeric_limits<double>::infinity();
    Vec alpha;
    double bias = 0.0;
    bool has_free = false;
};

inline double svm_dual_value(const Mat& k, const std::vector<int>& y, const Vec& a) {
    double lin = a.sum(), quad = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < a.size(); ++j) quad += a(i) * a(j) * y[i] * y[j] * k(i, j);
    return lin - 0.5 * quad;
}

inline SvmDual svm_dual_brute_force(const Mat& k, const std::vector<int>& y, double c) {
    const int n = static_cast<int>(y.size());
    int faces = 1;
    for (int i = 0; i < n; ++i) faces *= 3;
    SvmDual best;
    for (int code = 0; code < faces; ++code) {
        std::vector<int> state(n);  // 0: at 0, 1: at C, 2: free
        for (int i = 0, rest = code; i < n; ++i, rest /= 3) state[i] = rest % 3;
        std::vector<int> free;
        Vec a = Vec::Zero(n);
        for (int i = 0; i < n; ++i) {
            if (state[i] == 1) a(i) = c;
            if (state[i] == 2) free.push_back(i);
        }
        double fixed_sum = 0.0;
        for (int i = 0; i < n; ++i)
            if (state[i] == 1) fixed_sum += c * y[i];
        if (free.empty()) {
            if (std::abs(fixed_sum) > 1e-12) continue;
        } else {
            const int f = static_cast<int>(free.size());
            Mat sys = Mat::Zero(f + 1, f + 1);
            Vec rhs = Vec::Zero(f + 1);
            for (int r = 0; r < f; ++r) {
                const int i = free[r];
                for (int s = 0; s < f; ++s) sys(r, s) = y[i] * y[free[s]] * k(i, free[s]);
                sys(r, f) = y[i];
                sys(f, r) = y[i];
                double qa = 0.0;
                for (int j = 0; j < n; ++j)
                    if (state[j] == 1) qa += y[i] * y[j] * k(i, j) * c;
                rhs(r) = 1.0 - qa;
            }
            rhs(f) = -fixed_sum;
            const Vec sol = sys.completeOrthogonalDecomposition().solve(rhs);
            if ((sys * sol - rhs).norm() > 1e-9 * std::max(1.0, rhs.norm())) continue;
            bool feasible = true;
            for (int r = 0; r < f; ++r) {
                if (sol(r) < -1e-12 || sol(r) > c + 1e-12) feasible = false;
                a(free[r]) = std::clamp(sol(r), 0.0, c);
            }
            if (!feasible) continue;
        }
        const double value = svm_dual_value(k, y, a);
        if (value > best.objective) {
            best.objective = value;
            best.alpha = a;
        }
    }
    // Offset from margin support vectors.
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
        const double ai = best.alpha(i);
        if (ai > 1e-9 * c && ai < c * (1 - 1e-9)) {
            double f = 0.0;
            for (int j = 0; j < n; ++j) f += best.alpha(j) * y[j] * k(i, j);
            sum += y[i] - f;
            ++count;
        }
    }
    best.has_free = count > 0;
    best.bias = count > 0 ? sum / count : 0.0;
    return best;
}

// ---------------------------------------------------------------------------
// Local polynomial basis on a (2r+1)^2 window: monomials u^a v^b, a+b <= L,
// ordered by degree then decreasing a; u = dcol / r, v = drow / r.

struct PolyBasis {
    std::vector<std::pair<int, int>> offsets;  // (drow, dcol)
    Mat e, ex, ey;
};

inline PolyBasis poly_basis(int r, int degree) {
    PolyBasis b;
    for (int dr = -r; dr <= r; ++dr)
        for (int dc = -r; dc <= r; ++dc) b.offsets.emplace_back(dr, dc);
    std::vector<std::pair<int, int>> powers;
    for (int d = 0; d <= degree; ++d)
        for (int a = d; a >= 0; --a) powers.emplace_back(a, d - a);
    const auto n = static_cast<Eigen::Index>(b.offsets.size());
    const auto m = static_cast<Eigen::Index>(powers.size());
    b.e.resize(n, m);
    b.ex.resize(n, m);
    b.ey.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = static_cast<double>(b.offsets[i].second) / r;
        const double v = static_cast<double>(b.offsets[i].first) / r;
        for (Eigen::Index l = 0; l < m; ++l) {
            const auto [pa, pb] = powers[l];
            b.e(i, l) = std::pow(u, pa) * std::pow(v, pb);
            b.ex(i, l) = pa == 0 ? 0.0 : pa * std::pow(u, pa - 1) * std::pow(v, pb) / r;
            b.ey(i, l) = pb == 0 ? 0.0 : pb * std::pow(u, pa) * std::pow(v, pb - 1) / r;
        }
    }
    return b;
}

// Step-1 objective for one band:
//   sum_i w_i (E_i c - I_i)^2 + 2 lambda sum_i w_i ((Ex_i c - tx_i)^2 + (Ey_i c - ty_i)^2)
// with t = d - b.
inline double step1_objective(const PolyBasis& b, const Vec& w, const Vec& values, const Vec& tx, const Vec& ty,
                              double lambda, const Vec& c) {
    const Vec r0 = b.e * c - values;
    const Vec rx = b.ex * c - tx;
    const Vec ry = b.ey * c - ty;
    double out = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        out += w(i) * r0(i) * r0(i) + 2.0 * lambda * w(i) * (rx(i) * rx(i) + ry(i) * ry(i));
    return out;
}

// Half Hessian of step1_objective: E'WE + 2 lambda (Ex'WEx + Ey'WEy).
inline Mat step1_half_hessian(const PolyBasis& b, const Vec& w, double lambda) {
    const auto wd = w.asDiagonal();
    return b.e.transpose() * wd * b.e + 2.0 * lambda * (b.ex.transpose() * wd * b.ex + b.ey.transpose() * wd * b.ey);
}

// Central differences of step1_objective with respect to c.
inline Vec step1_numeric_gradient(const PolyBasis& b, const Vec& w, const Vec& values, const Vec& tx, const Vec& ty,
                                  double lambda, const Vec& c, double h) {
    Vec g(c.size());
    for (Eigen::Index l = 0; l < c.size(); ++l) {
        Vec up = c, down = c;
        up(l) += h;
        down(l) -= h;
        g(l) = (step1_objective(b, w, values, tx, ty, lambda, up) - step1_objective(b, w, values, tx, ty, lambda, down)) /
               (2.0 * h);
    }
    return g;
}

// Minimizer of step1_objective by QR on the stacked weighted system.
inline Vec step1_least_squares(const PolyBasis& b, const Vec& w, const Vec& values, const Vec& tx, const Vec& ty,
                               double lambda) {
    const Eigen::Index n = w.size(), m = b.e.cols();
    const Eigen::Index blocks = lambda > 0.0 ? 3 : 1;
    Mat a(blocks * n, m);
    Vec rhs(blocks * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = std::sqrt(w(i));
        a.row(i) = s * b.e.row(i);
        rhs(i) = s * values(i);
        if (blocks == 3) {
            const double g = std::sqrt(2.0 * lambda * w(i));
            a.row(n + i) = g * b.ex.row(i);
            rhs(n + i) = g * tx(i);
            a.row(2 * n + i) = g * b.ey.row(i);
            rhs(2 * n + i) = g * ty(i);
        }
    }
    return a.colPivHouseholderQr().solve(rhs);
}

// ---------------------------------------------------------------------------
// Reference smoother for one pixel, written directly from the model:
// similarity weights, Step 1 by least squares, soft-threshold Step 2,
// Bregman Step 3, lowest-objective iterate returned.

struct Image {
    int height = 0, width = 0, bands = 0;
    std::vector<double> v;  // (row * width + col) * bands + band
    double at(int r, int c, int band) const {
        r = std::clamp(r, 0, height - 1);
        c = std::clamp(c, 0, width - 1);
        return v[(static_cast<std::size_t>(r) * width + c) * bands + band];
    }
};

struct SmoothSettings {
    double lambda = 1.2;
    int window = 3, patch = 1, degree = 2;
    double sigma = 1.0, h0 = 1.0;
    int max_iters = 20;
    double tol = 1e-4;
};

inline std::vector<double> reference_weights(const Image& img, int row, int col, const SmoothSettings& s) {
    std::vector<double> w;
    for (int dr = -s.window; dr <= s.window; ++dr)
        for (int dc = -s.window; dc <= s.window; ++dc) {
            double dist = 0.0;
            for (int pr = -s.patch; pr <= s.patch; ++pr)
                for (int pc = -s.patch; pc <= s.patch; ++pc) {
                    const double g = std::exp(-(pr * pr + pc * pc) / (2.0 * s.sigma * s.sigma));
                    for (int band = 0; band < img.bands; ++band) {
                        const double diff = img.at(row + dr + pr, col + dc + pc, band) - img.at(row + pr, col + pc, band);
                        dist += diff * diff * g;
                    }
                }
            w.push_back(std::max(std::exp(-dist / (s.h0 * s.h0)), std::numeric_limits<double>::min()));
        }
    return w;
}

inline double soft_threshold(double a, double t) {
    if (a > t) return a - t;
    if (a < -t) return a + t;
    return 0.0;
}

inline std::vector<double> reference_smooth(const Image& img, int row, int col, const SmoothSettings& s) {
    const PolyBasis b = poly_basis(s.window, s.degree);
    const auto wv = reference_weights(img, row, col, s);
    const Eigen::Index n = static_cast<Eigen::Index>(wv.size());
    const Vec w = Eigen::Map<const Vec>(wv.data(), n);
    std::size_t center = 0;
    for (std::size_t i = 0; i < b.offsets.size(); ++i)
        if (b.offsets[i] == std::make_pair(0, 0)) center = i;

    std::vector<double> out(img.bands, 0.0);

    // Joint iteration over all bands (the stopping rule uses the full window).
    std::vector<Vec> values(img.bands), dx(img.bands), dy(img.bands), bx(img.bands), by(img.bands), prev(img.bands);
    for (int band = 0; band < img.bands; ++band) {
        values[band].resize(n);
        for (Eigen::Index i = 0; i < n; ++i)
            values[band](i) = img.at(row + b.offsets[i].first, col + b.offsets[i].second, band);
        dx[band] = dy[band] = bx[band] = by[band] = Vec::Zero(n);
    }
    double best = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= s.max_iters; ++iter) {
        double objective = 0.0, change = 0.0, scale = 0.0;
        std::vector<Vec> p(img.bands), gx(img.bands), gy(img.bands);
        for (int band = 0; band < img.bands; ++band) {
            const Vec c = step1_least_squares(b, w, values[band], dx[band] - bx[band], dy[band] - by[band], s.lambda);
            p[band] = b.e * c;
            gx[band] = b.ex * c;
            gy[band] = b.ey * c;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double r0 = p[band](i) - values[band](i);
                objective += w(i) * r0 * r0;
                if (s.lambda > 0.0) objective += s.lambda * (std::abs(gx[band](i)) + std::abs(gy[band](i)));
            }
        }
        if (iter == 1 || objective < best) {
            best = objective;
            for (int band = 0; band < img.bands; ++band) out[band] = p[band](static_cast<Eigen::Index>(center));
        }
        if (s.lambda == 0.0) break;
        for (int band = 0; band < img.bands; ++band)
            for (Eigen::Index i = 0; i < n; ++i) {
                const double vx = gx[band](i) + bx[band](i);
                const double vy = gy[band](i) + by[band](i);
                dx[band](i) = soft_threshold(vx, 1.0 / s.lambda);
                dy[band](i) = soft_threshold(vy, 1.0 / s.lambda);
                bx[band](i) = vx - dx[band](i);
                by[band](i) = vy - dy[band](i);
            }
        if (iter > 1) {
            for (int band = 0; band < img.bands; ++band) {
                change += (p[band] - prev[band]).squaredNorm();
                scale += prev[band].squaredNorm();
            }
            if (std::sqrt(change) <= s.tol * std::sqrt(scale)) break;
        }
        prev = p;
    }
    for (int band = 0; band < img.bands; ++band) {
        bool constant = true;
        for (const auto& [dr, dc] : b.offsets)
            constant = constant && img.at(row + dr, col + dc, band) == img.at(row, col, band);
        if (constant) out[band] = img.at(row, col, band);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classical PCA scores: centered data times the top-K covariance eigenvectors.

inline Mat pca_scores(const Mat& x, int k) {
    const Mat xc = x.rowwise() - x.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Mat> eig(xc.transpose() * xc);
    Mat v(x.cols(), k);
    for (int c = 0; c < k; ++c) v.col(c) = eig.eigenvectors().col(x.cols() - 1 - c);
    return xc * v;
}

// ---------------------------------------------------------------------------
// Dense random-walker system: (L + gamma I) q_t = gamma prior_t, with L built
// from explicit 4-neighbor loops.

inline Mat dense_laplacian(int height, int width, const std::vector<double>& v, double beta) {
    const int n = height * width;
    Mat l = Mat::Zero(n, n);
    const int dr[4] = {-1, 1, 0, 0};
    const int dc[4] = {0, 0, -1, 1};
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            for (int k = 0; k < 4; ++k) {
                const int rr = r + dr[k], cc = c + dc[k];
                if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
                const int p = r * width + c, q = rr * width + cc;
                const double wgt = std::exp(-beta * (v[p] - v[q]) * (v[p] - v[q]));
                l(p, q) -= wgt;
                l(p, p) += wgt;
            }
    return l;
}

inline Mat dense_erw(const Mat& laplacian, const Mat& priors, double gamma) {
    const Mat a = laplacian + gamma * Mat::Identity(laplacian.rows(), laplacian.cols());
    return a.ldlt().solve(gamma * priors);
}

// ---------------------------------------------------------------------------
// Platt negative log-likelihood and a coarse-to-fine grid minimizer.

inline double platt_nll(const std::vector<double>& f, const std::vector<int>& y, double a, double b) {
    double np = 0, nn = 0;
    for (int v : y) (v > 0 ? np : nn) += 1;
    const double hi = (np + 1) / (np + 2), lo = 1 / (nn + 2);
    double out = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double t = y[i] > 0 ? hi : lo;
        const double p = 1.0 / (1.0 + std::exp(a * f[i] + b));
        out -= t * std::log(std::max(p, 1e-300)) + (1 - t) * std::log(std::max(1 - p, 1e-300));
    }
    return out;
}

inline std::pair<double, double> platt_grid_search(const std::vector<double>& f, const std::vector<int>& y) {
    double ca = 0.0, cb = 0.0, span = 8.0;
    for (int level = 0; level < 6; ++level) {
        double best = std::numeric_limits<double>::infinity(), ba = ca, bb = cb;
        for (int i = -20; i <= 20; ++i)
            for (int j = -20; j <= 20; ++j) {
                const double a = ca + span * i / 20.0, b = cb + span * j / 20.0;
                const double v = platt_nll(f, y, a, b);
                if (v < best) {
                    best = v;
                    ba = a;
                    bb = b;
                }
            }
        ca = ba;
        cb = bb;
        span /= 8.0;
    }
    return {ca, cb};
}

}  // namespace oracle
