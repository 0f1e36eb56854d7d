#include "hsi/kpca.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include <lapacke.h>

#include "hsi/parallel.hpp"
#include "hsi/rng.hpp"
#include "hsi/simd.hpp"

// Present when LAPACK resolves to OpenBLAS. Pinned to one thread so that
// blocked reductions inside the eigensolver always run in the same order.
extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace hsi::kpca {
namespace {

std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
    return {m.row(r).data(), static_cast<std::size_t>(m.cols())};
}

void pin_blas_threads() {
    static const bool pinned = [] {
        if (openblas_set_num_threads != nullptr) openblas_set_num_threads(1);
        return true;
    }();
    (void)pinned;
}

Eigen::MatrixXd kernel_matrix(KernelKind kernel, double width, const Matrix& anchors) {
    const Eigen::Index n = anchors.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = kernel_value(kernel, width, row_span(anchors, i), row_span(anchors, i));
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = kernel_value(kernel, width, row_span(anchors, i), row_span(anchors, j));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

// Fills the centering statistics of `model` from its anchors and kernel.
Eigen::MatrixXd centered_kernel(KpcaModel& model) {
    Eigen::MatrixXd k = kernel_matrix(model.kernel, model.kernel_width, model.anchors);
    const Eigen::Index n = k.rows();
    model.row_means = k.rowwise().mean();
    model.total_mean = model.row_means.mean();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) k(i, j) += model.total_mean - model.row_means(i) - model.row_means(j);
    return k;
}

// Top-`count` eigenpairs of a symmetric matrix, descending.
void top_eigenpairs(Eigen::MatrixXd a, std::size_t count, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    pin_blas_threads();
    const auto n = static_cast<lapack_int>(a.rows());
    const auto k = static_cast<lapack_int>(count);
    Eigen::VectorXd w(n);
    Eigen::MatrixXd z(n, k);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(k));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, n - k + 1, n,
                                           0.0, &found, w.data(), z.data(), n, support.data());
    if (info != 0 || found != k)
        throw Error("symmetric eigensolver failed (info=" + std::to_string(info) + ", found " +
                    std::to_string(found) + " of " + std::to_string(k) + " eigenpairs)");
    values.resize(k);
    vectors.resize(n, k);
    for (lapack_int c = 0; c < k; ++c) {
        values(c) = w(k - 1 - c);
        vectors.col(c) = z.col(k - 1 - c);
    }
}

}  // namespace

void KpcaParams::validate() const {
    if (components < 1) throw Error("KPCA needs at least one component");
    if (max_anchors < 1) throw Error("KPCA needs max_anchors >= 1");
    if (kernel_width && !(*kernel_width > 0.0)) throw Error("KPCA kernel width must be > 0");
}

std::vector<std::size_t> choose_anchors(std::size_t count, std::size_t limit, std::uint64_t seed) {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    if (count <= limit) return idx;
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(limit);
    std::sort(idx.begin(), idx.end());
    return idx;
}

double median_pairwise_distance(const Matrix& samples) {
    const Eigen::Index n = samples.rows();
    if (n < 2) return 0.0;
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = simd::squared_distance(row_span(samples, i), row_span(samples, j));
            if (v > 0.0) d2.push_back(v);
        }
    if (d2.empty()) return 0.0;
    // Lower median for even counts keeps this an order statistic of the data.
    const auto mid = d2.begin() + static_cast<std::ptrdiff_t>((d2.size() - 1) / 2);
    std::nth_element(d2.begin(), mid, d2.end());
    return std::sqrt(*mid);
}

double kernel_value(KernelKind kernel, double width, std::span<const double> a, std::span<const double> b) {
    if (kernel == KernelKind::linear) return simd::dot(a, b);
    return std::exp(-simd::squared_distance(a, b) / (2.0 * width * width));
}

KpcaModel fit(const Matrix& samples, const KpcaParams& params, std::uint64_t seed) {
    params.validate();
    if (samples.rows() < 1 || samples.cols() < 1) throw Error("KPCA needs a non-empty sample matrix");

    KpcaModel model;
    model.kernel = params.kernel;
    const auto idx = choose_anchors(static_cast<std::size_t>(samples.rows()), params.max_anchors, seed);
    model.anchors.resize(static_cast<Eigen::Index>(idx.size()), samples.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        model.anchors.row(static_cast<Eigen::Index>(i)) = samples.row(static_cast<Eigen::Index>(idx[i]));

    const std::size_t n = idx.size();
    if (params.components > n)
        throw Error("KPCA asked for K=" + std::to_string(params.components) + " components from " +
                    std::to_string(n) + " anchors");

    if (params.kernel == KernelKind::gaussian) {
        model.kernel_width = params.kernel_width ? *params.kernel_width : median_pairwise_distance(model.anchors);
        if (!(model.kernel_width > 0.0))
            throw Error("KPCA median kernel width is zero (all anchors identical); pass an explicit width");
    }

    const Eigen::MatrixXd kc = centered_kernel(model);
    Eigen::MatrixXd vectors;
    top_eigenpairs(kc, params.components, model.eigenvalues, vectors);

    const double trace = std::max(kc.trace(), 0.0);
    const double negligible = 1e-12 * std::max(trace, 1e-300);
    model.alphas.resize(kc.rows(), vectors.cols());
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        auto v = vectors.col(c);
        const double scale = v.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (std::abs(v(i)) > 1e-8 * scale) {
                if (v(i) < 0.0) v = -v;
                break;
            }
        }
        double& lambda = model.eigenvalues(c);
        lambda = std::max(lambda, 0.0);
        if (lambda > negligible)
            model.alphas.col(c) = v / std::sqrt(lambda);
        else
            model.alphas.col(c).setZero();
    }
    model.scores = kc * model.alphas;
    return model;
}

Eigen::MatrixXd transform(const KpcaModel& model, const Matrix& pixels, unsigned threads) {
    if (pixels.rows() > 0 && static_cast<std::size_t>(pixels.cols()) != model.dims())
        throw Error("KPCA transform: pixel dimension " + std::to_string(pixels.cols()) + " does not match model " +
                    std::to_string(model.dims()));
    const Eigen::Index n = model.anchors.rows();
    Eigen::MatrixXd out(pixels.rows(), model.alphas.cols());
    parallel_for(static_cast<std::size_t>(pixels.rows()), threads, [&](std::size_t p) {
        const auto row = static_cast<Eigen::Index>(p);
        Eigen::VectorXd k(n);
        for (Eigen::Index i = 0; i < n; ++i)
            k(i) = kernel_value(model.kernel, model.kernel_width, row_span(pixels, row), row_span(model.anchors, i));
        const double mean = k.mean();
        k.array() += model.total_mean - mean - model.row_means.array();
        out.row(row) = k.transpose() * model.alphas;
    });
    return out;
}

void save_model(const KpcaModel& model, const std::filesystem::path& header) {
    {
        std::ofstream out(header);
        if (!out) throw Error(header.string() + ": cannot open for writing");
        out.precision(17);
        out << "kernel=" << (model.kernel == KernelKind::linear ? "linear" : "gaussian") << "\n"
            << "anchors=" << model.anchors.rows() << "\n"
            << "dims=" << model.anchors.cols() << "\n"
            << "components=" << model.alphas.cols() << "\n"
            << "kernel_width=" << model.kernel_width << "\n"
            << "dtype=float32\nbyteorder=little\n";
    }
    std::vector<float> blob;
    blob.reserve(static_cast<std::size_t>(model.anchors.size() + model.alphas.size() + model.eigenvalues.size()));
    for (Eigen::Index i = 0; i < model.anchors.rows(); ++i)
        for (Eigen::Index j = 0; j < model.anchors.cols(); ++j) blob.push_back(static_cast<float>(model.anchors(i, j)));
    for (Eigen::Index i = 0; i < model.alphas.rows(); ++i)
        for (Eigen::Index j = 0; j < model.alphas.cols(); ++j) blob.push_back(static_cast<float>(model.alphas(i, j)));
    for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) blob.push_back(static_cast<float>(model.eigenvalues(i)));

    static_assert(std::endian::native == std::endian::little, "model blobs are written little-endian");
    const auto raw = raw_path_for(header);
    std::ofstream out(raw, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(raw.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(float)));
    if (!out) throw Error(raw.string() + ": write failed");
}

KpcaModel load_model(const std::filesystem::path& header) {
    std::ifstream in(header);
    if (!in) throw Error(header.string() + ": cannot open KPCA model");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    const auto need = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw Error(header.string() + ": missing '" + key + "'");
        return it->second;
    };
    KpcaModel model;
    model.kernel = need("kernel") == "linear" ? KernelKind::linear : KernelKind::gaussian;
    const auto n = static_cast<Eigen::Index>(std::stoll(need("anchors")));
    const auto d = static_cast<Eigen::Index>(std::stoll(need("dims")));
    const auto k = static_cast<Eigen::Index>(std::stoll(need("components")));
    model.kernel_width = std::stod(need("kernel_width"));
    if (n < 1 || d < 1 || k < 1 || k > n) throw Error(header.string() + ": inconsistent model dimensions");

    const auto raw = raw_path_for(header);
    std::ifstream blob_in(raw, std::ios::binary | std::ios::ate);
    if (!blob_in) throw Error(raw.string() + ": cannot open model blob");
    const auto expected = static_cast<std::size_t>(n * d + n * k + k);
    if (static_cast<std::size_t>(blob_in.tellg()) != expected * sizeof(float))
        throw Error(raw.string() + ": size mismatch");
    blob_in.seekg(0);
    std::vector<float> blob(expected);
    blob_in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(expected * sizeof(float)));

    std::size_t pos = 0;
    model.anchors.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) model.anchors(i, j) = blob[pos++];
    model.alphas.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < k; ++j) model.alphas(i, j) = blob[pos++];
    model.eigenvalues.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) model.eigenvalues(i) = blob[pos++];

    const Eigen::MatrixXd kc = centered_kernel(model);
    model.scores = kc * model.alphas;
    return model;
}

}  // namespace hsi::kpca
