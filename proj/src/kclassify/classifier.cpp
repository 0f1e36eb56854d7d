#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "hsi/kclassify.hpp"
#include "hsi/parallel.hpp"
#include "hsi/rng.hpp"
#include "hsi/simd.hpp"

namespace hsi::svm {
namespace {

std::vector<int> sorted_classes(std::span<const int> labels) {
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    return classes;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& k, const std::vector<std::size_t>& rows,
                          const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                k(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    return out;
}

// Two classes share one task whose positive side is the first class.
std::size_t task_count(std::size_t classes) { return classes == 2 ? 1 : classes; }

// Index into `classes` of the winning class for one row of decision values.
std::size_t argmax_row(const Eigen::MatrixXd& m, Eigen::Index r) {
    if (m.cols() == 1) return m(r, 0) >= 0.0 ? 0 : 1;
    std::size_t best = 0;
    for (Eigen::Index t = 1; t < m.cols(); ++t)
        if (m(r, t) > m(r, static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(t);
    return best;
}

void check_training(const Matrix& features, std::span<const int> labels) {
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw Error("training features/labels count mismatch");
    if (labels.empty()) throw Error("empty training set");
    if (!features.allFinite()) throw Error("non-finite training features");
    for (int l : labels)
        if (l < 1) throw Error("training labels must be >= 1");
}

// Refit every one-vs-rest task on all samples; Platt on the given
// out-of-fold decisions.
TrainedClassifier finalize(const Matrix& features, std::span<const int> labels, const std::vector<int>& classes,
                           const Eigen::MatrixXd& kernel, double gamma, double penalty,
                           const Eigen::MatrixXd& oof, double cv_accuracy, const SmoParams& params) {
    const std::size_t n = labels.size();
    const std::size_t tcount = task_count(classes.size());
    Eigen::MatrixXd coefficients = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(tcount));
    std::vector<double> biases(tcount);
    std::vector<PlattModel> platts(tcount);
    std::vector<int> y(n);
    for (std::size_t t = 0; t < tcount; ++t) {
        for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == classes[t] ? 1 : -1;
        const auto sol = smo_solve(kernel, y, penalty, params);
        for (std::size_t i = 0; i < n; ++i)
            coefficients(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = sol.alpha[i] * y[i];
        biases[t] = sol.bias;
        const Eigen::VectorXd column = oof.col(static_cast<Eigen::Index>(t));
        platts[t] = platt_calibrate({column.data(), n}, y);
    }

    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < n; ++i)
        if ((coefficients.row(static_cast<Eigen::Index>(i)).array() != 0.0).any()) keep.push_back(static_cast<Eigen::Index>(i));

    TrainedClassifier model;
    model.classes = classes;
    model.gamma = gamma;
    model.penalty = penalty;
    model.cv_accuracy = cv_accuracy;
    model.support.resize(static_cast<Eigen::Index>(keep.size()), features.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) model.support.row(static_cast<Eigen::Index>(r)) = features.row(keep[r]);
    model.tasks.resize(tcount);
    for (std::size_t t = 0; t < tcount; ++t) {
        auto& task = model.tasks[t];
        task.coefficients.resize(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t r = 0; r < keep.size(); ++r)
            task.coefficients(static_cast<Eigen::Index>(r)) = coefficients(keep[r], static_cast<Eigen::Index>(t));
        task.bias = biases[t];
        task.platt = platts[t];
    }
    return model;
}

void require_folds_feasible(std::span<const int> labels, const std::vector<int>& classes, int folds) {
    if (classes.size() < 2) throw Error("training needs at least two classes");
    for (int c : classes) {
        const auto count = std::count(labels.begin(), labels.end(), c);
        if (count < folds)
            throw Error("class " + std::to_string(c) + " has " + std::to_string(count) + " training samples, fewer than " +
                        std::to_string(folds) + " folds");
    }
}

}  // namespace

TrainGrid TrainGrid::standard() {
    TrainGrid grid;
    for (int e = -5; e <= 5; ++e) grid.kernel_widths.push_back(std::ldexp(1.0, e));
    for (int e = -2; e <= 4; ++e) grid.penalties.push_back(std::pow(10.0, e));
    return grid;
}

void TrainGrid::validate() const {
    if (kernel_widths.empty() || penalties.empty()) throw Error("classifier grid must be nonempty");
    if (folds < 2) throw Error("folds must be >= 2");
    for (double g : kernel_widths)
        if (!(g > 0.0) || !std::isfinite(g)) throw Error("kernel widths must be finite and > 0");
    for (double c : penalties)
        if (!(c > 0.0) || !std::isfinite(c)) throw Error("penalties must be finite and > 0");
}

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw Error("folds must be >= 2");
    std::vector<int> out(labels.size(), 0);
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    for (auto& [label, idx] : members) {
        Rng rng(mix_seed(seed, idx.front()));
        rng.shuffle(idx);
        for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
    }
    return out;
}

CrossValidation cross_validate(const Eigen::MatrixXd& kernel, std::span<const int> labels,
                               std::span<const int> classes, std::span<const int> folds, double penalty,
                               const SmoParams& params) {
    const std::size_t n = labels.size();
    if (folds.size() != n || static_cast<std::size_t>(kernel.rows()) != n)
        throw Error("cross-validation: inconsistent sizes");
    const int fold_count = folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;

    CrossValidation cv;
    const std::size_t tcount = task_count(classes.size());
    cv.decisions = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(tcount));
    double accuracy_sum = 0.0;
    int used = 0;
    std::vector<int> y;
    for (int f = 0; f < fold_count; ++f) {
        std::vector<std::size_t> train_idx, val_idx;
        for (std::size_t i = 0; i < n; ++i) (folds[i] == f ? val_idx : train_idx).push_back(i);
        if (val_idx.empty()) continue;
        const Eigen::MatrixXd k_train = submatrix(kernel, train_idx, train_idx);
        const Eigen::MatrixXd k_val = submatrix(kernel, val_idx, train_idx);
        Eigen::MatrixXd dec(static_cast<Eigen::Index>(val_idx.size()), static_cast<Eigen::Index>(tcount));
        y.resize(train_idx.size());
        for (std::size_t t = 0; t < tcount; ++t) {
            for (std::size_t i = 0; i < train_idx.size(); ++i) y[i] = labels[train_idx[i]] == classes[t] ? 1 : -1;
            const auto sol = smo_solve(k_train, y, penalty, params);
            Eigen::VectorXd coef(static_cast<Eigen::Index>(train_idx.size()));
            for (std::size_t i = 0; i < train_idx.size(); ++i) coef(static_cast<Eigen::Index>(i)) = sol.alpha[i] * y[i];
            dec.col(static_cast<Eigen::Index>(t)) = (k_val * coef).array() + sol.bias;
        }
        std::size_t correct = 0;
        for (std::size_t v = 0; v < val_idx.size(); ++v) {
            const auto r = static_cast<Eigen::Index>(v);
            if (classes[argmax_row(dec, r)] == labels[val_idx[v]]) ++correct;
            cv.decisions.row(static_cast<Eigen::Index>(val_idx[v])) = dec.row(r);
        }
        accuracy_sum += static_cast<double>(correct) / static_cast<double>(val_idx.size());
        ++used;
    }
    cv.accuracy = used > 0 ? accuracy_sum / used : 0.0;
    return cv;
}

TrainedClassifier fit_fixed(const Matrix& features, std::span<const int> labels, double gamma, double penalty,
                            std::span<const int> folds, const SmoParams& params) {
    check_training(features, labels);
    const auto classes = sorted_classes(labels);
    if (classes.size() < 2) throw Error("training needs at least two classes");
    if (!(gamma > 0.0) || !(penalty > 0.0)) throw Error("kernel width and penalty must be > 0");
    const Eigen::MatrixXd kernel = kernel_matrix(features, gamma);
    const auto cv = cross_validate(kernel, labels, classes, folds, penalty, params);
    return finalize(features, labels, classes, kernel, gamma, penalty, cv.decisions, cv.accuracy, params);
}

TrainedClassifier train(const Matrix& features, std::span<const int> labels, const TrainGrid& grid,
                        std::uint64_t seed, unsigned threads, const SmoParams& params) {
    grid.validate();
    check_training(features, labels);
    const auto classes = sorted_classes(labels);
    require_folds_feasible(labels, classes, grid.folds);
    const auto folds = stratified_folds(labels, grid.folds, seed);

    std::vector<double> gammas = grid.kernel_widths;
    std::vector<double> penalties = grid.penalties;
    std::sort(gammas.begin(), gammas.end());
    std::sort(penalties.begin(), penalties.end());

    // cells[g][c]
    std::vector<std::vector<CrossValidation>> cells(gammas.size(), std::vector<CrossValidation>(penalties.size()));
    for (std::size_t g = 0; g < gammas.size(); ++g) {
        const Eigen::MatrixXd kernel = kernel_matrix(features, gammas[g]);
        parallel_for(penalties.size(), threads, [&](std::size_t c) {
            cells[g][c] = cross_validate(kernel, labels, classes, folds, penalties[c], params);
        });
    }

    std::size_t best_g = 0, best_c = 0;
    double best = -1.0;
    for (std::size_t c = 0; c < penalties.size(); ++c)
        for (std::size_t g = 0; g < gammas.size(); ++g)
            if (cells[g][c].accuracy > best) {
                best = cells[g][c].accuracy;
                best_g = g;
                best_c = c;
            }

    const Eigen::MatrixXd kernel = kernel_matrix(features, gammas[best_g]);
    return finalize(features, labels, classes, kernel, gammas[best_g], penalties[best_c], cells[best_g][best_c].decisions,
                    best, params);
}

Eigen::MatrixXd decision_values(const TrainedClassifier& model, const Matrix& features, unsigned threads) {
    if (static_cast<std::size_t>(features.cols()) != model.dims())
        throw Error("feature dimension " + std::to_string(features.cols()) + " does not match the model's " +
                    std::to_string(model.dims()));
    if (!features.allFinite()) throw Error("non-finite features");
    const Eigen::Index s = model.support.rows();
    const auto tcount = static_cast<Eigen::Index>(model.tasks.size());
    Eigen::MatrixXd coef(s, tcount);
    Eigen::RowVectorXd bias(tcount);
    for (Eigen::Index t = 0; t < tcount; ++t) {
        coef.col(t) = model.tasks[static_cast<std::size_t>(t)].coefficients;
        bias(t) = model.tasks[static_cast<std::size_t>(t)].bias;
    }
    const auto d = model.dims();
    Eigen::MatrixXd out(features.rows(), tcount);
    parallel_for(static_cast<std::size_t>(features.rows()), threads, [&](std::size_t p) {
        const auto r = static_cast<Eigen::Index>(p);
        Eigen::RowVectorXd k(s);
        const std::span<const double> x{features.row(r).data(), d};
        for (Eigen::Index i = 0; i < s; ++i) k(i) = gaussian_kernel(x, {model.support.row(i).data(), d}, model.gamma);
        out.row(r) = k * coef + bias;
    });
    return out;
}

Matrix predict_proba(const TrainedClassifier& model, const Matrix& features, unsigned threads) {
    const Eigen::MatrixXd dec = decision_values(model, features, threads);
    if (model.tasks.size() == 1) {
        Matrix out(dec.rows(), 2);
        for (Eigen::Index p = 0; p < dec.rows(); ++p) {
            out(p, 0) = model.tasks[0].platt.probability(dec(p, 0));
            out(p, 1) = 1.0 - out(p, 0);
        }
        return out;
    }
    Matrix out(dec.rows(), dec.cols());
    const auto tcount = dec.cols();
    for (Eigen::Index p = 0; p < dec.rows(); ++p) {
        double sum = 0.0;
        bool any = false;
        for (Eigen::Index t = 0; t < tcount; ++t) {
            const double v = model.tasks[static_cast<std::size_t>(t)].platt.probability(dec(p, t));
            out(p, t) = v;
            sum += v;
            any = any || v >= 1e-12;
        }
        if (!any) out.row(p).setConstant(1.0 / static_cast<double>(tcount));
        else out.row(p) /= sum;
    }
    return out;
}

TrainingSet collect_training(const HsiCube& features, const LabelMap& mask) {
    if (features.height() != mask.height() || features.width() != mask.width())
        throw Error("training mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                    " does not match the feature cube " + std::to_string(features.height()) + "x" +
                    std::to_string(features.width()));
    const Matrix spectra = features.spectra();
    TrainingSet set;
    std::vector<Eigen::Index> rows;
    for (std::size_t p = 0; p < mask.pixels(); ++p)
        if (mask[p] > 0) {
            rows.push_back(static_cast<Eigen::Index>(p));
            set.labels.push_back(mask[p]);
        }
    set.features.resize(static_cast<Eigen::Index>(rows.size()), spectra.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) set.features.row(static_cast<Eigen::Index>(i)) = spectra.row(rows[i]);
    return set;
}

void save_model(const TrainedClassifier& model, const std::filesystem::path& header) {
    {
        std::ofstream out(header);
        if (!out) throw Error(header.string() + ": cannot open for writing");
        out.precision(17);
        out << "classes=";
        for (std::size_t t = 0; t < model.classes.size(); ++t) out << (t ? "," : "") << model.classes[t];
        out << "\ngamma=" << model.gamma << "\npenalty=" << model.penalty << "\ncv_accuracy=" << model.cv_accuracy
            << "\nsupport=" << model.support.rows() << "\ndims=" << model.support.cols() << "\n";
        for (std::size_t t = 0; t < model.tasks.size(); ++t)
            out << "task" << t << "=" << model.tasks[t].bias << "," << model.tasks[t].platt.a << ","
                << model.tasks[t].platt.b << "\n";
        out << "dtype=float64\nbyteorder=little\n";
    }
    static_assert(std::endian::native == std::endian::little, "model blobs are written little-endian");
    std::vector<double> blob(model.support.data(), model.support.data() + model.support.size());
    for (const auto& task : model.tasks) blob.insert(blob.end(), task.coefficients.data(), task.coefficients.data() + task.coefficients.size());
    const auto raw = raw_path_for(header);
    std::ofstream out(raw, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(raw.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(double)));
    if (!out) throw Error(raw.string() + ": write failed");
}

TrainedClassifier load_model(const std::filesystem::path& header) {
    std::ifstream in(header);
    if (!in) throw Error(header.string() + ": cannot open classifier model");
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

    TrainedClassifier model;
    {
        std::stringstream ss(need("classes"));
        std::string item;
        while (std::getline(ss, item, ',')) model.classes.push_back(std::stoi(item));
    }
    model.gamma = std::stod(need("gamma"));
    model.penalty = std::stod(need("penalty"));
    model.cv_accuracy = std::stod(need("cv_accuracy"));
    const auto s = static_cast<Eigen::Index>(std::stoll(need("support")));
    const auto d = static_cast<Eigen::Index>(std::stoll(need("dims")));
    if (model.classes.size() < 2 || s < 0 || d < 1) throw Error(header.string() + ": inconsistent model");
    model.tasks.resize(task_count(model.classes.size()));
    for (std::size_t t = 0; t < model.tasks.size(); ++t) {
        std::stringstream ss(need("task" + std::to_string(t)));
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        model.tasks[t].bias = std::stod(a);
        model.tasks[t].platt.a = std::stod(b);
        model.tasks[t].platt.b = std::stod(c);
        model.tasks[t].platt.converged = true;
    }

    const auto raw = raw_path_for(header);
    std::ifstream blob_in(raw, std::ios::binary | std::ios::ate);
    if (!blob_in) throw Error(raw.string() + ": cannot open model blob");
    const auto expected = static_cast<std::size_t>(s * d + s * static_cast<Eigen::Index>(model.tasks.size()));
    if (static_cast<std::size_t>(blob_in.tellg()) != expected * sizeof(double)) throw Error(raw.string() + ": size mismatch");
    blob_in.seekg(0);
    std::vector<double> blob(expected);
    blob_in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(expected * sizeof(double)));
    model.support = Eigen::Map<const Matrix>(blob.data(), s, d);
    std::size_t pos = static_cast<std::size_t>(s * d);
    for (auto& task : model.tasks) {
        task.coefficients = Eigen::Map<const Eigen::VectorXd>(blob.data() + pos, s);
        pos += static_cast<std::size_t>(s);
    }
    return model;
}

}  // namespace hsi::svm
