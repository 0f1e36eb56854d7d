#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>

#include "hsi/decision.hpp"

namespace hsi::decision {
namespace {

void check_same_shape(const ProbStack& a, const ProbStack& b) {
    if (a.height() != b.height() || a.width() != b.width() || a.num_classes() != b.num_classes())
        throw Error("probability stacks differ in shape: " + std::to_string(a.height()) + "x" +
                    std::to_string(a.width()) + "x" + std::to_string(a.num_classes()) + " vs " +
                    std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                    std::to_string(b.num_classes()));
}

}  // namespace

void FusionParams::validate() const {
    if (!(mu >= 0.0 && mu <= 1.0)) throw Error("fusion weight mu must be in [0,1]");
}

LabelMap fuse_labels(const ProbStack& c1, const ProbStack& c2, double mu) {
    FusionParams{mu}.validate();
    check_same_shape(c1, c2);
    LabelMap out(c1.height(), c1.width(), c1.num_classes());
    const int classes = c1.num_classes();
    for (std::size_t p = 0; p < c1.pixels(); ++p) {
        int best = 0;
        double best_value = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < classes; ++t) {
            const double v = mu * c1.at(p, t) + (1.0 - mu) * c2.at(p, t);
            if (v > best_value) {
                best_value = v;
                best = t;
            }
        }
        out[p] = best + 1;
    }
    return out;
}

LabelMap argmax_labels(const ProbStack& probs) {
    return fuse_labels(probs, probs, 1.0);
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

ConfusionMatrix confusion(const LabelMap& ref, const LabelMap& pred) {
    if (ref.height() != pred.height() || ref.width() != pred.width())
        throw Error("reference and prediction maps differ in size");
    const int classes = std::max(ref.num_classes(), pred.num_classes());
    ConfusionMatrix cm(classes);
    for (std::size_t p = 0; p < ref.pixels(); ++p) {
        if (ref[p] == 0) continue;
        if (pred[p] == 0)
            throw Error("prediction is unlabeled at labeled reference pixel (" + std::to_string(p / ref.width()) +
                        "," + std::to_string(p % ref.width()) + ")");
        ++cm(ref[p] - 1, pred[p] - 1);
    }
    return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (cm.classes == 0 || total == 0) throw Error("metrics of an empty confusion matrix");
    const double n = static_cast<double>(total);
    Metrics m;
    m.per_class.assign(static_cast<std::size_t>(cm.classes), std::numeric_limits<double>::quiet_NaN());
    std::uint64_t diagonal = 0;
    double chance = 0.0, aa_sum = 0.0;
    int present = 0;
    for (int t = 0; t < cm.classes; ++t) {
        std::uint64_t row = 0, col = 0;
        for (int u = 0; u < cm.classes; ++u) {
            row += cm(t, u);
            col += cm(u, t);
        }
        diagonal += cm(t, t);
        chance += static_cast<double>(row) * static_cast<double>(col);
        if (row > 0) {
            const double acc = static_cast<double>(cm(t, t)) / static_cast<double>(row);
            m.per_class[static_cast<std::size_t>(t)] = acc;
            aa_sum += acc;
            ++present;
        }
    }
    m.oa = static_cast<double>(diagonal) / n;
    m.aa = aa_sum / present;
    const double pe = chance / (n * n);
    if (pe >= 1.0) {
        m.kappa = 0.0;
        m.kappa_degenerate = true;
    } else {
        m.kappa = (m.oa - pe) / (1.0 - pe);
    }
    return m;
}

std::string format_report(const Metrics& m) {
    std::string out;
    char line[64];
    std::snprintf(line, sizeof line, "OA %.4f\n", m.oa);
    out += line;
    std::snprintf(line, sizeof line, "AA %.4f\n", m.aa);
    out += line;
    std::snprintf(line, sizeof line, "Kappa %.4f%s\n", m.kappa, m.kappa_degenerate ? " degenerate" : "");
    out += line;
    for (std::size_t t = 0; t < m.per_class.size(); ++t) {
        if (std::isnan(m.per_class[t]))
            std::snprintf(line, sizeof line, "class %zu n/a\n", t + 1);
        else
            std::snprintf(line, sizeof line, "class %zu %.4f\n", t + 1, m.per_class[t]);
        out += line;
    }
    return out;
}

Separability class_separability(const Matrix& features, std::span<const int> labels) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) throw Error("separability: row/label mismatch");
    std::map<int, std::vector<Eigen::Index>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<Eigen::Index>(i));
    if (members.size() < 2) throw Error("separability needs at least two classes");
    for (const auto& [label, rows] : members)
        if (rows.size() < 2) throw Error("separability needs two samples of class " + std::to_string(label));

    std::vector<Eigen::RowVectorXd> centroids;
    double within = 0.0;
    for (const auto& [label, rows] : members) {
        Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(features.cols());
        for (auto r : rows) c += features.row(r);
        c /= static_cast<double>(rows.size());
        double spread = 0.0;
        for (auto r : rows) spread += (features.row(r) - c).norm();
        within += spread / static_cast<double>(rows.size());
        centroids.push_back(std::move(c));
    }
    within /= static_cast<double>(members.size());

    double between = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < centroids.size(); ++a)
        for (std::size_t b = a + 1; b < centroids.size(); ++b) {
            between += (centroids[a] - centroids[b]).norm();
            ++pairs;
        }
    between /= static_cast<double>(pairs);

    Separability s;
    s.between = between;
    s.within = within;
    s.within_zero = within == 0.0;
    s.ratio = s.within_zero ? std::numeric_limits<double>::infinity() : between / within;
    return s;
}

}  // namespace hsi::decision
