#include <cmath>

#include "hsi/kclassify.hpp"

namespace hsi::svm {
namespace {

// -log likelihood term for one sample, written to avoid overflow.
double sample_loss(double f_apb, double target) {
    if (f_apb >= 0.0) return target * f_apb + std::log1p(std::exp(-f_apb));
    return (target - 1.0) * f_apb + std::log1p(std::exp(f_apb));
}

}  // namespace

double PlattModel::probability(double decision) const {
    const double f_apb = decision * a + b;
    if (f_apb >= 0.0) {
        const double e = std::exp(-f_apb);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(f_apb));
}

PlattModel platt_calibrate(std::span<const double> decisions, std::span<const int> labels) {
    if (decisions.size() != labels.size()) throw Error("Platt: decision/label count mismatch");
    double positives = 0.0, negatives = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!std::isfinite(decisions[i])) throw Error("Platt: non-finite decision value");
        if (labels[i] == 1) positives += 1.0;
        else if (labels[i] == -1) negatives += 1.0;
        else throw Error("Platt: labels must be +1 or -1");
    }
    if (positives == 0.0 || negatives == 0.0) throw Error("Platt: both classes must be present");

    constexpr int kMaxIters = 100;
    constexpr double kMinStep = 1e-10;
    constexpr double kSigma = 1e-12;
    constexpr double kEps = 1e-5;

    const double hi = (positives + 1.0) / (positives + 2.0);
    const double lo = 1.0 / (negatives + 2.0);
    std::vector<double> target(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) target[i] = labels[i] == 1 ? hi : lo;

    const auto loss = [&](double a, double b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < target.size(); ++i) sum += sample_loss(decisions[i] * a + b, target[i]);
        return sum;
    };

    PlattModel model;
    model.a = 0.0;
    model.b = std::log((negatives + 1.0) / (positives + 1.0));
    double value = loss(model.a, model.b);

    for (int iter = 0; iter < kMaxIters; ++iter) {
        double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < target.size(); ++i) {
            const double f = decisions[i];
            const double f_apb = f * model.a + model.b;
            double p, q;
            if (f_apb >= 0.0) {
                const double e = std::exp(-f_apb);
                p = e / (1.0 + e);
                q = 1.0 / (1.0 + e);
            } else {
                const double e = std::exp(f_apb);
                p = 1.0 / (1.0 + e);
                q = e / (1.0 + e);
            }
            const double d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            const double d1 = target[i] - p;
            g1 += f * d1;
            g2 += d1;
        }
        model.iterations = static_cast<std::size_t>(iter);
        if (std::abs(g1) < kEps && std::abs(g2) < kEps) {
            model.converged = true;
            return model;
        }

        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double slope = g1 * da + g2 * db;

        double step = 1.0;
        while (step >= kMinStep) {
            const double na = model.a + step * da;
            const double nb = model.b + step * db;
            const double nv = loss(na, nb);
            if (nv < value + 1e-4 * step * slope) {
                model.a = na;
                model.b = nb;
                value = nv;
                break;
            }
            step /= 2.0;
        }
        if (step < kMinStep) return model;  // line search failed; last iterate
    }
    model.iterations = kMaxIters;
    return model;
}

}  // namespace hsi::svm
