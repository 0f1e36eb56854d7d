#include <algorithm>
#include <limits>
#include <string>

#include "hsi/core.hpp"
#include "hsi/rng.hpp"

namespace hsi {

void SyntheticSpec::validate() const {
    if (height == 0 || width == 0 || bands == 0) throw Error("synthetic scene dimensions must be >= 1");
    if (num_classes < 1) throw Error("synthetic scene needs at least one class");
    if (!(noise_sigma >= 0.0)) throw Error("noise_sigma must be >= 0");
    if (cells < static_cast<std::size_t>(num_classes))
        throw Error("Voronoi cell count " + std::to_string(cells) + " is smaller than class count " +
                    std::to_string(num_classes));
    if (cells > height * width) throw Error("more Voronoi cells than pixels");
}

SyntheticScene generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const auto classes = static_cast<std::size_t>(spec.num_classes);

    Matrix signatures(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(spec.bands));
    for (Eigen::Index t = 0; t < signatures.rows(); ++t)
        for (Eigen::Index b = 0; b < signatures.cols(); ++b) signatures(t, b) = rng.uniform();

    // The first num_classes cells get one class each so every class is present;
    // the rest are assigned at random.
    struct Site {
        double row, col;
        int label;
    };
    std::vector<Site> sites(spec.cells);
    for (std::size_t c = 0; c < spec.cells; ++c) {
        sites[c].row = rng.uniform() * static_cast<double>(spec.height);
        sites[c].col = rng.uniform() * static_cast<double>(spec.width);
        sites[c].label = c < classes ? static_cast<int>(c) + 1 : static_cast<int>(rng.below(classes)) + 1;
    }

    LabelMap labels(spec.height, spec.width, spec.num_classes);
    for (std::size_t r = 0; r < spec.height; ++r) {
        for (std::size_t c = 0; c < spec.width; ++c) {
            const double y = static_cast<double>(r) + 0.5;
            const double x = static_cast<double>(c) + 0.5;
            double best = std::numeric_limits<double>::infinity();
            int label = 0;
            for (const auto& site : sites) {
                const double d = (site.row - y) * (site.row - y) + (site.col - x) * (site.col - x);
                if (d < best) {
                    best = d;
                    label = site.label;
                }
            }
            labels[r * spec.width + c] = label;
        }
    }

    HsiCube cube(spec.height, spec.width, spec.bands);
    for (std::size_t b = 0; b < spec.bands; ++b) {
        auto plane = cube.band(b);
        for (std::size_t p = 0; p < cube.pixels(); ++p) {
            const double clean = signatures(labels[p] - 1, static_cast<Eigen::Index>(b));
            const double noise = spec.noise_sigma > 0.0 ? spec.noise_sigma * rng.normal() : 0.0;
            plane[p] = static_cast<float>(clean + noise);
        }
    }
    return {std::move(cube), std::move(labels), std::move(signatures)};
}

TrainTestSplit sample_training(const LabelMap& labels, std::size_t per_class, std::uint64_t seed) {
    if (per_class == 0) throw Error("per_class must be >= 1");
    Rng rng(seed);
    LabelMap train(labels.height(), labels.width(), labels.num_classes());
    LabelMap test = labels;
    for (int cls = 1; cls <= labels.num_classes(); ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t p = 0; p < labels.pixels(); ++p)
            if (labels[p] == cls) members.push_back(p);
        if (members.size() < per_class)
            throw Error("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                        " labeled pixels, fewer than per_class=" + std::to_string(per_class));
        rng.shuffle(members);
        for (std::size_t i = 0; i < per_class; ++i) {
            train[members[i]] = cls;
            test[members[i]] = 0;
        }
    }
    return {std::move(train), std::move(test)};
}

}  // namespace hsi
