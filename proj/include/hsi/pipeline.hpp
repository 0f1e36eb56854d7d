#pragma once

// End-to-end classification flow:
//
//   normalize -> reduce(M) -> A: structural profile -> SVM -> C1
//                          -> B: SVM -> C2' -> ERW (guidance from the normalized cube) -> C2
//   fuse(mu) -> metrics on the test mask
//
// One run seed fans out to the stages as seed + ordinal (see Stage).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hsi/core.hpp"
#include "hsi/decision.hpp"
#include "hsi/erw.hpp"
#include "hsi/kclassify.hpp"
#include "hsi/kpca.hpp"
#include "hsi/spfilter.hpp"

namespace hsi::pipeline {

enum class Stage : std::uint64_t {
    split = 0,
    sp = 1,
    classify_a = 2,
    classify_b = 3,
    guidance = 4,
};

inline std::uint64_t stage_seed(std::uint64_t seed, Stage stage) { return seed + static_cast<std::uint64_t>(stage); }

struct PipelineConfig {
    std::filesystem::path input;       // cube header
    std::filesystem::path labels;      // full reference map; split into train/test when train is empty
    std::filesystem::path train;       // explicit training mask
    std::filesystem::path test;        // explicit test mask (default: labels minus train)
    std::size_t per_class = 20;
    std::filesystem::path output_dir;  // artifacts are written here when set

    std::size_t groups = 40;           // M
    std::size_t components = 20;       // K
    double mu = 0.5;
    sp::SmoothParams smooth;           // lambda lives here
    std::size_t kpca_anchors = 2000;
    std::optional<double> kpca_width;  // nullopt: median heuristic
    svm::TrainGrid grid = svm::TrainGrid::standard();
    svm::SmoParams smo;
    erw::ErwParams erw;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void validate() const;
    kpca::KpcaParams kpca() const;
    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// Recognized configuration keys, in serialization order.
const std::vector<std::string>& config_keys();

// Throws hsi::Error naming the key on unknown keys or malformed values.
void set_option(PipelineConfig& config, const std::string& key, const std::string& value);
std::string get_option(const PipelineConfig& config, const std::string& key);

// `key = value` lines, '#' starts a comment.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
std::string serialize_config(const PipelineConfig& config);

struct PipelineInputs {
    HsiCube cube;
    LabelMap train;
    LabelMap test;
};

PipelineInputs load_inputs(const PipelineConfig& config);

struct BranchSummary {
    double gamma = 0.0;
    double penalty = 0.0;
    double cv_accuracy = 0.0;
    decision::Metrics metrics;        // argmax of this branch alone on the test mask
};

struct PipelineResult {
    LabelMap fused;
    decision::Metrics metrics;
    BranchSummary branch_a;
    BranchSummary branch_b;
    HsiCube reduced;
    HsiCube sp_features;
    HsiCube guidance;
    ProbStack c1;
    ProbStack c2_prior;               // branch-B SVM probabilities before ERW
    ProbStack c2;
    std::string report;
};

struct RunOptions {
    // Write every intermediate artifact to config.output_dir and continue
    // from the reloaded copy.
    bool reload_artifacts = false;
};

PipelineResult run_pipeline(const PipelineConfig& config, const PipelineInputs& inputs, const RunOptions& options = {});
PipelineResult run_pipeline(const PipelineConfig& config);

struct SweepRow {
    std::string value;
    decision::Metrics metrics;
};

// Reruns the pipeline for each value of one numeric configuration key.
std::vector<SweepRow> sweep(const PipelineConfig& config, const PipelineInputs& inputs, const std::string& axis,
                            const std::vector<std::string>& values);
std::string format_sweep(const std::string& axis, const std::vector<SweepRow>& rows);

// Fixed 20-color palette; class 0 is black, class t uses entry (t-1) mod 20.
struct Rgb {
    unsigned char r, g, b;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};
const std::vector<Rgb>& palette();
Rgb class_color(int label);

// Binary P6 image at `path` plus the text label map next to it
// (same stem, ".txt").
void export_map(const LabelMap& labels, const std::filesystem::path& path);
std::filesystem::path label_path_for(const std::filesystem::path& image);

}  // namespace hsi::pipeline
