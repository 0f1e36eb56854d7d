#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include "hsi/dimred.hpp"
#include "hsi/pipeline.hpp"

namespace hsi::pipeline {
namespace {

template <typename F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

// Writes artifacts under the output directory and, when asked, hands back
// the reloaded copy instead of the in-memory one.
class Artifacts {
public:
    Artifacts(const std::filesystem::path& dir, bool reload) : dir_(dir), reload_(reload) {
        if (reload_ && dir_.empty()) throw Error("reloading artifacts needs output_dir");
        if (!dir_.empty()) std::filesystem::create_directories(dir_);
    }

    bool enabled() const { return !dir_.empty(); }
    std::filesystem::path path(const std::string& name) const { return dir_ / name; }

    HsiCube cube(const HsiCube& value, const std::string& name) const {
        if (!enabled()) return value;
        write_cube(value, path(name + ".hdr"));
        return reload_ ? load_cube(path(name + ".hdr")) : value;
    }

    ProbStack probs(const ProbStack& value, const std::string& name) const {
        if (!enabled()) return value;
        write_cube(value.to_cube(), path(name + ".hdr"));
        return reload_ ? ProbStack::from_cube(load_cube(path(name + ".hdr"))) : value;
    }

    svm::TrainedClassifier model(const svm::TrainedClassifier& value, const std::string& name) const {
        if (!enabled()) return value;
        svm::save_model(value, path(name + ".hdr"));
        return reload_ ? svm::load_model(path(name + ".hdr")) : value;
    }

private:
    std::filesystem::path dir_;
    bool reload_;
};

int class_count(const LabelMap& train) {
    int top = 0;
    for (int l : train.labels()) top = std::max(top, l);
    for (int t = 1; t <= top; ++t)
        if (train.count(t) == 0) throw Error("class " + std::to_string(t) + " has no training pixels");
    if (top < 2) throw Error("training mask needs at least two classes");
    return top;
}

ProbStack classify(const HsiCube& features, const LabelMap& train, const PipelineConfig& config, Stage stage,
                   const Artifacts& artifacts, const std::string& name, BranchSummary& summary) {
    const auto set = svm::collect_training(features, train);
    auto model = svm::train(set.features, set.labels, config.grid, stage_seed(config.seed, stage), config.threads,
                            config.smo);
    model = artifacts.model(model, "model_" + name);
    summary.gamma = model.gamma;
    summary.penalty = model.penalty;
    summary.cv_accuracy = model.cv_accuracy;
    const Matrix probs = svm::predict_proba(model, features.spectra(), config.threads);
    return ProbStack::from_rows(features.height(), features.width(), probs);
}

std::string build_report(const PipelineResult& r) {
    std::string out = decision::format_report(r.metrics);
    char line[128];
    for (const auto* b : {&r.branch_a, &r.branch_b}) {
        std::snprintf(line, sizeof line, "branch_%c OA %.4f gamma %g C %g cv %.4f\n", b == &r.branch_a ? 'a' : 'b',
                      b->metrics.oa, b->gamma, b->penalty, b->cv_accuracy);
        out += line;
    }
    return out;
}

}  // namespace

PipelineInputs load_inputs(const PipelineConfig& config) {
    return in_stage("load", [&] {
        if (config.input.empty()) throw Error("no input cube (key 'input')");
        PipelineInputs in;
        in.cube = load_cube(config.input);
        if (!config.train.empty()) {
            in.train = load_labels(config.train);
            if (!config.test.empty()) {
                in.test = load_labels(config.test);
            } else if (!config.labels.empty()) {
                in.test = load_labels(config.labels);
                if (in.test.height() != in.train.height() || in.test.width() != in.train.width())
                    throw Error("labels and train masks differ in size");
                for (std::size_t p = 0; p < in.test.pixels(); ++p)
                    if (in.train[p] != 0) in.test[p] = 0;
            } else {
                throw Error("a training mask needs 'test' or 'labels' for evaluation");
            }
        } else {
            if (config.labels.empty()) throw Error("no labels: set 'labels' or 'train'");
            auto split = sample_training(load_labels(config.labels), config.per_class,
                                         stage_seed(config.seed, Stage::split));
            in.train = std::move(split.train);
            in.test = std::move(split.test);
        }
        return in;
    });
}

PipelineResult run_pipeline(const PipelineConfig& config, const PipelineInputs& inputs, const RunOptions& options) {
    in_stage("config", [&] {
        config.validate();
        const auto& c = inputs.cube;
        for (const LabelMap* m : {&inputs.train, &inputs.test})
            if (m->height() != c.height() || m->width() != c.width())
                throw Error("label mask " + std::to_string(m->height()) + "x" + std::to_string(m->width()) +
                            " does not match the cube " + std::to_string(c.height()) + "x" +
                            std::to_string(c.width()));
    });
    const Artifacts artifacts(config.output_dir, options.reload_artifacts);
    const unsigned threads = config.threads;
    PipelineResult r;

    const int classes = in_stage("classify", [&] { return class_count(inputs.train); });
    const HsiCube normalized = in_stage("normalize", [&] {
        inputs.cube.require_finite();
        return normalize_bands(inputs.cube);
    });
    r.reduced = in_stage("reduce", [&] {
        return artifacts.cube(dimred::reduce_bands(normalized, config.groups), "reduced");
    });

    // Branch A: structural profile -> SVM.
    r.sp_features = in_stage("sp", [&] {
        auto sp = sp::extract_sp_full(r.reduced, config.smooth, config.kpca(), stage_seed(config.seed, Stage::sp),
                                      threads);
        if (artifacts.enabled()) kpca::save_model(sp.model, artifacts.path("kpca.hdr"));
        return artifacts.cube(sp.features, "sp");
    });
    r.c1 = in_stage("classify-a", [&] {
        return artifacts.probs(classify(r.sp_features, inputs.train, config, Stage::classify_a, artifacts, "a", r.branch_a),
                               "c1");
    });

    // Branch B: SVM on the reduced cube -> ERW.
    r.c2_prior = in_stage("classify-b", [&] {
        return artifacts.probs(classify(r.reduced, inputs.train, config, Stage::classify_b, artifacts, "b", r.branch_b),
                               "c2_prior");
    });
    r.guidance = in_stage("guidance", [&] {
        return artifacts.cube(erw::guidance_image(normalized, config.kpca(), stage_seed(config.seed, Stage::guidance),
                                                  threads),
                              "guidance");
    });
    const auto laplacian = in_stage("laplacian", [&] { return erw::build_laplacian(r.guidance, config.erw.beta); });
    r.c2 = in_stage("erw", [&] {
        return artifacts.probs(erw::erw_optimize(laplacian, r.c2_prior, config.erw, threads).c2, "c2");
    });

    r.fused = in_stage("fuse", [&] { return decision::fuse_labels(r.c1, r.c2, config.mu); });
    in_stage("metrics", [&] {
        if (r.fused.num_classes() != classes) throw Error("fused map has an unexpected class count");
        r.metrics = decision::metrics(decision::confusion(inputs.test, r.fused));
        r.branch_a.metrics = decision::metrics(decision::confusion(inputs.test, decision::argmax_labels(r.c1)));
        r.branch_b.metrics = decision::metrics(decision::confusion(inputs.test, decision::argmax_labels(r.c2)));
    });
    r.report = build_report(r);

    if (artifacts.enabled()) {
        in_stage("export", [&] {
            export_map(r.fused, artifacts.path("fused.ppm"));  // also writes fused.txt
            std::ofstream report(artifacts.path("report.txt"));
            report << r.report;
            std::ofstream cfg(artifacts.path("config.txt"));
            cfg << serialize_config(config);
            if (!report || !cfg) throw Error("cannot write report/config to " + config.output_dir.string());
        });
    }
    return r;
}

PipelineResult run_pipeline(const PipelineConfig& config) { return run_pipeline(config, load_inputs(config)); }

std::vector<SweepRow> sweep(const PipelineConfig& config, const PipelineInputs& inputs, const std::string& axis,
                            const std::vector<std::string>& values) {
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), axis) == keys.end()) throw StageError("sweep", "unknown axis '" + axis + "'");
    if (values.empty()) throw StageError("sweep", "no values for axis '" + axis + "'");
    std::vector<SweepRow> rows;
    for (const auto& value : values) {
        PipelineConfig run = config;
        in_stage("sweep", [&] {
            set_option(run, axis, value);
            run.validate();
        });
        if (!run.output_dir.empty()) run.output_dir /= axis + "=" + value;
        rows.push_back({value, run_pipeline(run, inputs).metrics});
    }
    return rows;
}

std::string format_sweep(const std::string& axis, const std::vector<SweepRow>& rows) {
    std::string out = axis + ",OA,AA,Kappa\n";
    char line[160];
    for (const auto& row : rows) {
        std::snprintf(line, sizeof line, ",%.4f,%.4f,%.4f\n", row.metrics.oa, row.metrics.aa, row.metrics.kappa);
        out += row.value + line;
    }
    return out;
}

}  // namespace hsi::pipeline
