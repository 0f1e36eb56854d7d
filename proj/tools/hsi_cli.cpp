// Command-line front end. Every subcommand reads its parameters from the
// shared configuration (file, then --set key=value, then dedicated flags).

#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hsi/core.hpp"
#include "hsi/decision.hpp"
#include "hsi/dimred.hpp"
#include "hsi/erw.hpp"
#include "hsi/kclassify.hpp"
#include "hsi/pipeline.hpp"
#include "hsi/simd.hpp"
#include "hsi/spfilter.hpp"

namespace {

using hsi::pipeline::PipelineConfig;

struct Globals {
    std::string config;
    std::vector<std::string> sets;
    std::string simd = "auto";
    struct Binding {
        CLI::Option* option;
        std::string key;
        std::string* value;
    };
    std::vector<Binding> bound;
    std::deque<std::string> storage;  // stable addresses for CLI11
};

// A string flag that overrides a configuration key when given.
void bind(CLI::App* app, Globals& g, const std::string& flag, const std::string& key, const std::string& help) {
    auto& value = g.storage.emplace_back();
    auto* opt = app->add_option(flag, value, help + " (config: " + key + ")");
    g.bound.push_back({opt, key, &value});
}

PipelineConfig resolve(const Globals& g) {
    PipelineConfig config;
    if (!g.config.empty()) config = hsi::pipeline::load_config(g.config);
    for (const auto& kv : g.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw hsi::Error("--set expects key=value, got '" + kv + "'");
        hsi::pipeline::set_option(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& b : g.bound)
        if (b.option->count() > 0) hsi::pipeline::set_option(config, b.key, *b.value);
    return config;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    out << text;
    if (!out) throw hsi::Error(path + ": cannot write");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral-spatial hyperspectral classification"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "configuration file (key = value lines)");
    app.add_option("--set", g.sets, "override one configuration key, key=value");
    bind(&app, g, "--seed", "seed", "run seed");
    bind(&app, g, "--threads", "threads", "worker threads; 1 gives byte-identical outputs");
    app.add_option("--simd", g.simd, "kernel set: auto, scalar, avx2, neon");

    std::string stage_name;
    const auto command = [&](const std::string& name, const std::string& help) {
        auto* sub = app.add_subcommand(name, help);
        sub->callback([&, name] { stage_name = name; });
        return sub;
    };

    // synth
    std::string synth_dir;
    hsi::SyntheticSpec synth;
    auto* synth_cmd = command("synth", "write a synthetic scene with train/test masks");
    synth_cmd->add_option("--out-dir", synth_dir, "output directory")->required();
    synth_cmd->add_option("--height", synth.height);
    synth_cmd->add_option("--width", synth.width);
    synth_cmd->add_option("--classes", synth.num_classes);
    synth_cmd->add_option("--bands", synth.bands);
    synth_cmd->add_option("--noise", synth.noise_sigma, "noise standard deviation");
    synth_cmd->add_option("--cells", synth.cells, "Voronoi cells");
    bind(synth_cmd, g, "--per-class", "per_class", "training pixels per class");

    // reduce
    std::string reduce_in, reduce_out;
    bool reduce_normalize = false;
    auto* reduce_cmd = command("reduce", "average contiguous bands into M groups");
    reduce_cmd->add_option("--in,--input", reduce_in, "cube header")->required();
    reduce_cmd->add_option("--out", reduce_out, "output cube header")->required();
    reduce_cmd->add_flag("--normalize", reduce_normalize, "rescale each band to [0,1] first, as the pipeline does");
    bind(reduce_cmd, g, "-M,--M,--groups", "M", "band groups");

    // sp
    std::string sp_in, sp_out, sp_model;
    auto* sp_cmd = command("sp", "structural profile: smoothing followed by KPCA");
    sp_cmd->add_option("--in,--input", sp_in, "reduced cube header, normalized to [0,1]")->required();
    sp_cmd->add_option("--out", sp_out, "feature cube header")->required();
    sp_cmd->add_option("--model", sp_model, "write the KPCA model header");
    bind(sp_cmd, g, "-K,--K,--components", "K", "KPCA components");
    bind(sp_cmd, g, "--lambda", "lambda", "TV weight");
    bind(sp_cmd, g, "--window", "sp.window", "window radius");
    bind(sp_cmd, g, "--patch", "sp.patch", "patch radius");
    bind(sp_cmd, g, "--degree", "sp.degree", "polynomial degree");
    bind(sp_cmd, g, "--sigma", "sp.sigma", "patch Gaussian standard deviation");
    bind(sp_cmd, g, "--h0", "sp.h0", "similarity scale");
    bind(sp_cmd, g, "--max-iters", "sp.max_iters", "split Bregman iterations");
    bind(sp_cmd, g, "--tol", "sp.tol", "relative change threshold");
    bind(sp_cmd, g, "--kpca-anchors", "kpca.anchors", "KPCA anchor budget");
    bind(sp_cmd, g, "--kpca-sigma", "kpca.sigma", "KPCA kernel width or 'auto'");

    // classify
    std::string cls_features, cls_train, cls_out, cls_model;
    bool grid_default = false;
    std::string cls_branch = "a";
    auto* cls_cmd = command("classify", "cross-validated SVM probabilities");
    cls_cmd->add_option("--features", cls_features, "feature cube header")->required();
    cls_cmd->add_option("--train", cls_train, "training label mask")->required();
    cls_cmd->add_option("--out-prob", cls_out, "probability cube header")->required();
    cls_cmd->add_option("--model", cls_model, "write the trained model header");
    cls_cmd->add_flag("--grid-default", grid_default, "use the standard grid regardless of the configuration");
    cls_cmd->add_option("--branch", cls_branch, "fold seeding of branch a (SP features) or b (reduced cube)")
        ->check(CLI::IsMember({"a", "b"}));
    bind(cls_cmd, g, "--gammas", "svm.gammas", "kernel widths");
    bind(cls_cmd, g, "--penalties", "svm.penalties", "penalties C");

    // guidance
    std::string guide_in, guide_out;
    auto* guide_cmd = command("guidance", "first KPCA component of a cube, rescaled to [0,1]");
    guide_cmd->add_option("--in,--input", guide_in, "normalized cube header")->required();
    guide_cmd->add_option("--out", guide_out, "one-band cube header")->required();
    bind(guide_cmd, g, "--kpca-anchors", "kpca.anchors", "KPCA anchor budget");
    bind(guide_cmd, g, "--kpca-sigma", "kpca.sigma", "KPCA kernel width or 'auto'");

    // erw
    std::string erw_prob, erw_guide, erw_out;
    auto* erw_cmd = command("erw", "random-walker refinement of probabilities");
    erw_cmd->add_option("--prob", erw_prob, "probability cube header")->required();
    erw_cmd->add_option("--guidance", erw_guide, "guidance cube header")->required();
    erw_cmd->add_option("--out", erw_out, "refined probability cube header")->required();
    bind(erw_cmd, g, "--beta", "erw.beta", "edge contrast scale");
    bind(erw_cmd, g, "--gamma", "erw.gamma", "prior weight");

    // fuse
    std::string fuse_c1, fuse_c2, fuse_out, fuse_map;
    auto* fuse_cmd = command("fuse", "weighted decision fusion");
    fuse_cmd->add_option("--c1", fuse_c1, "branch-A probabilities")->required();
    fuse_cmd->add_option("--c2", fuse_c2, "branch-B probabilities")->required();
    fuse_cmd->add_option("--out", fuse_out, "output label file")->required();
    fuse_cmd->add_option("--map", fuse_map, "also write a color map (.ppm)");
    bind(fuse_cmd, g, "--mu", "mu", "weight of C1");

    // metrics
    std::string met_ref, met_pred, met_report;
    auto* met_cmd = command("metrics", "OA, AA, Kappa and per-class accuracy");
    met_cmd->add_option("--ref", met_ref, "reference labels")->required();
    met_cmd->add_option("--pred", met_pred, "predicted labels")->required();
    met_cmd->add_option("--report", met_report, "report path ('-' for stdout)");

    // pipeline
    std::string dump_config;
    auto* pipe_cmd = command("pipeline", "run the full flow");
    bind(pipe_cmd, g, "--in,--input", "input", "cube header");
    bind(pipe_cmd, g, "--labels", "labels", "reference labels");
    bind(pipe_cmd, g, "--train", "train", "training mask");
    bind(pipe_cmd, g, "--test", "test", "test mask");
    bind(pipe_cmd, g, "--out-dir", "output_dir", "artifact directory");
    bind(pipe_cmd, g, "--mu", "mu", "fusion weight");
    bind(pipe_cmd, g, "--lambda", "lambda", "TV weight");
    bind(pipe_cmd, g, "-M,--M,--groups", "M", "band groups");
    bind(pipe_cmd, g, "-K,--K,--components", "K", "KPCA components");
    pipe_cmd->add_option("--dump-config", dump_config, "write the resolved configuration and exit");

    // sweep
    std::string sweep_axis, sweep_values, sweep_out;
    auto* sweep_cmd = command("sweep", "rerun the pipeline over one parameter");
    sweep_cmd->add_option("--axis", sweep_axis, "configuration key")->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep_cmd->add_option("--out", sweep_out, "table path ('-' for stdout)");
    bind(sweep_cmd, g, "--in,--input", "input", "cube header");
    bind(sweep_cmd, g, "--out-dir", "output_dir", "artifact root; each value gets a subdirectory");
    bind(sweep_cmd, g, "--labels", "labels", "reference labels");
    bind(sweep_cmd, g, "--train", "train", "training mask");
    bind(sweep_cmd, g, "--test", "test", "test mask");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        hsi::simd::select(hsi::simd::parse_isa(g.simd));
        const PipelineConfig config = [&] {
            try {
                return resolve(g);
            } catch (const hsi::StageError&) {
                throw;
            } catch (const std::exception& e) {
                throw hsi::StageError("config", e.what());
            }
        }();
        const unsigned threads = config.threads;

        const auto run = [&](auto&& body) {
            try {
                body();
            } catch (const hsi::StageError&) {
                throw;
            } catch (const std::exception& e) {
                throw hsi::StageError(stage_name, e.what());
            }
        };

        if (synth_cmd->parsed()) {
            run([&] {
                synth.seed = config.seed;
                const auto scene = hsi::generate_synthetic(synth);
                const std::filesystem::path dir(synth_dir);
                std::filesystem::create_directories(dir);
                const auto split = hsi::sample_training(scene.labels, config.per_class,
                                                        hsi::pipeline::stage_seed(config.seed, hsi::pipeline::Stage::split));
                hsi::write_cube(scene.cube, dir / "cube.hdr");
                hsi::write_labels(scene.labels, dir / "labels.txt");
                hsi::write_labels(split.train, dir / "train.txt");
                hsi::write_labels(split.test, dir / "test.txt");
            });
        } else if (reduce_cmd->parsed()) {
            run([&] {
                config.validate();
                auto cube = hsi::load_cube(reduce_in);
                if (reduce_normalize) cube = hsi::normalize_bands(cube);
                hsi::write_cube(hsi::dimred::reduce_bands(cube, config.groups), reduce_out);
            });
        } else if (sp_cmd->parsed()) {
            run([&] {
                config.validate();
                const auto sp = hsi::sp::extract_sp_full(hsi::load_cube(sp_in), config.smooth, config.kpca(),
                                                         hsi::pipeline::stage_seed(config.seed, hsi::pipeline::Stage::sp),
                                                         threads);
                hsi::write_cube(sp.features, sp_out);
                if (!sp_model.empty()) hsi::kpca::save_model(sp.model, sp_model);
            });
        } else if (cls_cmd->parsed()) {
            run([&] {
                config.validate();
                const auto features = hsi::load_cube(cls_features);
                const auto set = hsi::svm::collect_training(features, hsi::load_labels(cls_train));
                const auto grid = grid_default ? hsi::svm::TrainGrid::standard() : config.grid;
                const auto stage = cls_branch == "a" ? hsi::pipeline::Stage::classify_a : hsi::pipeline::Stage::classify_b;
                const auto model = hsi::svm::train(set.features, set.labels, grid,
                                                   hsi::pipeline::stage_seed(config.seed, stage), threads, config.smo);
                const auto probs = hsi::svm::predict_proba(model, features.spectra(), threads);
                hsi::write_cube(hsi::ProbStack::from_rows(features.height(), features.width(), probs).to_cube(), cls_out);
                if (!cls_model.empty()) hsi::svm::save_model(model, cls_model);
            });
        } else if (guide_cmd->parsed()) {
            run([&] {
                config.validate();
                hsi::write_cube(hsi::erw::guidance_image(hsi::load_cube(guide_in), config.kpca(),
                                                         hsi::pipeline::stage_seed(config.seed,
                                                                                   hsi::pipeline::Stage::guidance),
                                                         threads),
                                guide_out);
            });
        } else if (erw_cmd->parsed()) {
            run([&] {
                config.erw.validate();
                const auto priors = hsi::ProbStack::from_cube(hsi::load_cube(erw_prob));
                const auto lap = hsi::erw::build_laplacian(hsi::load_cube(erw_guide), config.erw.beta);
                hsi::write_cube(hsi::erw::erw_optimize(lap, priors, config.erw, threads).c2.to_cube(), erw_out);
            });
        } else if (fuse_cmd->parsed()) {
            run([&] {
                const auto c1 = hsi::ProbStack::from_cube(hsi::load_cube(fuse_c1));
                const auto c2 = hsi::ProbStack::from_cube(hsi::load_cube(fuse_c2));
                const auto labels = hsi::decision::fuse_labels(c1, c2, config.mu);
                hsi::write_labels(labels, fuse_out);
                if (!fuse_map.empty()) hsi::pipeline::export_map(labels, fuse_map);
            });
        } else if (met_cmd->parsed()) {
            run([&] {
                const auto m = hsi::decision::metrics(
                    hsi::decision::confusion(hsi::load_labels(met_ref), hsi::load_labels(met_pred)));
                write_text(met_report, hsi::decision::format_report(m));
            });
        } else if (pipe_cmd->parsed()) {
            if (!dump_config.empty()) {
                write_text(dump_config, hsi::pipeline::serialize_config(config));
                return 0;
            }
            const auto result = hsi::pipeline::run_pipeline(config);
            std::cout << result.report;
        } else if (sweep_cmd->parsed()) {
            const auto inputs = hsi::pipeline::load_inputs(config);
            const auto rows = hsi::pipeline::sweep(config, inputs, sweep_axis, split_list(sweep_values));
            write_text(sweep_out, hsi::pipeline::format_sweep(sweep_axis, rows));
        }
    } catch (const hsi::StageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: [%s] %s\n", stage_name.empty() ? "cli" : stage_name.c_str(), e.what());
        return 1;
    }
    return 0;
}
