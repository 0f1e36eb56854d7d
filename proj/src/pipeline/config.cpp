#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hsi/pipeline.hpp"

namespace hsi::pipeline {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw Error("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value, "a number");
    return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& value) {
    Int out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value, "a non-negative integer");
    return out;
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) bad_value(key, value, "a comma-separated list of numbers");
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
    return out;
}

struct Accessor {
    std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

#define HSI_PATH(field) \
    Accessor { [](PipelineConfig& c, const std::string&, const std::string& v) { c.field = v; }, \
               [](const PipelineConfig& c) { return c.field.string(); } }
#define HSI_REAL(field) \
    Accessor { [](PipelineConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }, \
               [](const PipelineConfig& c) { return fmt(c.field); } }
#define HSI_INT(field, type) \
    Accessor { [](PipelineConfig& c, const std::string& k, const std::string& v) { c.field = to_int<type>(k, v); }, \
               [](const PipelineConfig& c) { return std::to_string(c.field); } }

const std::vector<std::pair<std::string, Accessor>>& table() {
    static const std::vector<std::pair<std::string, Accessor>> entries = {
        {"input", HSI_PATH(input)},
        {"labels", HSI_PATH(labels)},
        {"train", HSI_PATH(train)},
        {"test", HSI_PATH(test)},
        {"per_class", HSI_INT(per_class, std::size_t)},
        {"output_dir", HSI_PATH(output_dir)},
        {"M", HSI_INT(groups, std::size_t)},
        {"K", HSI_INT(components, std::size_t)},
        {"lambda", HSI_REAL(smooth.lambda)},
        {"mu", HSI_REAL(mu)},
        {"sp.window", HSI_INT(smooth.window_radius, int)},
        {"sp.patch", HSI_INT(smooth.patch_radius, int)},
        {"sp.degree", HSI_INT(smooth.degree, int)},
        {"sp.sigma", HSI_REAL(smooth.sigma)},
        {"sp.h0", HSI_REAL(smooth.h0)},
        {"sp.max_iters", HSI_INT(smooth.max_iters, int)},
        {"sp.tol", HSI_REAL(smooth.tol)},
        {"kpca.anchors", HSI_INT(kpca_anchors, std::size_t)},
        {"kpca.sigma",
         Accessor{[](PipelineConfig& c, const std::string& k, const std::string& v) {
                      if (v == "auto") c.kpca_width.reset();
                      else c.kpca_width = to_double(k, v);
                  },
                  [](const PipelineConfig& c) { return c.kpca_width ? fmt(*c.kpca_width) : std::string("auto"); }}},
        {"svm.gammas",
         Accessor{[](PipelineConfig& c, const std::string& k, const std::string& v) { c.grid.kernel_widths = to_list(k, v); },
                  [](const PipelineConfig& c) { return fmt_list(c.grid.kernel_widths); }}},
        {"svm.penalties",
         Accessor{[](PipelineConfig& c, const std::string& k, const std::string& v) { c.grid.penalties = to_list(k, v); },
                  [](const PipelineConfig& c) { return fmt_list(c.grid.penalties); }}},
        {"svm.folds", HSI_INT(grid.folds, int)},
        {"svm.tol", HSI_REAL(smo.tol)},
        {"svm.max_passes", HSI_INT(smo.max_passes, std::size_t)},
        {"erw.beta", HSI_REAL(erw.beta)},
        {"erw.gamma", HSI_REAL(erw.gamma)},
        {"erw.cg_tol", HSI_REAL(erw.cg_tol)},
        {"erw.cg_max_iters", HSI_INT(erw.cg_max_iters, std::size_t)},
        {"seed", HSI_INT(seed, std::uint64_t)},
        {"threads", HSI_INT(threads, unsigned)},
    };
    return entries;
}

#undef HSI_PATH
#undef HSI_REAL
#undef HSI_INT

const Accessor& find(const std::string& key) {
    for (const auto& [name, accessor] : table())
        if (name == key) return accessor;
    throw Error("unknown config key '" + key + "'");
}

}  // namespace

void PipelineConfig::validate() const {
    if (groups < 1) throw Error("M must be >= 1");
    if (components < 1) throw Error("K must be >= 1");
    if (!(mu >= 0.0 && mu <= 1.0)) throw Error("mu must be in [0,1], got " + fmt(mu));
    if (per_class < 1) throw Error("per_class must be >= 1");
    if (threads < 1) throw Error("threads must be >= 1");
    if (!(smo.tol > 0.0)) throw Error("svm.tol must be > 0");
    if (smo.max_passes < 1) throw Error("svm.max_passes must be >= 1");
    smooth.validate();
    kpca().validate();
    grid.validate();
    erw.validate();
}

kpca::KpcaParams PipelineConfig::kpca() const {
    kpca::KpcaParams p;
    p.components = components;
    p.kernel_width = kpca_width;
    p.max_anchors = kpca_anchors;
    return p;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& entry : table()) out.push_back(entry.first);
        return out;
    }();
    return keys;
}

void set_option(PipelineConfig& config, const std::string& key, const std::string& value) {
    find(key).set(config, key, value);
}

std::string get_option(const PipelineConfig& config, const std::string& key) { return find(key).get(config); }

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("config line " + std::to_string(number) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        try {
            set_option(base, key, value);
        } catch (const Error& e) {
            throw Error("config line " + std::to_string(number) + ": " + e.what());
        }
    }
    return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(path.string() + ": cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string serialize_config(const PipelineConfig& config) {
    std::string out;
    for (const auto& [key, accessor] : table()) out += key + " = " + accessor.get(config) + "\n";
    return out;
}

}  // namespace hsi::pipeline
