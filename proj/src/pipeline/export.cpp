#include <fstream>

#include "hsi/pipeline.hpp"

namespace hsi::pipeline {

const std::vector<Rgb>& palette() {
    static const std::vector<Rgb> colors = {
        {230, 25, 75},   {60, 180, 75},   {255, 225, 25},  {0, 130, 200},   {245, 130, 48},
        {145, 30, 180},  {70, 240, 240},  {240, 50, 230},  {210, 245, 60},  {250, 190, 212},
        {0, 128, 128},   {220, 190, 255}, {170, 110, 40},  {255, 250, 200}, {128, 0, 0},
        {170, 255, 195}, {128, 128, 0},   {255, 215, 180}, {0, 0, 128},     {128, 128, 128},
    };
    return colors;
}

Rgb class_color(int label) {
    if (label <= 0) return {0, 0, 0};
    const auto& colors = palette();
    return colors[static_cast<std::size_t>(label - 1) % colors.size()];
}

std::filesystem::path label_path_for(const std::filesystem::path& image) {
    auto out = image;
    out.replace_extension(".txt");
    return out;
}

void export_map(const LabelMap& labels, const std::filesystem::path& path) {
    if (label_path_for(path) == path) throw Error(path.string() + ": map image must not use the .txt extension");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    out << "P6\n" << labels.width() << " " << labels.height() << "\n255\n";
    std::vector<unsigned char> row(labels.width() * 3);
    for (std::size_t r = 0; r < labels.height(); ++r) {
        for (std::size_t c = 0; c < labels.width(); ++c) {
            const Rgb color = class_color(labels.at(r, c));
            row[3 * c] = color.r;
            row[3 * c + 1] = color.g;
            row[3 * c + 2] = color.b;
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw Error(path.string() + ": write failed");
    write_labels(labels, label_path_for(path));
}

}  // namespace hsi::pipeline
