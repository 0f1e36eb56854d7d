#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "hsi/core.hpp"

namespace hsi {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::size_t parse_dimension(const std::map<std::string, std::string>& header, const std::string& key,
                            const std::filesystem::path& path) {
    const auto it = header.find(key);
    if (it == header.end()) throw Error(path.string() + ": header is missing '" + key + "'");
    std::size_t pos = 0;
    long long value = 0;
    try {
        value = std::stoll(it->second, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != it->second.size() || value < 1)
        throw Error(path.string() + ": '" + key + "' must be a positive integer, got '" + it->second + "'");
    return static_cast<std::size_t>(value);
}

void expect_value(const std::map<std::string, std::string>& header, const std::string& key,
                  const std::string& accepted, const std::filesystem::path& path) {
    const auto it = header.find(key);
    if (it == header.end()) throw Error(path.string() + ": header is missing '" + key + "'");
    if (it->second != accepted)
        throw Error(path.string() + ": unsupported " + key + " '" + it->second + "' (only " + accepted + ")");
}

std::uint32_t to_little(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big)
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    return v;
}

}  // namespace

std::filesystem::path raw_path_for(const std::filesystem::path& header) {
    auto raw = header;
    raw.replace_extension(".raw");
    if (raw == header) raw += ".raw";
    return raw;
}

HsiCube load_cube(const std::filesystem::path& header_path) {
    std::ifstream in(header_path);
    if (!in) throw Error(header_path.string() + ": cannot open header");

    static const char* const kKeys[] = {"width", "height", "bands", "dtype", "interleave", "byteorder"};
    std::map<std::string, std::string> header;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(header_path.string() + ":" + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys))
            throw Error(header_path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        header[key] = value;
    }

    const std::size_t width = parse_dimension(header, "width", header_path);
    const std::size_t height = parse_dimension(header, "height", header_path);
    const std::size_t bands = parse_dimension(header, "bands", header_path);
    expect_value(header, "dtype", "float32", header_path);
    expect_value(header, "interleave", "bsq", header_path);
    expect_value(header, "byteorder", "little", header_path);

    const auto raw_path = raw_path_for(header_path);
    std::ifstream raw(raw_path, std::ios::binary | std::ios::ate);
    if (!raw) throw Error(raw_path.string() + ": cannot open raw data");
    const auto bytes = static_cast<std::size_t>(raw.tellg());
    const std::size_t expected = width * height * bands * sizeof(float);
    if (bytes != expected)
        throw Error(raw_path.string() + ": size mismatch, header declares " + std::to_string(expected) +
                    " bytes but file has " + std::to_string(bytes));
    raw.seekg(0);

    std::vector<std::uint32_t> words(width * height * bands);
    raw.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(expected));
    if (!raw) throw Error(raw_path.string() + ": short read");

    std::vector<float> data(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) data[i] = std::bit_cast<float>(to_little(words[i]));

    HsiCube cube(height, width, bands, std::move(data));
    cube.require_finite();
    return cube;
}

void write_cube(const HsiCube& cube, const std::filesystem::path& header_path) {
    if (cube.empty()) throw Error("cannot write an empty cube");
    cube.require_finite();
    {
        std::ofstream out(header_path);
        if (!out) throw Error(header_path.string() + ": cannot open for writing");
        out << "width=" << cube.width() << "\n"
            << "height=" << cube.height() << "\n"
            << "bands=" << cube.bands() << "\n"
            << "dtype=float32\n"
            << "interleave=bsq\n"
            << "byteorder=little\n";
        if (!out) throw Error(header_path.string() + ": write failed");
    }
    const auto raw_path = raw_path_for(header_path);
    std::ofstream raw(raw_path, std::ios::binary | std::ios::trunc);
    if (!raw) throw Error(raw_path.string() + ": cannot open for writing");
    const auto values = cube.data();
    std::vector<std::uint32_t> words(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) words[i] = to_little(std::bit_cast<std::uint32_t>(values[i]));
    raw.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * sizeof(float)));
    if (!raw) throw Error(raw_path.string() + ": write failed");
}

LabelMap load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(path.string() + ": cannot open label map");
    long long width = 0, height = 0, classes = 0;
    if (!(in >> width >> height >> classes) || width < 1 || height < 1 || classes < 1)
        throw Error(path.string() + ": malformed label header, expected 'width height num_classes'");
    std::vector<int> labels(static_cast<std::size_t>(width * height));
    for (auto& v : labels)
        if (!(in >> v)) throw Error(path.string() + ": expected " + std::to_string(width * height) + " labels");
    std::string extra;
    if (in >> extra) throw Error(path.string() + ": trailing data after " + std::to_string(width * height) + " labels");
    return LabelMap(static_cast<std::size_t>(height), static_cast<std::size_t>(width), static_cast<int>(classes),
                    std::move(labels));
}

void write_labels(const LabelMap& labels, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    out << labels.width() << ' ' << labels.height() << ' ' << labels.num_classes() << '\n';
    for (std::size_t r = 0; r < labels.height(); ++r) {
        for (std::size_t c = 0; c < labels.width(); ++c) {
            if (c) out << ' ';
            out << labels.at(r, c);
        }
        out << '\n';
    }
    if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace hsi
