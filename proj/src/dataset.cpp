#include "aalr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "aalr/errors.hpp"

namespace aalr {

void Dataset::validate() const {
    if (labels.empty()) {
        throw DomainError("dataset '" + name + "' is empty");
    }
    if (static_cast<std::size_t>(inputs.rows()) != labels.size()) {
        throw ShapeError("dataset '" + name + "': input rows and label count differ");
    }
    if (num_classes < 1) {
        throw DomainError("dataset '" + name + "' has no classes");
    }
    for (int y : labels) {
        if (y < 0 || y >= num_classes) {
            throw DomainError("dataset '" + name + "' has a label outside [0, num_classes)");
        }
    }
    if (!inputs.allFinite()) {
        throw DomainError("dataset '" + name + "' contains non-finite inputs");
    }
}

Dataset Dataset::gather(std::span<const std::size_t> rows) const {
    Dataset out;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(rows[i]));
        out.labels.push_back(labels[rows[i]]);
    }
    out.num_classes = num_classes;
    out.name = name;
    return out;
}

std::string_view to_string(SyntheticKind kind) {
    switch (kind) {
    case SyntheticKind::Blobs:
        return "blobs";
    case SyntheticKind::Moons:
        return "moons";
    case SyntheticKind::Spirals:
        return "spirals";
    }
    return "unknown";
}

SyntheticKind synthetic_kind_from_string(std::string_view name) {
    if (name == "blobs") {
        return SyntheticKind::Blobs;
    }
    if (name == "moons") {
        return SyntheticKind::Moons;
    }
    if (name == "spirals") {
        return SyntheticKind::Spirals;
    }
    throw ConfigError("unknown synthetic task '" + std::string(name) + "'");
}

namespace {

double to_unit(double v, double lo, double hi) { return std::clamp((v - lo) / (hi - lo), 0.0, 1.0); }

} // namespace

Dataset make_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed, const SyntheticOptions& opt) {
    if (n < 2) {
        throw DomainError("synthetic datasets need at least two samples");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset d;
    d.name = std::string(to_string(kind));
    d.num_classes = 2;
    d.labels.resize(n);
    const int features = kind == SyntheticKind::Blobs ? opt.features : 2;
    if (features < 1) {
        throw ConfigError("blobs need at least one feature");
    }
    d.inputs.resize(static_cast<Eigen::Index>(n), features);

    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double sign = label == 0 ? -1.0 : 1.0;
        d.labels[i] = label;
        auto row = d.inputs.row(static_cast<Eigen::Index>(i));
        switch (kind) {
        case SyntheticKind::Blobs: {
            const double noise = opt.noise < 0 ? 0.05 : opt.noise;
            const int strong = opt.strong_features < 0 ? features : opt.strong_features;
            for (int j = 0; j < features; ++j) {
                const double offset = (j < strong ? opt.separation : opt.weak_separation) / 2.0;
                row(j) = std::clamp(0.5 + sign * offset + noise * gauss(rng), 0.0, 1.0);
            }
            break;
        }
        case SyntheticKind::Moons: {
            const double noise = opt.noise < 0 ? 0.1 : opt.noise;
            const double angle = std::numbers::pi * unit(rng);
            double x = label == 0 ? std::cos(angle) : 1.0 - std::cos(angle);
            double y = label == 0 ? std::sin(angle) : 0.5 - std::sin(angle);
            x += noise * gauss(rng);
            y += noise * gauss(rng);
            row(0) = to_unit(x, -1.5, 2.5);
            row(1) = to_unit(y, -1.25, 1.75);
            break;
        }
        case SyntheticKind::Spirals: {
            const double noise = opt.noise < 0 ? 0.02 : opt.noise;
            // Radius grows linearly with the angle; the two arms are offset by pi.
            const double t = 0.1 + 0.9 * unit(rng);
            const double angle = 2.0 * std::numbers::pi * opt.spiral_turns * t + (label == 0 ? 0.0 : std::numbers::pi);
            const double x = t * std::cos(angle) + noise * gauss(rng);
            const double y = t * std::sin(angle) + noise * gauss(rng);
            row(0) = to_unit(x, -1.1, 1.1);
            row(1) = to_unit(y, -1.1, 1.1);
            break;
        }
        }
    }
    return d;
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetNotFoundError("cannot open dataset file " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
    if (b.size() < off + 4) {
        throw FormatError("truncated IDX header", b.size());
    }
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

void expect_magic(const std::vector<std::uint8_t>& b, std::uint32_t magic, const std::string& what) {
    if (be32(b, 0) != magic) {
        throw FormatError("bad IDX magic for " + what, 0);
    }
}

} // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const auto img = read_file(images);
    const auto lab = read_file(labels);

    expect_magic(img, 0x00000803u, "images");
    expect_magic(lab, 0x00000801u, "labels");

    const std::size_t count = be32(img, 4);
    const std::size_t rows = be32(img, 8);
    const std::size_t cols = be32(img, 12);
    const std::size_t label_count = be32(lab, 4);
    if (label_count != count) {
        throw FormatError("label file holds " + std::to_string(label_count) + " labels for " + std::to_string(count) +
                              " images",
                          4);
    }
    const std::size_t pixels = rows * cols;
    if (count == 0 || pixels == 0) {
        throw FormatError("IDX file declares an empty tensor", 4);
    }
    constexpr std::size_t kImageHeader = 16;
    constexpr std::size_t kLabelHeader = 8;
    if (img.size() < kImageHeader + count * pixels) {
        throw FormatError("truncated IDX image data", img.size());
    }
    if (lab.size() < kLabelHeader + count) {
        throw FormatError("truncated IDX label data", lab.size());
    }

    Dataset d;
    d.name = images.filename().string();
    d.inputs.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < pixels; ++j) {
            d.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                img[kImageHeader + i * pixels + j] / 255.0;
        }
    }
    d.labels.resize(count);
    int max_label = 0;
    for (std::size_t i = 0; i < count; ++i) {
        d.labels[i] = lab[kLabelHeader + i];
        max_label = std::max(max_label, d.labels[i]);
    }
    d.num_classes = max_label + 1;
    return d;
}

} // namespace aalr
