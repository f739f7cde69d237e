#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace aalr {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Non-owning view of a batch: N x d inputs with one class index per row.
struct BatchView {
    const Matrix& inputs;
    std::span<const int> labels;

    std::size_t size() const { return labels.size(); }
};

struct Dataset {
    Matrix inputs;
    std::vector<int> labels;
    int num_classes = 0;
    std::string name;

    std::size_t size() const { return labels.size(); }
    std::size_t features() const { return static_cast<std::size_t>(inputs.cols()); }
    BatchView view() const { return {inputs, labels}; }

    /// Throws ShapeError / DomainError when the dataset invariants are violated.
    void validate() const;

    /// Copies the given rows into a new dataset.
    Dataset gather(std::span<const std::size_t> rows) const;
};

enum class SyntheticKind { Blobs, Moons, Spirals };

std::string_view to_string(SyntheticKind kind);
/// Throws ConfigError on unknown names.
SyntheticKind synthetic_kind_from_string(std::string_view name);

/*
 * Shape of the generated data. Every kind is two-class and mapped into the
 * unit box [0,1]^d so FGSM clipping applies directly.
 *
 * Blobs: Gaussian clusters centred at 0.5 -+ separation/2 on the first
 * `strong_features` axes and 0.5 -+ weak_separation/2 on the remaining ones.
 */
struct SyntheticOptions {
    int features = 2;
    int strong_features = -1;  // -1: all features are strong
    double separation = 0.4;
    double weak_separation = 0.0;
    double noise = -1.0;  // -1: per-kind default
    double spiral_turns = 1.5;
};

/// Deterministic for a fixed seed; class counts differ by at most one.
Dataset make_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed, const SyntheticOptions& options = {});

/// Reads an IDX image file (magic 0x00000803) and its label file (0x00000801).
/// Pixels are scaled to [0,1]. Throws FormatError with the failing byte offset
/// and DatasetNotFoundError when a file is missing.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

} // namespace aalr
