#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "aalr/dataset.hpp"

namespace aalr {

enum class Activation { ReLU, Tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

using RowMatrixMap = Eigen::Map<Matrix>;
using ConstRowMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/*
 * Dense feed-forward classifier with a softmax head. Parameters live in one
 * flat vector, layer by layer: W0 (out x in, row-major), b0, W1, b1, ...
 * The same layout is used for gradients, momentum buffers and checkpoints.
 */
class Model {
public:
    /// All-zero parameters. `layer_sizes` runs input -> hidden... -> classes.
    Model(std::vector<int> layer_sizes, Activation activation);

    /// He-style uniform weights, zero biases.
    static Model initialize(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed);

    const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
    Activation activation() const noexcept { return activation_; }
    int num_layers() const noexcept { return static_cast<int>(sizes_.size()) - 1; }
    int input_dim() const noexcept { return sizes_.front(); }
    int num_classes() const noexcept { return sizes_.back(); }

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }
    void set_parameters(std::span<const double> values);

    RowMatrixMap weight(int layer);
    ConstRowMatrixMap weight(int layer) const;
    VectorMap bias(int layer);
    ConstVectorMap bias(int layer) const;

    std::size_t weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
    std::size_t bias_offset(int layer) const;

private:
    std::vector<int> sizes_;
    Activation activation_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

/// Raw class scores for each row of `inputs`. Throws ShapeError on a width mismatch.
Matrix logits(const Model& model, const Matrix& inputs);

/// Row-wise softmax of `logits(model, inputs)`.
Matrix predict_proba(const Model& model, const Matrix& inputs);

/// Mean cross-entropy over the batch. Non-finite values are returned as-is.
double forward_loss(const Model& model, BatchView batch);

double accuracy(const Model& model, BatchView batch);

struct Gradient {
    std::vector<double> parameters;  // same layout as Model::parameters()
    Matrix inputs;                   // d loss / d inputs, one row per sample
    double loss = 0.0;
};

/// Gradient of forward_loss with respect to every parameter and every input.
Gradient backward(const Model& model, BatchView batch);

} // namespace aalr
