#include "aalr/model.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "aalr/errors.hpp"

namespace aalr {

std::string_view to_string(Activation a) { return a == Activation::ReLU ? "relu" : "tanh"; }

Activation activation_from_string(std::string_view name) {
    if (name == "relu") {
        return Activation::ReLU;
    }
    if (name == "tanh") {
        return Activation::Tanh;
    }
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Model::Model(std::vector<int> layer_sizes, Activation activation)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
    if (sizes_.size() < 2) {
        throw ShapeError("a model needs at least an input and an output layer");
    }
    for (int s : sizes_) {
        if (s < 1) {
            throw ShapeError("layer sizes must be positive");
        }
    }
    std::size_t total = 0;
    for (int l = 0; l < num_layers(); ++l) {
        offsets_.push_back(total);
        const auto in = static_cast<std::size_t>(sizes_[l]);
        const auto out = static_cast<std::size_t>(sizes_[l + 1]);
        total += out * in + out;
    }
    params_.assign(total, 0.0);
}

Model Model::initialize(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed) {
    Model m(std::move(layer_sizes), activation);
    std::mt19937_64 rng(seed);
    for (int l = 0; l < m.num_layers(); ++l) {
        const double limit = std::sqrt(6.0 / m.sizes_[l]);
        std::uniform_real_distribution<double> dist(-limit, limit);
        auto w = m.weight(l);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w.data()[i] = dist(rng);
        }
    }
    return m;
}

void Model::set_parameters(std::span<const double> values) {
    if (values.size() != params_.size()) {
        throw ShapeError("parameter vector has " + std::to_string(values.size()) + " entries, model expects " +
                         std::to_string(params_.size()));
    }
    std::copy(values.begin(), values.end(), params_.begin());
}

std::size_t Model::bias_offset(int layer) const {
    return weight_offset(layer) + static_cast<std::size_t>(sizes_[layer + 1]) * static_cast<std::size_t>(sizes_[layer]);
}

RowMatrixMap Model::weight(int layer) {
    return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}

ConstRowMatrixMap Model::weight(int layer) const {
    return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}

VectorMap Model::bias(int layer) { return {params_.data() + bias_offset(layer), sizes_[layer + 1]}; }

ConstVectorMap Model::bias(int layer) const { return {params_.data() + bias_offset(layer), sizes_[layer + 1]}; }

namespace {

void check_batch(const Model& model, const Matrix& inputs) {
    if (inputs.cols() != model.input_dim()) {
        throw ShapeError("batch has " + std::to_string(inputs.cols()) + " features, model expects " +
                         std::to_string(model.input_dim()));
    }
}

void check_labels(const Model& model, BatchView batch) {
    if (batch.size() == 0) {
        throw ShapeError("empty batch");
    }
    if (static_cast<std::size_t>(batch.inputs.rows()) != batch.size()) {
        throw ShapeError("input rows and label count differ");
    }
    for (int y : batch.labels) {
        if (y < 0 || y >= model.num_classes()) {
            throw ShapeError("label " + std::to_string(y) + " outside the model's classes");
        }
    }
}

Matrix activate(const Matrix& z, Activation a) {
    if (a == Activation::ReLU) {
        return z.cwiseMax(0.0);
    }
    return z.array().tanh().matrix();
}

// Pre-activations of every layer, kept for backprop. zs.back() are the logits.
struct ForwardPass {
    std::vector<Matrix> activations;  // a_0 = inputs, a_l = act(z_{l-1})
    std::vector<Matrix> zs;
};

ForwardPass run_forward(const Model& model, const Matrix& inputs) {
    check_batch(model, inputs);
    ForwardPass f;
    f.activations.push_back(inputs);
    for (int l = 0; l < model.num_layers(); ++l) {
        Matrix z = f.activations.back() * model.weight(l).transpose();
        z.rowwise() += model.bias(l).transpose();
        if (l + 1 < model.num_layers()) {
            f.activations.push_back(activate(z, model.activation()));
        }
        f.zs.push_back(std::move(z));
    }
    return f;
}

// Row-wise log-softmax. Any non-finite logit turns the whole result into NaN
// so overflow surfaces as a non-finite loss instead of being absorbed.
Matrix log_softmax(const Matrix& z) {
    if (!z.allFinite()) {
        return Matrix::Constant(z.rows(), z.cols(), std::numeric_limits<double>::quiet_NaN());
    }
    Eigen::VectorXd max = z.rowwise().maxCoeff();
    Matrix shifted = z.colwise() - max;
    Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log().matrix();
    return shifted.colwise() - lse;
}

double mean_cross_entropy(const Matrix& log_probs, std::span<const int> labels) {
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        sum -= log_probs(static_cast<Eigen::Index>(i), labels[i]);
    }
    return sum / static_cast<double>(labels.size());
}

} // namespace

Matrix logits(const Model& model, const Matrix& inputs) { return run_forward(model, inputs).zs.back(); }

Matrix predict_proba(const Model& model, const Matrix& inputs) {
    return log_softmax(logits(model, inputs)).array().exp().matrix();
}

double forward_loss(const Model& model, BatchView batch) {
    check_labels(model, batch);
    return mean_cross_entropy(log_softmax(logits(model, batch.inputs)), batch.labels);
}

double accuracy(const Model& model, BatchView batch) {
    check_labels(model, batch);
    const Matrix z = logits(model, batch.inputs);
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        Eigen::Index best = 0;
        z.row(i).maxCoeff(&best);
        if (z.row(i).allFinite() && best == batch.labels[static_cast<std::size_t>(i)]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(batch.size());
}

Gradient backward(const Model& model, BatchView batch) {
    check_labels(model, batch);
    const ForwardPass f = run_forward(model, batch.inputs);
    const auto n = static_cast<double>(batch.size());

    const Matrix log_probs = log_softmax(f.zs.back());
    Gradient g;
    g.loss = mean_cross_entropy(log_probs, batch.labels);
    g.parameters.assign(model.parameter_count(), 0.0);

    // d loss / d logits = (softmax - onehot) / n
    Matrix delta = log_probs.array().exp().matrix();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        delta(static_cast<Eigen::Index>(i), batch.labels[i]) -= 1.0;
    }
    delta /= n;

    for (int l = model.num_layers() - 1; l >= 0; --l) {
        const int out = model.layer_sizes()[static_cast<std::size_t>(l) + 1];
        const int in = model.layer_sizes()[static_cast<std::size_t>(l)];
        RowMatrixMap dw(g.parameters.data() + model.weight_offset(l), out, in);
        VectorMap db(g.parameters.data() + model.bias_offset(l), out);
        dw.noalias() = delta.transpose() * f.activations[static_cast<std::size_t>(l)];
        db = delta.colwise().sum().transpose();

        Matrix upstream = delta * model.weight(l);
        if (l == 0) {
            g.inputs = std::move(upstream);
            break;
        }
        const Matrix& z = f.zs[static_cast<std::size_t>(l) - 1];
        if (model.activation() == Activation::ReLU) {
            delta = upstream.array() * (z.array() > 0.0).cast<double>();
        } else {
            const Matrix& a = f.activations[static_cast<std::size_t>(l)];
            delta = upstream.array() * (1.0 - a.array().square());
        }
    }
    return g;
}

} // namespace aalr
