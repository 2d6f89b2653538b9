#pragma once

#include "boxrepair/linalg.hpp"
#include "boxrepair/property.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace boxrepair {

enum class ActivationKind { ReLU, LeakyReLU, Tanh, Identity };

struct Activation {
    ActivationKind kind = ActivationKind::Identity;
    double slope = 0.0; // LeakyReLU negative-side slope, in (0, 1)

    static Activation relu() { return {ActivationKind::ReLU, 0.0}; }
    static Activation leaky_relu(double slope);
    static Activation tanh() { return {ActivationKind::Tanh, 0.0}; }
    static Activation identity() { return {ActivationKind::Identity, 0.0}; }

    double apply(double z) const;
    /// Derivative; the subgradient at ReLU kinks is taken from the left (0 for ReLU).
    double derivative(double z) const;

    std::string name() const;
    static Activation from_name(const std::string &name, double slope = 0.0);

    /// Closed interval containing every output value (infinite ends where unbounded).
    std::pair<double, double> range() const;

    bool operator==(const Activation &) const = default;
};

/// z = W a + b followed by the activation.
struct Layer {
    Matrix weights; // out_dim x in_dim
    Vector bias;
    Activation activation;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }

    bool operator==(const Layer &) const = default;
};

/// Fixed per-coordinate affine maps around the layer stack, as carried by NNet models:
/// the stack sees (x - input_mean) / input_range and the caller sees y * output_range + output_mean.
/// Empty vectors mean "no transform".
struct Normalization {
    Vector input_mean, input_range;
    Vector output_mean, output_range;
    Vector input_min, input_max; // advisory input domain, not enforced

    bool has_input() const { return !input_mean.empty(); }
    bool has_output() const { return !output_mean.empty(); }
    bool operator==(const Normalization &) const = default;
};

/// A contiguous slice of layers plus whichever normalization applies at its ends.
struct SubnetView {
    std::span<const Layer> layers;
    std::span<const double> input_mean, input_range;
    std::span<const double> output_mean, output_range;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }

    Vector evaluate(std::span<const double> x) const;
};

/// Dense feedforward classifier f = f_c o f_e, split before layer `split`.
class Network {
public:
    Network() = default;
    Network(std::vector<Layer> layers, std::size_t split, Normalization norm = {});

    /// Split that leaves exactly one hidden activation in the head (two for nets deeper than 8 layers).
    static std::size_t default_split(std::size_t num_layers);

    std::size_t num_layers() const { return layers_.size(); }
    std::size_t split() const { return split_; }
    std::size_t input_dim() const { return layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.back().out_dim(); }
    std::size_t feature_dim() const { return layers_[split_ - 1].out_dim(); }

    const std::vector<Layer> &layers() const { return layers_; }
    const Layer &layer(std::size_t i) const { return layers_.at(i); }
    const Normalization &normalization() const { return norm_; }

    /// Mutable access is limited to feature-extractor layers; the head is frozen.
    Layer &feature_layer(std::size_t i);

    Network with_split(std::size_t split) const;

    SubnetView whole() const;
    SubnetView feature_extractor() const;
    SubnetView head() const;

    Vector forward(std::span<const double> x) const;
    Vector forward_features(std::span<const double> x) const;
    Vector forward_head(std::span<const double> h) const;

    /// Every constraint of prop evaluates >= 0 on forward(x).
    bool satisfies(std::span<const double> x, const Property &prop) const;

    std::size_t predict(std::span<const double> x) const;

    bool operator==(const Network &) const = default;

private:
    void validate() const;

    std::vector<Layer> layers_;
    std::size_t split_ = 0;
    Normalization norm_;
};

bool satisfies(const Network &net, std::span<const double> x, const Property &prop);

} // namespace boxrepair
