#include "boxrepair/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace boxrepair {

Activation Activation::leaky_relu(double slope)
{
    if (!(slope > 0.0 && slope < 1.0))
        throw std::invalid_argument("LeakyReLU slope must lie in (0, 1)");
    return {ActivationKind::LeakyReLU, slope};
}

double Activation::apply(double z) const
{
    switch (kind) {
    case ActivationKind::ReLU:
        return z > 0.0 ? z : 0.0;
    case ActivationKind::LeakyReLU:
        return z > 0.0 ? z : slope * z;
    case ActivationKind::Tanh:
        return std::tanh(z);
    case ActivationKind::Identity:
        break;
    }
    return z;
}

double Activation::derivative(double z) const
{
    switch (kind) {
    case ActivationKind::ReLU:
        return z > 0.0 ? 1.0 : 0.0;
    case ActivationKind::LeakyReLU:
        return z > 0.0 ? 1.0 : slope;
    case ActivationKind::Tanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    case ActivationKind::Identity:
        break;
    }
    return 1.0;
}

std::string Activation::name() const
{
    switch (kind) {
    case ActivationKind::ReLU:
        return "relu";
    case ActivationKind::LeakyReLU:
        return "leaky_relu";
    case ActivationKind::Tanh:
        return "tanh";
    case ActivationKind::Identity:
        break;
    }
    return "identity";
}

std::pair<double, double> Activation::range() const
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind) {
    case ActivationKind::ReLU:
        return {0.0, inf};
    case ActivationKind::Tanh:
        return {-1.0, 1.0};
    default:
        return {-inf, inf};
    }
}

Activation Activation::from_name(const std::string &name, double slope)
{
    if (name == "relu")
        return relu();
    if (name == "leaky_relu")
        return leaky_relu(slope);
    if (name == "tanh")
        return tanh();
    if (name == "identity" || name == "linear")
        return identity();
    throw std::invalid_argument("unknown activation '" + name + "'");
}

namespace {

Vector apply_layer(const Layer &layer, std::span<const double> a)
{
    Vector z = layer.weights.apply(a);
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = layer.activation.apply(z[i] + layer.bias[i]);
    return z;
}

} // namespace

Vector SubnetView::evaluate(std::span<const double> x) const
{
    if (x.size() != input_dim())
        throw std::invalid_argument("evaluate: input dimension mismatch");
    Vector a(x.begin(), x.end());
    if (!input_mean.empty()) {
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] = (a[i] - input_mean[i]) / input_range[i];
    }
    for (const Layer &layer : layers)
        a = apply_layer(layer, a);
    if (!output_mean.empty()) {
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] = a[i] * output_range[i] + output_mean[i];
    }
    return a;
}

Network::Network(std::vector<Layer> layers, std::size_t split, Normalization norm)
    : layers_(std::move(layers)), split_(split), norm_(std::move(norm))
{
    validate();
}

void Network::validate() const
{
    if (layers_.size() < 2)
        throw std::invalid_argument("Network: need at least two layers to split");
    if (split_ == 0 || split_ >= layers_.size())
        throw std::invalid_argument("Network: split index " + std::to_string(split_) + " outside (0, " +
                                    std::to_string(layers_.size()) + ")");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer &layer = layers_[i];
        if (layer.bias.size() != layer.weights.rows())
            throw std::invalid_argument("Network: layer " + std::to_string(i) + " bias length mismatch");
        if (i > 0 && layer.in_dim() != layers_[i - 1].out_dim())
            throw std::invalid_argument("Network: layer " + std::to_string(i) + " input width does not chain");
    }
    if (layers_.back().activation.kind != ActivationKind::Identity)
        throw std::invalid_argument("Network: final layer must be linear (raw logits)");
    if (norm_.has_input() &&
        (norm_.input_mean.size() != input_dim() || norm_.input_range.size() != input_dim()))
        throw std::invalid_argument("Network: input normalization length mismatch");
    if (norm_.has_output() &&
        (norm_.output_mean.size() != output_dim() || norm_.output_range.size() != output_dim()))
        throw std::invalid_argument("Network: output normalization length mismatch");
}

std::size_t Network::default_split(std::size_t num_layers)
{
    if (num_layers < 2)
        throw std::invalid_argument("default_split: need at least two layers");
    const std::size_t head = num_layers <= 8 ? 2 : 3;
    return num_layers > head ? num_layers - head : 1;
}

Layer &Network::feature_layer(std::size_t i)
{
    if (i >= split_)
        throw std::out_of_range("feature_layer: layer " + std::to_string(i) + " belongs to the frozen head");
    return layers_[i];
}

Network Network::with_split(std::size_t split) const { return Network(layers_, split, norm_); }

SubnetView Network::whole() const
{
    return {std::span<const Layer>(layers_), norm_.input_mean, norm_.input_range, norm_.output_mean,
            norm_.output_range};
}

SubnetView Network::feature_extractor() const
{
    return {std::span<const Layer>(layers_).first(split_), norm_.input_mean, norm_.input_range, {}, {}};
}

SubnetView Network::head() const
{
    return {std::span<const Layer>(layers_).subspan(split_), {}, {}, norm_.output_mean, norm_.output_range};
}

Vector Network::forward(std::span<const double> x) const { return whole().evaluate(x); }

Vector Network::forward_features(std::span<const double> x) const { return feature_extractor().evaluate(x); }

Vector Network::forward_head(std::span<const double> h) const { return head().evaluate(h); }

bool Network::satisfies(std::span<const double> x, const Property &prop) const
{
    const Vector y = forward(x);
    return std::all_of(prop.constraints.begin(), prop.constraints.end(),
                       [&](const LinearConstraint &c) { return c.evaluate(y) >= 0.0; });
}

std::size_t Network::predict(std::span<const double> x) const
{
    const Vector y = forward(x);
    return static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
}

bool satisfies(const Network &net, std::span<const double> x, const Property &prop)
{
    return net.satisfies(x, prop);
}

} // namespace boxrepair
