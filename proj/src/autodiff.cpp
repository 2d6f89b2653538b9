#include "boxrepair/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace boxrepair {

namespace {

constexpr double kSolvedDistance = 1e-12;

void check_tasks(const Network &net, std::span<const PointTask> tasks)
{
    if (tasks.empty())
        throw std::invalid_argument("repair loss: empty task set");
    for (const PointTask &t : tasks) {
        if (t.input.size() != net.input_dim() || t.target.size() != net.feature_dim())
            throw std::invalid_argument("repair loss: task dimensions do not match the network");
    }
}

struct Trace {
    std::vector<Vector> inputs; // input to each feature layer (normalized for layer 0)
    std::vector<Vector> pre;    // pre-activation of each feature layer
    Vector features;
};

Trace trace_features(const Network &net, std::span<const double> x)
{
    const Normalization &norm = net.normalization();
    Vector a(x.begin(), x.end());
    if (norm.has_input()) {
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] = (a[i] - norm.input_mean[i]) / norm.input_range[i];
    }
    Trace tr;
    for (std::size_t j = 0; j < net.split(); ++j) {
        const Layer &layer = net.layer(j);
        Vector z = layer.weights.apply(a);
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] += layer.bias[i];
        tr.inputs.push_back(std::move(a));
        a.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            a[i] = layer.activation.apply(z[i]);
        tr.pre.push_back(std::move(z));
    }
    tr.features = std::move(a);
    return tr;
}

} // namespace

ParamGrads ParamGrads::zeros_like(const Network &net)
{
    ParamGrads g;
    for (std::size_t j = 0; j < net.split(); ++j) {
        const Layer &layer = net.layer(j);
        g.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
        g.bias.emplace_back(layer.bias.size(), 0.0);
    }
    return g;
}

double ParamGrads::max_abs() const
{
    double m = 0.0;
    for (const Matrix &w : weights)
        for (double v : w.data())
            m = std::max(m, std::abs(v));
    for (const Vector &b : bias)
        for (double v : b)
            m = std::max(m, std::abs(v));
    return m;
}

double repair_loss(const Network &net, std::span<const PointTask> tasks)
{
    check_tasks(net, tasks);
    double total = 0.0;
    for (const PointTask &t : tasks)
        total += lp_norm(sub(net.forward_features(t.input), t.target), 2.0);
    return total / static_cast<double>(tasks.size());
}

ParamGrads backward(const Network &net, std::span<const PointTask> tasks)
{
    check_tasks(net, tasks);
    ParamGrads grads = ParamGrads::zeros_like(net);
    const double scale = 1.0 / static_cast<double>(tasks.size());

    for (const PointTask &task : tasks) {
        const Trace tr = trace_features(net, task.input);
        Vector g = sub(tr.features, task.target);
        const double dist = lp_norm(g, 2.0);
        if (dist < kSolvedDistance)
            continue;
        for (double &v : g)
            v *= scale / dist;

        for (std::size_t j = net.split(); j-- > 0;) {
            const Layer &layer = net.layer(j);
            const Vector &z = tr.pre[j];
            const Vector &a_in = tr.inputs[j];
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] *= layer.activation.derivative(z[i]);
            Matrix &gw = grads.weights[j];
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (g[i] == 0.0)
                    continue;
                grads.bias[j][i] += g[i];
                auto row = gw.row(i);
                for (std::size_t k = 0; k < a_in.size(); ++k)
                    row[k] += g[i] * a_in[k];
            }
            if (j > 0)
                g = layer.weights.apply_transposed(g);
        }
    }
    return grads;
}

AdamState AdamState::init(const Network &net, AdamConfig config)
{
    AdamState st;
    st.config = config;
    st.first_moment = ParamGrads::zeros_like(net);
    st.second_moment = ParamGrads::zeros_like(net);
    return st;
}

Network adam_step(AdamState &state, const Network &net, const ParamGrads &grads)
{
    if (grads.weights.size() != net.split() || state.first_moment.weights.size() != net.split())
        throw std::invalid_argument("adam_step: gradient shapes do not match the feature extractor");

    state.step += 1;
    const AdamConfig &c = state.config;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);

    Network next = net;
    auto update = [&](std::span<double> param, std::span<const double> grad, std::span<double> m,
                      std::span<double> v) {
        if (param.size() != grad.size() || m.size() != grad.size())
            throw std::invalid_argument("adam_step: parameter shape mismatch");
        for (std::size_t i = 0; i < param.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            param[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
        }
    };
    for (std::size_t j = 0; j < net.split(); ++j) {
        Layer &layer = next.feature_layer(j);
        update(layer.weights.data(), grads.weights[j].data(), state.first_moment.weights[j].data(),
               state.second_moment.weights[j].data());
        update(layer.bias, grads.bias[j], state.first_moment.bias[j], state.second_moment.bias[j]);
    }
    return next;
}

} // namespace boxrepair
