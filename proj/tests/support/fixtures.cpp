#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace boxrepair::fixtures {

double uniform(Rng &rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Network random_network(Rng &rng, const std::vector<std::size_t> &widths, Activation hidden, std::size_t split,
                       double weight_scale)
{
    std::vector<Layer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const std::size_t in = widths[i], out = widths[i + 1];
        std::normal_distribution<double> gauss(0.0, weight_scale * std::sqrt(2.0 / static_cast<double>(in)));
        Layer layer;
        layer.weights = Matrix(out, in);
        for (double &w : layer.weights.data())
            w = gauss(rng);
        layer.bias.resize(out);
        for (double &b : layer.bias)
            b = uniform(rng, -0.1, 0.1);
        layer.activation = i + 2 == widths.size() ? Activation::identity() : hidden;
        layers.push_back(std::move(layer));
    }
    const std::size_t k = split == 0 ? Network::default_split(layers.size()) : split;
    return Network(std::move(layers), k);
}

Box random_box(Rng &rng, std::size_t dim, double center_span, double max_half_width)
{
    Vector lo(dim), hi(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const double c = uniform(rng, -center_span, center_span);
        const double w = uniform(rng, 0.0, max_half_width);
        lo[i] = c - w;
        hi[i] = c + w;
    }
    return Box(std::move(lo), std::move(hi));
}

Vector sample_in_box(Rng &rng, const Box &box)
{
    Vector x(box.dim());
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = box.lower[i] == box.upper[i] ? box.lower[i] : uniform(rng, box.lower[i], box.upper[i]);
    return x;
}

double corner_min(std::span<const double> a, double b, const Box &box)
{
    const std::size_t n = a.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        double v = b;
        for (std::size_t i = 0; i < n; ++i)
            v += a[i] * (((mask >> i) & 1U) ? box.upper[i] : box.lower[i]);
        best = std::min(best, v);
    }
    return best;
}

double corner_max_value(std::span<const double> a, const Box &box)
{
    const std::size_t n = a.size();
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            v += a[i] * (((mask >> i) & 1U) ? box.upper[i] : box.lower[i]);
        best = std::max(best, v);
    }
    return best;
}

ReferenceNnet::ReferenceNnet(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("//", 0) == 0)
            continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            vals.push_back(std::stod(tok));
        }
        if (!vals.empty())
            rows.push_back(std::move(vals));
    }
    std::size_t r = 0;
    const auto num_layers = static_cast<std::size_t>(rows[r++][0]);
    std::vector<std::size_t> sizes;
    for (double v : rows[r++])
        sizes.push_back(static_cast<std::size_t>(v));
    ++r; // symmetric
    mins_ = rows[r++];
    maxes_ = rows[r++];
    means_ = rows[r++];
    ranges_ = rows[r++];
    for (std::size_t l = 0; l < num_layers; ++l) {
        std::vector<Vector> w;
        for (std::size_t i = 0; i < sizes[l + 1]; ++i)
            w.push_back(rows[r++]);
        Vector b;
        for (std::size_t i = 0; i < sizes[l + 1]; ++i)
            b.push_back(rows[r++][0]);
        weights_.push_back(std::move(w));
        biases_.push_back(std::move(b));
    }
}

Vector ReferenceNnet::evaluate(const Vector &x) const
{
    const std::size_t m = mins_.size();
    Vector a(m);
    for (std::size_t i = 0; i < m; ++i)
        a[i] = (std::clamp(x[i], mins_[i], maxes_[i]) - means_[i]) / ranges_[i];
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Vector z(weights_[l].size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            double acc = biases_[l][i];
            for (std::size_t k = 0; k < a.size(); ++k)
                acc += weights_[l][i][k] * a[k];
            z[i] = (l + 1 < weights_.size()) ? std::max(acc, 0.0) : acc;
        }
        a = std::move(z);
    }
    for (double &v : a)
        v = v * ranges_[m] + means_[m];
    return a;
}

namespace {

struct Grads {
    std::vector<Matrix> w;
    std::vector<Vector> b;
};

Grads zero_grads(const Network &net)
{
    Grads g;
    for (const Layer &l : net.layers()) {
        g.w.emplace_back(l.weights.rows(), l.weights.cols());
        g.b.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

/// Raw outputs (before output de-normalization) plus everything backprop needs.
struct Pass {
    std::vector<Vector> inputs, pre;
    Vector out;
};

Pass forward_pass(const Network &net, const Vector &x)
{
    Pass p;
    Vector a = x;
    const Normalization &norm = net.normalization();
    if (norm.has_input()) {
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] = (a[i] - norm.input_mean[i]) / norm.input_range[i];
    }
    for (const Layer &l : net.layers()) {
        Vector z = l.weights.apply(a);
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] += l.bias[i];
        p.inputs.push_back(a);
        a.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            a[i] = l.activation.apply(z[i]);
        p.pre.push_back(std::move(z));
    }
    p.out = std::move(a);
    return p;
}

void backprop(const Network &net, const Pass &p, Vector g, Grads &acc)
{
    for (std::size_t j = net.num_layers(); j-- > 0;) {
        const Layer &l = net.layer(j);
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] *= l.activation.derivative(p.pre[j][i]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i] == 0.0)
                continue;
            acc.b[j][i] += g[i];
            auto row = acc.w[j].row(i);
            const Vector &a = p.inputs[j];
            for (std::size_t k = 0; k < a.size(); ++k)
                row[k] += g[i] * a[k];
        }
        if (j > 0)
            g = l.weights.apply_transposed(g);
    }
}

/// Adam over all layers; rebuilds the Network so the split invariant is rechecked.
class FullAdam {
public:
    FullAdam(const Network &net, double lr) : lr_(lr), m_(zero_grads(net)), v_(zero_grads(net)) {}

    Network step(const Network &net, const Grads &g)
    {
        ++t_;
        const double c1 = 1.0 - std::pow(0.9, t_), c2 = 1.0 - std::pow(0.999, t_);
        std::vector<Layer> layers = net.layers();
        auto upd = [&](std::vector<double> &p, const std::vector<double> &gr, std::vector<double> &m,
                       std::vector<double> &v) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = 0.9 * m[i] + 0.1 * gr[i];
                v[i] = 0.999 * v[i] + 0.001 * gr[i] * gr[i];
                p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-8);
            }
        };
        for (std::size_t j = 0; j < layers.size(); ++j) {
            upd(layers[j].weights.data(), g.w[j].data(), m_.w[j].data(), v_.w[j].data());
            upd(layers[j].bias, g.b[j], m_.b[j], v_.b[j]);
        }
        return Network(std::move(layers), net.split(), net.normalization());
    }

private:
    double lr_;
    double t_ = 0.0;
    Grads m_, v_;
};

/// input_of(i) gives sample i; output_grad(i, out) gives dLoss/d(raw output).
template <typename InputOf, typename OutputGrad>
Network train(Network net, std::size_t n, const TrainConfig &cfg, InputOf input_of, OutputGrad output_grad)
{
    Rng rng(cfg.seed);
    FullAdam adam(net, cfg.lr);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += cfg.batch) {
            const std::size_t end = std::min(n, start + cfg.batch);
            Grads g = zero_grads(net);
            const double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t s = start; s < end; ++s) {
                const Pass p = forward_pass(net, input_of(order[s]));
                Vector dy = output_grad(order[s], p.out);
                for (double &v : dy)
                    v *= scale;
                backprop(net, p, std::move(dy), g);
            }
            net = adam.step(net, g);
        }
    }
    return net;
}

} // namespace

Network train_classifier(Network net, const Dataset &data, const TrainConfig &cfg)
{
    return train(
        std::move(net), data.size(), cfg, [&](std::size_t i) -> const Vector & { return data.inputs[i]; },
        [&](std::size_t i, const Vector &logits) {
            const double mx = *std::max_element(logits.begin(), logits.end());
            Vector p(logits.size());
            double z = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k)
                z += p[k] = std::exp(logits[k] - mx);
            for (double &v : p)
                v /= z;
            p[data.labels[i]] -= 1.0;
            return p;
        });
}

Network train_regressor(Network net, const std::vector<Vector> &inputs, const std::vector<Vector> &targets,
                        const TrainConfig &cfg)
{
    return train(
        std::move(net), inputs.size(), cfg, [&](std::size_t i) -> const Vector & { return inputs[i]; },
        [&](std::size_t i, const Vector &out) {
            Vector d(out.size());
            for (std::size_t k = 0; k < d.size(); ++k)
                d[k] = 2.0 * (out[k] - targets[i][k]);
            return d;
        });
}

namespace {

constexpr int kSide = 28;

struct Stroke {
    double x0, y0, x1, y1;
};

double segment_distance(double px, double py, const Stroke &s)
{
    const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double cx = s.x0 + t * dx - px, cy = s.y0 + t * dy - py;
    return std::sqrt(cx * cx + cy * cy);
}

Vector render(const std::vector<Stroke> &strokes, double intensity)
{
    Vector img(kSide * kSide, 0.0);
    for (int r = 0; r < kSide; ++r) {
        for (int c = 0; c < kSide; ++c) {
            double v = 0.0;
            for (const Stroke &s : strokes) {
                const double d = segment_distance(c, r, s);
                v = std::max(v, std::exp(-d * d / 2.0));
            }
            img[static_cast<std::size_t>(r * kSide + c)] = intensity * v;
        }
    }
    return img;
}

std::vector<std::vector<Stroke>> glyph_strokes(std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<std::vector<Stroke>> classes(10);
    for (auto &strokes : classes) {
        for (int k = 0; k < 3; ++k)
            strokes.push_back({uniform(rng, 6, 22), uniform(rng, 6, 22), uniform(rng, 6, 22), uniform(rng, 6, 22)});
    }
    return classes;
}

Vector sample_glyph(const std::vector<Stroke> &proto, Rng &rng)
{
    std::normal_distribution<double> noise(0.0, 0.08);
    const double dx = uniform(rng, -2.0, 2.0), dy = uniform(rng, -2.0, 2.0);
    std::vector<Stroke> strokes = proto;
    for (Stroke &s : strokes) {
        s.x0 += dx + uniform(rng, -1.5, 1.5);
        s.y0 += dy + uniform(rng, -1.5, 1.5);
        s.x1 += dx + uniform(rng, -1.5, 1.5);
        s.y1 += dy + uniform(rng, -1.5, 1.5);
    }
    Vector img = render(strokes, uniform(rng, 0.7, 1.0));
    for (double &v : img)
        v = std::clamp(v + noise(rng), 0.0, 1.0);
    return img;
}

} // namespace

GlyphData make_glyphs(std::uint64_t seed, std::size_t n_train, std::size_t n_test)
{
    const auto classes = glyph_strokes(seed);
    Rng rng(seed + 1);
    GlyphData data;
    for (const auto &proto : classes)
        data.prototypes.push_back(render(proto, 1.0));
    auto fill = [&](Dataset &d, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t label = i % 10;
            d.inputs.push_back(sample_glyph(classes[label], rng));
            d.labels.push_back(label);
        }
    };
    fill(data.train, n_train);
    fill(data.test, n_test);
    return data;
}

Vector corrupt_glyph(const Vector &x, Rng &rng, double severity)
{
    std::normal_distribution<double> noise(0.0, 0.1 * severity);
    const double contrast = 1.0 - 0.55 * severity, haze_amp = 0.45 * severity;
    const double fx = uniform(rng, 0.5, 2.0), fy = uniform(rng, 0.5, 2.0), phase = uniform(rng, 0.0, 6.283);
    Vector out(x.size());
    for (int r = 0; r < kSide; ++r) {
        for (int c = 0; c < kSide; ++c) {
            const auto i = static_cast<std::size_t>(r * kSide + c);
            const double haze = haze_amp * (0.5 + 0.5 * std::sin(6.283 * (fx * c + fy * r) / kSide + phase));
            out[i] = std::clamp(contrast * x[i] + haze + noise(rng), 0.0, 1.0);
        }
    }
    return out;
}

Network train_glyph_classifier(const GlyphData &data, std::uint64_t seed)
{
    Rng rng(seed);
    Network net = random_network(rng, {784, 100, 100, 100, 10}, Activation::relu());
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch = 32;
    cfg.lr = 1e-3;
    cfg.seed = seed;
    return train_classifier(std::move(net), data.train, cfg);
}

Normalization acas_normalization()
{
    const double pi = 3.141592653589793;
    Normalization n;
    n.input_min = {0.0, -pi, -pi, 100.0, 0.0};
    n.input_max = {60760.0, pi, pi, 1200.0, 1200.0};
    n.input_mean = {19791.091, 0.0, 0.0, 650.0, 600.0};
    n.input_range = {60261.0, 6.28318530718, 6.28318530718, 1100.0, 1200.0};
    n.output_mean.assign(5, 7.5188840201005975);
    n.output_range.assign(5, 373.94992);
    return n;
}

std::vector<Property> acas_property2()
{
    const double pi = std::numbers::pi;
    Property p;
    p.label = "acasxu_property2";
    p.input = Box({55947.691, -pi, -pi, 1145.0, 0.0}, {60760.0, pi, pi, 1200.0, 60.0});
    for (std::size_t j = 1; j < 5; ++j) {
        LinearConstraint c;
        c.coeffs.assign(5, 0.0);
        c.coeffs[j] = 1.0;
        c.coeffs[0] = -1.0;
        p.constraints.push_back(std::move(c));
    }
    return {p};
}

namespace {

/// Synthetic advisory scores on normalized inputs (lower is better), in raw output units.
Vector advisory_scores(const Vector &xn, double pocket_theta, double pocket_psi)
{
    const double r = xn[0], th = xn[1], ps = xn[2], vo = xn[3], vi = xn[4];
    const double pi = std::numbers::pi;
    const double close = 1.0 / (1.0 + std::exp((r - 0.25) * 12.0));
    const double speed = 0.5 + 0.5 * std::tanh(3.0 * (vi - vo));
    Vector s(5);
    s[0] = 0.02 + 0.10 * close + 0.02 * speed;
    s[1] = 0.05 + 0.02 * (1.0 + std::sin(pi * th)) + 0.01 * std::cos(pi * ps) - 0.03 * close * (th > 0 ? 1.0 : 0.3);
    s[2] = 0.06 + 0.02 * (1.0 + std::sin(pi * th + 0.7)) + 0.01 * std::sin(pi * ps) - 0.04 * close * (th > 0.2);
    s[3] = 0.05 + 0.02 * (1.0 - std::sin(pi * th)) + 0.01 * std::cos(pi * ps + 0.5) - 0.03 * close * (th < 0);
    s[4] = 0.06 + 0.02 * (1.0 - std::sin(pi * th + 0.4)) + 0.01 * std::sin(pi * ps + 1.0) - 0.04 * close * (th < -0.2);
    // Defect: near the planted pocket, far-away encounters score COC too high.
    const double far = 1.0 / (1.0 + std::exp(-(r - 0.55) * 40.0));
    const double dth = th - pocket_theta, dps = ps - pocket_psi;
    s[0] += 0.07 * far * std::exp(-(dth * dth + dps * dps) / (2.0 * 0.06 * 0.06));
    return s;
}

} // namespace

Network make_acas_like(std::uint64_t seed)
{
    Rng rng(seed);
    const Normalization norm = acas_normalization();
    const Box domain(norm.input_min, norm.input_max);
    const Box region = acas_property2().front().input;
    const double pocket_theta = uniform(rng, -0.35, 0.35), pocket_psi = uniform(rng, -0.35, 0.35);

    std::vector<Vector> inputs, targets;
    for (std::size_t i = 0; i < 8000; ++i) {
        const Vector x = sample_in_box(rng, i % 2 == 0 ? domain : region);
        Vector xn(5);
        for (std::size_t k = 0; k < 5; ++k)
            xn[k] = (x[k] - norm.input_mean[k]) / norm.input_range[k];
        inputs.push_back(x);
        targets.push_back(advisory_scores(xn, pocket_theta, pocket_psi));
    }

    Network init = random_network(rng, {5, 50, 50, 50, 50, 50, 50, 5}, Activation::relu(), 0, 0.5);
    Network net(init.layers(), init.split(), norm);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch = 32;
    cfg.lr = 1e-3;
    cfg.seed = seed;
    return train_regressor(std::move(net), inputs, targets, cfg);
}

} // namespace boxrepair::fixtures
