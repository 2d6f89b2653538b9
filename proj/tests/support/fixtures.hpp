#pragma once

// Test-only helpers: random models, brute-force oracles, a small trainer and the
// synthetic datasets the acceptance suite repairs against.

#include "boxrepair/network.hpp"
#include "boxrepair/specio.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace boxrepair::fixtures {

using Rng = std::mt19937_64;

double uniform(Rng &rng, double lo, double hi);

/// He-scaled random dense net; `widths` lists input, hidden..., output widths.
Network random_network(Rng &rng, const std::vector<std::size_t> &widths, Activation hidden,
                       std::size_t split = 0, double weight_scale = 1.0);

Box random_box(Rng &rng, std::size_t dim, double center_span, double max_half_width);
Vector sample_in_box(Rng &rng, const Box &box);

// Corner-enumeration oracles for linear objectives over a box.
double corner_min(std::span<const double> a, double b, const Box &box);
double corner_max_value(std::span<const double> a, const Box &box);

/// Independent evaluator following the reference NNet semantics (inputs clamped to the
/// stored min/max, normalized, ReLU hidden layers, shared output de-normalization).
class ReferenceNnet {
public:
    explicit ReferenceNnet(const std::filesystem::path &path);
    Vector evaluate(const Vector &x) const;

    std::size_t input_size() const { return mins_.size(); }
    const Vector &mins() const { return mins_; }
    const Vector &maxes() const { return maxes_; }

private:
    std::vector<std::vector<Vector>> weights_;
    std::vector<Vector> biases_;
    Vector mins_, maxes_, means_, ranges_;
};

struct TrainConfig {
    std::size_t epochs = 5;
    std::size_t batch = 32;
    double lr = 1e-3;
    std::uint64_t seed = 1;
};

/// Softmax cross-entropy training of every layer with Adam.
Network train_classifier(Network net, const Dataset &data, const TrainConfig &cfg);

/// Mean-squared-error regression of the raw (pre de-normalization) outputs.
Network train_regressor(Network net, const std::vector<Vector> &inputs, const std::vector<Vector> &targets,
                        const TrainConfig &cfg);

/// 28x28 ten-class stroke glyphs with shift, intensity and pixel noise.
struct GlyphData {
    Dataset train;
    Dataset test;
    std::vector<Vector> prototypes;
};
GlyphData make_glyphs(std::uint64_t seed, std::size_t n_train, std::size_t n_test);

/// Fog-like corruption: contrast loss plus a smooth additive haze and pixel noise, all
/// scaled by severity (1 is the strongest setting).
Vector corrupt_glyph(const Vector &x, Rng &rng, double severity = 1.0);

/// 784-100-100-100-10 ReLU classifier trained on the glyphs.
Network train_glyph_classifier(const GlyphData &data, std::uint64_t seed);

// ACAS Xu conventions: input order (rho, theta, psi, v_own, v_int), outputs
// (COC, WR, SR, WL, SL), lowest score is the chosen advisory.
Normalization acas_normalization();
std::vector<Property> acas_property2();

/// ACAS-shaped 5-(6x50)-5 network trained on a synthetic advisory table with a planted
/// pocket where COC is not the lowest score inside the Property-2 region.
Network make_acas_like(std::uint64_t seed);

} // namespace boxrepair::fixtures
