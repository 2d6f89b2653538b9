#pragma once

#include "boxrepair/linalg.hpp"
#include "boxrepair/network.hpp"

#include <span>
#include <string>
#include <vector>

namespace boxrepair {

/// One point to repair: drive f_e(input) toward the certified feature-space target.
struct PointTask {
    Vector input;
    Vector target;
    std::string label;
};

/// Gradients for the feature-extractor layers only; entry i mirrors layer i < split.
struct ParamGrads {
    std::vector<Matrix> weights;
    std::vector<Vector> bias;

    static ParamGrads zeros_like(const Network &net);
    double max_abs() const;
};

/// Mean Euclidean distance between f_e(input) and target over the tasks.
double repair_loss(const Network &net, std::span<const PointTask> tasks);

/// Exact gradient of repair_loss w.r.t. every feature-extractor parameter. Tasks already at
/// their target (distance below 1e-12) contribute nothing.
ParamGrads backward(const Network &net, std::span<const PointTask> tasks);

struct AdamConfig {
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    ParamGrads first_moment;
    ParamGrads second_moment;
    std::size_t step = 0;

    static AdamState init(const Network &net, AdamConfig config = {});
};

/// One bias-corrected Adam update of the feature extractor; returns the new snapshot.
Network adam_step(AdamState &state, const Network &net, const ParamGrads &grads);

} // namespace boxrepair
