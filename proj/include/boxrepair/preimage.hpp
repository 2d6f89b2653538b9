#pragma once

#include "boxrepair/bounds.hpp"
#include "boxrepair/linalg.hpp"
#include "boxrepair/network.hpp"

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace boxrepair {

/// l-infinity box in feature space whose every point the head maps into the valid outputs.
/// l-inf ball around center, clipped to [floor, ceiling] in every coordinate.
struct ProxyBox {
    Vector center;
    double radius = 0.0;
    double floor = -std::numeric_limits<double>::infinity();
    double ceiling = std::numeric_limits<double>::infinity();

    Box box() const;
};

struct SynthesisStep {
    std::size_t iteration = 0;
    Vector lb; // per-constraint lower bounds on the box around `center`
    Vector center;
};

struct SynthesisOptions {
    double radius = 0.1;
    std::size_t max_iterations = 100;
    BoundsMode mode = BoundsMode::Backward;
    bool record_trajectory = false;
    // Range the features can actually take (e.g. [0, inf) after ReLU). Boxes are clipped
    // to it so centers never drift where the feature extractor cannot follow.
    double feature_floor = -std::numeric_limits<double>::infinity();
    double feature_ceiling = std::numeric_limits<double>::infinity();
};

struct SynthesisResult {
    std::optional<ProxyBox> proxy;
    std::size_t shifts = 0;
    std::vector<SynthesisStep> trajectory;
    std::string failure; // empty on success

    bool ok() const { return proxy.has_value(); }
};

/// Shifts the box center toward the corner that most increases the bounds of the violated
/// constraints until every constraint's lower bound over the box is nonnegative.
/// Fails after max_iterations shifts, or as soon as a center repeats.
SynthesisResult synthesize_proxy_box(const SubnetView &head, const Vector &start,
                                     std::span<const LinearConstraint> constraints,
                                     const SynthesisOptions &options = {});

} // namespace boxrepair
