#pragma once

#include "boxrepair/linalg.hpp"
#include "boxrepair/network.hpp"
#include "boxrepair/property.hpp"

#include <span>
#include <string>
#include <vector>

namespace boxrepair {

enum class BoundsMode { IBP, Backward };

std::string to_string(BoundsMode mode);
BoundsMode bounds_mode_from_string(const std::string &name);

/// lower_slope*z + lower_intercept <= act(z) <= upper_slope*z + upper_intercept on [l, u].
struct ActivationRelaxation {
    double lower_slope = 0.0;
    double lower_intercept = 0.0;
    double upper_slope = 0.0;
    double upper_intercept = 0.0;

    double lower_at(double z) const { return lower_slope * z + lower_intercept; }
    double upper_at(double z) const { return upper_slope * z + upper_intercept; }
};

ActivationRelaxation relax_activation(const Activation &act, double l, double u);

/// Pre-activation intervals, one entry per layer of the bounded subnet.
struct PreActivationBounds {
    std::vector<Vector> lower;
    std::vector<Vector> upper;
};

/// Sound pre-activation bounds over the box. Backward mode is intersected with the
/// interval image, so it is never looser than IBP.
PreActivationBounds intermediate_bounds(const SubnetView &subnet, const Box &box, BoundsMode mode);

/// coeffs . x + bias <= c^T f(x) + d on the box it was computed for.
struct AffineBound {
    Vector coeffs;
    double bias = 0.0;

    double evaluate(std::span<const double> x) const { return dot(coeffs, x) + bias; }
};

struct BoundReport {
    std::vector<AffineBound> bounds; // one per constraint
    Vector lb;                       // min of each bound over the box
    std::vector<std::size_t> violated;

    bool verified() const { return violated.empty(); }
    double min_lb() const;
};

/// Back-substitutes each constraint through the subnet, choosing the lower relaxation line
/// for nonnegative coefficients and the upper line otherwise, then concretizes over the box.
BoundReport linear_lower_bounds(const SubnetView &subnet, const Box &box,
                                std::span<const LinearConstraint> constraints,
                                BoundsMode mode = BoundsMode::Backward);

} // namespace boxrepair
