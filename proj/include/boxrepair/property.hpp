#pragma once

#include "boxrepair/linalg.hpp"

#include <string>
#include <vector>

namespace boxrepair {

/// coeffs . y + bias >= 0 over the network output y.
struct LinearConstraint {
    Vector coeffs;
    double bias = 0.0;

    double evaluate(std::span<const double> y) const { return dot(coeffs, y) + bias; }
};

/// An input box together with the output constraints every point of it must meet.
struct Property {
    Box input;
    std::vector<LinearConstraint> constraints;
    std::string label;

    bool is_pointwise() const { return input.is_point(); }

    /// Throws std::invalid_argument unless dims match (input_dim, output_dim) and constraints are nonempty.
    void validate(std::size_t input_dim, std::size_t output_dim) const;
};

/// Degenerate box at x with one constraint e_label - e_j >= 0 per other class j.
Property classification_property(const Vector &x, std::size_t label, std::size_t num_classes,
                                 std::string name = {});

/// Same constraints as classification_property over an arbitrary box.
Property classification_region(Box region, std::size_t label, std::size_t num_classes, std::string name = {});

} // namespace boxrepair
