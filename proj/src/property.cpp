#include "boxrepair/property.hpp"

#include <stdexcept>

namespace boxrepair {

void Property::validate(std::size_t input_dim, std::size_t output_dim) const
{
    const std::string who = label.empty() ? std::string("property") : "property '" + label + "'";
    if (constraints.empty())
        throw std::invalid_argument(who + ": at least one constraint is required");
    if (input.dim() != input_dim)
        throw std::invalid_argument(who + ": input box has " + std::to_string(input.dim()) +
                                    " dimensions, network expects " + std::to_string(input_dim));
    for (std::size_t i = 0; i < input.dim(); ++i) {
        if (!(input.lower[i] <= input.upper[i]))
            throw std::invalid_argument(who + ": lower > upper at dimension " + std::to_string(i));
    }
    for (const LinearConstraint &c : constraints) {
        if (c.coeffs.size() != output_dim)
            throw std::invalid_argument(who + ": constraint has " + std::to_string(c.coeffs.size()) +
                                        " coefficients, network has " + std::to_string(output_dim) + " outputs");
    }
}

Property classification_region(Box region, std::size_t label, std::size_t num_classes, std::string name)
{
    if (label >= num_classes)
        throw std::invalid_argument("classification property: label out of range");
    Property prop;
    prop.input = std::move(region);
    prop.label = std::move(name);
    for (std::size_t j = 0; j < num_classes; ++j) {
        if (j == label)
            continue;
        LinearConstraint c;
        c.coeffs.assign(num_classes, 0.0);
        c.coeffs[label] = 1.0;
        c.coeffs[j] = -1.0;
        prop.constraints.push_back(std::move(c));
    }
    return prop;
}

Property classification_property(const Vector &x, std::size_t label, std::size_t num_classes, std::string name)
{
    return classification_region(Box::point(x), label, num_classes, std::move(name));
}

} // namespace boxrepair
