#include "boxrepair/preimage.hpp"

#include <algorithm>
#include <stdexcept>

namespace boxrepair {

Box ProxyBox::box() const
{
    Box b = Box::around(center, radius);
    for (std::size_t i = 0; i < b.dim(); ++i) {
        b.lower[i] = std::max(b.lower[i], floor);
        b.upper[i] = std::min(b.upper[i], ceiling);
    }
    return b;
}

SynthesisResult synthesize_proxy_box(const SubnetView &head, const Vector &start,
                                     std::span<const LinearConstraint> constraints,
                                     const SynthesisOptions &options)
{
    if (start.size() != head.input_dim())
        throw std::invalid_argument("synthesize_proxy_box: start center has wrong dimension");
    if (!(options.radius > 0.0))
        throw std::invalid_argument("synthesize_proxy_box: radius must be positive");
    if (options.max_iterations < 1)
        throw std::invalid_argument("synthesize_proxy_box: need at least one iteration");
    if (!(options.feature_floor <= options.feature_ceiling))
        throw std::invalid_argument("synthesize_proxy_box: empty feature range");

    SynthesisResult result;
    Vector center = start;
    for (double &c : center)
        c = std::clamp(c, options.feature_floor, options.feature_ceiling);
    std::vector<Vector> visited{center};

    for (std::size_t iter = 0;; ++iter) {
        const ProxyBox proxy{center, options.radius, options.feature_floor, options.feature_ceiling};
        const Box box = proxy.box();
        const BoundReport report = linear_lower_bounds(head, box, constraints, options.mode);
        if (options.record_trajectory)
            result.trajectory.push_back({iter, report.lb, center});
        if (report.verified()) {
            result.proxy = proxy;
            return result;
        }
        if (iter == options.max_iterations) {
            result.failure = "no certified box after " + std::to_string(iter) + " shifts";
            return result;
        }

        Vector direction(center.size(), 0.0);
        for (std::size_t psi : report.violated) {
            const Vector &alpha = report.bounds[psi].coeffs;
            for (std::size_t i = 0; i < direction.size(); ++i)
                direction[i] += alpha[i];
        }
        center = affine_argmax_over_box(direction, box);
        result.shifts += 1;

        if (std::find(visited.begin(), visited.end(), center) != visited.end()) {
            result.failure = "center sequence revisited an earlier center after " + std::to_string(result.shifts) +
                             " shifts";
            return result;
        }
        visited.push_back(center);
    }
}

} // namespace boxrepair
