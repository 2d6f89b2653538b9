#include "boxrepair/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace boxrepair {

std::string to_string(BoundsMode mode) { return mode == BoundsMode::IBP ? "ibp" : "backward"; }

BoundsMode bounds_mode_from_string(const std::string &name)
{
    if (name == "ibp")
        return BoundsMode::IBP;
    if (name == "backward" || name == "crown")
        return BoundsMode::Backward;
    throw std::invalid_argument("unknown bounds mode '" + name + "'");
}

double BoundReport::min_lb() const
{
    return lb.empty() ? 0.0 : *std::min_element(lb.begin(), lb.end());
}

namespace {

ActivationRelaxation exact_line(double slope, double intercept) { return {slope, intercept, slope, intercept}; }

ActivationRelaxation relax_piecewise_linear(double neg_slope, double l, double u)
{
    if (l >= 0.0)
        return exact_line(1.0, 0.0);
    if (u <= 0.0)
        return exact_line(neg_slope, 0.0);
    // Unstable: chord above, and whichever of the two pieces covers more area below.
    ActivationRelaxation r;
    r.upper_slope = (u - neg_slope * l) / (u - l);
    r.upper_intercept = neg_slope * l - r.upper_slope * l;
    r.lower_slope = u >= -l ? 1.0 : neg_slope;
    r.lower_intercept = 0.0;
    return r;
}

double tanh_slope(double z)
{
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

struct Line {
    double slope;
    double intercept;
};

Line tangent(double z)
{
    const double s = tanh_slope(z);
    return {s, std::tanh(z) - s * z};
}

Line chord(double l, double u)
{
    const double s = (std::tanh(u) - std::tanh(l)) / (u - l);
    return {s, std::tanh(l) - s * l};
}

// Upper line for tanh on [l, u] with l < 0 < u: tangent at d >= 0 that passes through
// (l, tanh(l)) when d <= u, otherwise the chord.
Line tanh_upper_mixed(double l, double u)
{
    const double tl = std::tanh(l);
    auto gap = [&](double d) { return std::tanh(d) + tanh_slope(d) * (l - d) - tl; };
    if (gap(u) < 0.0)
        return chord(l, u);
    double lo = 0.0, hi = u;
    for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) >= 0.0 ? hi : lo) = mid;
    }
    // gap(hi) >= 0, so the tangent at hi lies on or above tanh(l).
    return tangent(hi);
}

ActivationRelaxation relax_tanh(double l, double u)
{
    if (u - l < 1e-12) {
        // Tangent at the midpoint; a second-order slack keeps both lines sound.
        const double m = 0.5 * (l + u);
        const Line t = tangent(m);
        const double slack = (u - l) * (u - l) + 1e-15;
        return {t.slope, t.intercept - slack, t.slope, t.intercept + slack};
    }
    ActivationRelaxation r;
    if (u <= 0.0) {
        const Line up = chord(l, u);
        const Line lo = tangent(0.5 * (l + u));
        r = {lo.slope, lo.intercept, up.slope, up.intercept};
    } else if (l >= 0.0) {
        const Line lo = chord(l, u);
        const Line up = tangent(0.5 * (l + u));
        r = {lo.slope, lo.intercept, up.slope, up.intercept};
    } else {
        const Line up = tanh_upper_mixed(l, u);
        // tanh is odd: reflect the upper line of [-u, -l].
        const Line mirrored = tanh_upper_mixed(-u, -l);
        r = {mirrored.slope, -mirrored.intercept, up.slope, up.intercept};
    }
    return r;
}

/// Interval image of [lo, hi] under W a + b.
void interval_affine(const Layer &layer, const Vector &lo, const Vector &hi, Vector &out_lo, Vector &out_hi)
{
    const std::size_t n = layer.out_dim(), m = layer.in_dim();
    out_lo.assign(n, 0.0);
    out_hi.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto w = layer.weights.row(i);
        double a = layer.bias[i], b = layer.bias[i];
        for (std::size_t k = 0; k < m; ++k) {
            if (w[k] >= 0.0) {
                a += w[k] * lo[k];
                b += w[k] * hi[k];
            } else {
                a += w[k] * hi[k];
                b += w[k] * lo[k];
            }
        }
        out_lo[i] = a;
        out_hi[i] = b;
    }
}

void activate_interval(const Activation &act, Vector &lo, Vector &hi)
{
    // All supported activations are monotone non-decreasing.
    for (std::size_t i = 0; i < lo.size(); ++i) {
        lo[i] = act.apply(lo[i]);
        hi[i] = act.apply(hi[i]);
    }
}

Box normalized_box(const SubnetView &subnet, const Box &box)
{
    if (subnet.input_mean.empty())
        return box;
    Box out = box;
    for (std::size_t i = 0; i < box.dim(); ++i) {
        out.lower[i] = (box.lower[i] - subnet.input_mean[i]) / subnet.input_range[i];
        out.upper[i] = (box.upper[i] - subnet.input_mean[i]) / subnet.input_range[i];
    }
    return out;
}

/// Linear functions of one layer's pre-activation, carried down to the subnet input.
class BackSubstitution {
public:
    BackSubstitution(const SubnetView &subnet, const std::vector<std::vector<ActivationRelaxation>> &relax)
        : subnet_(subnet), relax_(relax)
    {
    }

    /// Replaces lam (acting on z_j, the pre-activation of layer j) by coefficients on the
    /// subnet's physical input; bias accumulates the constant terms.
    void run(std::size_t j, Matrix &lam, Vector &bias) const
    {
        for (std::size_t layer = j + 1; layer-- > 0;) {
            const Layer &L = subnet_.layers[layer];
            for (std::size_t r = 0; r < lam.rows(); ++r)
                bias[r] += dot(lam.row(r), L.bias);
            lam = lam.matmul(L.weights);
            if (layer == 0)
                break;
            relax_through(layer - 1, lam, bias);
        }
        if (!subnet_.input_mean.empty()) {
            for (std::size_t r = 0; r < lam.rows(); ++r) {
                auto row = lam.row(r);
                for (std::size_t k = 0; k < row.size(); ++k) {
                    const double c = row[k] / subnet_.input_range[k];
                    bias[r] -= c * subnet_.input_mean[k];
                    row[k] = c;
                }
            }
        }
    }

    /// lam acts on act(z_layer); rewrite it to act on z_layer via the relaxation lines.
    void relax_through(std::size_t layer, Matrix &lam, Vector &bias) const
    {
        if (subnet_.layers[layer].activation.kind == ActivationKind::Identity)
            return;
        const auto &rel = relax_[layer];
        for (std::size_t r = 0; r < lam.rows(); ++r) {
            auto row = lam.row(r);
            double acc = 0.0;
            for (std::size_t k = 0; k < row.size(); ++k) {
                const double c = row[k];
                if (c >= 0.0) {
                    acc += c * rel[k].lower_intercept;
                    row[k] = c * rel[k].lower_slope;
                } else {
                    acc += c * rel[k].upper_intercept;
                    row[k] = c * rel[k].upper_slope;
                }
            }
            bias[r] += acc;
        }
    }

private:
    const SubnetView &subnet_;
    const std::vector<std::vector<ActivationRelaxation>> &relax_;
};

struct BoundState {
    PreActivationBounds pre;
    std::vector<std::vector<ActivationRelaxation>> relax;
};

/// Fills pre-activation bounds and relaxations for layers [0, count).
BoundState compute_layer_bounds(const SubnetView &subnet, const Box &box, BoundsMode mode, std::size_t count)
{
    if (box.dim() != subnet.input_dim())
        throw std::invalid_argument("bounds: box has " + std::to_string(box.dim()) + " dimensions, subnet expects " +
                                    std::to_string(subnet.input_dim()));
    BoundState st;
    st.pre.lower.resize(count);
    st.pre.upper.resize(count);
    st.relax.resize(count);

    const Box nbox = normalized_box(subnet, box);
    Vector post_lo = nbox.lower, post_hi = nbox.upper;
    BackSubstitution backsub(subnet, st.relax);

    for (std::size_t j = 0; j < count; ++j) {
        const Layer &layer = subnet.layers[j];
        Vector lo, hi;
        interval_affine(layer, post_lo, post_hi, lo, hi);

        if (mode == BoundsMode::Backward && j > 0) {
            const std::size_t n = layer.out_dim();
            Matrix lam = Matrix::identity(n);
            Vector bias(n, 0.0);
            backsub.run(j, lam, bias);
            Matrix neg = Matrix::identity(n);
            for (double &v : neg.data())
                v = -v;
            Vector nbias(n, 0.0);
            backsub.run(j, neg, nbias);
            for (std::size_t i = 0; i < n; ++i) {
                const double bl = affine_min_over_box(lam.row(i), bias[i], box);
                const double bu = -affine_min_over_box(neg.row(i), nbias[i], box);
                lo[i] = std::max(lo[i], bl);
                hi[i] = std::min(hi[i], bu);
                if (lo[i] > hi[i])
                    std::swap(lo[i], hi[i]);
            }
        }

        st.relax[j].resize(layer.out_dim());
        for (std::size_t i = 0; i < layer.out_dim(); ++i)
            st.relax[j][i] = relax_activation(layer.activation, lo[i], hi[i]);

        post_lo = lo;
        post_hi = hi;
        activate_interval(layer.activation, post_lo, post_hi);
        st.pre.lower[j] = std::move(lo);
        st.pre.upper[j] = std::move(hi);
    }
    return st;
}

} // namespace

ActivationRelaxation relax_activation(const Activation &act, double l, double u)
{
    if (!(l <= u))
        throw std::invalid_argument("relax_activation: lower bound exceeds upper bound");
    switch (act.kind) {
    case ActivationKind::ReLU:
        return relax_piecewise_linear(0.0, l, u);
    case ActivationKind::LeakyReLU:
        return relax_piecewise_linear(act.slope, l, u);
    case ActivationKind::Tanh:
        return relax_tanh(l, u);
    case ActivationKind::Identity:
        break;
    }
    return exact_line(1.0, 0.0);
}

PreActivationBounds intermediate_bounds(const SubnetView &subnet, const Box &box, BoundsMode mode)
{
    return compute_layer_bounds(subnet, box, mode, subnet.layers.size()).pre;
}

BoundReport linear_lower_bounds(const SubnetView &subnet, const Box &box,
                                std::span<const LinearConstraint> constraints, BoundsMode mode)
{
    const std::size_t depth = subnet.layers.size();
    const std::size_t top = depth - 1;
    const bool top_nonlinear = subnet.layers[top].activation.kind != ActivationKind::Identity;
    const BoundState st = compute_layer_bounds(subnet, box, mode, top_nonlinear ? depth : top);

    const std::size_t n = subnet.output_dim();
    const std::size_t q = constraints.size();
    Matrix lam(q, n);
    Vector bias(q, 0.0);
    for (std::size_t r = 0; r < q; ++r) {
        const LinearConstraint &c = constraints[r];
        if (c.coeffs.size() != n)
            throw std::invalid_argument("linear_lower_bounds: constraint has " + std::to_string(c.coeffs.size()) +
                                        " coefficients, subnet has " + std::to_string(n) + " outputs");
        bias[r] = c.bias;
        for (std::size_t k = 0; k < n; ++k) {
            double coeff = c.coeffs[k];
            if (!subnet.output_mean.empty()) {
                bias[r] += coeff * subnet.output_mean[k];
                coeff *= subnet.output_range[k];
            }
            lam(r, k) = coeff;
        }
    }

    std::vector<std::vector<ActivationRelaxation>> relax = st.relax;
    relax.resize(depth);
    BackSubstitution backsub(subnet, relax);
    backsub.relax_through(top, lam, bias);
    backsub.run(top, lam, bias);

    BoundReport report;
    report.bounds.resize(q);
    report.lb.resize(q);
    for (std::size_t r = 0; r < q; ++r) {
        const auto row = lam.row(r);
        report.bounds[r].coeffs.assign(row.begin(), row.end());
        report.bounds[r].bias = bias[r];
        report.lb[r] = affine_min_over_box(report.bounds[r].coeffs, bias[r], box);
        if (report.lb[r] < 0.0)
            report.violated.push_back(r);
    }
    return report;
}

} // namespace boxrepair
