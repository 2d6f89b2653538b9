#include "boxrepair/repair.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace boxrepair {

void RepairConfig::validate() const
{
    if (!(radius > 0.0))
        throw std::invalid_argument("repair config: radius must be positive");
    if (box_iterations == 0 || repair_iterations == 0 || budget == 0)
        throw std::invalid_argument("repair config: iteration counts and budget must be positive");
    if (!(adam.lr > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
        !(adam.eps > 0.0))
        throw std::invalid_argument("repair config: invalid Adam hyperparameters");
}

std::string to_string(RepairStatus status) { return status == RepairStatus::Repaired ? "repaired" : "failed"; }

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool all_satisfied(const Network &net, std::span<const Property> props)
{
    return std::all_of(props.begin(), props.end(),
                       [&](const Property &p) { return net.satisfies(p.input.lower, p); });
}

bool same_constraints(const Property &a, const Property &b)
{
    if (a.constraints.size() != b.constraints.size())
        return false;
    for (std::size_t i = 0; i < a.constraints.size(); ++i) {
        if (a.constraints[i].coeffs != b.constraints[i].coeffs || a.constraints[i].bias != b.constraints[i].bias)
            return false;
    }
    return true;
}

/// Point-wise repair core. fallback[i], when set, is a previously certified center for
/// props[i] used if synthesis from the current features fails.
RepairOutcome repair_points(const Network &net, std::span<const Property> props,
                            std::span<const std::optional<Vector>> fallback, const RepairConfig &cfg)
{
    const auto start = Clock::now();
    RepairOutcome out;
    out.network = net;

    SynthesisOptions synth;
    synth.radius = cfg.radius;
    synth.max_iterations = cfg.box_iterations;
    synth.mode = cfg.bounds_mode;
    std::tie(synth.feature_floor, synth.feature_ceiling) = net.layer(net.split() - 1).activation.range();

    const SubnetView head = net.head();
    for (std::size_t i = 0; i < props.size(); ++i) {
        const Property &prop = props[i];
        if (!prop.is_pointwise())
            throw std::invalid_argument("point-wise repair: property '" + prop.label + "' is not a single point");
        prop.validate(net.input_dim(), net.output_dim());

        const Vector &x = prop.input.lower;
        SynthesisResult res = synthesize_proxy_box(head, net.forward_features(x), prop.constraints, synth);
        out.stats.proxy_shifts += res.shifts;
        Vector target;
        if (res.ok()) {
            target = res.proxy->center;
        } else if (i < fallback.size() && fallback[i]) {
            target = *fallback[i];
        } else {
            out.status = RepairStatus::Failed;
            out.diagnostic = "proxy box synthesis failed for property '" + prop.label + "': " + res.failure;
            out.stats.wall_seconds = seconds_since(start);
            return out;
        }
        out.tasks.push_back({x, std::move(target), prop.label});
    }

    AdamState adam = AdamState::init(net, cfg.adam);
    Network current = net;
    for (std::size_t step = 0;; ++step) {
        if (all_satisfied(current, props)) {
            out.status = RepairStatus::Repaired;
            break;
        }
        if (step == cfg.repair_iterations) {
            out.status = RepairStatus::Failed;
            out.diagnostic = "properties still violated after " + std::to_string(step) + " optimizer steps";
            break;
        }
        out.stats.loss.push_back(repair_loss(current, out.tasks));
        const ParamGrads grads = backward(current, out.tasks);
        current = adam_step(adam, current, grads);
        out.stats.optimizer_steps += 1;
    }

    for (const PointTask &t : out.tasks) {
        if (lp_norm(sub(current.forward_features(t.input), t.target), 2.0) <= cfg.radius)
            out.stats.tasks_within_radius += 1;
    }
    out.network = std::move(current);
    out.stats.wall_seconds = seconds_since(start);
    return out;
}

struct Verification {
    std::vector<Counterexample> results;
    std::size_t violated = 0;
};

Verification verify_all(const Network &net, std::span<const Property> props, BoundsMode mode)
{
    Verification v;
    v.results.reserve(props.size());
    for (const Property &p : props) {
        v.results.push_back(generate_counterexample(net, p, mode));
        if (!v.results.back().report.verified())
            v.violated += 1;
    }
    return v;
}

std::vector<Property> confirmed_points(std::span<const Property> live, const Verification &ver)
{
    std::vector<Property> found;
    for (std::size_t i = 0; i < live.size(); ++i) {
        if (!ver.results[i].confirmed)
            continue;
        Property point = live[i];
        point.input = Box::point(*ver.results[i].confirmed);
        found.push_back(std::move(point));
    }
    return found;
}

std::size_t split_dimension(const Property &prop, const Vector &score)
{
    const Vector widths = prop.input.widths();
    std::size_t best = 0;
    for (std::size_t i = 1; i < score.size(); ++i) {
        if (score[i] > score[best])
            best = i;
    }
    if (!(score[best] > 0.0)) {
        // No violated bound depends on a non-degenerate dimension; fall back to the widest one.
        best = static_cast<std::size_t>(std::max_element(widths.begin(), widths.end()) - widths.begin());
    }
    return best;
}

bool splittable(const Property &prop, std::size_t dim)
{
    const double l = prop.input.lower[dim], u = prop.input.upper[dim];
    const double mid = 0.5 * (l + u);
    return u > l && mid > l && mid < u;
}

} // namespace

RepairOutcome point_wise_repair(const Network &net, std::span<const Property> props, const RepairConfig &cfg)
{
    cfg.validate();
    return repair_points(net, props, {}, cfg);
}

Counterexample generate_counterexample(const Network &net, const Property &prop, BoundsMode mode)
{
    prop.validate(net.input_dim(), net.output_dim());
    Counterexample ce;
    ce.report = linear_lower_bounds(net.whole(), prop.input, prop.constraints, mode);
    if (ce.report.verified()) {
        ce.refine_score.assign(prop.input.dim(), 0.0);
        return ce;
    }
    // argmin of the summed violated bounds == argmax of their negation.
    Vector direction(prop.input.dim(), 0.0);
    for (std::size_t psi : ce.report.violated) {
        const Vector &w = ce.report.bounds[psi].coeffs;
        for (std::size_t i = 0; i < direction.size(); ++i)
            direction[i] -= w[i];
    }
    Vector x = affine_argmax_over_box(direction, prop.input);
    if (!net.satisfies(x, prop))
        ce.confirmed = x;
    ce.candidate = std::move(x);
    ce.refine_score = refine_score(prop, ce.report);
    return ce;
}

Vector refine_score(const Property &prop, const BoundReport &report)
{
    if (report.violated.empty())
        throw std::invalid_argument("refine_score: property has no violated constraints");
    const std::size_t m = prop.input.dim();
    Vector score(m, 0.0);
    for (std::size_t psi : report.violated) {
        const Vector &w = report.bounds.at(psi).coeffs;
        if (w.size() != m)
            throw std::invalid_argument("refine_score: bound dimension does not match the property");
        for (std::size_t i = 0; i < m; ++i)
            score[i] += std::abs(w[i]);
    }
    for (std::size_t i = 0; i < m; ++i)
        score[i] *= prop.input.upper[i] - prop.input.lower[i];
    return score;
}

std::pair<Property, Property> refine_property(const Property &prop, std::size_t dim)
{
    if (dim >= prop.input.dim())
        throw std::invalid_argument("refine_property: dimension out of range");
    if (!(prop.input.upper[dim] > prop.input.lower[dim]))
        throw std::invalid_argument("refine_property: dimension " + std::to_string(dim) + " has zero width");
    const double mid = 0.5 * (prop.input.lower[dim] + prop.input.upper[dim]);
    Property lo = prop, hi = prop;
    lo.input.upper[dim] = mid;
    hi.input.lower[dim] = mid;
    lo.label = prop.label + "/l" + std::to_string(dim);
    hi.label = prop.label + "/u" + std::to_string(dim);
    return {std::move(lo), std::move(hi)};
}

RepairOutcome region_wise_repair(const Network &net, std::span<const Property> props, const RepairConfig &cfg)
{
    cfg.validate();
    const auto start = Clock::now();
    for (const Property &p : props)
        p.validate(net.input_dim(), net.output_dim());
    if (props.size() > cfg.budget)
        throw std::invalid_argument("region-wise repair: more initial properties than the budget allows");

    RepairOutcome out;
    out.network = net;
    std::vector<Property> live(props.begin(), props.end());

    // Confirmed counterexamples accumulate across rounds; their last certified centers are
    // kept as fallbacks for when re-synthesis from the moved features fails.
    std::vector<Property> points;
    std::vector<std::optional<Vector>> centers;

    auto finish = [&](RepairStatus status, std::string diagnostic) {
        out.status = status;
        out.diagnostic = std::move(diagnostic);
        out.stats.final_properties = live.size();
        out.final_properties = live;
        out.stats.wall_seconds = seconds_since(start);
        return out;
    };

    Verification ver = verify_all(out.network, live, cfg.bounds_mode);
    std::vector<Property> found = confirmed_points(live, ver);

    while (true) {
        RoundStats round;
        round.properties = live.size();
        round.violated = ver.violated;
        round.counterexamples = found.size();

        for (Property &point : found) {
            const bool seen = std::any_of(points.begin(), points.end(), [&](const Property &q) {
                return q.input.lower == point.input.lower && same_constraints(q, point);
            });
            if (seen)
                continue;
            points.push_back(std::move(point));
            centers.emplace_back();
            round.new_counterexamples += 1;
        }

        if (round.counterexamples > 0) {
            RepairOutcome inner = repair_points(out.network, points, centers, cfg);
            round.optimizer_steps = inner.stats.optimizer_steps;
            out.stats.optimizer_steps += inner.stats.optimizer_steps;
            out.stats.proxy_shifts += inner.stats.proxy_shifts;
            out.stats.loss.insert(out.stats.loss.end(), inner.stats.loss.begin(), inner.stats.loss.end());
            out.stats.rounds.push_back(round);
            if (!inner.repaired()) {
                out.tasks = std::move(inner.tasks);
                return finish(RepairStatus::Failed, "point-wise repair aborted: " + inner.diagnostic);
            }
            for (std::size_t i = 0; i < inner.tasks.size(); ++i)
                centers[i] = inner.tasks[i].target;
            out.tasks = std::move(inner.tasks);
            out.stats.tasks_within_radius = inner.stats.tasks_within_radius;
            out.network = std::move(inner.network);
        } else {
            out.stats.rounds.push_back(round);
        }

        ver = verify_all(out.network, live, cfg.bounds_mode);
        found = confirmed_points(live, ver);
        if (ver.violated == 0)
            return finish(RepairStatus::Repaired, {});

        if (live.size() + ver.violated > cfg.budget)
            return finish(RepairStatus::Failed, "property budget of " + std::to_string(cfg.budget) + " exhausted");

        std::vector<Property> next;
        next.reserve(live.size() + ver.violated);
        for (std::size_t i = 0; i < live.size(); ++i) {
            if (ver.results[i].report.verified()) {
                next.push_back(std::move(live[i]));
                continue;
            }
            const std::size_t dim = split_dimension(live[i], ver.results[i].refine_score);
            if (!splittable(live[i], dim))
                return finish(RepairStatus::Failed,
                              "resolution exhausted: property '" + live[i].label + "' cannot be split further");
            auto [lo, hi] = refine_property(live[i], dim);
            next.push_back(std::move(lo));
            next.push_back(std::move(hi));
            out.stats.refinements += 1;
        }
        live = std::move(next);
    }
}

} // namespace boxrepair
