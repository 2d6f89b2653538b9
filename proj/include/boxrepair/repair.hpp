#pragma once

#include "boxrepair/autodiff.hpp"
#include "boxrepair/bounds.hpp"
#include "boxrepair/network.hpp"
#include "boxrepair/preimage.hpp"
#include "boxrepair/property.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace boxrepair {

struct RepairConfig {
    double radius = 0.1;                 // proxy box radius
    std::size_t box_iterations = 100;    // center shifts per proxy box
    std::size_t repair_iterations = 1000; // optimizer steps per point-wise repair
    std::size_t budget = 10000;          // max live sub-properties in region-wise repair
    AdamConfig adam;
    BoundsMode bounds_mode = BoundsMode::Backward;

    void validate() const;
};

enum class RepairStatus { Repaired, Failed };

std::string to_string(RepairStatus status);

struct RoundStats {
    std::size_t properties = 0;      // live properties verified this round
    std::size_t violated = 0;        // properties with a nonempty Vio
    std::size_t counterexamples = 0; // confirmed counterexamples this round
    std::size_t new_counterexamples = 0;
    std::size_t optimizer_steps = 0;
};

struct RepairStats {
    std::size_t optimizer_steps = 0;
    std::size_t final_properties = 0;
    std::size_t refinements = 0;
    std::size_t proxy_shifts = 0;
    std::size_t tasks_within_radius = 0; // tasks with ||f_e(x) - h*||_2 <= r at the end
    double wall_seconds = 0.0;
    std::vector<RoundStats> rounds;
    std::vector<double> loss;
};

struct RepairOutcome {
    RepairStatus status = RepairStatus::Failed;
    Network network;
    RepairStats stats;
    std::string diagnostic;
    std::vector<PointTask> tasks;          // final point tasks (point-wise) or all counterexample tasks
    std::vector<Property> final_properties; // live sub-properties (region-wise)

    bool repaired() const { return status == RepairStatus::Repaired; }
};

/// Repairs properties whose input sets are single points: certify one proxy box per
/// property on the frozen head, then run Adam on the feature extractor until every
/// property holds under direct evaluation.
RepairOutcome point_wise_repair(const Network &net, std::span<const Property> props, const RepairConfig &cfg);

struct Counterexample {
    BoundReport report;
    std::optional<Vector> candidate; // linearized worst input, present when Vio is nonempty
    std::optional<Vector> confirmed; // candidate that really violates the property
    Vector refine_score;             // zeros when Vio is empty
};

Counterexample generate_counterexample(const Network &net, const Property &prop,
                                       BoundsMode mode = BoundsMode::Backward);

/// Per input dimension: width times the summed |coefficient| of violated-constraint bounds.
Vector refine_score(const Property &prop, const BoundReport &report);

/// Bisects the input box of prop at the midpoint of dimension dim.
std::pair<Property, Property> refine_property(const Property &prop, std::size_t dim);

/// Counterexample-driven repair of box properties, refining violated properties until the
/// whole model verifies or the property budget is exhausted.
RepairOutcome region_wise_repair(const Network &net, std::span<const Property> props, const RepairConfig &cfg);

} // namespace boxrepair
