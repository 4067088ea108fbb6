#pragma once

#include <exception>
#include <optional>
#include <stdexcept>
#include <string>

#include "ibis/segmenter.hpp"
#include "ibis/trajectory.hpp"

namespace ibis {

enum class TieBreak { row_major };

struct OracleConfig {
    double iou_threshold = 0.95;
    int max_steps = 20;
    TieBreak tie_break = TieBreak::row_major;
    bool annotate_radius = false;
    std::string target_label = "target";
};

// Largest closed radius whose disc around a cell at squared EDT `sq_distance`
// stays strictly inside the region: sqrt(d^2 - 1), truncated to the wire precision.
double inscribed_radius(std::int64_t sq_distance);

// Next corrective click, or nullopt when both error regions are empty.
// Positive at argmax D_fn if max D_fn >= max D_fp, else negative at argmax D_fp;
// argmax ties resolve to the smallest row, then the smallest column.
std::optional<Click> next_click(const Mask& pred, const Mask& gt, bool annotate_radius = false);

// Carries whatever was simulated before the segmenter failed.
struct SimulationError : std::runtime_error {
    SimulationError(const std::string& what, Trajectory t, std::exception_ptr c)
        : std::runtime_error(what), partial(std::move(t)), cause(std::move(c)) {}
    Trajectory partial;
    std::exception_ptr cause;
};

// Greedy click simulation from an empty mask until IoU >= threshold or max_steps.
// Steps carry clicks, masks and metrics; think/action_raw are left empty.
Trajectory simulate_trajectory(const Image& img, const Mask& gt, const Segmenter& seg, const OracleConfig& cfg);

}  // namespace ibis
