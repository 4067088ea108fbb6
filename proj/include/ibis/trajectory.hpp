#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ibis/action.hpp"
#include "ibis/mask.hpp"

namespace ibis {

enum class Termination {
    converged,         // oracle: IoU reached the threshold (or nothing left to fix)
    step_limit,        // oracle: max_steps clicks issued
    answered,          // episode: the policy emitted a final answer
    format_error,      // episode: the policy output failed to parse
    turn_limit,        // episode: max_turns actions executed
    budget_exhausted,  // episode: transcript character budget would be exceeded
};

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view s);

// One executed action (r_t, a_t, o_t) plus bookkeeping.
struct StepRecord {
    std::string think;
    std::string action_raw;  // the full tagged turn text
    Action action;
    std::vector<Click> clicks;  // pixel clicks sent to the segmenter this step
    Mask mask;                  // composite mask after the step
    std::string mask_ref;
    std::string observation_ref;
    std::optional<double> iou;
    std::optional<double> dsc;
    double seg_score = 0.0;
    bool erroneous = false;
};

struct Trajectory {
    std::string question;
    Mask initial_mask;  // o_0
    std::vector<StepRecord> steps;
    std::string final_turn;  // raw closing output: the answer turn, or the rejected text
    std::optional<std::string> final_answer;
    Termination termination = Termination::converged;

    const Mask& final_mask() const { return steps.empty() ? initial_mask : steps.back().mask; }
    // Steps whose action is a click list (reverts and END are not counted).
    int click_steps() const;
};

bool is_click_step(const StepRecord& s);

}  // namespace ibis
