#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ibis/trajectory.hpp"

namespace ibis {

enum class StepAggregation { mean, sum_capped };

struct RewardConfig {
    std::array<double, 3> iou_tiers{0.80, 0.70, 0.50};
    std::array<double, 4> tier_values{3, 2, 1, 0};
    double r_click = 1.0;
    double lambda_miss = 1.0;
    double gamma = 0.2;
    double r_eff = 1.0;
    int t_opt = 10;
    StepAggregation step_aggregation = StepAggregation::mean;

    void validate() const;
};

struct StepReward {
    double click = 0.0;
    double pseg = 0.0;
    double iou = 0.0;
};

struct RewardBreakdown {
    double s_format = 0.0;
    double s_ans = 0.0;
    double s_click = 0.0;
    double s_pseg = 0.0;
    double s_len = 0.0;
    double total = 0.0;
    std::vector<StepReward> per_step;
};

inline double combine(double s_ans, double s_format, double s_click, double s_pseg, double s_len) {
    return (s_ans + s_format + s_click + s_pseg + s_len) / 5.0;
}

// 1 iff every turn parses with the prescribed tag order and a valid payload.
int score_format(std::span<const std::string> turns);
// Exact match after trimming whitespace and case-folding.
int score_answer_mcq(std::string_view pred, std::string_view gold);
// Tier value for IoU > t0, t1 < IoU <= t0, t2 < IoU <= t1; the last value otherwise.
double score_answer_iou(double iou, const RewardConfig& cfg = {});
double score_answer_seg(const Mask& final_mask, const Mask& gt, const RewardConfig& cfg = {});
// +r_click for a positive click in gt \ prev or a negative click in prev \ gt; else -lambda_miss.
double score_click(const Click& click, const Mask& prev_mask, const Mask& gt, const RewardConfig& cfg = {});
int score_pseg(double iou_t, double iou_prev);
double score_len(int steps, const RewardConfig& cfg = {});

struct MissingGroundTruth : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Folds a trajectory into the five components. Segmentation tasks score s_ans by
// IoU tier against `gt`; when `gold_answer` is given the MCQ indicator is used.
// Per-step click and progress scores cover click steps only and are averaged
// (or summed and capped); with no click steps both are 0.
RewardBreakdown aggregate(const Trajectory& traj, const std::optional<Mask>& gt,
                          const std::optional<std::string>& gold_answer, const RewardConfig& cfg = {});

std::vector<std::string> turn_texts(const Trajectory& traj);

}  // namespace ibis
