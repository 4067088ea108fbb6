#include "ibis/rewards.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/core.h>

#include "ibis/action.hpp"

namespace ibis {

void RewardConfig::validate() const {
    if (!(iou_tiers[0] > iou_tiers[1] && iou_tiers[1] > iou_tiers[2] && iou_tiers[2] > 0.0 && iou_tiers[0] < 1.0)) {
        throw std::invalid_argument("iou tiers must be strictly descending inside (0,1)");
    }
    if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
    if (t_opt < 1) throw std::invalid_argument("t_opt must be positive");
}

int score_format(std::span<const std::string> turns) {
    if (turns.empty()) return 0;
    return std::all_of(turns.begin(), turns.end(), [](const std::string& t) { return is_well_formed(t); }) ? 1 : 0;
}

namespace {
std::string normalize_answer(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}
}  // namespace

int score_answer_mcq(std::string_view pred, std::string_view gold) {
    return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0;
}

double score_answer_iou(double v, const RewardConfig& cfg) {
    for (std::size_t i = 0; i < cfg.iou_tiers.size(); ++i) {
        if (v > cfg.iou_tiers[i]) return cfg.tier_values[i];
    }
    return cfg.tier_values[3];
}

double score_answer_seg(const Mask& final_mask, const Mask& gt, const RewardConfig& cfg) {
    return score_answer_iou(iou(final_mask, gt), cfg);
}

double score_click(const Click& click, const Mask& prev_mask, const Mask& gt, const RewardConfig& cfg) {
    require_same_shape(prev_mask, gt, "score_click");
    if (!in_bounds(click, gt.rows(), gt.cols())) {
        throw std::out_of_range(fmt::format("click ({}, {}) outside {}x{}", click.row, click.col, gt.rows(), gt.cols()));
    }
    const bool in_gt = gt(click.row, click.col);
    const bool in_prev = prev_mask(click.row, click.col);
    const bool valid = click.polarity == Polarity::positive ? (in_gt && !in_prev) : (in_prev && !in_gt);
    return valid ? cfg.r_click : -cfg.lambda_miss;
}

int score_pseg(double iou_t, double iou_prev) { return iou_t > iou_prev ? 1 : 0; }

double score_len(int steps, const RewardConfig& cfg) {
    if (steps <= cfg.t_opt) return cfg.r_eff;
    return -cfg.gamma * static_cast<double>(steps - cfg.t_opt);
}

std::vector<std::string> turn_texts(const Trajectory& traj) {
    std::vector<std::string> turns;
    turns.reserve(traj.steps.size() + 1);
    for (const auto& s : traj.steps) turns.push_back(s.action_raw);
    if (!traj.final_turn.empty() || traj.termination == Termination::format_error) turns.push_back(traj.final_turn);
    return turns;
}

RewardBreakdown aggregate(const Trajectory& traj, const std::optional<Mask>& gt,
                          const std::optional<std::string>& gold_answer, const RewardConfig& cfg) {
    if (!gt && !gold_answer) throw MissingGroundTruth("aggregate needs a ground-truth mask or a gold answer");
    RewardBreakdown b;
    b.s_format = score_format(turn_texts(traj));

    double click_sum = 0.0;
    double pseg_sum = 0.0;
    int t = 0;
    if (gt) {
        const Mask* prev = &traj.initial_mask;
        double prev_iou = iou(*prev, *gt);
        for (const StepRecord& s : traj.steps) {
            const double cur_iou = iou(s.mask, *gt);
            if (is_click_step(s)) {
                StepReward r;
                double sum = 0.0;
                for (const Click& c : s.clicks) sum += score_click(c, *prev, *gt, cfg);
                r.click = s.clicks.empty() ? -cfg.lambda_miss : sum / static_cast<double>(s.clicks.size());
                r.pseg = score_pseg(cur_iou, prev_iou);
                r.iou = cur_iou;
                click_sum += r.click;
                pseg_sum += r.pseg;
                b.per_step.push_back(r);
                ++t;
            }
            prev = &s.mask;
            prev_iou = cur_iou;
        }
    } else {
        t = traj.click_steps();
    }

    if (t > 0) {
        if (cfg.step_aggregation == StepAggregation::mean) {
            b.s_click = click_sum / t;
            b.s_pseg = pseg_sum / t;
        } else {
            const double cap = static_cast<double>(cfg.t_opt);
            b.s_click = std::clamp(click_sum, -cfg.lambda_miss * cap, cfg.r_click * cap);
            b.s_pseg = std::min(pseg_sum, cap);
        }
    }
    b.s_len = score_len(t, cfg);
    if (gold_answer) {
        b.s_ans = traj.final_answer ? score_answer_mcq(*traj.final_answer, *gold_answer) : 0;
    } else {
        b.s_ans = score_answer_seg(traj.final_mask(), *gt, cfg);
    }
    b.total = combine(b.s_ans, b.s_format, b.s_click, b.s_pseg, b.s_len);
    return b;
}

}  // namespace ibis
