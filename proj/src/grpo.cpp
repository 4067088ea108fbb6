#include "ibis/grpo.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include <fmt/core.h>

#include "ibis/click_oracle.hpp"
#include "ibis/parallel.hpp"
#include "ibis/rng.hpp"

namespace ibis {

double clipped_objective(const RolloutGroup& group, std::span<const double> adv, double eps_clip) {
    const std::size_t g = group.paths.size();
    if (g == 0) throw std::invalid_argument("clipped_objective: empty group");
    if (adv.size() != g) throw std::invalid_argument("clipped_objective: advantages length differs from group size");
    if (!(eps_clip > 0.0 && eps_clip < 1.0)) throw std::invalid_argument("clipped_objective: eps_clip outside (0,1)");
    double total = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const TokenRatio& t : group.paths[i]) {
            if (!t.include) continue;
            const double clipped = std::clamp(t.ratio, 1.0 - eps_clip, 1.0 + eps_clip);
            sum += std::min(t.ratio * adv[i], clipped * adv[i]);
            ++n;
        }
        if (n == 0) throw std::invalid_argument(fmt::format("clipped_objective: path {} has no included tokens", i));
        total += sum / static_cast<double>(n);
    }
    return -total / static_cast<double>(g);
}

std::size_t count_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char ch : text) {
        const bool space = std::isspace(static_cast<unsigned char>(ch)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

namespace {

void add_segment(LossMask& m, int step, SegmentKind kind, std::size_t count, bool include) {
    m.segments.push_back({step, kind, m.include.size(), count, include});
    m.include.insert(m.include.end(), count, include);
}

}  // namespace

LossMask sft_loss_mask(const Trajectory& traj, const std::set<int>& erroneous_steps, const TokenizerOptions& tok) {
    for (int i : erroneous_steps) {
        if (i < 0 || i >= static_cast<int>(traj.steps.size())) {
            throw std::out_of_range(fmt::format("erroneous step {} outside [0, {})", i, traj.steps.size()));
        }
    }
    LossMask m;
    for (int i = 0; i < static_cast<int>(traj.steps.size()); ++i) {
        const StepRecord& s = traj.steps[i];
        add_segment(m, i, SegmentKind::think, count_tokens(s.think) + 2, true);
        add_segment(m, i, SegmentKind::action, count_tokens(render_action(s.action)) + 2, !erroneous_steps.contains(i));
        add_segment(m, i, SegmentKind::observation, tok.observation_tokens, false);
    }
    if (!traj.final_turn.empty()) {
        try {
            const ParsedTurn t = parse_agent_output(traj.final_turn);
            add_segment(m, -1, SegmentKind::think, count_tokens(t.think) + 2, true);
            const auto* ans = std::get_if<FinalAnswer>(&t.payload);
            add_segment(m, -1, SegmentKind::answer, count_tokens(ans ? ans->text : render_action(std::get<Action>(t.payload))) + 2,
                        true);
        } catch (const TurnFormatError&) {
            add_segment(m, -1, SegmentKind::answer, count_tokens(traj.final_turn), true);
        }
    }
    return m;
}

LossMask sft_loss_mask(const Trajectory& traj, const TokenizerOptions& tok) {
    std::set<int> flagged;
    for (int i = 0; i < static_cast<int>(traj.steps.size()); ++i)
        if (traj.steps[i].erroneous) flagged.insert(i);
    return sft_loss_mask(traj, flagged, tok);
}

namespace {

struct EpisodeGrad {
    double d_log_sigma = 0.0;
    double d_stop_bias = 0.0;
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct ToyRollout {
    double reward = 0.0;
    EpisodeGrad grad;
};

ToyRollout toy_episode(const ToyTask& task, const Segmenter& seg, const ToyPolicyParams& p,
                       const ToyTrainingOptions& opts, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    EpisodeGrad grad;
    const Index w = task.gt.cols();
    const Index h = task.gt.rows();
    const double p_stop = sigmoid(p.stop_bias);

    Policy policy = [&](const PolicyView& view) -> std::string {
        const Mask& current = view.transcript.empty() ? view.initial_mask : view.transcript.back().mask;
        if (!view.transcript.empty() && view.transcript.back().seg_score >= opts.quality_floor) {
            const bool stop = uniform01(rng) < p_stop;
            grad.d_stop_bias += (stop ? 1.0 : 0.0) - p_stop;
            if (stop) return render_answer_turn("The mask looks complete.", "Segmentation complete.");
        }
        const std::optional<Click> target = next_click(current, task.gt, true);
        if (!target) return render_answer_turn("Nothing left to adjust.", "Segmentation complete.");
        const auto [mx, my] = to_normalized(target->row, target->col, w, h);
        const double zx = normal(rng);
        const double zy = normal(rng);
        grad.d_log_sigma += (zx * zx - 1.0) + (zy * zy - 1.0);
        ClickTriple t{"target", target->polarity == Polarity::positive ? 1 : -1,
                      std::clamp(mx + p.sigma * zx, 0.0, 1.0), std::clamp(my + p.sigma * zy, 0.0, 1.0),
                      target->radius_hint};
        return render_turn("Adjusting the boundary.", ClickAction{{t}});
    };
    EpisodeOptions eo;
    eo.hash_observations = false;
    const Trajectory traj = run_episode(policy, task.image, "Segment the target.", task.gt, seg, opts.limits, eo);
    return {aggregate(traj, task.gt, std::nullopt, opts.rewards).total, grad};
}

}  // namespace

std::vector<CurvePoint> train_toy_policy(std::span<const ToyTask> tasks, const Segmenter& seg, ToyPolicyParams params,
                                         const ToyTrainingOptions& opts) {
    if (tasks.empty()) throw std::invalid_argument("train_toy_policy: no tasks");
    if (opts.group_size < 2) throw std::invalid_argument("train_toy_policy: group size must be >= 2");
    if (!(params.sigma > 0.0)) throw std::invalid_argument("train_toy_policy: sigma must be positive");
    const std::size_t g = static_cast<std::size_t>(opts.group_size);
    double log_sigma = std::log(params.sigma);
    std::vector<CurvePoint> curve;
    curve.reserve(static_cast<std::size_t>(opts.iterations));

    for (int it = 0; it < opts.iterations; ++it) {
        const ToyPolicyParams current{std::exp(log_sigma), params.stop_bias};
        std::vector<ToyRollout> rollouts(tasks.size() * g);
        parallel_for(rollouts.size(), [&](std::size_t k) {
            const std::size_t task = k / g;
            rollouts[k] = toy_episode(tasks[task], seg, current, opts,
                                      mix_seed(opts.seed, {static_cast<std::uint64_t>(it), task, k % g}));
        });

        double reward_sum = 0.0;
        EpisodeGrad step;
        for (std::size_t task = 0; task < tasks.size(); ++task) {
            std::vector<double> rewards(g);
            for (std::size_t i = 0; i < g; ++i) rewards[i] = rollouts[task * g + i].reward;
            const std::vector<double> adv = advantages(rewards);
            for (std::size_t i = 0; i < g; ++i) {
                reward_sum += rewards[i];
                step.d_log_sigma += adv[i] * rollouts[task * g + i].grad.d_log_sigma;
                step.d_stop_bias += adv[i] * rollouts[task * g + i].grad.d_stop_bias;
            }
        }
        const double n = static_cast<double>(rollouts.size());
        curve.push_back({it, reward_sum / n, current.sigma, current.stop_bias});
        if (!std::isfinite(step.d_log_sigma) || !std::isfinite(step.d_stop_bias)) {
            throw NonFiniteGradient(fmt::format("iteration {}: gradient ({}, {}) at sigma={} stop_bias={}", it,
                                                step.d_log_sigma, step.d_stop_bias, current.sigma, current.stop_bias));
        }
        log_sigma += opts.step_size * step.d_log_sigma / n;
        params.stop_bias += opts.step_size * step.d_stop_bias / n;
    }
    return curve;
}

std::string curve_csv(std::span<const CurvePoint> curve) {
    std::string out = "iteration,mean_reward,sigma,stop_bias\n";
    for (const CurvePoint& p : curve) {
        out += fmt::format("{},{:.6f},{:.6f},{:.6f}\n", p.iteration, p.mean_reward, p.sigma, p.stop_bias);
    }
    return out;
}

}  // namespace ibis
