#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ibis/environment.hpp"
#include "ibis/rewards.hpp"

namespace ibis {

// Group-normalized advantages (S_i - mean) / std with the population std.
// A group whose std falls below eps gets all-zero advantages.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> advantages(const Eigen::ArrayBase<Derived>& rewards,
                                                                      typename Derived::Scalar eps = 1e-8) {
    using Scalar = typename Derived::Scalar;
    using Out = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index g = rewards.size();
    if (g < 1) throw std::invalid_argument("advantages: empty group");
    const Scalar mean = rewards.mean();
    const Out centered = rewards.derived() - mean;
    const Scalar std = std::sqrt(centered.square().sum() / static_cast<Scalar>(g));
    if (!(std >= eps)) return Out::Zero(g);
    return centered / std;
}

inline std::vector<double> advantages(std::span<const double> rewards, double eps = 1e-8) {
    const Eigen::Map<const Eigen::ArrayXd> r(rewards.data(), static_cast<Eigen::Index>(rewards.size()));
    const Eigen::ArrayXd a = advantages(r, eps);
    return {a.begin(), a.end()};
}

struct TokenRatio {
    double ratio = 1.0;   // pi_theta / pi_theta_old for this token
    bool include = true;  // false for observation tokens
};

struct RolloutGroup {
    std::vector<std::vector<TokenRatio>> paths;
    std::vector<double> rewards;
};

// -(1/G) sum_i (1/N_i) sum_t min(rho A_i, clip(rho, 1-eps, 1+eps) A_i) over included tokens.
double clipped_objective(const RolloutGroup& group, std::span<const double> adv, double eps_clip);

enum class SegmentKind { think, action, observation, answer };

struct TokenSegment {
    int step = -1;  // -1 for the closing answer turn
    SegmentKind kind = SegmentKind::think;
    std::size_t begin = 0;
    std::size_t count = 0;
    bool include = true;
};

struct LossMask {
    std::vector<TokenSegment> segments;
    std::vector<bool> include;  // one flag per token
};

struct TokenizerOptions {
    std::size_t observation_tokens = 16;  // stand-in for the image patch tokens of o_t
};

// Whitespace tokens plus one per tag.
std::size_t count_tokens(std::string_view text);

// Observation tokens and the action tokens of erroneous steps are excluded;
// think, gold action and answer tokens are supervised.
LossMask sft_loss_mask(const Trajectory& traj, const std::set<int>& erroneous_steps,
                       const TokenizerOptions& tok = {});
// Uses the trajectory's own erroneous flags.
LossMask sft_loss_mask(const Trajectory& traj, const TokenizerOptions& tok = {});

struct ToyPolicyParams {
    double sigma = 0.2;      // click jitter in normalized coordinates
    double stop_bias = 0.0;  // log-odds of answering once the quality proxy clears the floor
};

struct ToyTask {
    Image image;
    Mask gt;
};

struct ToyTrainingOptions {
    int iterations = 200;
    int group_size = 4;
    double step_size = 0.05;
    std::uint64_t seed = 0;
    EpisodeLimits limits{};
    RewardConfig rewards{};
    // The policy may stop once the last segmenter score reaches this floor.
    double quality_floor = 0.995;
};

struct CurvePoint {
    int iteration = 0;
    double mean_reward = 0.0;
    double sigma = 0.0;
    double stop_bias = 0.0;
};

struct NonFiniteGradient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Samples G episodes per task with Gaussian jitter around oracle clicks and a
// Bernoulli stop, scores them, normalizes per task group and takes one
// score-function step on (log sigma, stop_bias). Point i holds the mean reward
// sampled with the parameters in effect during iteration i.
std::vector<CurvePoint> train_toy_policy(std::span<const ToyTask> tasks, const Segmenter& seg, ToyPolicyParams params0,
                                         const ToyTrainingOptions& opts);

std::string curve_csv(std::span<const CurvePoint> curve);

}  // namespace ibis
