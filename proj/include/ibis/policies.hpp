#pragma once

#include <cstdint>
#include <string>

#include "ibis/environment.hpp"

namespace ibis {

struct OraclePolicyOptions {
    std::string object_name = "object";
    std::string target_label = "target";
    double iou_threshold = 0.95;
    bool annotate_radius = true;
};

// Clicks where the click oracle would, with template reasoning; answers once the
// current mask reaches the IoU threshold or nothing is left to fix.
Policy oracle_policy(Mask gt, OraclePolicyOptions opts = {});

// Oracle clicks moved by Gaussian noise truncated at two sigma (normalized units) and
// flipped in polarity with probability p_wrong. sigma = p_wrong = 0 reproduces the oracle.
Policy jittered_policy(Mask gt, double sigma, double p_wrong, std::uint64_t seed, OraclePolicyOptions opts = {});

struct RandomPolicyOptions {
    std::string target_label = "target";
    double p_answer = 0.1;
};

// Uniform clicks in [0,1)^2 with uniform polarity; answers with probability p_answer.
Policy random_policy(std::uint64_t seed, RandomPolicyOptions opts = {});

}  // namespace ibis
