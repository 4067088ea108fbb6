#include "ibis/policies.hpp"

#include <memory>
#include <random>

#include "ibis/click_oracle.hpp"
#include "ibis/templates.hpp"

namespace ibis {

namespace {

const Mask& current_mask(const PolicyView& view) {
    return view.transcript.empty() ? view.initial_mask : view.transcript.back().mask;
}

// Shared by the oracle and jittered policies: nullopt means "answer now".
std::optional<Click> oracle_choice(const PolicyView& view, const Mask& gt, const OraclePolicyOptions& opts) {
    const Mask& m = current_mask(view);
    if (iou(m, gt) >= opts.iou_threshold) return std::nullopt;
    return next_click(m, gt, opts.annotate_radius);
}

std::string answer_turn(const PolicyView& view, const OraclePolicyOptions& opts) {
    return render_answer_turn(fill_final_reasoning(opts.object_name, view.turn),
                              instantiate_refinement_and_response("direct_concise", {opts.object_name, "", "central"}));
}

std::string click_turn(const PolicyView& view, const Mask& gt, const OraclePolicyOptions& opts, const ClickTriple& t) {
    const Mask& m = current_mask(view);
    const PixelCoord px = to_pixel(t.x, t.y, gt.cols(), gt.rows());
    ReasoningContext ctx;
    ctx.polarity = t.attribute > 0 ? Polarity::positive : Polarity::negative;
    ctx.region = region_descriptor(px.row, px.col, gt.rows(), gt.cols());
    ctx.object_name = opts.object_name;
    if (m.any()) ctx.prior_quality = iou(m, gt);
    ctx.variant = view.turn;
    return render_turn(fill_reasoning(ctx), ClickAction{{t}});
}

}  // namespace

Policy oracle_policy(Mask gt, OraclePolicyOptions opts) {
    return [gt = std::move(gt), opts = std::move(opts)](const PolicyView& view) {
        const std::optional<Click> c = oracle_choice(view, gt, opts);
        if (!c) return answer_turn(view, opts);
        return click_turn(view, gt, opts, to_triple(*c, opts.target_label, gt.cols(), gt.rows()));
    };
}

Policy jittered_policy(Mask gt, double sigma, double p_wrong, std::uint64_t seed, OraclePolicyOptions opts) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("jittered policy: sigma must be >= 0");
    if (!(p_wrong >= 0.0 && p_wrong <= 1.0)) throw std::invalid_argument("jittered policy: p_wrong outside [0,1]");
    auto rng = std::make_shared<Rng>(seed);
    return [gt = std::move(gt), sigma, p_wrong, rng, opts = std::move(opts)](const PolicyView& view) {
        const std::optional<Click> c = oracle_choice(view, gt, opts);
        if (!c) return answer_turn(view, opts);
        ClickTriple t = to_triple(*c, opts.target_label, gt.cols(), gt.rows());
        auto jitter = [&] {
            if (sigma == 0.0) return 0.0;
            std::normal_distribution<double> normal(0.0, sigma);
            for (;;) {
                const double z = normal(*rng);
                if (std::abs(z) <= 2.0 * sigma) return z;
            }
        };
        const double dx = jitter();
        const double dy = jitter();
        t.x = std::clamp(t.x + dx, 0.0, 1.0);
        t.y = std::clamp(t.y + dy, 0.0, 1.0);
        if (uniform01(*rng) < p_wrong) t.attribute = -t.attribute;
        return click_turn(view, gt, opts, t);
    };
}

Policy random_policy(std::uint64_t seed, RandomPolicyOptions opts) {
    if (!(opts.p_answer >= 0.0 && opts.p_answer <= 1.0)) throw std::invalid_argument("random policy: p_answer outside [0,1]");
    auto rng = std::make_shared<Rng>(seed);
    return [rng, opts = std::move(opts)](const PolicyView& view) {
        if (uniform01(*rng) < opts.p_answer) {
            return render_answer_turn("The mask looks acceptable to me.", "Segmentation complete.");
        }
        ClickTriple t{opts.target_label, uniform01(*rng) < 0.5 ? 1 : -1, uniform01(*rng), uniform01(*rng), std::nullopt};
        const PixelCoord px = to_pixel(t.x, t.y, view.observation.width, view.observation.height);
        ReasoningContext ctx;
        ctx.polarity = t.attribute > 0 ? Polarity::positive : Polarity::negative;
        ctx.region = region_descriptor(px.row, px.col, view.observation.height, view.observation.width);
        ctx.variant = view.turn;
        ctx.object_name = "object";
        return render_turn(fill_reasoning(ctx), ClickAction{{t}});
    };
}

}  // namespace ibis
