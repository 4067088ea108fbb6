#include "ibis/click_oracle.hpp"

#include <cmath>

#include <fmt/core.h>

#include "ibis/edt.hpp"

namespace ibis {

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::step_limit: return "step-limit";
        case Termination::answered: return "answered";
        case Termination::format_error: return "format-error";
        case Termination::turn_limit: return "turn-limit";
        case Termination::budget_exhausted: return "budget-exhausted";
    }
    return "unknown";
}

Termination termination_from_string(std::string_view s) {
    for (auto t : {Termination::converged, Termination::step_limit, Termination::answered,
                   Termination::format_error, Termination::turn_limit, Termination::budget_exhausted}) {
        if (to_string(t) == s) return t;
    }
    throw DataError(fmt::format("unknown termination '{}'", s));
}

bool is_click_step(const StepRecord& s) { return std::holds_alternative<ClickAction>(s.action); }

int Trajectory::click_steps() const {
    int n = 0;
    for (const auto& s : steps) n += is_click_step(s) ? 1 : 0;
    return n;
}

double inscribed_radius(std::int64_t sq_distance) {
    if (sq_distance <= 1) return 0.0;
    return quantize_down(std::sqrt(static_cast<double>(sq_distance - 1)));
}

namespace {

struct Peak {
    std::int64_t value = 0;
    Index row = 0;
    Index col = 0;
};

// First maximum in row-major order.
Peak row_major_argmax(const Grid<std::int64_t>& d) {
    Peak p;
    for (Index r = 0; r < d.rows(); ++r) {
        for (Index c = 0; c < d.cols(); ++c) {
            if (d(r, c) > p.value) p = {d(r, c), r, c};
        }
    }
    return p;
}

}  // namespace

std::optional<Click> next_click(const Mask& pred, const Mask& gt, bool annotate_radius) {
    const ErrorRegions err = diff_regions(pred, gt);
    const Peak fn = row_major_argmax(squared_edt(err.false_negative));
    const Peak fp = row_major_argmax(squared_edt(err.false_positive));
    if (fn.value == 0 && fp.value == 0) return std::nullopt;
    const bool positive = fn.value >= fp.value;
    const Peak& at = positive ? fn : fp;
    Click c{at.row, at.col, positive ? Polarity::positive : Polarity::negative, std::nullopt};
    if (annotate_radius) c.radius_hint = inscribed_radius(at.value);
    return c;
}

Trajectory simulate_trajectory(const Image& img, const Mask& gt, const Segmenter& seg, const OracleConfig& cfg) {
    if (cfg.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
    if (img.height != gt.rows() || img.width != gt.cols()) {
        throw DimensionMismatch(fmt::format("simulate: image {}x{} vs mask {}x{}", img.height, img.width, gt.rows(),
                                            gt.cols()));
    }
    Trajectory traj;
    traj.initial_mask = empty_mask(gt.rows(), gt.cols());
    traj.termination = Termination::step_limit;
    Mask pred = traj.initial_mask;
    PromptSet prompts;
    for (int step = 0;; ++step) {
        if (iou(pred, gt) >= cfg.iou_threshold) {
            traj.termination = Termination::converged;
            break;
        }
        if (step == cfg.max_steps) break;
        const std::optional<Click> click = next_click(pred, gt, cfg.annotate_radius);
        if (!click) {
            traj.termination = Termination::converged;
            break;
        }
        prompts.clicks.push_back(*click);
        SegResult res;
        try {
            res = seg.predict(img, prompts);
        } catch (const std::exception& e) {
            throw SimulationError(fmt::format("segmenter failed at step {}: {}", step, e.what()), std::move(traj),
                                  std::current_exception());
        }
        const Candidate& best = res.best();
        if (best.mask.rows() != gt.rows() || best.mask.cols() != gt.cols()) {
            throw SimulationError(fmt::format("segmenter returned a mis-sized mask at step {}", step), std::move(traj),
                                  nullptr);
        }
        pred = best.mask;
        prompts.prior = std::move(res.prior);

        StepRecord rec;
        rec.action = ClickAction{{to_triple(*click, cfg.target_label, gt.cols(), gt.rows())}};
        rec.clicks = {*click};
        rec.mask = pred;
        rec.iou = iou(pred, gt);
        rec.dsc = dsc(pred, gt);
        rec.seg_score = best.score;
        traj.steps.push_back(std::move(rec));
    }
    return traj;
}

}  // namespace ibis
