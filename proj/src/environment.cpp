#include "ibis/environment.hpp"

#include <algorithm>

#include <fmt/core.h>

namespace ibis {

Mask EpisodeState::composite() const {
    Mask m = initial_mask;
    for (const TargetState& t : targets) m = m || t.mask;
    return m;
}

const TargetState* EpisodeState::find(std::string_view label) const {
    for (const TargetState& t : targets)
        if (t.label == label) return &t;
    return nullptr;
}

EpisodeState make_episode(Image image, std::string question, EpisodeLimits limits, std::optional<Mask> initial_mask) {
    if (limits.max_turns < 1 || limits.max_transcript_chars < 1) throw std::invalid_argument("episode limits must be >= 1");
    EpisodeState s;
    s.initial_mask = initial_mask ? std::move(*initial_mask) : empty_mask(image.height, image.width);
    if (s.initial_mask.rows() != image.height || s.initial_mask.cols() != image.width) {
        throw DimensionMismatch("initial mask does not match the image");
    }
    s.image = std::move(image);
    s.question = std::move(question);
    s.limits = limits;
    return s;
}

Image render_observation(const EpisodeState& s, const OverlayStyle& style) {
    Image out = to_rgb(s.image);
    if (s.initial_mask.any()) out = overlay(out, s.initial_mask, style.alpha, style.palette[0]);
    for (std::size_t i = 0; i < s.targets.size(); ++i) {
        out = overlay(out, s.targets[i].mask, style.alpha, style.palette[i % style.palette.size()]);
    }
    return out;
}

namespace {

TargetState& find_or_add(EpisodeState& s, const std::string& label) {
    for (TargetState& t : s.targets)
        if (t.label == label) return t;
    TargetState t;
    t.label = label;
    t.mask = empty_mask(s.image.height, s.image.width);
    s.targets.push_back(std::move(t));
    return s.targets.back();
}

}  // namespace

StepOutcome step(const EpisodeState& state, const Action& action, const Segmenter& seg, const StepOptions& opts) {
    std::vector<std::pair<std::string, Click>> clicks;
    if (const auto* ca = std::get_if<ClickAction>(&action)) {
        for (const ClickTriple& t : ca->clicks) clicks.emplace_back(t.target, to_click(t, state.image.width, state.image.height));
    }
    return step_pixels(state, action, clicks, seg, opts);
}

StepOutcome step_pixels(const EpisodeState& state, const Action& action,
                        const std::vector<std::pair<std::string, Click>>& clicks, const Segmenter& seg,
                        const StepOptions& opts) {
    if (state.turn >= state.limits.max_turns) {
        throw TurnLimitExceeded(fmt::format("turn {} exceeds the limit of {}", state.turn, state.limits.max_turns));
    }
    EpisodeState next = state;
    StepRecord rec;
    rec.think = opts.think;
    rec.action_raw = opts.action_raw;
    rec.action = action;

    if (std::holds_alternative<ClickAction>(action)) {
        if (clicks.empty()) throw std::invalid_argument("click action without clicks");
        std::vector<std::string> order;
        for (const auto& [label, _] : clicks)
            if (std::find(order.begin(), order.end(), label) == order.end()) order.push_back(label);
        double score_sum = 0.0;
        for (const std::string& label : order) {
            TargetState& t = find_or_add(next, label);
            t.history.push_back({t.mask, t.prior, t.clicks.size()});
            for (const auto& [l, c] : clicks) {
                if (l == label) t.clicks.push_back(c);
            }
            SegResult res = seg.predict(next.image, PromptSet{t.clicks, t.prior});
            const Candidate& best = res.best();
            if (best.mask.rows() != next.image.height || best.mask.cols() != next.image.width) {
                throw SegmenterError("segmenter returned a mis-sized mask");
            }
            t.mask = best.mask;
            t.prior = std::move(res.prior);
            score_sum += best.score;
        }
        for (const auto& [_, c] : clicks) rec.clicks.push_back(c);
        rec.seg_score = score_sum / static_cast<double>(order.size());
    } else if (const auto* rv = std::get_if<RevertAction>(&action)) {
        for (const std::string& label : rv->targets) {
            TargetState* t = nullptr;
            for (TargetState& cand : next.targets)
                if (cand.label == label) t = &cand;
            if (t && !t->history.empty()) {
                TargetState::Snapshot snap = std::move(t->history.back());
                t->history.pop_back();
                t->mask = std::move(snap.mask);
                t->prior = std::move(snap.prior);
                t->clicks.resize(snap.clicks_before);
            } else {
                // nothing to undo: discard whatever mask is shown for this target
                next.initial_mask.setConstant(false);
                if (t) {
                    t->mask.setConstant(false);
                    t->prior.reset();
                }
            }
        }
    }

    next.turn += 1;
    rec.mask = next.composite();
    if (opts.gt) {
        rec.iou = iou(rec.mask, *opts.gt);
        rec.dsc = dsc(rec.mask, *opts.gt);
    }
    Image obs = render_observation(next, opts.style);
    if (opts.store) {
        rec.observation_ref = opts.store->put_image(obs);
        rec.mask_ref = opts.store->put_mask(rec.mask);
    } else if (opts.hash_observations) {
        rec.observation_ref = sha256_hex(encode_image_png(obs));
    }
    next.transcript.push_back(std::move(rec));
    return {std::move(next), std::move(obs)};
}

Trajectory run_episode(const Policy& policy, const Image& img, const std::string& question,
                       const std::optional<Mask>& gt, const Segmenter& seg, const EpisodeLimits& limits,
                       const EpisodeOptions& opts) {
    EpisodeState state = make_episode(img, question, limits, opts.initial_mask);
    if (gt && (gt->rows() != img.height || gt->cols() != img.width)) throw DimensionMismatch("gt does not match the image");
    Image obs = render_observation(state, opts.style);
    std::vector<Image> observations;
    Trajectory traj;
    traj.question = question;
    traj.initial_mask = state.composite();
    std::size_t chars = 0;

    auto finish = [&](Termination t) {
        traj.termination = t;
        traj.steps = std::move(state.transcript);
        return std::move(traj);
    };
    auto partial = [&] {
        Trajectory t = traj;
        t.steps = state.transcript;
        return t;
    };

    while (true) {
        if (state.turn >= limits.max_turns) return finish(Termination::turn_limit);
        std::string text;
        try {
            text = policy(PolicyView{question, state.transcript, observations, obs, traj.initial_mask, state.turn});
        } catch (const std::exception& e) {
            throw EpisodeError(fmt::format("policy failed at turn {}: {}", state.turn, e.what()), partial());
        }
        if (chars + text.size() > limits.max_transcript_chars) return finish(Termination::budget_exhausted);
        chars += text.size();
        ParsedTurn turn;
        try {
            turn = parse_agent_output(text);
        } catch (const TurnFormatError&) {
            traj.final_turn = std::move(text);
            return finish(Termination::format_error);
        }
        if (auto* ans = std::get_if<FinalAnswer>(&turn.payload)) {
            traj.final_turn = std::move(text);
            traj.final_answer = ans->text;
            return finish(Termination::answered);
        }
        StepOptions so;
        so.think = turn.think;
        so.action_raw = text;
        so.gt = gt ? &*gt : nullptr;
        so.store = opts.store;
        so.style = opts.style;
        so.hash_observations = opts.hash_observations;
        try {
            StepOutcome out = step(state, std::get<Action>(turn.payload), seg, so);
            state = std::move(out.state);
            obs = std::move(out.observation);
            observations.push_back(obs);
        } catch (const std::exception& e) {
            throw EpisodeError(fmt::format("step failed at turn {}: {}", state.turn, e.what()), partial());
        }
    }
}

}  // namespace ibis
