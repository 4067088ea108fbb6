#include "ibis/cold_start.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include <fmt/core.h>

#include "ibis/parallel.hpp"

namespace ibis {

std::string_view to_string(ReflectiveKind k) {
    switch (k) {
        case ReflectiveKind::none: return "none";
        case ReflectiveKind::self_correction: return "self_correction";
        case ReflectiveKind::inconsistency: return "inconsistency";
    }
    return "none";
}

ReflectiveKind reflective_from_string(std::string_view s) {
    if (s == "none") return ReflectiveKind::none;
    if (s == "self_correction") return ReflectiveKind::self_correction;
    if (s == "inconsistency") return ReflectiveKind::inconsistency;
    throw std::invalid_argument(fmt::format("unknown reflective kind '{}'", s));
}

void FilterConfig::validate() const {
    if (max_length < 1) throw std::invalid_argument("filter.max_length must be >= 1");
    if (!(min_dice > 0.0 && min_dice < 1.0)) throw std::invalid_argument("filter.min_dice must lie in (0,1)");
}

void TemplateConfig::validate() const {
    ratios.validate();
    if (!(self_correction_rate >= 0.0 && self_correction_rate <= 1.0)) {
        throw std::invalid_argument("templates.self_correction_rate outside [0,1]");
    }
    if (!(inconsistency_rate >= 0.0 && inconsistency_rate <= 1.0)) {
        throw std::invalid_argument("templates.inconsistency_rate outside [0,1]");
    }
}

DatasetRecord replay_turns(const Sample& sample, const std::optional<Mask>& initial_mask, const std::string& question,
                           std::span<const ScriptedTurn> turns, const std::string& final_turn, const Segmenter& seg,
                           const ArtifactStore* store, const OverlayStyle& style) {
    EpisodeLimits limits;
    limits.max_turns = static_cast<int>(turns.size()) + 1;
    limits.max_transcript_chars = std::numeric_limits<std::size_t>::max();
    EpisodeState state = make_episode(sample.image, question, limits, initial_mask);

    DatasetRecord rec;
    rec.sample_id = sample.id;
    rec.object_name = sample.object_name;
    rec.modality = sample.modality;
    rec.traj.question = question;
    rec.traj.initial_mask = state.composite();
    if (rec.traj.initial_mask.any()) {
        rec.initial_mask_ref =
            store ? store->put_mask(rec.traj.initial_mask) : sha256_hex(encode_mask_png(rec.traj.initial_mask));
    }

    for (const ScriptedTurn& t : turns) {
        const ParsedTurn parsed = parse_agent_output(t.text);
        const auto* action = std::get_if<Action>(&parsed.payload);
        if (!action) throw std::invalid_argument("scripted turn is an answer, expected an action");
        StepOptions so;
        so.think = parsed.think;
        so.action_raw = t.text;
        so.gt = &sample.gt;
        so.store = store;
        so.style = style;
        state = step(state, *action, seg, so).state;
        state.transcript.back().erroneous = t.erroneous;
    }
    const ParsedTurn closing = parse_agent_output(final_turn);
    const auto* answer = std::get_if<FinalAnswer>(&closing.payload);
    if (!answer) throw std::invalid_argument("closing turn must be an answer");
    rec.traj.steps = std::move(state.transcript);
    rec.traj.final_turn = final_turn;
    rec.traj.final_answer = answer->text;
    rec.traj.termination = Termination::answered;
    rec.final_iou = iou(rec.traj.final_mask(), sample.gt);
    rec.final_dsc = dsc(rec.traj.final_mask(), sample.gt);
    return rec;
}

namespace {

std::vector<ScriptedTurn> scripted(const Trajectory& traj) {
    std::vector<ScriptedTurn> out;
    out.reserve(traj.steps.size());
    for (const StepRecord& s : traj.steps) out.push_back({s.action_raw, s.erroneous});
    return out;
}

int draw_variant(Rng& rng) { return static_cast<int>(rng() % 1024); }

std::optional<Mask> pick_donor(std::span<const Sample> samples, std::size_t self, Rng& rng) {
    const Mask& own = samples[self].gt;
    const std::size_t n = samples.size();
    if (n < 2) return std::nullopt;
    const std::size_t start = static_cast<std::size_t>(rng() % n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = (start + k) % n;
        if (j == self) continue;
        const Mask& cand = samples[j].gt;
        if (cand.rows() != own.rows() || cand.cols() != own.cols()) continue;
        if (iou(cand, own) < 0.5) return cand;
    }
    return std::nullopt;
}

}  // namespace

Mask replay_final_mask(const DatasetRecord& rec, const Sample& sample, const Segmenter& seg) {
    const std::vector<ScriptedTurn> turns = scripted(rec.traj);
    std::optional<Mask> initial;
    if (rec.traj.initial_mask.size() > 0 && rec.traj.initial_mask.any()) initial = rec.traj.initial_mask;
    return replay_turns(sample, initial, rec.traj.question, turns, rec.traj.final_turn, seg, nullptr).traj.final_mask();
}

DatasetRecord synthesize_reflective(const DatasetRecord& gold, ReflectiveKind mode, const Sample& sample,
                                    const Segmenter& seg, Rng& rng, const std::optional<Mask>& donor_mask,
                                    const ArtifactStore* store, const OverlayStyle& style) {
    if (gold.reflective_kind != ReflectiveKind::none) throw std::invalid_argument("reflective source must be a gold record");
    const std::size_t n = gold.traj.steps.size();
    if (n == 0) throw std::invalid_argument(fmt::format("gold record {} has no steps to build on", gold.id));
    const std::vector<ScriptedTurn> gold_turns = scripted(gold.traj);
    std::string label = "target";
    if (const auto* ca = std::get_if<ClickAction>(&gold.traj.steps.front().action); ca && !ca->clicks.empty()) {
        label = ca->clicks.front().target;
    }

    std::vector<ScriptedTurn> turns;
    std::optional<Mask> initial;
    if (mode == ReflectiveKind::self_correction) {
        const auto k = static_cast<std::size_t>(rng() % n);
        const Mask& before = k == 0 ? gold.traj.initial_mask : gold.traj.steps[k - 1].mask;
        const Mask correct = (before == sample.gt);  // outside both error regions
        const Index candidates = correct.count();
        if (candidates == 0) throw std::invalid_argument("no correctly classified cell to misplace a click on");
        Index pick = static_cast<Index>(rng() % static_cast<std::uint64_t>(candidates));
        Click wrong{};
        for (Index r = 0; r < correct.rows() && pick >= 0; ++r) {
            for (Index c = 0; c < correct.cols(); ++c) {
                if (correct(r, c) && pick-- == 0) {
                    wrong = {r, c, sample.gt(r, c) ? Polarity::negative : Polarity::positive, std::nullopt};
                    break;
                }
            }
        }
        ReasoningContext ctx;
        ctx.polarity = wrong.polarity;
        ctx.region = region_descriptor(wrong.row, wrong.col, sample.gt.rows(), sample.gt.cols());
        ctx.object_name = sample.object_name;
        ctx.variant = draw_variant(rng);
        const ClickTriple triple = to_triple(wrong, label, sample.gt.cols(), sample.gt.rows());

        turns.assign(gold_turns.begin(), gold_turns.begin() + static_cast<std::ptrdiff_t>(k));
        turns.push_back({render_turn(fill_wrong_reasoning(ctx), ClickAction{{triple}}), true});
        turns.push_back({render_turn(fill_revert_reasoning(sample.object_name, draw_variant(rng)), RevertAction{{label}}),
                         false});
        turns.insert(turns.end(), gold_turns.begin() + static_cast<std::ptrdiff_t>(k), gold_turns.end());
    } else if (mode == ReflectiveKind::inconsistency) {
        if (!donor_mask) throw std::invalid_argument("inconsistency synthesis needs a donor mask");
        if (equal(*donor_mask, sample.gt)) throw std::invalid_argument("donor mask equals the sample's own mask");
        initial = *donor_mask;
        turns.push_back({render_turn(fill_discard_reasoning(sample.object_name, draw_variant(rng)), RevertAction{{label}}),
                         false});
        turns.insert(turns.end(), gold_turns.begin(), gold_turns.end());
    } else {
        throw std::invalid_argument("reflective mode must be self_correction or inconsistency");
    }

    DatasetRecord rec = replay_turns(sample, initial, gold.traj.question, turns, gold.traj.final_turn, seg, store, style);
    rec.id = gold.id + (mode == ReflectiveKind::self_correction ? "-sc" : "-inc");
    rec.reflective_kind = mode;
    rec.config_fingerprint = gold.config_fingerprint;
    if (!equal(rec.traj.final_mask(), gold.traj.final_mask())) {
        throw std::logic_error(fmt::format("reflective record {} does not replay to its gold mask", rec.id));
    }
    return rec;
}

DatasetRecord make_gold_record(const Sample& s, const Segmenter& seg, const OracleConfig& oracle,
                               const QuestionRatios& ratios, Rng& rng, const ArtifactStore* store,
                               const OverlayStyle& style, const TextProvider& provider) {
    const QuestionDraw q = instantiate_question(s.object_name, s.modality, rng, ratios);
    const Trajectory sim = simulate_trajectory(s.image, s.gt, seg, oracle);
    std::vector<ScriptedTurn> turns;
    for (std::size_t k = 0; k < sim.steps.size(); ++k) {
        const Mask& before = k == 0 ? sim.initial_mask : sim.steps[k - 1].mask;
        const Click& c = sim.steps[k].clicks.front();
        ReasoningContext ctx;
        ctx.polarity = c.polarity;
        ctx.region = region_descriptor(c.row, c.col, s.gt.rows(), s.gt.cols());
        ctx.object_name = s.object_name;
        if (before.any()) ctx.prior_quality = iou(before, s.gt);
        ctx.variant = draw_variant(rng);
        turns.push_back({render_turn(provide_text(provider, "reasoning", fill_reasoning(ctx)), sim.steps[k].action), false});
    }
    const auto style_name = kResponseStyles[static_cast<std::size_t>(rng() % kResponseStyles.size())];
    const std::string answer = provide_text(
        provider, "answer", instantiate_refinement_and_response(style_name, {s.object_name, s.modality, "central"}));
    const std::string closing = provide_text(provider, "reasoning", fill_final_reasoning(s.object_name, draw_variant(rng)));
    const std::string final_turn = render_answer_turn(closing, answer);
    const std::string question = provide_text(provider, "question", q.text);

    DatasetRecord rec = replay_turns(s, std::nullopt, question, turns, final_turn, seg, store, style);
    if (!equal(rec.traj.final_mask(), sim.final_mask())) {
        throw std::logic_error(fmt::format("sample {}: text replay diverged from the simulation", s.id));
    }
    rec.id = s.id + "-g";
    return rec;
}

ColdStartResult build_cold_start(std::span<const Sample> samples, const Segmenter& seg, const ColdStartOptions& opts) {
    opts.filter.validate();
    opts.templates.validate();
    struct Slot {
        std::optional<DatasetRecord> record;
        std::optional<Rejection> rejection;
    };
    std::vector<Slot> gold(samples.size());

    parallel_for(samples.size(), [&](std::size_t i) {
        const Sample& s = samples[i];
        Rng rng(mix_seed(opts.seed, {0x676f6c64ULL, i}));
        DatasetRecord rec;
        try {
            rec = make_gold_record(s, seg, opts.oracle, opts.templates.ratios, rng, opts.store, opts.style,
                                   opts.text_provider);
        } catch (const SimulationError& e) {
            gold[i].rejection = Rejection{s.id, "segmenter-error", e.what()};
            return;
        } catch (const SegmenterError& e) {
            gold[i].rejection = Rejection{s.id, "segmenter-error", e.what()};
            return;
        }
        rec.config_fingerprint = opts.config_fingerprint;
        if (rec.length() > opts.filter.max_length) {
            gold[i].rejection = Rejection{s.id, "too-long", fmt::format("length {} > {}", rec.length(), opts.filter.max_length)};
        } else if (rec.final_dsc < opts.filter.min_dice) {
            gold[i].rejection =
                Rejection{s.id, "dice-below-threshold", fmt::format("final dsc {:.6f} < {}", rec.final_dsc, opts.filter.min_dice)};
        } else {
            gold[i].record = std::move(rec);
        }
    });

    ColdStartResult out;
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i].record) {
            survivors.push_back(i);
            out.records.push_back(*gold[i].record);
        } else {
            out.rejected.push_back(*gold[i].rejection);
        }
    }

    std::vector<std::vector<DatasetRecord>> extra(survivors.size());
    parallel_for(survivors.size(), [&](std::size_t k) {
        const std::size_t i = survivors[k];
        const DatasetRecord& g = *gold[i].record;
        Rng rng(mix_seed(opts.seed, {0x7265666cULL, i}));
        const bool want_sc = uniform01(rng) < opts.templates.self_correction_rate;
        const bool want_inc = uniform01(rng) < opts.templates.inconsistency_rate;
        if (want_sc && g.length() > 0 && g.length() < opts.filter.max_length) {
            extra[k].push_back(synthesize_reflective(g, ReflectiveKind::self_correction, samples[i], seg, rng,
                                                     std::nullopt, opts.store, opts.style));
        }
        if (want_inc && g.length() > 0) {
            if (auto donor = pick_donor(samples, i, rng)) {
                extra[k].push_back(synthesize_reflective(g, ReflectiveKind::inconsistency, samples[i], seg, rng, donor,
                                                         opts.store, opts.style));
            }
        }
    });
    for (auto& list : extra)
        for (auto& r : list) out.records.push_back(std::move(r));
    out.stats = compute_stats(out.records);
    return out;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

GroupStats reduce(std::string name, const std::vector<const DatasetRecord*>& recs) {
    GroupStats g;
    g.group = std::move(name);
    std::set<std::string> ids;
    std::vector<double> ious;
    std::vector<double> dscs;
    double length = 0.0;
    for (const DatasetRecord* r : recs) {
        ids.insert(r->sample_id);
        g.qas += static_cast<int>(r->traj.steps.size()) + 1;
        length += r->length();
        ious.push_back(r->final_iou);
        dscs.push_back(r->final_dsc);
    }
    g.samples = static_cast<int>(ids.size());
    if (!recs.empty()) {
        const double n = static_cast<double>(recs.size());
        g.avg_length = length / n;
        double si = 0.0;
        double sd = 0.0;
        for (double v : ious) si += v;
        for (double v : dscs) sd += v;
        g.mean_iou = si / n;
        g.mean_dsc = sd / n;
    }
    g.median_iou = median(ious);
    g.median_dsc = median(dscs);
    return g;
}

}  // namespace

DatasetStats compute_stats(std::span<const DatasetRecord> records) {
    DatasetStats st;
    std::vector<const DatasetRecord*> all;
    std::map<std::string, std::vector<const DatasetRecord*>> by_mod;
    std::map<std::string, std::vector<const DatasetRecord*>> by_task;
    for (const DatasetRecord& r : records) {
        all.push_back(&r);
        by_mod[r.modality].push_back(&r);
        by_task[r.object_name].push_back(&r);
    }
    st.overall = reduce("all", all);
    for (const auto& [k, v] : by_mod) st.by_modality.push_back(reduce(k, v));
    for (const auto& [k, v] : by_task) st.by_task.push_back(reduce(k, v));
    return st;
}

std::string format_stats_tables(const DatasetStats& stats) {
    const std::vector<std::string> header{"Group", "Samples", "Total QAs", "Avg. Length", "Avg. IoU",
                                          "Median IoU", "Avg. DSC", "Median DSC"};
    auto row = [](const GroupStats& g) {
        return std::vector<std::string>{g.group,
                                        std::to_string(g.samples),
                                        std::to_string(g.qas),
                                        fmt::format("{:.2f}", g.avg_length),
                                        fmt::format("{:.4f}", g.mean_iou),
                                        fmt::format("{:.4f}", g.median_iou),
                                        fmt::format("{:.4f}", g.mean_dsc),
                                        fmt::format("{:.4f}", g.median_dsc)};
    };
    auto table = [&](const std::string& title, const std::vector<GroupStats>& groups) {
        std::vector<std::vector<std::string>> rows{header};
        for (const GroupStats& g : groups) rows.push_back(row(g));
        rows.push_back(row(stats.overall));
        std::vector<std::size_t> width(header.size(), 0);
        for (const auto& r : rows)
            for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
        std::string out = title + "\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i == 1 || i + 1 == rows.size()) {
                std::size_t total = 0;
                for (std::size_t w : width) total += w + 2;
                out += std::string(total - 2, '-') + "\n";
            }
            for (std::size_t c = 0; c < rows[i].size(); ++c) {
                out += c == 0 ? fmt::format("{:<{}}", rows[i][c], width[c]) : fmt::format("  {:>{}}", rows[i][c], width[c]);
            }
            out += "\n";
        }
        return out;
    };
    return table("By modality", stats.by_modality) + "\n" + table("By task", stats.by_task);
}

}  // namespace ibis
