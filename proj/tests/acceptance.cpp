#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "ibis/click_oracle.hpp"
#include "ibis/cold_start.hpp"
#include "ibis/config.hpp"
#include "ibis/corpus.hpp"
#include "ibis/edt.hpp"
#include "ibis/grpo.hpp"
#include "ibis/parallel.hpp"
#include "ibis/policies.hpp"
#include "ibis/records.hpp"
#include "ibis/remote.hpp"
#include "ibis/rewards.hpp"
#include "ibis/templates.hpp"
#include "cli_runner.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ibis;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Background cells not reachable from the border through background.
bool has_hole(const Mask& m) {
    const Index h = m.rows(), w = m.cols();
    Mask seen = Mask::Zero(h, w);
    std::vector<std::pair<Index, Index>> stack;
    auto push = [&](Index r, Index c) {
        if (r < 0 || c < 0 || r >= h || c >= w || m(r, c) || seen(r, c)) return;
        seen(r, c) = true;
        stack.emplace_back(r, c);
    };
    for (Index r = 0; r < h; ++r) push(r, 0), push(r, w - 1);
    for (Index c = 0; c < w; ++c) push(0, c), push(h - 1, c);
    while (!stack.empty()) {
        auto [r, c] = stack.back();
        stack.pop_back();
        push(r + 1, c), push(r - 1, c), push(r, c + 1), push(r, c - 1);
    }
    return (!m && !seen).any();
}

Outcome edt_exactness() {
    Rng rng(mix_seed(1, {1}));
    std::vector<Mask> masks;
    for (int i = 0; i < 200; ++i) {
        const Index h = 1 + static_cast<Index>(rng() % 32), w = 1 + static_cast<Index>(rng() % 32);
        masks.push_back(oracle::random_mask(rng, h, w, uniform01(rng)));
    }
    const auto t0 = Clock::now();
    int mismatches = 0;
    for (const Mask& m : masks)
        if (!(squared_edt(m) == oracle::brute_sq_edt(m)).all()) ++mismatches;
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 5.0,
            fmt::format("{} / 200 masks differ from exhaustive search, {:.2f} s (limit 5 s)", mismatches, secs)};
}

Outcome oracle_clicks() {
    Rng rng(mix_seed(1, {2}));
    int checked = 0, wrong_region = 0, not_max = 0, wrong_polarity = 0, wrong_cell = 0, converged_mismatch = 0;
    for (int i = 0; i < 500; ++i) {
        const Index h = 1 + static_cast<Index>(rng() % 32), w = 1 + static_cast<Index>(rng() % 32);
        const Mask pred = oracle::random_mask(rng, h, w, uniform01(rng));
        const Mask gt = oracle::random_mask(rng, h, w, uniform01(rng));
        const auto got = next_click(pred, gt, true);
        const auto want = oracle::brute_click(pred, gt);
        if (got.has_value() != want.has_value()) {
            ++converged_mismatch;
            continue;
        }
        if (!got) continue;
        ++checked;
        const bool positive = got->polarity == Polarity::positive;
        const Mask region = positive ? Mask(gt && !pred) : Mask(pred && !gt);
        if (!region(got->row, got->col)) ++wrong_region;
        if (positive != want->positive) ++wrong_polarity;
        if (oracle::brute_sq_edt(region)(got->row, got->col) != want->sq) ++not_max;
        if (got->row != want->row || got->col != want->col) ++wrong_cell;
    }
    const int bad = wrong_region + not_max + wrong_polarity + wrong_cell + converged_mismatch;
    return {bad == 0, fmt::format("{} clicks checked; outside region {}, below max {}, tie-break {}, polarity {}, "
                                  "convergence signal {}",
                                  checked, wrong_region, not_max, wrong_cell, wrong_polarity, converged_mismatch)};
}

Outcome convergence() {
    const auto t0 = Clock::now();
    const auto samples = make_synthetic_corpus(500, 2024);
    DiscSegmenter disc(Config{}.segmenter.disc_radius);
    OracleConfig cfg;
    cfg.annotate_radius = true;
    std::vector<double> final_iou(samples.size());
    std::vector<int> non_monotone(samples.size()), converged(samples.size()), holes(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        const Trajectory t = simulate_trajectory(samples[i].image, samples[i].gt, disc, cfg);
        double prev = iou(t.initial_mask, samples[i].gt);
        for (const auto& s : t.steps) {
            if (!(*s.iou > prev)) ++non_monotone[i];
            prev = *s.iou;
        }
        final_iou[i] = prev;
        converged[i] = prev >= 0.95 && t.click_steps() <= 20;
        holes[i] = has_hole(samples[i].gt);
    });
    const double secs = seconds_since(t0);
    int conv = 0, bad_traj = 0, with_hole = 0, conv_hole = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        conv += converged[i];
        bad_traj += non_monotone[i] > 0;
        if (holes[i]) ++with_hole, conv_hole += converged[i];
    }
    std::vector<double> sorted = final_iou;
    std::sort(sorted.begin(), sorted.end());
    const double rate = conv / 500.0;
    const int solid = 500 - with_hole;
    fmt::print("  convergence breakdown: targets with an interior hole {}/{} converged; without {}/{}; "
               "median final IoU {:.4f}, 10th percentile {:.4f}\n",
               conv_hole, with_hole, conv - conv_hole, solid, sorted[250], sorted[50]);
    return {rate >= 0.95 && bad_traj == 0 && secs < 60.0,
            fmt::format("{:.1f}% reached IoU >= 0.95 within 20 steps (need >= 95%), {} trajectories not strictly "
                        "increasing, {:.1f} s (limit 60 s)",
                        100 * rate, bad_traj, secs)};
}

Outcome metric_identities() {
    Rng rng(mix_seed(1, {4}));
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const Index h = 1 + static_cast<Index>(rng() % 24), w = 1 + static_cast<Index>(rng() % 24);
        const Mask a = oracle::random_mask(rng, h, w, uniform01(rng));
        const Mask b = oracle::random_mask(rng, h, w, uniform01(rng));
        const double j = iou(a, b);
        worst = std::max(worst, std::abs(dsc(a, b) - 2 * j / (1 + j)));
    }
    std::vector<Mask> all(512);
    for (int k = 0; k < 512; ++k) {
        all[static_cast<std::size_t>(k)] = Mask(3, 3);
        for (int bit = 0; bit < 9; ++bit) all[static_cast<std::size_t>(k)].data()[bit] = (k >> bit) & 1;
    }
    long failures = 0;
    for (const Mask& p : all) {
        for (const Mask& g : all) {
            const auto [fn, fp] = diff_regions(p, g);
            const bool ok = iou(p, g) == iou(g, p) && dsc(p, g) == dsc(g, p) && equal(p || fn, p || g) &&
                            equal(p && !fp, p && g) && !(fn && fp).any() && equal(fn, g && !p) && equal(fp, p && !g);
            failures += !ok;
        }
    }
    return {worst < 1e-12 && failures == 0,
            fmt::format("max |dsc - 2iou/(1+iou)| = {:.3g} over 1000 pairs; {} of 262144 3x3 pairs violate "
                        "symmetry or region identities",
                        worst, failures)};
}

Outcome reward_boundaries() {
    const std::vector<double> ious{0.81, 0.80, 0.75, 0.60, 0.50, 0.10};
    const std::vector<double> want{3, 2, 2, 1, 0, 0};
    std::vector<double> got;
    for (double v : ious) got.push_back(score_answer_iou(v));
    const bool tiers = got == want;
    const bool lens = score_len(8) == 1.0 && score_len(10) == 1.0 && std::abs(score_len(12) + 0.4) < 1e-12;

    const auto samples = make_synthetic_corpus(20, 55);
    DiscSegmenter disc(3.0);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const Sample& s = samples[static_cast<std::size_t>(i % 20)];
        const auto seed = mix_seed(5, {static_cast<std::uint64_t>(i)});
        Policy p = i % 3 == 0   ? random_policy(seed)
                   : i % 3 == 1 ? jittered_policy(s.gt, 0.1, 0.2, seed)
                                : oracle_policy(s.gt);
        EpisodeLimits lim;
        lim.max_turns = 5 + i % 20;
        EpisodeOptions eo;
        eo.hash_observations = false;
        const Trajectory t = run_episode(p, s.image, "q", s.gt, disc, lim, eo);
        RewardConfig cfg;
        cfg.step_aggregation = i % 2 ? StepAggregation::mean : StepAggregation::sum_capped;
        const RewardBreakdown b = aggregate(t, s.gt, std::nullopt, cfg);
        worst = std::max(worst, std::abs(b.total - (b.s_ans + b.s_format + b.s_click + b.s_pseg + b.s_len) / 5.0));
    }
    return {tiers && lens && worst < 1e-12,
            fmt::format("tiers ({}), score_len(8,10,12) = ({}, {}, {}), max total deviation {:.3g}",
                        fmt::format("{},{},{},{},{},{}", got[0], got[1], got[2], got[3], got[4], got[5]),
                        score_len(8), score_len(10), score_len(12), worst)};
}

Outcome reward_ranking() {
    DiscSegmenter disc(3.0);
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto samples = make_synthetic_corpus(100, mix_seed(seed, {0x72616e6b}));
        std::vector<double> totals(300);
        parallel_for(300, [&](std::size_t k) {
            const std::size_t i = k % 100;
            const auto kind = k / 100;
            const Sample& s = samples[i];
            const auto ps = mix_seed(seed, {kind, i});
            Policy p = kind == 0 ? oracle_policy(s.gt) : kind == 1 ? jittered_policy(s.gt, 0.05, 0.0, ps)
                                                                   : random_policy(ps);
            EpisodeOptions eo;
            eo.hash_observations = false;
            const Trajectory t = run_episode(p, s.image, "q", s.gt, disc, {}, eo);
            totals[k] = aggregate(t, s.gt, std::nullopt).total;
        });
        double m[3] = {0, 0, 0};
        for (std::size_t k = 0; k < 300; ++k) m[k / 100] += totals[k] / 100.0;
        const bool ordered = m[0] > m[1] && m[1] > m[2];
        ok = ok && ordered;
        detail += fmt::format("{}seed {}: {:.3f} > {:.3f} > {:.3f}{}", seed == 1 ? "" : "; ", seed, m[0], m[1], m[2],
                              ordered ? "" : " (violated)");
    }
    return {ok, "oracle > jittered(0.05) > random means: " + detail};
}

Outcome grpo_arithmetic() {
    const std::vector<double> r{1, 2, 3};
    const auto a = advantages(r);
    const double mean = (a[0] + a[1] + a[2]) / 3;
    const double sd = std::sqrt((a[0] * a[0] + a[1] * a[1] + a[2] * a[2]) / 3 - mean * mean);
    const bool adv_ok = std::abs(mean) < 1e-9 && std::abs(sd - 1) < 1e-9 && std::abs(a[2] - std::sqrt(1.5)) < 1e-9;
    const std::vector<double> same{2.5, 2.5, 2.5, 2.5};
    const auto z = advantages(same);
    const bool zero_ok = std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; });

    Rng rng(mix_seed(1, {7}));
    double worst = 0;
    long upper = 0, lower = 0;
    for (int f = 0; f < 100; ++f) {
        RolloutGroup g;
        const int G = 1 + static_cast<int>(rng() % 8);
        std::vector<double> adv;
        for (int i = 0; i < G; ++i) {
            std::vector<TokenRatio> path;
            const int n = 1 + static_cast<int>(rng() % 30);
            for (int t = 0; t < n; ++t) path.push_back({0.4 + 1.2 * uniform01(rng), t == 0 || rng() % 5 != 0});
            g.paths.push_back(path);
            g.rewards.push_back(uniform01(rng));
            adv.push_back(4 * uniform01(rng) - 2);
        }
        const double eps = 0.1 + 0.2 * uniform01(rng);
        for (int i = 0; i < G; ++i)
            for (const auto& t : g.paths[static_cast<std::size_t>(i)]) {
                if (!t.include) continue;
                const double A = adv[static_cast<std::size_t>(i)];
                if ((A > 0 && t.ratio > 1 + eps) || (A < 0 && t.ratio < 1 - eps)) ++upper;
                if ((A > 0 && t.ratio < 1 - eps) || (A < 0 && t.ratio > 1 + eps)) ++lower;
            }
        worst = std::max(worst, std::abs(clipped_objective(g, adv, eps) - oracle::brute_objective(g, adv, eps)));
    }
    return {adv_ok && zero_ok && worst <= 1e-12 && upper > 0 && lower > 0,
            fmt::format("advantages([1,2,3]) = [{:.4f}, {:.4f}, {:.4f}], all-equal group zero: {}, max objective "
                        "deviation {:.3g} ({} clipped-branch and {} unclipped-branch out-of-range tokens)",
                        a[0], a[1], a[2], zero_ok ? "yes" : "no", worst, upper, lower)};
}

Outcome toy_training() {
    const auto t0 = Clock::now();
    std::vector<ToyTask> tasks;
    for (const Sample& s : make_synthetic_corpus(10, mix_seed(1, {0x746f79}))) tasks.push_back({s.image, s.gt});
    DiscSegmenter disc(3.0);
    ToyTrainingOptions opts;
    opts.iterations = 200;
    opts.group_size = 4;
    opts.seed = 8;
    const auto curve = train_toy_policy(tasks, disc, ToyPolicyParams{0.2, 0.0}, opts);
    const double train_secs = seconds_since(t0);
    opts.step_size = 0.0;
    const auto control = train_toy_policy(tasks, disc, ToyPolicyParams{0.2, 0.0}, opts);

    auto window = [](const std::vector<CurvePoint>& c, std::size_t from) {
        double s = 0;
        for (std::size_t i = from; i < from + 10; ++i) s += c[i].mean_reward;
        return s / 10;
    };
    const double initial = window(curve, 0), final = window(curve, 190);
    const double c0 = window(control, 0), c1 = window(control, 190);
    double cm = 0, cv = 0;
    for (const auto& p : control) cm += p.mean_reward / 200;
    for (const auto& p : control) cv += (p.mean_reward - cm) * (p.mean_reward - cm) / 199;
    const double tolerance = 3 * std::sqrt(2 * cv / 10);
    const bool gain = final >= 1.2 * initial && initial > 0;
    const bool flat = std::abs(c1 - c0) <= tolerance;
    return {gain && flat && train_secs < 120.0,
            fmt::format("mean reward {:.3f} -> {:.3f} ({:.2f}x, need >= 1.2x); control {:.3f} -> {:.3f} "
                        "(|diff| {:.3f} <= 3 se {:.3f}); training {:.1f} s (limit 120 s)",
                        initial, final, final / initial, c0, c1, std::abs(c1 - c0), tolerance, train_secs)};
}

std::string record_text(const DatasetRecord& r) {
    std::string s = r.traj.question + "\n";
    for (const auto& st : r.traj.steps) s += st.action_raw + "\n";
    return s + r.traj.final_turn;
}

Outcome pipeline(const cli::ScratchDir& dir) {
    if (cli::run("gen-synthetic --n 100 --seed 31 --out " + (dir / "samples")).code != 0)
        return {false, "gen-synthetic failed"};
    for (const char* out : {"run1", "run2"}) {
        const auto r = cli::run("build-dataset --samples " + (dir / "samples") + " --seed 7 --out " + (dir / out));
        if (r.code != 0) return {false, "build-dataset failed: " + r.out};
    }
    const std::string a = slurp(dir.path() / "run1/dataset.jsonl");
    const std::string b = slurp(dir.path() / "run2/dataset.jsonl");
    const auto records = read_jsonl(a);
    const FilterConfig filter;
    int violations = 0;
    std::size_t hits = 0;
    for (const auto& r : records) {
        if (r.final_dsc < filter.min_dice || r.length() > filter.max_length) ++violations;
        hits += lint_forbidden(record_text(r)).size();
    }
    return {a == b && !a.empty() && violations == 0 && hits == 0,
            fmt::format("{} records, identical bytes across runs: {}, filter violations {}, lint hits {}",
                        records.size(), a == b ? "yes" : "no", violations, hits)};
}

Outcome reflective(const cli::ScratchDir& dir) {
    const ArtifactStore store(dir.path() / "run1" / "blobs");
    const auto records = read_jsonl(slurp(dir.path() / "run1/dataset.jsonl"), &store);
    std::map<std::string, Sample> samples;
    for (Sample& s : read_samples(dir.path() / "samples")) samples.emplace(s.id, std::move(s));
    std::map<std::string, const DatasetRecord*> gold;
    for (const auto& r : records)
        if (r.reflective_kind == ReflectiveKind::none) gold[r.sample_id] = &r;
    DiscSegmenter disc(Config{}.segmenter.disc_radius);
    int stored = 0, flag_bad = 0, replay_bad = 0, mask_bad = 0;
    auto audit = [&](const DatasetRecord& r, const DatasetRecord& source) {
        std::set<int> flagged;
        for (std::size_t i = 0; i < r.traj.steps.size(); ++i)
            if (r.traj.steps[i].erroneous) flagged.insert(static_cast<int>(i));
        if (flagged.size() != 1) ++flag_bad;
        const Sample& s = samples.at(r.sample_id);
        const Mask replayed = replay_final_mask(r, s, disc);
        if (!equal(replayed, replay_final_mask(source, s, disc)) || !equal(replayed, source.traj.final_mask()))
            ++replay_bad;
        for (const auto& seg : sft_loss_mask(r.traj).segments) {
            const bool want_excluded =
                seg.kind == SegmentKind::observation || (seg.kind == SegmentKind::action && flagged.count(seg.step));
            if (seg.include == want_excluded) ++mask_bad;
        }
    };
    for (const auto& r : records) {
        if (r.reflective_kind != ReflectiveKind::self_correction) continue;
        ++stored;
        const auto g = gold.find(r.sample_id);
        if (g == gold.end()) {
            ++replay_bad;
            continue;
        }
        audit(r, *g->second);
    }
    // one fresh self-correction per gold record, beyond the sampled ones in the file
    int fresh = 0;
    for (const auto& [id, g] : gold) {
        if (g->length() == 0) continue;
        Rng rng(mix_seed(10, {static_cast<std::uint64_t>(fresh)}));
        audit(synthesize_reflective(*g, ReflectiveKind::self_correction, samples.at(id), disc, rng), *g);
        ++fresh;
    }
    return {stored > 0 && flag_bad == 0 && replay_bad == 0 && mask_bad == 0,
            fmt::format("{} stored and {} freshly synthesized self-correction records; flag count errors {}, replay "
                        "mismatches {}, loss-mask segment errors {}",
                        stored, fresh, flag_bad, replay_bad, mask_bad)};
}

Outcome protocol(const cli::ScratchDir& dir) {
    Rng rng(mix_seed(1, {11}));
    int mismatched = 0;
    for (int i = 0; i < 30; ++i) {
        const Index h = 1 + static_cast<Index>(rng() % 64), w = 1 + static_cast<Index>(rng() % 64);
        const Mask m = oracle::random_mask(rng, h, w, uniform01(rng));
        MockSegmenterServer echo(std::make_shared<FixedMaskSegmenter>(m), FixedMaskSegmenter::kTag);
        echo.start();
        RemoteSegmenter client(echo.endpoint());
        const Image img(h, w, 1, 0);
        const SegResult r = client.predict(img, {{Click{0, 0, Polarity::positive, std::nullopt}}, std::nullopt});
        if (!equal(r.best().mask, m)) ++mismatched;
        echo.stop();
    }

    if (cli::run("gen-synthetic --n 25 --seed 13 --out " + (dir / "p_samples")).code != 0)
        return {false, "gen-synthetic failed"};
    auto disc = std::make_shared<DiscSegmenter>(Config{}.segmenter.disc_radius);
    MockSegmenterServer proxy(disc, DiscSegmenter::kTag);
    proxy.start();
    const auto local = cli::run("simulate --samples " + (dir / "p_samples") + " --segmenter disc --seed 3 --out " +
                                (dir / "p_disc"));
    const auto remote = cli::run("simulate --samples " + (dir / "p_samples") + " --segmenter remote:" +
                                 proxy.endpoint() + " --seed 3 --out " + (dir / "p_remote"));
    proxy.stop();
    if (local.code != 0 || remote.code != 0)
        return {false, fmt::format("simulate failed (disc exit {}, remote exit {}): {}{}", local.code, remote.code,
                                   local.out, remote.out)};
    const std::string a = slurp(dir.path() / "p_disc/trajectories.jsonl");
    const std::string b = slurp(dir.path() / "p_remote/trajectories.jsonl");
    const bool same = !a.empty() && a == b;
    return {mismatched == 0 && same,
            fmt::format("{} / 30 masks differ after the HTTP round trip; remote vs disc trajectories.jsonl "
                        "byte-identical: {} ({} requests proxied)",
                        mismatched, same ? "yes" : "no", proxy.received_bodies().size())};
}

Outcome text_protocol() {
    Rng rng(mix_seed(1, {12}));
    int not_fixed = 0, accepted_bad = 0, variants = 0;
    for (int i = 0; i < 1000; ++i) {
        const ParsedTurn t = fixture::random_turn(rng);
        const std::string s = render_turn(t);
        std::string again;
        try {
            again = render_turn(parse_agent_output(s));
        } catch (const std::exception&) {
        }
        if (again != s) ++not_fixed;

        std::vector<std::string> broken;
        const auto think_end = s.find("</think>");
        broken.push_back(s.substr(0, think_end) + s.substr(think_end + 8));             // missing </think>
        broken.push_back(s.substr(7));                                                  // missing <think>
        broken.push_back(s.substr(think_end + 8) + s.substr(0, think_end + 8));         // payload first
        broken.push_back(s.substr(0, s.rfind("</")));                                   // unclosed payload
        broken.push_back(s.substr(0, think_end + 8));                                   // no payload
        const auto attr = s.find("\"attribute\":");
        if (attr != std::string::npos) {
            const auto v = attr + 12;
            const auto end = s.find(',', v);
            for (const char* bad : {"0", "2", "\"+1\"", "1.5"})
                broken.push_back(s.substr(0, v) + bad + s.substr(end));
        }
        for (const auto& b : broken) {
            ++variants;
            const std::vector<std::string> turns{b};
            if (score_format(turns) != 0) ++accepted_bad;
        }
    }
    return {not_fixed == 0 && accepted_bad == 0,
            fmt::format("{} / 1000 turns not a serialize-parse-serialize fixed point; {} of {} malformed variants "
                        "scored nonzero",
                        not_fixed, accepted_bad, variants)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    std::vector<int> known_failures;
    app.add_option("--only", only, "run just these criteria");
    app.add_option("--known-failure", known_failures,
                   "criteria expected to fail; they still print FAIL, and an unexpected PASS is an error");
    CLI11_PARSE(app, argc, argv);

    const cli::ScratchDir scratch("acceptance");
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "EDT exactness", edt_exactness},
        {2, "oracle click correctness", oracle_clicks},
        {3, "convergence", convergence},
        {4, "metric identities", metric_identities},
        {5, "reward boundary table", reward_boundaries},
        {6, "reward ranking", reward_ranking},
        {7, "GRPO arithmetic", grpo_arithmetic},
        {8, "toy training", toy_training},
        {9, "pipeline determinism and filtering", [&] { return pipeline(scratch); }},
        {10, "reflective integrity", [&] { return reflective(scratch); }},
        {11, "protocol conformance", [&] { return protocol(scratch); }},
        {12, "text protocol round-trip", text_protocol},
    };

    auto selected = [&](int id) { return only.empty() || std::count(only.begin(), only.end(), id) > 0; };
    auto expected_fail = [&](int id) {
        return std::count(known_failures.begin(), known_failures.end(), id) > 0;
    };
    int unexpected = 0;
    for (const auto& c : criteria) {
        // criterion 10 reads the dataset written by 9
        if (!selected(c.id) && !(c.id == 9 && selected(10))) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!selected(c.id)) continue;
        std::string note;
        if (o.pass && expected_fail(c.id)) note = " [listed as a known failure but passed]";
        if (!o.pass && expected_fail(c.id)) note = " [known failure]";
        if (o.pass == expected_fail(c.id)) ++unexpected;
        fmt::print("criterion {:>2} {} {}: {} ({:.1f} s){}\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail,
                   seconds_since(t0), note);
        std::fflush(stdout);
    }
    return unexpected == 0 ? 0 : 1;
}
