#include <doctest.h>

#include <cmath>

#include "ibis/corpus.hpp"
#include "ibis/grpo.hpp"
#include "ibis/rewards.hpp"
#include "fixtures.hpp"

using namespace ibis;

TEST_CASE("score_format") {
    std::vector<std::string> good{"<think>a</think><action>END</action>", "<think>b</think><answer>x</answer>"};
    CHECK(score_format(good) == 1);
    std::vector<std::string> missing{"<think>a<action>END</action>"};
    CHECK(score_format(missing) == 0);
    std::vector<std::string> attr{
        R"(<think>a</think><action>[{"target":"t","attribute":2,"coordinate_2d":[0.5,0.5]}]</action>)"};
    CHECK(score_format(attr) == 0);
}

TEST_CASE("answer scores") {
    CHECK(score_answer_mcq("B", "B") == 1);
    CHECK(score_answer_mcq("b ", "B") == 1);
    CHECK(score_answer_mcq("A", "B") == 0);
    CHECK(score_answer_iou(0.85) == 3);
    CHECK(score_answer_iou(0.80) == 2);
    CHECK(score_answer_iou(0.50) == 0);
    double last = -1;
    for (int i = 0; i <= 1000; ++i) {
        const double v = score_answer_iou(i / 1000.0);
        CHECK(v >= last);
        last = v;
    }
}

TEST_CASE("score_click") {
    Mask gt = oracle::mask_from_rows({"###.", "###.", "...."});
    Mask prev = oracle::mask_from_rows({"#...", "....", "...#"});
    CHECK(score_click({1, 1, Polarity::positive, {}}, prev, gt) == 1.0);
    CHECK(score_click({0, 0, Polarity::negative, {}}, prev, gt) == -1.0);
    CHECK(score_click({2, 0, Polarity::positive, {}}, prev, gt) == -1.0);
    CHECK(score_click({2, 3, Polarity::negative, {}}, prev, gt) == 1.0);
    CHECK_THROWS(score_click({3, 0, Polarity::positive, {}}, prev, gt));
}

TEST_CASE("score_pseg and score_len") {
    CHECK(score_pseg(0.7, 0.6) == 1);
    CHECK(score_pseg(0.7, 0.7) == 0);
    CHECK(score_pseg(0.6, 0.7) == 0);
    CHECK(score_len(8) == 1.0);
    CHECK(score_len(10) == 1.0);
    CHECK(score_len(12) == doctest::Approx(-0.4));
    for (int t = 11; t < 40; ++t) CHECK(score_len(t + 1) - score_len(t) == doctest::Approx(-0.2));
}

TEST_CASE("aggregate fixtures") {
    const auto f = fixture::perfect_single_click();
    DiscSegmenter disc(1.0);
    Trajectory t = run_episode(fixture::scripted({f.click_turn}), f.image, "q", f.gt, disc, {});
    REQUIRE(t.steps.size() == 1);
    RewardBreakdown b = aggregate(t, f.gt, std::nullopt);
    CHECK(b.s_ans == 3);
    CHECK(b.s_format == 1);
    CHECK(b.s_click == 1);
    CHECK(b.s_pseg == 1);
    CHECK(b.s_len == 1);
    CHECK(b.total == doctest::Approx(1.4).epsilon(1e-12));

    Trajectory broken = t;
    broken.final_turn = "<answer>Segmentation complete.</answer>";
    RewardBreakdown bb = aggregate(broken, f.gt, std::nullopt);
    CHECK(bb.s_format == 0);
    CHECK(b.total - bb.total == doctest::Approx(0.2));

    Trajectory zero = run_episode(fixture::scripted({}), f.image, "q", f.gt, disc, {});
    RewardBreakdown z = aggregate(zero, f.gt, std::nullopt);
    CHECK(z.s_click == 0);
    CHECK(z.s_pseg == 0);
    CHECK(z.s_len == 1);
    CHECK(z.s_ans == 0);
    CHECK(z.per_step.empty());

    CHECK_THROWS_AS(aggregate(t, std::nullopt, std::nullopt), MissingGroundTruth);
    RewardBreakdown mcq = aggregate(zero, std::nullopt, std::string("segmentation COMPLETE."));
    CHECK(mcq.s_ans == 1);
}

TEST_CASE("sum_capped aggregation stays bounded") {
    Image img(16, 16, 1, 0);
    Mask gt = oracle::disc_by_enumeration(16, 16, 8, 8, 5.0);
    DiscSegmenter disc(1.0);
    std::vector<std::string> turns;
    for (Index r = 6; r <= 10; ++r) {
        auto [x, y] = to_normalized(r, 8, 16, 16);
        turns.push_back(render_turn("add", Action{ClickAction{{ClickTriple{"target", 1, x, y, std::nullopt}}}}));
    }
    Trajectory t = run_episode(fixture::scripted(turns), img, "q", gt, disc, {});
    RewardConfig cfg;
    cfg.step_aggregation = StepAggregation::sum_capped;
    RewardBreakdown b = aggregate(t, gt, std::nullopt, cfg);
    CHECK(b.s_click <= cfg.r_click * cfg.t_opt);
    CHECK(b.s_click >= -cfg.lambda_miss * cfg.t_opt);
    CHECK(b.s_pseg <= cfg.t_opt);
    cfg.t_opt = 2;
    RewardBreakdown capped = aggregate(t, gt, std::nullopt, cfg);
    CHECK(std::abs(capped.s_click) <= 2.0);
    CHECK(capped.s_pseg <= 2.0);
    CHECK(b.total == combine(b.s_ans, b.s_format, b.s_click, b.s_pseg, b.s_len));
}

TEST_CASE("advantages") {
    std::vector<double> r{1, 2, 3};
    auto a = advantages(r);
    CHECK(a[0] == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(a[1] == doctest::Approx(0.0));
    CHECK(a[2] == doctest::Approx(1.2247).epsilon(1e-4));
    std::vector<double> same{0.4, 0.4, 0.4, 0.4};
    for (double v : advantages(same)) CHECK(v == 0.0);
    std::vector<double> one{5.0};
    CHECK(advantages(one) == std::vector<double>{0.0});

    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        Eigen::ArrayXd x(2 + static_cast<Index>(rng() % 8));
        for (auto& v : x) v = 4 * uniform01(rng) - 2;
        const Eigen::ArrayXd ax = advantages(x);
        CHECK(std::abs(ax.mean()) < 1e-9);
        CHECK(std::abs(std::sqrt(ax.square().mean()) - 1.0) < 1e-9);
        CHECK(((advantages(Eigen::ArrayXd(x + 3.5)) - ax).abs() < 1e-9).all());
        CHECK(((advantages(Eigen::ArrayXd(x * 2.5)) - ax).abs() < 1e-9).all());
    }
}

TEST_CASE("clipped objective") {
    auto single = [](double rho, double a, double eps) {
        RolloutGroup g;
        g.paths = {{TokenRatio{rho, true}}};
        g.rewards = {0};
        std::vector<double> adv{a};
        return clipped_objective(g, adv, eps);
    };
    CHECK(single(1.0, 2.0, 0.2) == -2.0);
    CHECK(single(2.0, 1.0, 0.2) == doctest::Approx(-1.2));
    CHECK(single(2.0, -1.0, 0.2) == 2.0);

    RolloutGroup empty_path;
    empty_path.paths = {{TokenRatio{1.0, false}}};
    empty_path.rewards = {0};
    std::vector<double> adv{1.0};
    CHECK_THROWS(clipped_objective(empty_path, adv, 0.2));
    CHECK_THROWS(clipped_objective(empty_path, adv, 1.5));

    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        RolloutGroup g;
        const int G = 1 + static_cast<int>(rng() % 6);
        std::vector<double> a;
        for (int p = 0; p < G; ++p) {
            std::vector<TokenRatio> path{TokenRatio{0.9 + 0.2 * uniform01(rng), true}};
            const int n = static_cast<int>(rng() % 20);
            for (int k = 0; k < n; ++k) path.push_back({0.95 + 0.1 * uniform01(rng), rng() % 4 != 0});
            g.paths.push_back(path);
            g.rewards.push_back(0);
            a.push_back(2 * uniform01(rng) - 1);
        }
        // ratios inside [1 - eps, 1 + eps]: the clip is inactive
        double surrogate = 0;
        for (int p = 0; p < G; ++p) {
            double s = 0;
            int n = 0;
            for (const auto& t : g.paths[static_cast<std::size_t>(p)]) {
                if (!t.include) continue;
                s += t.ratio * a[static_cast<std::size_t>(p)];
                ++n;
            }
            surrogate += s / n;
        }
        CHECK(std::abs(clipped_objective(g, a, 0.2) + surrogate / G) < 1e-12);
    }
}

TEST_CASE("sft loss mask") {
    const auto f = fixture::perfect_single_click();
    DiscSegmenter disc(1.0);
    Trajectory t = run_episode(fixture::scripted({f.click_turn, f.click_turn, f.click_turn}), f.image, "q", f.gt,
                               disc, {});
    REQUIRE(t.steps.size() == 3);

    auto excluded_kinds = [](const LossMask& m) {
        std::vector<std::pair<int, SegmentKind>> out;
        std::size_t tokens = 0;
        for (const auto& s : m.segments) {
            if (!s.include) out.emplace_back(s.step, s.kind);
            for (std::size_t i = 0; i < s.count; ++i) CHECK(m.include[s.begin + i] == s.include);
            if (s.kind == SegmentKind::observation) CHECK_FALSE(s.include);
            tokens += s.count;
        }
        CHECK(tokens == m.include.size());
        return out;
    };

    auto none = excluded_kinds(sft_loss_mask(t, std::set<int>{}));
    CHECK(none.size() == 3);
    for (auto [step, kind] : none) CHECK(kind == SegmentKind::observation);

    for (int flagged = 0; flagged < 3; ++flagged) {
        auto ex = excluded_kinds(sft_loss_mask(t, std::set<int>{flagged}));
        CHECK(ex.size() == 4);
        int actions = 0;
        for (auto [step, kind] : ex) {
            if (kind != SegmentKind::action) continue;
            CHECK(step == flagged);
            ++actions;
        }
        CHECK(actions == 1);
    }

    LossMask all = sft_loss_mask(t, std::set<int>{0, 1, 2});
    for (const auto& s : all.segments)
        CHECK(s.include == (s.kind == SegmentKind::think || s.kind == SegmentKind::answer));
    CHECK_THROWS(sft_loss_mask(t, std::set<int>{3}));
}

TEST_CASE("toy training controls") {
    const auto samples = make_synthetic_corpus(2, 4);
    std::vector<ToyTask> tasks;
    for (const auto& s : samples) tasks.push_back({s.image, s.gt});
    DiscSegmenter disc(3.0);
    ToyTrainingOptions opts;
    opts.iterations = 3;
    opts.group_size = 2;
    opts.step_size = 0.0;
    opts.seed = 5;
    auto flat = train_toy_policy(tasks, disc, {}, opts);
    REQUIRE(flat.size() == 3);
    for (const auto& p : flat) {
        CHECK(p.sigma == 0.2);
        CHECK(p.stop_bias == 0.0);
    }
    CHECK(curve_csv(flat).rfind("iteration,mean_reward,sigma,stop_bias\n", 0) == 0);

    // empty targets: every rollout answers at once, so advantages vanish
    std::vector<ToyTask> trivial{{samples[0].image, empty_mask(samples[0].gt.rows(), samples[0].gt.cols())}};
    opts.step_size = 0.5;
    for (const auto& p : train_toy_policy(trivial, disc, {}, opts)) {
        CHECK(p.sigma == 0.2);
        CHECK(p.stop_bias == 0.0);
    }

    opts.step_size = 0.05;
    opts.iterations = 2;
    auto a = train_toy_policy(tasks, disc, {}, opts);
    auto b = train_toy_policy(tasks, disc, {}, opts);
    CHECK(curve_csv(a) == curve_csv(b));
}
