#include <doctest.h>

#include "ibis/click_oracle.hpp"
#include "ibis/corpus.hpp"
#include "ibis/environment.hpp"
#include "ibis/policies.hpp"
#include "fixtures.hpp"

using namespace ibis;

namespace {

ClickAction one_click(std::string target, int attr, double x, double y, std::optional<double> r = std::nullopt) {
    return ClickAction{{ClickTriple{std::move(target), attr, x, y, r}}};
}

}  // namespace

TEST_CASE("parse_agent_output examples") {
    const std::string click = render_action(Action{one_click("target", 1, 0.25, 0.5)});
    ParsedTurn t = parse_agent_output("<think>t</think><action>" + click + "</action>");
    CHECK(t.think == "t");
    const auto& a = std::get<ClickAction>(std::get<Action>(t.payload));
    REQUIRE(a.clicks.size() == 1);
    CHECK(a.clicks[0].attribute == 1);

    ParsedTurn tc = parse_agent_output("<think>t</think> <tool_call>" + click + "</tool_call>");
    CHECK(std::get<Action>(tc.payload) == std::get<Action>(t.payload));

    ParsedTurn ans = parse_agent_output("<think>t</think><answer>done</answer>");
    CHECK(std::get<FinalAnswer>(ans.payload).text == "done");

    auto failure = [](std::string_view s) {
        try {
            parse_agent_output(s);
        } catch (const TurnFormatError& e) {
            return e.site;
        }
        FAIL("accepted malformed turn: " << s);
        return FormatFailure::stray_text;
    };
    CHECK(failure("<action>" + click + "</action><think>t</think>") == FormatFailure::misordered_tags);
    CHECK(failure("<think>t<action>END</action>") == FormatFailure::unclosed_tag);
    CHECK(failure("<think>t</think>") == FormatFailure::missing_payload);
    CHECK(failure("<action>END</action>") == FormatFailure::missing_think);
    CHECK(failure("<think>a</think><think>b</think><action>END</action>") == FormatFailure::duplicated_tag);
    CHECK(failure("<think>t</think><action>END</action><answer>x</answer>") == FormatFailure::duplicated_tag);
    CHECK(failure("hello <think>t</think><action>END</action>") == FormatFailure::stray_text);
    CHECK(failure(R"(<think>t</think><action>[{"target":"a","attribute":0,"coordinate_2d":[0.1,0.1]}]</action>)") ==
          FormatFailure::bad_action);
    CHECK(failure(R"(<think>t</think><action>[{"target":"a","attribute":1,"coordinate_2d":[1.5,0.1]}]</action>)") ==
          FormatFailure::bad_action);
    CHECK(failure("<think>t</think><action>[]</action>") == FormatFailure::bad_action);
}

TEST_CASE("turn rendering round-trips") {
    Rng rng(8);
    for (int i = 0; i < 300; ++i) {
        ParsedTurn t = fixture::random_turn(rng);
        const std::string s = render_turn(t);
        ParsedTurn back = parse_agent_output(s);
        CHECK(back == t);
        CHECK(render_turn(back) == s);
    }
}

TEST_CASE("pixel mapping") {
    CHECK(to_pixel(0, 0, 13, 7) == PixelCoord{0, 0});
    CHECK(to_pixel(1, 1, 100, 100) == PixelCoord{99, 99});
    CHECK(to_pixel(0.5, 0.25, 8, 8) == PixelCoord{2, 4});
    for (Index r = 0; r < 37; ++r) {
        for (Index c = 0; c < 53; ++c) {
            auto [x, y] = to_normalized(r, c, 53, 37);
            CHECK(to_pixel(x, y, 53, 37) == PixelCoord{r, c});
        }
    }
}

TEST_CASE("step composes the disc and the overlay") {
    Image img(12, 12, 1, 100);
    DiscSegmenter disc(2.0);
    EpisodeState s0 = make_episode(img, "q");
    auto [x, y] = to_normalized(5, 6, 12, 12);
    StepOutcome out = step(s0, Action{one_click("target", 1, x, y)}, disc);
    REQUIRE(out.state.targets.size() == 1);
    const Mask want = oracle::disc_by_enumeration(12, 12, 5, 6, 2.0);
    CHECK(equal(out.state.targets[0].mask, want));
    CHECK(out.state.turn == 1);
    CHECK(out.state.transcript.size() == 1);
    const OverlayStyle style;
    CHECK(out.observation == overlay(img, want, style.alpha, style.palette[0]));
    CHECK(s0.turn == 0);
    CHECK(s0.targets.empty());
}

TEST_CASE("revert restores the previous mask exactly") {
    Image img(20, 20, 1, 0);
    DiscSegmenter disc(3.0);
    EpisodeState s = make_episode(img, "q");
    std::vector<Mask> after;
    Rng rng(4);
    for (int k = 0; k < 6; ++k) {
        auto [x, y] = to_normalized(static_cast<Index>(rng() % 20), static_cast<Index>(rng() % 20), 20, 20);
        s = step(s, Action{one_click("t", k % 3 == 2 ? -1 : 1, x, y)}, disc).state;
        after.push_back(s.find("t")->mask);
    }
    for (int k = 5; k >= 1; --k) {
        s = step(s, Action{RevertAction{{"t"}}}, disc).state;
        CHECK(equal(s.find("t")->mask, after[static_cast<std::size_t>(k - 1)]));
    }
    s = step(s, Action{RevertAction{{"t"}}}, disc).state;
    CHECK_FALSE(s.composite().any());
    CHECK(s.turn == 12);
}

TEST_CASE("end action changes only turn and transcript") {
    Image img(8, 8, 1, 0);
    DiscSegmenter disc(2.0);
    EpisodeState s = make_episode(img, "q");
    auto [x, y] = to_normalized(3, 3, 8, 8);
    s = step(s, Action{one_click("t", 1, x, y)}, disc).state;
    EpisodeState e = step(s, Action{EndAction{}}, disc).state;
    CHECK(e.turn == s.turn + 1);
    CHECK(e.transcript.size() == s.transcript.size() + 1);
    CHECK(equal(e.composite(), s.composite()));
    CHECK(e.find("t")->clicks == s.find("t")->clicks);
}

TEST_CASE("multiple targets share a composite") {
    Image img(16, 16, 1, 0);
    DiscSegmenter disc(2.0);
    EpisodeState s = make_episode(img, "q");
    auto [x1, y1] = to_normalized(3, 3, 16, 16);
    auto [x2, y2] = to_normalized(12, 12, 16, 16);
    ClickAction both{{ClickTriple{"a", 1, x1, y1, std::nullopt}, ClickTriple{"b", 1, x2, y2, std::nullopt}}};
    s = step(s, Action{both}, disc).state;
    REQUIRE(s.targets.size() == 2);
    CHECK(equal(s.composite(), s.find("a")->mask || s.find("b")->mask));
    s = step(s, Action{RevertAction{{"b"}}}, disc).state;
    CHECK(equal(s.composite(), s.find("a")->mask));
}

TEST_CASE("run_episode terminations") {
    Image img(16, 16, 1, 0);
    DiscSegmenter disc(2.0);
    Mask gt = oracle::disc_by_enumeration(16, 16, 8, 8, 4.0);
    EpisodeLimits lim;
    lim.max_turns = 5;

    Trajectory answered = run_episode(fixture::scripted({}), img, "q", gt, disc, lim);
    CHECK(answered.steps.empty());
    CHECK(answered.termination == Termination::answered);

    Policy clicker = [](const PolicyView&) {
        auto [x, y] = to_normalized(1, 1, 16, 16);
        return render_turn("more", Action{ClickAction{{ClickTriple{"t", 1, x, y, std::nullopt}}}});
    };
    Trajectory capped = run_episode(clicker, img, "q", gt, disc, lim);
    CHECK(capped.steps.size() == 5);
    CHECK(capped.termination == Termination::turn_limit);

    Trajectory bad = run_episode([](const PolicyView&) { return std::string("no tags"); }, img, "q", gt, disc, lim);
    CHECK(bad.termination == Termination::format_error);
    CHECK(bad.final_turn == "no tags");

    EpisodeLimits tight;
    tight.max_transcript_chars = 60;
    Trajectory budget = run_episode(clicker, img, "q", gt, disc, tight);
    CHECK(budget.termination == Termination::budget_exhausted);
    CHECK(budget.steps.size() < 20);
}

TEST_CASE("oracle policy end to end") {
    ShapeParams shapes;
    shapes.hole_probability = 0.0;
    shapes.max_ellipses = 1;
    shapes.min_aspect = 0.95;
    shapes.height = shapes.width = 128;
    const auto samples = make_synthetic_corpus(3, 12, shapes);
    DiscSegmenter disc(3.0);
    for (const Sample& s : samples) {
        Trajectory t = run_episode(oracle_policy(s.gt), s.image, "q", s.gt, disc, {});
        CHECK(t.termination == Termination::answered);
        CHECK(iou(t.final_mask(), s.gt) >= 0.95);
        Mask prev = t.initial_mask;
        for (const auto& st : t.steps) {
            for (const Click& c : st.clicks) {
                const bool in_fn = s.gt(c.row, c.col) && !prev(c.row, c.col);
                const bool in_fp = !s.gt(c.row, c.col) && prev(c.row, c.col);
                CHECK((c.polarity == Polarity::positive ? in_fn : in_fp));
            }
            prev = st.mask;
        }
    }
}

TEST_CASE("reference policies") {
    const auto samples = make_synthetic_corpus(2, 77);
    DiscSegmenter disc(3.0);
    for (const Sample& s : samples) {
        Trajectory a = run_episode(oracle_policy(s.gt), s.image, "q", s.gt, disc, {});
        Trajectory b = run_episode(jittered_policy(s.gt, 0.0, 0.0, 99), s.image, "q", s.gt, disc, {});
        REQUIRE(a.steps.size() == b.steps.size());
        for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(a.steps[i].action == b.steps[i].action);
    }
    Trajectory r = run_episode(random_policy(3, {"target", 0.0}), samples[0].image, "q", samples[0].gt, disc, {});
    CHECK(r.steps.size() == 20);
    for (const auto& st : r.steps) {
        for (const auto& tr : std::get<ClickAction>(st.action).clicks) {
            CHECK(tr.x >= 0.0);
            CHECK(tr.x <= 1.0);
            CHECK(tr.y >= 0.0);
            CHECK(tr.y <= 1.0);
        }
    }
}
