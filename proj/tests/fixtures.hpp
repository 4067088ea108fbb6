#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ibis/action.hpp"
#include "ibis/environment.hpp"
#include "ibis/rng.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace ibis;

inline std::string random_words(Rng& rng, int max_words) {
    static const char* words[] = {"the", "mask", "needs", "more", "area", "near", "edge", "of", "object", "left",
                                  "upper", "so", "I", "will", "add", "{x}", "a/b", "100%", "\"quoted\"", "émoji"};
    const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_words));
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += words[rng() % std::size(words)];
    }
    return out;
}

inline std::string random_label(Rng& rng) {
    static const char* labels[] = {"target", "left lung", "liver", "tumor \"A\"", "kidney_2", "x"};
    return labels[rng() % std::size(labels)];
}

inline double random_coord(Rng& rng) { return quantize_down(uniform01(rng)); }

// A random well-formed turn whose numbers already sit on the wire grid.
inline ParsedTurn random_turn(Rng& rng) {
    ParsedTurn t;
    t.think = random_words(rng, 12);
    const auto kind = rng() % 10;
    if (kind == 0) {
        t.payload = FinalAnswer{random_words(rng, 6)};
    } else if (kind == 1) {
        t.payload = Action{EndAction{}};
    } else if (kind == 2) {
        RevertAction rv;
        const int n = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < n; ++i) rv.targets.push_back(random_label(rng));
        t.payload = Action{rv};
    } else {
        ClickAction ca;
        const int n = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < n; ++i) {
            ClickTriple tr;
            tr.target = random_label(rng);
            tr.attribute = rng() % 2 ? 1 : -1;
            tr.x = random_coord(rng);
            tr.y = random_coord(rng);
            if (rng() % 2) tr.radius = quantize_down(20.0 * uniform01(rng));
            ca.clicks.push_back(tr);
        }
        t.payload = Action{ca};
    }
    return t;
}

// Replays fixed turn texts, then answers.
inline Policy scripted(std::vector<std::string> turns) {
    auto shared = std::make_shared<std::vector<std::string>>(std::move(turns));
    return [shared](const PolicyView& v) {
        const auto i = static_cast<std::size_t>(v.turn);
        return i < shared->size() ? (*shared)[i] : render_answer_turn("done", "Segmentation complete.");
    };
}

struct SingleClick {
    Image image;
    Mask gt;
    std::string click_turn;
    std::string answer_turn;
};

// A disc target that one annotated positive click reproduces exactly.
inline SingleClick perfect_single_click() {
    SingleClick f;
    f.image = Image(16, 16, 1, 40);
    f.gt = oracle::disc_by_enumeration(16, 16, 8, 7, 3.0);
    auto [x, y] = to_normalized(8, 7, 16, 16);
    ClickTriple tr{"target", 1, x, y, 3.0};
    f.click_turn = render_turn("Add the object.", Action{ClickAction{{tr}}});
    f.answer_turn = render_answer_turn("Looks right.", "Segmentation complete.");
    return f;
}

}  // namespace fixture
