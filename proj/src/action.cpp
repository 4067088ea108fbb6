#include "ibis/action.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

#include <fmt/core.h>
#include <json.hpp>

namespace ibis {

using nlohmann::json;

namespace {

enum class Tag { think, action, tool_call, answer };

struct TagHit {
    Tag tag;
    bool closing;
    std::size_t pos;
    std::size_t len;
};

constexpr std::array<std::pair<std::string_view, Tag>, 4> kTagNames{{
    {"think", Tag::think},
    {"action", Tag::action},
    {"tool_call", Tag::tool_call},
    {"answer", Tag::answer},
}};

std::vector<TagHit> scan_tags(std::string_view text) {
    std::vector<TagHit> hits;
    for (std::size_t i = text.find('<'); i != std::string_view::npos; i = text.find('<', i + 1)) {
        const bool closing = i + 1 < text.size() && text[i + 1] == '/';
        const std::size_t name_at = i + (closing ? 2 : 1);
        for (const auto& [name, tag] : kTagNames) {
            if (text.substr(name_at, name.size()) == name && name_at + name.size() < text.size() &&
                text[name_at + name.size()] == '>') {
                hits.push_back({tag, closing, i, name.size() + (closing ? 3 : 2)});
                break;
            }
        }
    }
    return hits;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(FormatFailure f, std::size_t at, const std::string& msg) {
    throw TurnFormatError(f, at, fmt::format("{} at offset {}: {}", to_string(f), at, msg));
}

[[noreturn]] void bad_action(const std::string& msg) { fail(FormatFailure::bad_action, 0, msg); }

double unit_coordinate(const json& v, const char* what) {
    if (!v.is_number()) bad_action(fmt::format("{} is not a number", what));
    const double d = v.get<double>();
    if (!(d >= 0.0 && d <= 1.0)) bad_action(fmt::format("{} = {} outside [0,1]", what, d));
    return d;
}

ClickTriple parse_triple(const json& j) {
    if (!j.is_object()) bad_action("click entry is not an object");
    for (const auto& [key, _] : j.items()) {
        if (key != "target" && key != "attribute" && key != "coordinate_2d" && key != "radius") {
            bad_action(fmt::format("unknown click field '{}'", key));
        }
    }
    ClickTriple t;
    const auto target = j.find("target");
    if (target == j.end() || !target->is_string() || target->get<std::string>().empty()) {
        bad_action("click needs a non-empty string 'target'");
    }
    t.target = target->get<std::string>();
    const auto attr = j.find("attribute");
    if (attr == j.end() || !(attr->is_number_integer() || attr->is_number_unsigned())) {
        bad_action("click needs an integer 'attribute'");
    }
    const auto a = attr->get<long long>();
    if (a != 1 && a != -1) bad_action(fmt::format("attribute {} not in {{+1,-1}}", a));
    t.attribute = static_cast<int>(a);
    const auto coord = j.find("coordinate_2d");
    if (coord == j.end() || !coord->is_array() || coord->size() != 2) {
        bad_action("click needs 'coordinate_2d' as [x, y]");
    }
    t.x = unit_coordinate((*coord)[0], "x");
    t.y = unit_coordinate((*coord)[1], "y");
    if (const auto r = j.find("radius"); r != j.end()) {
        if (!r->is_number() || !(r->get<double>() >= 0.0) || !std::isfinite(r->get<double>())) {
            bad_action("radius must be a finite non-negative number");
        }
        t.radius = r->get<double>();
    }
    return t;
}

std::string fixed(double v) { return fmt::format("{:.{}f}", v, kCoordDecimals); }

}  // namespace

std::string_view to_string(FormatFailure f) {
    switch (f) {
        case FormatFailure::missing_think: return "missing-think";
        case FormatFailure::missing_payload: return "missing-payload";
        case FormatFailure::duplicated_tag: return "duplicated-tag";
        case FormatFailure::misordered_tags: return "misordered-tags";
        case FormatFailure::unclosed_tag: return "unclosed-tag";
        case FormatFailure::stray_text: return "stray-text";
        case FormatFailure::bad_action: return "bad-action";
    }
    return "unknown";
}

Action parse_action(std::string_view body) {
    const std::string_view trimmed = trim(body);
    if (trimmed == "END") return EndAction{};
    json j;
    try {
        j = json::parse(trimmed);
    } catch (const json::parse_error& e) {
        bad_action(e.what());
    }
    if (j.is_array()) {
        if (j.empty()) bad_action("empty click list");
        ClickAction act;
        for (const auto& e : j) act.clicks.push_back(parse_triple(e));
        return act;
    }
    if (j.is_object() && j.size() == 1 && j.contains("revert")) {
        const json& list = j["revert"];
        if (!list.is_array() || list.empty()) bad_action("'revert' must be a non-empty list of targets");
        RevertAction act;
        for (const auto& e : list) {
            if (!e.is_string() || e.get<std::string>().empty()) bad_action("revert target must be a non-empty string");
            act.targets.push_back(e.get<std::string>());
        }
        return act;
    }
    bad_action("action is neither END, a click list, nor a revert");
}

ParsedTurn parse_agent_output(std::string_view text) {
    const std::vector<TagHit> hits = scan_tags(text);
    // each tag spelling may appear at most once
    for (std::size_t i = 0; i < hits.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (hits[i].tag == hits[j].tag && hits[i].closing == hits[j].closing) {
                fail(FormatFailure::duplicated_tag, hits[i].pos, "tag appears twice");
            }
        }
    }
    auto find = [&](Tag t, bool closing) -> const TagHit* {
        for (const auto& h : hits)
            if (h.tag == t && h.closing == closing) return &h;
        return nullptr;
    };
    const TagHit* think_open = find(Tag::think, false);
    const TagHit* think_close = find(Tag::think, true);
    if (!think_open && !think_close) fail(FormatFailure::missing_think, 0, "no <think> block");
    if (!think_open || !think_close) {
        fail(FormatFailure::unclosed_tag, (think_open ? think_open : think_close)->pos, "unbalanced think tags");
    }

    std::optional<Tag> payload;
    for (const auto& h : hits) {
        if (h.tag == Tag::think) continue;
        if (payload && *payload != h.tag) fail(FormatFailure::duplicated_tag, h.pos, "more than one payload block");
        payload = h.tag;
    }
    if (!payload) fail(FormatFailure::missing_payload, text.size(), "no action or answer block");
    const TagHit* open = find(*payload, false);
    const TagHit* close = find(*payload, true);
    if (!open || !close) {
        fail(FormatFailure::unclosed_tag, (open ? open : close)->pos, "unbalanced payload tags");
    }
    if (hits.size() != 4 || &hits[0] != think_open || &hits[1] != think_close || &hits[2] != open ||
        &hits[3] != close) {
        const std::size_t at = std::min({think_open->pos, think_close->pos, open->pos, close->pos});
        fail(FormatFailure::misordered_tags, at, "expected <think>..</think> then the payload block");
    }
    const std::size_t think_end = think_close->pos + think_close->len;
    const std::size_t payload_end = close->pos + close->len;
    if (!is_blank(text.substr(0, think_open->pos))) fail(FormatFailure::stray_text, 0, "text before <think>");
    if (!is_blank(text.substr(think_end, open->pos - think_end))) {
        fail(FormatFailure::stray_text, think_end, "text between blocks");
    }
    if (!is_blank(text.substr(payload_end))) fail(FormatFailure::stray_text, payload_end, "text after payload");

    ParsedTurn turn;
    const std::size_t think_from = think_open->pos + think_open->len;
    turn.think = std::string(text.substr(think_from, think_close->pos - think_from));
    const std::size_t body_from = open->pos + open->len;
    const std::string_view body = text.substr(body_from, close->pos - body_from);
    if (*payload == Tag::answer) {
        turn.payload = FinalAnswer{std::string(body)};
    } else {
        try {
            turn.payload = parse_action(body);
        } catch (const TurnFormatError& e) {
            throw TurnFormatError(e.site, body_from, e.what());
        }
    }
    return turn;
}

bool is_well_formed(std::string_view text) {
    try {
        parse_agent_output(text);
        return true;
    } catch (const TurnFormatError&) {
        return false;
    }
}

std::string render_action(const Action& a) {
    if (std::holds_alternative<EndAction>(a)) return "END";
    if (const auto* rv = std::get_if<RevertAction>(&a)) {
        std::string out = "{\"revert\":[";
        for (std::size_t i = 0; i < rv->targets.size(); ++i) {
            if (i) out += ',';
            out += json(rv->targets[i]).dump();
        }
        return out + "]}";
    }
    const auto& clicks = std::get<ClickAction>(a).clicks;
    std::string out = "[";
    for (std::size_t i = 0; i < clicks.size(); ++i) {
        const ClickTriple& t = clicks[i];
        if (i) out += ',';
        out += fmt::format("{{\"target\":{},\"attribute\":{},\"coordinate_2d\":[{},{}]", json(t.target).dump(),
                           t.attribute, fixed(t.x), fixed(t.y));
        if (t.radius) out += fmt::format(",\"radius\":{}", fixed(*t.radius));
        out += '}';
    }
    return out + "]";
}

std::string render_turn(std::string_view think, const Action& a) {
    return fmt::format("<think>{}</think><action>{}</action>", think, render_action(a));
}

std::string render_answer_turn(std::string_view think, std::string_view answer) {
    return fmt::format("<think>{}</think><answer>{}</answer>", think, answer);
}

std::string render_turn(const ParsedTurn& turn) {
    if (const auto* ans = std::get_if<FinalAnswer>(&turn.payload)) return render_answer_turn(turn.think, ans->text);
    return render_turn(turn.think, std::get<Action>(turn.payload));
}

double quantize_down(double v) {
    constexpr double scale = 1e6;
    return std::floor(v * scale) / scale;
}

namespace {
double quantize_nearest(double v) { return std::strtod(fixed(v).c_str(), nullptr); }
}  // namespace

PixelCoord to_pixel(double x, double y, Index width, Index height) {
    auto axis = [](double u, Index n) {
        const auto i = static_cast<Index>(std::floor(u * static_cast<double>(n)));
        return std::clamp<Index>(i, 0, n - 1);
    };
    return {axis(y, height), axis(x, width)};
}

std::pair<double, double> to_normalized(Index row, Index col, Index width, Index height) {
    return {quantize_nearest((static_cast<double>(col) + 0.5) / static_cast<double>(width)),
            quantize_nearest((static_cast<double>(row) + 0.5) / static_cast<double>(height))};
}

ClickTriple to_triple(const Click& c, std::string target, Index width, Index height) {
    const auto [x, y] = to_normalized(c.row, c.col, width, height);
    return {std::move(target), c.polarity == Polarity::positive ? 1 : -1, x, y, c.radius_hint};
}

Click to_click(const ClickTriple& t, Index width, Index height) {
    const PixelCoord p = to_pixel(t.x, t.y, width, height);
    return {p.row, p.col, t.attribute > 0 ? Polarity::positive : Polarity::negative, t.radius};
}

}  // namespace ibis
