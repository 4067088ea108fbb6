#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ibis/click.hpp"

namespace ibis {

// One (Target, Attribute, Coordinate_2d) triple. x runs along columns, y along rows.
struct ClickTriple {
    std::string target;
    int attribute = 1;  // +1 positive, -1 negative
    double x = 0.0;
    double y = 0.0;
    std::optional<double> radius;  // extension: disc radius hint in pixels

    friend bool operator==(const ClickTriple&, const ClickTriple&) = default;
};

struct EndAction {
    friend bool operator==(const EndAction&, const EndAction&) = default;
};

struct ClickAction {
    std::vector<ClickTriple> clicks;
    friend bool operator==(const ClickAction&, const ClickAction&) = default;
};

// Extension: undo the most recent click of each named target. On a target with no
// clicks it discards the current mask instead.
struct RevertAction {
    std::vector<std::string> targets;
    friend bool operator==(const RevertAction&, const RevertAction&) = default;
};

using Action = std::variant<EndAction, ClickAction, RevertAction>;

struct FinalAnswer {
    std::string text;
    friend bool operator==(const FinalAnswer&, const FinalAnswer&) = default;
};

struct ParsedTurn {
    std::string think;
    std::variant<Action, FinalAnswer> payload;
    friend bool operator==(const ParsedTurn&, const ParsedTurn&) = default;
};

enum class FormatFailure {
    missing_think,
    missing_payload,
    duplicated_tag,
    misordered_tags,
    unclosed_tag,
    stray_text,
    bad_action,
};

std::string_view to_string(FormatFailure f);

struct TurnFormatError : std::runtime_error {
    TurnFormatError(FormatFailure f, std::size_t at, const std::string& what)
        : std::runtime_error(what), site(f), offset(at) {}
    FormatFailure site;
    std::size_t offset;
};

// Accepts "<think>..</think>" followed by exactly one of <action>, <tool_call> or
// <answer>; only whitespace may surround the blocks.
ParsedTurn parse_agent_output(std::string_view text);
bool is_well_formed(std::string_view text);

// Action body grammar: "END", a JSON array of click triples, or {"revert": [targets]}.
Action parse_action(std::string_view body);
std::string render_action(const Action& a);
std::string render_turn(const ParsedTurn& turn);
std::string render_turn(std::string_view think, const Action& a);
std::string render_answer_turn(std::string_view think, std::string_view answer);

// Normalized coordinates carry this many decimals on the wire.
inline constexpr int kCoordDecimals = 6;
double quantize_down(double v);

struct PixelCoord {
    Index row = 0;
    Index col = 0;
    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

// col = min(floor(x * width), width - 1); row likewise from y and height.
PixelCoord to_pixel(double x, double y, Index width, Index height);
// Pixel center, which maps back to the same cell through to_pixel.
std::pair<double, double> to_normalized(Index row, Index col, Index width, Index height);

ClickTriple to_triple(const Click& c, std::string target, Index width, Index height);
Click to_click(const ClickTriple& t, Index width, Index height);

}  // namespace ibis
