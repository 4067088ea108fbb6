#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibis/segmenter.hpp"
#include "ibis/store.hpp"
#include "ibis/trajectory.hpp"

namespace ibis {

struct EpisodeLimits {
    int max_turns = 20;
    std::size_t max_transcript_chars = 32768;
};

struct OverlayStyle {
    double alpha = 0.45;
    std::array<Rgb, 8> palette{{
        {0, 200, 0},
        {255, 170, 0},
        {0, 160, 255},
        {200, 0, 200},
        {255, 255, 0},
        {0, 255, 200},
        {255, 90, 90},
        {150, 110, 255},
    }};
};

struct TargetState {
    struct Snapshot {
        Mask mask;
        std::optional<PriorHandle> prior;
        std::size_t clicks_before = 0;
    };

    std::string label;
    Mask mask;
    std::optional<PriorHandle> prior;
    std::vector<Click> clicks;
    std::vector<Snapshot> history;  // state before each click, for revert
};

struct EpisodeState {
    Image image;
    std::string question;
    int turn = 0;
    std::vector<TargetState> targets;  // in order of first appearance
    std::vector<StepRecord> transcript;
    EpisodeLimits limits;
    Mask initial_mask;  // pre-existing mask for refinement episodes (empty otherwise)

    // Union of all per-target masks; the initial mask until a target exists.
    Mask composite() const;
    const TargetState* find(std::string_view label) const;
};

EpisodeState make_episode(Image image, std::string question, EpisodeLimits limits = {},
                          std::optional<Mask> initial_mask = std::nullopt);

// Overlay every target mask with its palette color (an initial mask, if any, uses color 0).
Image render_observation(const EpisodeState& s, const OverlayStyle& style = {});

struct StepOptions {
    std::string think;
    std::string action_raw;
    const Mask* gt = nullptr;             // enables per-step iou/dsc
    const ArtifactStore* store = nullptr;  // persists masks and observations when set
    OverlayStyle style;
    bool hash_observations = true;
};

struct StepOutcome {
    EpisodeState state;
    Image observation;
};

struct TurnLimitExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Executes one action. Click actions call the segmenter once per named target with
// that target's full history and prior, keeping the best-scored candidate. Segmenter
// errors propagate and leave `state` untouched.
StepOutcome step(const EpisodeState& state, const Action& action, const Segmenter& seg, const StepOptions& opts = {});

// Pixel clicks grouped by target; `step` maps normalized triples through to_pixel first.
StepOutcome step_pixels(const EpisodeState& state, const Action& action,
                        const std::vector<std::pair<std::string, Click>>& clicks, const Segmenter& seg,
                        const StepOptions& opts);

struct PolicyView {
    const std::string& question;
    std::span<const StepRecord> transcript;
    std::span<const Image> observations;  // one per transcript record
    const Image& observation;
    const Mask& initial_mask;
    int turn;
};

using Policy = std::function<std::string(const PolicyView&)>;

struct EpisodeOptions {
    const ArtifactStore* store = nullptr;
    OverlayStyle style;
    std::optional<Mask> initial_mask;
    bool hash_observations = true;  // observation_ref stays empty when false and no store is set
};

struct EpisodeError : std::runtime_error {
    EpisodeError(const std::string& what, Trajectory t) : std::runtime_error(what), partial(std::move(t)) {}
    Trajectory partial;
};

// Query / parse / step until a final answer, a format error, max_turns, or the
// transcript budget. The question is shown on turn 0 only; later turns see the transcript.
Trajectory run_episode(const Policy& policy, const Image& img, const std::string& question,
                       const std::optional<Mask>& gt, const Segmenter& seg, const EpisodeLimits& limits,
                       const EpisodeOptions& opts = {});

// Client for POST {endpoint}/act.
Policy remote_policy(std::string endpoint, std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
std::string encode_act_request(const PolicyView& view);

}  // namespace ibis
