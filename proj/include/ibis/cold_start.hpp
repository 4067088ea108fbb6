#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibis/click_oracle.hpp"
#include "ibis/corpus.hpp"
#include "ibis/environment.hpp"
#include "ibis/templates.hpp"

namespace ibis {

enum class ReflectiveKind { none, self_correction, inconsistency };
std::string_view to_string(ReflectiveKind k);
ReflectiveKind reflective_from_string(std::string_view s);

struct DatasetRecord {
    std::string id;
    std::string sample_id;
    std::string object_name;
    std::string modality;
    Trajectory traj;
    std::string initial_mask_ref;  // empty when the episode starts from an empty mask
    double final_iou = 0.0;
    double final_dsc = 0.0;
    ReflectiveKind reflective_kind = ReflectiveKind::none;
    std::string config_fingerprint;

    int length() const { return traj.click_steps(); }
};

struct FilterConfig {
    int max_length = 20;
    double min_dice = 0.90;
    void validate() const;
};

struct TemplateConfig {
    QuestionRatios ratios;
    double self_correction_rate = 0.25;  // per surviving gold record
    double inconsistency_rate = 0.10;
    void validate() const;
};

struct Rejection {
    std::string sample_id;
    std::string reason;  // "too-long", "dice-below-threshold" or "segmenter-error"
    std::string detail;
};

struct GroupStats {
    std::string group;
    int samples = 0;
    int qas = 0;  // one per step plus the closing answer
    double avg_length = 0.0;
    double mean_iou = 0.0;
    double median_iou = 0.0;
    double mean_dsc = 0.0;
    double median_dsc = 0.0;

    friend bool operator==(const GroupStats&, const GroupStats&) = default;
};

struct DatasetStats {
    GroupStats overall;
    std::vector<GroupStats> by_modality;
    std::vector<GroupStats> by_task;  // keyed by object name

    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

struct ColdStartOptions {
    OracleConfig oracle;
    FilterConfig filter;
    TemplateConfig templates;
    std::uint64_t seed = 0;
    const ArtifactStore* store = nullptr;
    OverlayStyle style;
    std::string config_fingerprint;
    TextProvider text_provider;
};

struct ColdStartResult {
    std::vector<DatasetRecord> records;  // gold records in sample order, then reflective ones
    std::vector<Rejection> rejected;
    DatasetStats stats;
};

ColdStartResult build_cold_start(std::span<const Sample> samples, const Segmenter& seg, const ColdStartOptions& opts);

// One scripted turn: a tagged action turn and whether it is a deliberate mistake.
struct ScriptedTurn {
    std::string text;
    bool erroneous = false;
};

// Parses and executes every turn through the environment, recording masks, metrics
// and observation digests; `final_turn` must be an answer turn.
DatasetRecord replay_turns(const Sample& sample, const std::optional<Mask>& initial_mask, const std::string& question,
                           std::span<const ScriptedTurn> turns, const std::string& final_turn, const Segmenter& seg,
                           const ArtifactStore* store, const OverlayStyle& style = {});

// Oracle simulation narrated with a templated question, reasoning and closing
// answer, then replayed through the environment from its text.
DatasetRecord make_gold_record(const Sample& sample, const Segmenter& seg, const OracleConfig& oracle,
                               const QuestionRatios& ratios, Rng& rng, const ArtifactStore* store = nullptr,
                               const OverlayStyle& style = {}, const TextProvider& provider = {});

// Re-executes a stored record's action text and returns the final mask.
Mask replay_final_mask(const DatasetRecord& rec, const Sample& sample, const Segmenter& seg);

// self_correction: a wrong click outside both error regions at a random step, then a
// revert, then the gold suffix. inconsistency: `donor_mask` shown first, then a
// discard, then the gold steps.
DatasetRecord synthesize_reflective(const DatasetRecord& gold, ReflectiveKind mode, const Sample& sample,
                                    const Segmenter& seg, Rng& rng, const std::optional<Mask>& donor_mask = std::nullopt,
                                    const ArtifactStore* store = nullptr, const OverlayStyle& style = {});

DatasetStats compute_stats(std::span<const DatasetRecord> records);
std::string format_stats_tables(const DatasetStats& stats);

}  // namespace ibis
