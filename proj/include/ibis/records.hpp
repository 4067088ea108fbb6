#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ibis/cold_start.hpp"
#include "ibis/rewards.hpp"
#include "ibis/store.hpp"

namespace ibis {

// Malformed JSONL: `line` is 1-based, `offset` is the byte offset within the line
// (0 when the problem is a missing or mistyped field, named in `field`).
struct RecordFormatError : DataError {
    RecordFormatError(const std::string& what, std::size_t line_no, std::size_t at, std::string field_name)
        : DataError(what), line(line_no), offset(at), field(std::move(field_name)) {}
    std::size_t line;
    std::size_t offset;
    std::string field;
};

// Key order: id, sample_id, object_name, modality, question, initial_mask_ref, steps,
// final_turn, final_answer, final_iou, final_dsc, termination, reflective_kind,
// config_fingerprint. Step keys: think, action_raw, action, clicks, obs_ref, mask_ref,
// iou, dsc, seg_score, loss_masked, erroneous.
std::string record_to_json(const DatasetRecord& r);
std::string write_jsonl(std::span<const DatasetRecord> records);
// With a store, step masks and the initial mask are loaded from their refs;
// without one they stay empty (0x0).
std::vector<DatasetRecord> read_jsonl(std::string_view text, const ArtifactStore* store = nullptr);

std::string stats_to_json(const DatasetStats& stats, std::span<const Rejection> rejected);
DatasetStats stats_from_json(std::string_view text);

struct RewardReportEntry {
    std::string id;
    RewardBreakdown breakdown;
};
std::string reward_report_json(std::span<const RewardReportEntry> entries);

// A sample directory holds samples.jsonl plus a content-addressed blob store.
void write_samples(const std::filesystem::path& dir, std::span<const Sample> samples);
std::vector<Sample> read_samples(const std::filesystem::path& dir);

}  // namespace ibis
