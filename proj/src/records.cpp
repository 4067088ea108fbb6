#include "ibis/records.hpp"

#include <fmt/core.h>
#include <json.hpp>

namespace ibis {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

ordered_json action_to_json(const Action& a) {
    ordered_json j;
    if (std::holds_alternative<EndAction>(a)) {
        j["type"] = "end";
    } else if (const auto* ca = std::get_if<ClickAction>(&a)) {
        j["type"] = "click";
        ordered_json clicks = ordered_json::array();
        for (const ClickTriple& t : ca->clicks) {
            ordered_json c;
            c["target"] = t.target;
            c["attribute"] = t.attribute;
            c["coordinate_2d"] = {t.x, t.y};
            if (t.radius) c["radius"] = *t.radius;
            clicks.push_back(c);
        }
        j["clicks"] = clicks;
    } else {
        j["type"] = "revert";
        j["targets"] = std::get<RevertAction>(a).targets;
    }
    return j;
}

class LineReader {
public:
    LineReader(const json& j, std::size_t line) : j_(j), line_(line) {}

    const json& at(const char* key) const {
        if (!j_.is_object() || !j_.contains(key)) {
            throw RecordFormatError(fmt::format("line {}: missing field \"{}\"", line_, key), line_, 0, key);
        }
        return j_.at(key);
    }

    template <typename T>
    T get(const char* key) const {
        const json& v = at(key);
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw RecordFormatError(fmt::format("line {}: field \"{}\" has the wrong type", line_, key), line_, 0, key);
        }
    }

    std::size_t line() const { return line_; }

private:
    const json& j_;
    std::size_t line_;
};

Action action_from_json(const LineReader& r) {
    const std::string type = r.get<std::string>("type");
    if (type == "end") return EndAction{};
    if (type == "revert") return RevertAction{r.get<std::vector<std::string>>("targets")};
    if (type != "click") {
        throw RecordFormatError(fmt::format("line {}: unknown action type '{}'", r.line(), type), r.line(), 0, "action");
    }
    ClickAction ca;
    for (const json& c : r.at("clicks")) {
        LineReader cr(c, r.line());
        ClickTriple t;
        t.target = cr.get<std::string>("target");
        t.attribute = cr.get<int>("attribute");
        const auto xy = cr.get<std::vector<double>>("coordinate_2d");
        if (xy.size() != 2) throw RecordFormatError(fmt::format("line {}: coordinate_2d needs two numbers", r.line()), r.line(), 0, "coordinate_2d");
        t.x = xy[0];
        t.y = xy[1];
        if (c.contains("radius")) t.radius = cr.get<double>("radius");
        ca.clicks.push_back(std::move(t));
    }
    return ca;
}

Mask load_mask(const ArtifactStore* store, const std::string& ref) {
    if (!store || ref.empty()) return Mask();
    return store->get_mask(ref);
}

ordered_json group_to_json(const GroupStats& g) {
    ordered_json j;
    j["group"] = g.group;
    j["samples"] = g.samples;
    j["total_qas"] = g.qas;
    j["avg_length"] = g.avg_length;
    j["mean_iou"] = g.mean_iou;
    j["median_iou"] = g.median_iou;
    j["mean_dsc"] = g.mean_dsc;
    j["median_dsc"] = g.median_dsc;
    return j;
}

GroupStats group_from_json(const json& j) {
    GroupStats g;
    g.group = j.at("group").get<std::string>();
    g.samples = j.at("samples").get<int>();
    g.qas = j.at("total_qas").get<int>();
    g.avg_length = j.at("avg_length").get<double>();
    g.mean_iou = j.at("mean_iou").get<double>();
    g.median_iou = j.at("median_iou").get<double>();
    g.mean_dsc = j.at("mean_dsc").get<double>();
    g.median_dsc = j.at("median_dsc").get<double>();
    return g;
}

}  // namespace

std::string record_to_json(const DatasetRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["sample_id"] = r.sample_id;
    j["object_name"] = r.object_name;
    j["modality"] = r.modality;
    j["question"] = r.traj.question;
    j["initial_mask_ref"] = r.initial_mask_ref;
    ordered_json steps = ordered_json::array();
    for (const StepRecord& s : r.traj.steps) {
        ordered_json e;
        e["think"] = s.think;
        e["action_raw"] = s.action_raw;
        e["action"] = action_to_json(s.action);
        ordered_json clicks = ordered_json::array();
        for (const Click& c : s.clicks) {
            ordered_json cj;
            cj["row"] = c.row;
            cj["col"] = c.col;
            cj["polarity"] = std::string(to_string(c.polarity));
            if (c.radius_hint) cj["radius"] = *c.radius_hint;
            clicks.push_back(cj);
        }
        e["clicks"] = clicks;
        e["obs_ref"] = s.observation_ref;
        e["mask_ref"] = s.mask_ref;
        e["iou"] = s.iou ? ordered_json(*s.iou) : ordered_json(nullptr);
        e["dsc"] = s.dsc ? ordered_json(*s.dsc) : ordered_json(nullptr);
        e["seg_score"] = s.seg_score;
        e["loss_masked"] = s.erroneous;
        e["erroneous"] = s.erroneous;
        steps.push_back(e);
    }
    j["steps"] = steps;
    j["final_turn"] = r.traj.final_turn;
    j["final_answer"] = r.traj.final_answer ? ordered_json(*r.traj.final_answer) : ordered_json(nullptr);
    j["final_iou"] = r.final_iou;
    j["final_dsc"] = r.final_dsc;
    j["termination"] = std::string(to_string(r.traj.termination));
    j["reflective_kind"] = std::string(to_string(r.reflective_kind));
    j["config_fingerprint"] = r.config_fingerprint;
    return j.dump();
}

std::string write_jsonl(std::span<const DatasetRecord> records) {
    std::string out;
    for (const DatasetRecord& r : records) {
        out += record_to_json(r);
        out += '\n';
    }
    return out;
}

std::vector<DatasetRecord> read_jsonl(std::string_view text, const ArtifactStore* store) {
    std::vector<DatasetRecord> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw RecordFormatError(fmt::format("line {}: malformed JSON at byte {}: {}", line_no, e.byte, e.what()),
                                    line_no, e.byte, "");
        }
        const LineReader r(j, line_no);
        DatasetRecord rec;
        rec.id = r.get<std::string>("id");
        rec.sample_id = r.get<std::string>("sample_id");
        rec.object_name = r.get<std::string>("object_name");
        rec.modality = r.get<std::string>("modality");
        rec.traj.question = r.get<std::string>("question");
        rec.initial_mask_ref = r.get<std::string>("initial_mask_ref");
        for (const json& e : r.at("steps")) {
            const LineReader sr(e, line_no);
            StepRecord s;
            s.think = sr.get<std::string>("think");
            s.action_raw = sr.get<std::string>("action_raw");
            s.action = action_from_json(LineReader(sr.at("action"), line_no));
            for (const json& c : sr.at("clicks")) {
                const LineReader cr(c, line_no);
                Click click;
                click.row = cr.get<Index>("row");
                click.col = cr.get<Index>("col");
                const std::string pol = cr.get<std::string>("polarity");
                if (pol != "pos" && pol != "neg") {
                    throw RecordFormatError(fmt::format("line {}: polarity must be pos or neg", line_no), line_no, 0, "polarity");
                }
                click.polarity = pol == "pos" ? Polarity::positive : Polarity::negative;
                if (c.contains("radius")) click.radius_hint = cr.get<double>("radius");
                s.clicks.push_back(click);
            }
            s.observation_ref = sr.get<std::string>("obs_ref");
            s.mask_ref = sr.get<std::string>("mask_ref");
            if (!sr.at("iou").is_null()) s.iou = sr.get<double>("iou");
            if (!sr.at("dsc").is_null()) s.dsc = sr.get<double>("dsc");
            s.seg_score = sr.get<double>("seg_score");
            s.erroneous = sr.get<bool>("erroneous");
            if (sr.get<bool>("loss_masked") != s.erroneous) {
                throw RecordFormatError(fmt::format("line {}: loss_masked disagrees with erroneous", line_no), line_no, 0,
                                        "loss_masked");
            }
            s.mask = load_mask(store, s.mask_ref);
            rec.traj.steps.push_back(std::move(s));
        }
        rec.traj.final_turn = r.get<std::string>("final_turn");
        if (!r.at("final_answer").is_null()) rec.traj.final_answer = r.get<std::string>("final_answer");
        rec.final_iou = r.get<double>("final_iou");
        rec.final_dsc = r.get<double>("final_dsc");
        try {
            rec.traj.termination = termination_from_string(r.get<std::string>("termination"));
            rec.reflective_kind = reflective_from_string(r.get<std::string>("reflective_kind"));
        } catch (const RecordFormatError&) {
            throw;
        } catch (const std::exception& e) {
            throw RecordFormatError(fmt::format("line {}: {}", line_no, e.what()), line_no, 0, "termination");
        }
        rec.config_fingerprint = r.get<std::string>("config_fingerprint");
        if (store) {
            if (!rec.initial_mask_ref.empty()) {
                rec.traj.initial_mask = store->get_mask(rec.initial_mask_ref);
            } else if (!rec.traj.steps.empty()) {
                rec.traj.initial_mask = empty_mask(rec.traj.steps.front().mask.rows(), rec.traj.steps.front().mask.cols());
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::string stats_to_json(const DatasetStats& stats, std::span<const Rejection> rejected) {
    ordered_json j;
    j["overall"] = group_to_json(stats.overall);
    ordered_json mods = ordered_json::array();
    for (const GroupStats& g : stats.by_modality) mods.push_back(group_to_json(g));
    j["by_modality"] = mods;
    ordered_json tasks = ordered_json::array();
    for (const GroupStats& g : stats.by_task) tasks.push_back(group_to_json(g));
    j["by_task"] = tasks;
    ordered_json rej = ordered_json::array();
    for (const Rejection& r : rejected) {
        ordered_json e;
        e["sample_id"] = r.sample_id;
        e["reason"] = r.reason;
        e["detail"] = r.detail;
        rej.push_back(e);
    }
    j["rejected"] = rej;
    return j.dump(2) + "\n";
}

DatasetStats stats_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        DatasetStats st;
        st.overall = group_from_json(j.at("overall"));
        for (const json& g : j.at("by_modality")) st.by_modality.push_back(group_from_json(g));
        for (const json& g : j.at("by_task")) st.by_task.push_back(group_from_json(g));
        return st;
    } catch (const json::exception& e) {
        throw DataError(fmt::format("stats json: {}", e.what()));
    }
}

std::string reward_report_json(std::span<const RewardReportEntry> entries) {
    ordered_json arr = ordered_json::array();
    for (const RewardReportEntry& e : entries) {
        const RewardBreakdown& b = e.breakdown;
        ordered_json j;
        j["id"] = e.id;
        j["s_format"] = b.s_format;
        j["s_ans"] = b.s_ans;
        j["s_click"] = b.s_click;
        j["s_pseg"] = b.s_pseg;
        j["s_len"] = b.s_len;
        j["total"] = b.total;
        ordered_json steps = ordered_json::array();
        for (const StepReward& s : b.per_step) {
            ordered_json sj;
            sj["click"] = s.click;
            sj["pseg"] = s.pseg;
            sj["iou"] = s.iou;
            steps.push_back(sj);
        }
        j["per_step"] = steps;
        arr.push_back(j);
    }
    return arr.dump(2) + "\n";
}

void write_samples(const std::filesystem::path& dir, std::span<const Sample> samples) {
    const ArtifactStore store(dir / "blobs");
    std::string out;
    for (const Sample& s : samples) {
        ordered_json j;
        j["id"] = s.id;
        j["object_name"] = s.object_name;
        j["modality"] = s.modality;
        j["height"] = s.image.height;
        j["width"] = s.image.width;
        j["image_ref"] = store.put_image(s.image);
        j["gt_ref"] = store.put_mask(s.gt);
        out += j.dump();
        out += '\n';
    }
    write_file((dir / "samples.jsonl").string(), out);
}

std::vector<Sample> read_samples(const std::filesystem::path& dir) {
    const ArtifactStore store(dir / "blobs");
    const Bytes raw = read_file((dir / "samples.jsonl").string());
    const std::string_view text(reinterpret_cast<const char*>(raw.data()), raw.size());
    std::vector<Sample> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw RecordFormatError(fmt::format("samples line {}: malformed JSON at byte {}", line_no, e.byte), line_no,
                                    e.byte, "");
        }
        const LineReader r(j, line_no);
        Sample s;
        s.id = r.get<std::string>("id");
        s.object_name = r.get<std::string>("object_name");
        s.modality = r.get<std::string>("modality");
        s.image = store.get_image(r.get<std::string>("image_ref"));
        s.gt = store.get_mask(r.get<std::string>("gt_ref"));
        if (s.gt.rows() != s.image.height || s.gt.cols() != s.image.width) {
            throw DataError(fmt::format("sample {}: mask and image sizes differ", s.id));
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace ibis
