#include "ibis/config.hpp"

#include <fmt/core.h>
#include <json.hpp>

#include "ibis/codec.hpp"

namespace ibis {

using json = nlohmann::json;

namespace {

json to_json(const Config& c) {
    json j;
    j["oracle"] = {{"iou_threshold", c.oracle.iou_threshold},
                   {"max_steps", c.oracle.max_steps},
                   {"tie_break", "row_major"},
                   {"annotate_radius", c.oracle.annotate_radius},
                   {"target_label", c.oracle.target_label}};
    j["limits"] = {{"max_turns", c.limits.max_turns}, {"max_transcript_chars", c.limits.max_transcript_chars}};
    const RewardConfig& r = c.rewards;
    j["rewards"] = {{"iou_tiers", r.iou_tiers},
                    {"tier_values", r.tier_values},
                    {"r_click", r.r_click},
                    {"lambda_miss", r.lambda_miss},
                    {"gamma", r.gamma},
                    {"r_eff", r.r_eff},
                    {"t_opt", r.t_opt},
                    {"step_aggregation", r.step_aggregation == StepAggregation::mean ? "mean" : "sum_capped"}};
    const SegmenterSettings& s = c.segmenter;
    j["segmenter"] = {{"kind", s.kind},       {"endpoint", s.endpoint},     {"disc_radius", s.disc_radius},
                      {"prior_bonus", s.prior_bonus}, {"timeout_ms", s.timeout_ms}, {"retries", s.retries}};
    const ShapeParams& sh = c.datagen.shapes;
    j["datagen"]["shapes"] = {{"height", sh.height},
                              {"width", sh.width},
                              {"min_ellipses", sh.min_ellipses},
                              {"max_ellipses", sh.max_ellipses},
                              {"min_semi_axis", sh.min_semi_axis},
                              {"max_semi_axis", sh.max_semi_axis},
                              {"min_aspect", sh.min_aspect},
                              {"hole_probability", sh.hole_probability},
                              {"hole_scale", sh.hole_scale},
                              {"foreground_intensity", sh.foreground_intensity},
                              {"background_intensity", sh.background_intensity},
                              {"texture_amplitude", sh.texture_amplitude},
                              {"noise_sigma", sh.noise_sigma}};
    j["datagen"]["filter"] = {{"max_length", c.datagen.filter.max_length}, {"min_dice", c.datagen.filter.min_dice}};
    const TemplateConfig& t = c.datagen.templates;
    j["datagen"]["templates"] = {{"imperative_ratio", t.ratios.imperative},
                                 {"interrogative_ratio", t.ratios.interrogative},
                                 {"self_correction_rate", t.self_correction_rate},
                                 {"inconsistency_rate", t.inconsistency_rate}};
    return j;
}

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

bool compatible(const json& def, const json& in) {
    if (def.is_number_float()) return in.is_number();
    if (def.is_number_integer()) return in.is_number_integer();
    if (def.is_boolean()) return in.is_boolean();
    if (def.is_string()) return in.is_string();
    return def.type() == in.type();
}

// Overlays `in` onto `def`, rejecting keys `def` lacks and values of another type.
void overlay(json& def, const json& in, const std::string& path) {
    if (!in.is_object()) throw ConfigError(fmt::format("'{}' must be an object", path.empty() ? "<root>" : path), path);
    for (const auto& [key, value] : in.items()) {
        const std::string p = join(path, key);
        if (!def.contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", p), p);
        json& slot = def[key];
        if (slot.is_object()) {
            overlay(slot, value, p);
        } else if (slot.is_array()) {
            if (!value.is_array() || value.size() != slot.size()) {
                throw ConfigError(fmt::format("'{}' must be an array of {} numbers", p, slot.size()), p);
            }
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (!value[i].is_number()) throw ConfigError(fmt::format("'{}[{}]' must be a number", p, i), p);
            }
            slot = value;
        } else {
            if (!compatible(slot, value)) {
                throw ConfigError(fmt::format("'{}' expects a {}, got {}", p, slot.type_name(), value.type_name()), p);
            }
            slot = value;
        }
    }
}

template <typename Fn>
void checked(const char* path, Fn&& fn) {
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("{}: {}", path, e.what()), path);
    }
}

Config from_json(const json& j) {
    Config c;
    const json& o = j.at("oracle");
    c.oracle.iou_threshold = o.at("iou_threshold").get<double>();
    c.oracle.max_steps = o.at("max_steps").get<int>();
    if (o.at("tie_break").get<std::string>() != "row_major") {
        throw ConfigError("oracle.tie_break must be \"row_major\"", "oracle.tie_break");
    }
    c.oracle.annotate_radius = o.at("annotate_radius").get<bool>();
    c.oracle.target_label = o.at("target_label").get<std::string>();
    if (!(c.oracle.iou_threshold > 0.0 && c.oracle.iou_threshold <= 1.0)) {
        throw ConfigError("oracle.iou_threshold must lie in (0,1]", "oracle.iou_threshold");
    }
    if (c.oracle.max_steps < 1) throw ConfigError("oracle.max_steps must be >= 1", "oracle.max_steps");

    c.limits.max_turns = j.at("limits").at("max_turns").get<int>();
    const auto chars = j.at("limits").at("max_transcript_chars").get<long long>();
    if (c.limits.max_turns < 1) throw ConfigError("limits.max_turns must be >= 1", "limits.max_turns");
    if (chars < 1) throw ConfigError("limits.max_transcript_chars must be >= 1", "limits.max_transcript_chars");
    c.limits.max_transcript_chars = static_cast<std::size_t>(chars);

    const json& r = j.at("rewards");
    c.rewards.iou_tiers = r.at("iou_tiers").get<std::array<double, 3>>();
    c.rewards.tier_values = r.at("tier_values").get<std::array<double, 4>>();
    c.rewards.r_click = r.at("r_click").get<double>();
    c.rewards.lambda_miss = r.at("lambda_miss").get<double>();
    c.rewards.gamma = r.at("gamma").get<double>();
    c.rewards.r_eff = r.at("r_eff").get<double>();
    c.rewards.t_opt = r.at("t_opt").get<int>();
    const std::string agg = r.at("step_aggregation").get<std::string>();
    if (agg == "mean") {
        c.rewards.step_aggregation = StepAggregation::mean;
    } else if (agg == "sum_capped") {
        c.rewards.step_aggregation = StepAggregation::sum_capped;
    } else {
        throw ConfigError("rewards.step_aggregation must be \"mean\" or \"sum_capped\"", "rewards.step_aggregation");
    }
    checked("rewards", [&] { c.rewards.validate(); });

    const json& s = j.at("segmenter");
    c.segmenter.kind = s.at("kind").get<std::string>();
    c.segmenter.endpoint = s.at("endpoint").get<std::string>();
    c.segmenter.disc_radius = s.at("disc_radius").get<double>();
    c.segmenter.prior_bonus = s.at("prior_bonus").get<double>();
    c.segmenter.timeout_ms = s.at("timeout_ms").get<int>();
    c.segmenter.retries = s.at("retries").get<int>();
    if (c.segmenter.kind != "disc" && c.segmenter.kind != "seeded" && c.segmenter.kind != "remote") {
        throw ConfigError("segmenter.kind must be disc, seeded or remote", "segmenter.kind");
    }
    if (c.segmenter.disc_radius < 0.0) throw ConfigError("segmenter.disc_radius must be >= 0", "segmenter.disc_radius");
    if (c.segmenter.timeout_ms < 1) throw ConfigError("segmenter.timeout_ms must be >= 1", "segmenter.timeout_ms");
    if (c.segmenter.retries < 0) throw ConfigError("segmenter.retries must be >= 0", "segmenter.retries");

    const json& sh = j.at("datagen").at("shapes");
    ShapeParams& p = c.datagen.shapes;
    p.height = sh.at("height").get<Index>();
    p.width = sh.at("width").get<Index>();
    p.min_ellipses = sh.at("min_ellipses").get<int>();
    p.max_ellipses = sh.at("max_ellipses").get<int>();
    p.min_semi_axis = sh.at("min_semi_axis").get<double>();
    p.max_semi_axis = sh.at("max_semi_axis").get<double>();
    p.min_aspect = sh.at("min_aspect").get<double>();
    p.hole_probability = sh.at("hole_probability").get<double>();
    p.hole_scale = sh.at("hole_scale").get<double>();
    p.foreground_intensity = sh.at("foreground_intensity").get<int>();
    p.background_intensity = sh.at("background_intensity").get<int>();
    p.texture_amplitude = sh.at("texture_amplitude").get<double>();
    p.noise_sigma = sh.at("noise_sigma").get<double>();
    checked("datagen.shapes", [&] { p.validate(); });

    const json& f = j.at("datagen").at("filter");
    c.datagen.filter.max_length = f.at("max_length").get<int>();
    c.datagen.filter.min_dice = f.at("min_dice").get<double>();
    checked("datagen.filter", [&] { c.datagen.filter.validate(); });

    const json& t = j.at("datagen").at("templates");
    c.datagen.templates.ratios.imperative = t.at("imperative_ratio").get<double>();
    c.datagen.templates.ratios.interrogative = t.at("interrogative_ratio").get<double>();
    c.datagen.templates.self_correction_rate = t.at("self_correction_rate").get<double>();
    c.datagen.templates.inconsistency_rate = t.at("inconsistency_rate").get<double>();
    checked("datagen.templates", [&] { c.datagen.templates.validate(); });
    return c;
}

}  // namespace

Config parse_config(std::string_view json_text) {
    json in;
    try {
        in = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config is not valid JSON (byte {}): {}", e.byte, e.what()), "");
    }
    json effective = to_json(Config{});
    overlay(effective, in, "");
    return from_json(effective);
}

Config load_config(const std::filesystem::path& path) {
    const Bytes raw = read_file(path.string());
    return parse_config(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()));
}

std::string canonical_config(const Config& cfg) {
    json j = to_json(cfg);
    j["digest_algorithm"] = kDigestAlgorithm;
    return j.dump();
}

std::string fingerprint_config(const Config& cfg) { return sha256_hex(canonical_config(cfg)); }

std::unique_ptr<Segmenter> make_segmenter(std::string_view spec, const SegmenterSettings& settings) {
    if (spec == "disc") return std::make_unique<DiscSegmenter>(settings.disc_radius);
    if (spec == "seeded") return std::make_unique<SeededSegmenter>(settings.prior_bonus);
    if (spec.starts_with("remote:") && spec.size() > 7) {
        RemoteOptions opts;
        opts.timeout = std::chrono::milliseconds(settings.timeout_ms);
        opts.retries = settings.retries;
        return std::make_unique<RemoteSegmenter>(std::string(spec.substr(7)), opts);
    }
    if (spec == "remote" && !settings.endpoint.empty()) {
        return make_segmenter("remote:" + settings.endpoint, settings);
    }
    throw std::invalid_argument(fmt::format("unknown segmenter '{}' (expected disc, seeded or remote:URL)", spec));
}

}  // namespace ibis
