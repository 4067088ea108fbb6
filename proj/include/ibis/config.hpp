#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "ibis/click_oracle.hpp"
#include "ibis/cold_start.hpp"
#include "ibis/corpus.hpp"
#include "ibis/environment.hpp"
#include "ibis/rewards.hpp"

namespace ibis {

struct SegmenterSettings {
    std::string kind = "disc";  // disc | seeded | remote
    std::string endpoint;       // remote only
    double disc_radius = 3.0;
    double prior_bonus = 2.0;
    int timeout_ms = 5000;
    int retries = 2;
};

struct DatagenSettings {
    ShapeParams shapes;
    FilterConfig filter;
    TemplateConfig templates;
};

// Sections: oracle, limits, rewards, segmenter, datagen (shapes, filter, templates).
struct Config {
    OracleConfig oracle = [] {
        OracleConfig o;
        o.annotate_radius = true;
        return o;
    }();
    EpisodeLimits limits;
    RewardConfig rewards;
    SegmenterSettings segmenter;
    DatagenSettings datagen;
};

// Strict: unknown keys and type mismatches raise ConfigError naming the dotted path.
Config parse_config(std::string_view json_text);
Config load_config(const std::filesystem::path& path);

// Sorted-key JSON of the effective config plus the digest algorithm name.
std::string canonical_config(const Config& cfg);
std::string fingerprint_config(const Config& cfg);

// "disc", "seeded" or "remote:URL"; anything else is std::invalid_argument.
std::unique_ptr<Segmenter> make_segmenter(std::string_view spec, const SegmenterSettings& settings);

}  // namespace ibis
