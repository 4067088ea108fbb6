#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ibis/click.hpp"
#include "ibis/codec.hpp"

namespace ibis {

// Opaque state threaded between consecutive predict calls (mask logits for a
// neural tool). Only the segmenter type named by `tag` may consume it.
struct PriorHandle {
    std::string tag;
    Bytes payload;
    friend bool operator==(const PriorHandle&, const PriorHandle&) = default;
};

struct PromptSet {
    std::vector<Click> clicks;  // full cumulative history, oldest first
    std::optional<PriorHandle> prior;
};

struct Candidate {
    Mask mask;
    double score = 0.0;
};

struct SegResult {
    std::vector<Candidate> candidates;
    PriorHandle prior;

    // Highest score wins; ties keep the earliest candidate.
    const Candidate& best() const;
};

class Segmenter {
public:
    virtual ~Segmenter() = default;
    virtual SegResult predict(const Image& img, const PromptSet& prompts) const = 0;
    virtual std::string name() const = 0;
};

// Rasterizes dr^2 + dc^2 <= r^2 around (row, col), clipped to the grid.
void paint_disc(Mask& m, Index row, Index col, double radius, bool value);

// Paints (positive) or erases (negative) a disc per click, replaying only the clicks
// newer than those already folded into the prior.
class DiscSegmenter final : public Segmenter {
public:
    static constexpr const char* kTag = "disc/v1";
    explicit DiscSegmenter(double default_radius);
    SegResult predict(const Image& img, const PromptSet& prompts) const override;
    std::string name() const override { return "disc"; }
    double default_radius() const { return default_radius_; }

private:
    double default_radius_;
};

// A pixel is foreground iff its distance to the nearest positive click, reduced by
// prior_bonus where the prior mask is set, is strictly below its distance to the
// nearest negative click (or to the image border when there are none).
class SeededSegmenter final : public Segmenter {
public:
    static constexpr const char* kTag = "seeded/v1";
    explicit SeededSegmenter(double prior_bonus);
    SegResult predict(const Image& img, const PromptSet& prompts) const override;
    std::string name() const override { return "seeded"; }

private:
    double prior_bonus_;
};

struct RemoteOptions {
    std::chrono::milliseconds timeout{5000};
    int retries = 2;
};

// HTTP client for POST {endpoint}/predict.
class RemoteSegmenter final : public Segmenter {
public:
    explicit RemoteSegmenter(std::string endpoint, RemoteOptions opts = {});
    SegResult predict(const Image& img, const PromptSet& prompts) const override;
    std::string name() const override { return "remote"; }

private:
    std::string endpoint_;
    RemoteOptions opts_;
};

// Wire bodies shared by the client and the mock server.
std::string encode_predict_request(const Image& img, const PromptSet& prompts);
std::pair<Image, PromptSet> decode_predict_request(const std::string& body);
std::string encode_predict_response(const SegResult& result);
SegResult decode_predict_response(const std::string& body);

// Prior payload used by both built-ins: consumed click count + mask bits.
Bytes pack_mask_prior(const Mask& m, std::uint32_t consumed);
std::pair<Mask, std::uint32_t> unpack_mask_prior(std::span<const std::uint8_t> payload);

}  // namespace ibis
