#pragma once

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ibis/click.hpp"
#include "ibis/rng.hpp"

namespace ibis {

inline constexpr std::array<std::string_view, 7> kInitCategories{
    "direct_command", "polite_request", "clinical_instruction", "descriptive",
    "contextual",     "localization",   "goal_oriented",
};
inline constexpr std::string_view kInterrogative = "interrogative";
inline constexpr int kInterrogativeVariants = 5;

inline constexpr std::array<std::string_view, 6> kRefinementKinds{
    "next_step", "error_correction", "verification", "boundary_refinement", "region_focus", "continuation",
};
inline constexpr std::array<std::string_view, 5> kResponseStyles{
    "direct_concise", "confident_affirmation", "object_referencing", "question_answering", "conversational",
};

struct UnknownTemplate : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TemplateLintError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuestionRatios {
    double imperative = 0.7;
    double interrogative = 0.3;
    void validate() const;
};

struct QuestionDraw {
    std::string category;  // one of kInitCategories, or kInterrogative
    int variant = 0;
    std::string text;
};

// Template count for a category name (kInterrogative included); throws UnknownTemplate.
int question_variants(std::string_view category);
std::string render_question(std::string_view category, int variant, std::string_view object_name,
                            std::string_view modality);
// Uniform category, then imperative vs interrogative by the ratios, then a uniform template.
QuestionDraw instantiate_question(std::string_view object_name, std::string_view modality, Rng& rng,
                                  const QuestionRatios& ratios = {});

struct TemplateContext {
    std::string object_name;
    std::string modality;
    std::string region = "central";
};

// `kind` is a refinement kind or a response style.
std::string instantiate_refinement_and_response(std::string_view kind, const TemplateContext& ctx);

// 3x3 grid name of the cell: "upper-left", "upper", ..., "central", ..., "lower-right".
std::string region_descriptor(Index row, Index col, Index height, Index width);

struct ReasoningContext {
    Polarity polarity = Polarity::positive;
    std::string region = "central";
    std::string object_name;
    std::optional<double> prior_quality;  // IoU-like [0,1] of the mask before the step; nullopt when none exists
    int variant = 0;
};

std::string fill_reasoning(const ReasoningContext& ctx);
// Think text for a deliberately wrong click, its undo, and a mismatched starting mask.
std::string fill_wrong_reasoning(const ReasoningContext& ctx);
std::string fill_revert_reasoning(std::string_view object_name, int variant = 0);
std::string fill_discard_reasoning(std::string_view object_name, int variant = 0);
std::string fill_final_reasoning(std::string_view object_name, int variant = 0);

inline constexpr std::array<std::string_view, 7> kForbiddenTerms{"red", "blue", "cross", "tp", "fp", "fn", "ground truth"};

struct LintHit {
    std::string term;
    std::size_t offset = 0;
};

// Case-insensitive whole-word scan.
std::vector<LintHit> lint_forbidden(std::string_view text);
// Throws TemplateLintError naming the first hit.
void require_clean(std::string_view text);

// External rewriter for templated text. `kind` is "question", "reasoning" or "answer";
// returning nullopt keeps the draft. Unset by default, which keeps generation hermetic.
using TextProvider = std::function<std::optional<std::string>(std::string_view kind, std::string_view draft)>;

// The draft, or the provider's rewrite after the lint and a check for tag characters.
std::string provide_text(const TextProvider& provider, std::string_view kind, std::string draft);

}  // namespace ibis
