#include "ibis/templates.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/core.h>

namespace ibis {

namespace {

using TemplateList = std::vector<std::string_view>;

const TemplateList& imperative_templates(std::string_view category) {
    static const std::array<TemplateList, 7> table{{
        {"Segment the {object_name}.", "Outline the {object_name} in this image.", "Delineate the {object_name}."},
        {"Please segment the {object_name} for me.", "Could you mark out the {object_name}, please?",
         "Kindly produce a mask of the {object_name}."},
        {"Provide a segmentation of the {object_name} on this {modality} study.",
         "Contour the {object_name} for the {modality} report.",
         "Per protocol, delineate the {object_name} on the {modality} image."},
        {"The {object_name} is visible in this {modality} image; segment it.",
         "This {modality} slice shows a {object_name}. Produce its mask.",
         "There is a {object_name} in view. Outline its full extent."},
        {"For follow-up comparison, segment the {object_name} in this {modality} scan.",
         "Before measurement, we need the {object_name} outlined.",
         "As part of the review of this {modality} study, mark the {object_name}."},
        {"Find the {object_name} and mark its region.", "Locate the {object_name} and trace its boundary.",
         "Identify where the {object_name} lies and segment it."},
        {"I want to measure the area of the {object_name}; segment it first.",
         "To plan the next step, I need an accurate mask of the {object_name}.",
         "Produce a {object_name} mask precise enough for volume estimation."},
    }};
    const auto it = std::find(kInitCategories.begin(), kInitCategories.end(), category);
    if (it == kInitCategories.end()) throw UnknownTemplate(fmt::format("unknown question category '{}'", category));
    return table[static_cast<std::size_t>(it - kInitCategories.begin())];
}

const TemplateList kInterrogativeTemplates{
    "Is there a {object_name}? If so, please segment it.",
    "Could you locate the {object_name} and outline it?",
    "Please confirm whether a {object_name} is present in this {modality} image and delineate it if so.",
    "I am not sure this {modality} image contains a {object_name}. Would you check and segment it?",
    "Any {object_name} here? Mask it if present.",
};

std::string fill_template(std::string_view tmpl, std::string_view object_name, std::string_view modality,
                 std::string_view region = {}) {
    std::string out;
    out.reserve(tmpl.size() + 32);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            out += tmpl[i++];
            continue;
        }
        const std::size_t close = tmpl.find('}', i);
        if (close == std::string_view::npos) throw TemplateLintError(fmt::format("unclosed placeholder in '{}'", tmpl));
        const std::string_view key = tmpl.substr(i + 1, close - i - 1);
        if (key == "object_name") {
            out += object_name;
        } else if (key == "modality") {
            out += modality;
        } else if (key == "region") {
            out += region;
        } else {
            throw TemplateLintError(fmt::format("unknown placeholder '{}'", key));
        }
        i = close + 1;
    }
    if (out.find_first_of("{}") != std::string::npos) {
        throw TemplateLintError(fmt::format("placeholder left in '{}'", out));
    }
    require_clean(out);
    return out;
}

std::string_view pick(const TemplateList& list, int variant) {
    const auto n = static_cast<int>(list.size());
    return list[static_cast<std::size_t>(((variant % n) + n) % n)];
}

std::string quality_phrase(const std::optional<double>& q) {
    if (!q) return "No mask is shown yet.";
    if (*q < 0.5) return "The current mask covers only part of the structure.";
    if (*q < 0.85) return "The current mask follows the structure but the outline is still rough.";
    return "The current mask is close to the structure's outline.";
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

}  // namespace

void QuestionRatios::validate() const {
    if (imperative < 0.0 || interrogative < 0.0 || std::abs(imperative + interrogative - 1.0) > 1e-9) {
        throw std::invalid_argument(
            fmt::format("question ratios must be non-negative and sum to 1 (got {} + {})", imperative, interrogative));
    }
}

int question_variants(std::string_view category) {
    if (category == kInterrogative) return kInterrogativeVariants;
    return static_cast<int>(imperative_templates(category).size());
}

std::string render_question(std::string_view category, int variant, std::string_view object_name,
                            std::string_view modality) {
    const TemplateList& list = category == kInterrogative ? kInterrogativeTemplates : imperative_templates(category);
    if (variant < 0 || variant >= static_cast<int>(list.size())) {
        throw UnknownTemplate(fmt::format("category '{}' has no template {}", category, variant));
    }
    return fill_template(list[static_cast<std::size_t>(variant)], object_name, modality);
}

QuestionDraw instantiate_question(std::string_view object_name, std::string_view modality, Rng& rng,
                                  const QuestionRatios& ratios) {
    ratios.validate();
    QuestionDraw d;
    const auto cat = static_cast<std::size_t>(uniform01(rng) * kInitCategories.size());
    d.category = std::string(kInitCategories[std::min(cat, kInitCategories.size() - 1)]);
    if (uniform01(rng) < ratios.interrogative) d.category = std::string(kInterrogative);
    const int n = question_variants(d.category);
    d.variant = std::min(static_cast<int>(uniform01(rng) * n), n - 1);
    d.text = render_question(d.category, d.variant, object_name, modality);
    return d;
}

std::string instantiate_refinement_and_response(std::string_view kind, const TemplateContext& ctx) {
    static const std::vector<std::pair<std::string_view, std::string_view>> table{
        {"next_step", "What should be adjusted next?"},
        {"error_correction", "The {object_name} mask spills past its boundary. Please fix it."},
        {"verification", "Does the mask now cover the whole {object_name}?"},
        {"boundary_refinement", "Tighten the outline of the {object_name} along its edge."},
        {"region_focus", "Look again at the {region} part of the {object_name}."},
        {"continuation", "Keep refining the {object_name} mask."},
        {"direct_concise", "Segmentation complete."},
        {"confident_affirmation", "The structure is now fully outlined."},
        {"object_referencing", "The {object_name} has been segmented in full."},
        {"question_answering", "Yes, a {object_name} is present, and its mask is ready."},
        {"conversational", "Finished, the mask is all set!"},
    };
    for (const auto& [k, tmpl] : table) {
        if (k == kind) return fill_template(tmpl, ctx.object_name, ctx.modality, ctx.region);
    }
    throw UnknownTemplate(fmt::format("unknown refinement or response kind '{}'", kind));
}

std::string region_descriptor(Index row, Index col, Index height, Index width) {
    static constexpr std::array<std::array<std::string_view, 3>, 3> names{{
        {"upper-left", "upper", "upper-right"},
        {"left", "central", "right"},
        {"lower-left", "lower", "lower-right"},
    }};
    const auto band = [](Index v, Index n) { return static_cast<std::size_t>(std::clamp<Index>(3 * v / std::max<Index>(n, 1), 0, 2)); };
    return std::string(names[band(row, height)][band(col, width)]);
}

std::string fill_reasoning(const ReasoningContext& ctx) {
    static const TemplateList positive{
        "Looking at the {region} side, the tissue of the {object_name} continues past the current outline. I should "
        "extend the mask into that area.",
        "The intensity pattern in the {region} area matches the {object_name}, yet it is left uncovered. I will "
        "extend the mask there.",
        "The {object_name} appears larger than what is marked; its {region} portion is missing, so I extend the "
        "mask toward it.",
    };
    static const TemplateList negative{
        "In the {region} area the mask spills onto texture that does not belong to the {object_name}. I should "
        "retract the mask there.",
        "The outline bulges into the {region} background, beyond the {object_name}'s edge. I will retract that "
        "part.",
        "The {region} part of the marked area looks like surrounding tissue rather than the {object_name}, so I "
        "retract the mask from it.",
    };
    const std::string body =
        fill_template(pick(ctx.polarity == Polarity::positive ? positive : negative, ctx.variant), ctx.object_name, "", ctx.region);
    const std::string out = quality_phrase(ctx.prior_quality) + " " + body;
    require_clean(out);
    return out;
}

std::string fill_wrong_reasoning(const ReasoningContext& ctx) {
    static const TemplateList positive{
        "The {region} area might also be part of the {object_name}. I will extend the mask there.",
        "Perhaps the {object_name} reaches into the {region} area as well; I extend the mask to test that.",
    };
    static const TemplateList negative{
        "The {region} part of the mask may be too generous around the {object_name}. I will retract it.",
        "I suspect the {region} portion is not the {object_name}; I retract the mask there.",
    };
    return fill_template(pick(ctx.polarity == Polarity::positive ? positive : negative, ctx.variant), ctx.object_name, "",
                ctx.region);
}

std::string fill_revert_reasoning(std::string_view object_name, int variant) {
    static const TemplateList list{
        "That last change pulled the outline away from the {object_name}'s visible edge. I undo it and return to "
        "the previous mask.",
        "After the last adjustment the mask no longer follows the {object_name}. Reverting to the earlier state is "
        "the better move.",
    };
    return fill_template(pick(list, variant), object_name, "");
}

std::string fill_discard_reasoning(std::string_view object_name, int variant) {
    static const TemplateList list{
        "The mask already on screen does not line up with the {object_name} at all. I discard it and start over.",
        "The provided outline sits on a different structure than the {object_name}. Clearing it before "
        "segmenting.",
    };
    return fill_template(pick(list, variant), object_name, "");
}

std::string fill_final_reasoning(std::string_view object_name, int variant) {
    static const TemplateList list{
        "The mask now follows the {object_name}'s edge all the way around. No further changes are needed.",
        "The outline hugs the {object_name} closely on every side, so the segmentation is finished.",
    };
    return fill_template(pick(list, variant), object_name, "");
}

std::vector<LintHit> lint_forbidden(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::vector<LintHit> hits;
    for (std::string_view term : kForbiddenTerms) {
        for (std::size_t at = lower.find(term); at != std::string::npos; at = lower.find(term, at + 1)) {
            const bool left = at == 0 || !is_word_char(lower[at - 1]);
            const std::size_t end = at + term.size();
            const bool right = end == lower.size() || !is_word_char(lower[end]);
            if (left && right) hits.push_back({std::string(text.substr(at, term.size())), at});
        }
    }
    std::sort(hits.begin(), hits.end(), [](const LintHit& a, const LintHit& b) { return a.offset < b.offset; });
    return hits;
}

void require_clean(std::string_view text) {
    const auto hits = lint_forbidden(text);
    if (!hits.empty()) {
        throw TemplateLintError(fmt::format("forbidden term '{}' at offset {} in '{}'", hits.front().term,
                                            hits.front().offset, text));
    }
}

std::string provide_text(const TextProvider& provider, std::string_view kind, std::string draft) {
    if (!provider) return draft;
    std::optional<std::string> text = provider(kind, draft);
    if (!text) return draft;
    if (text->find_first_of("<>") != std::string::npos) {
        throw TemplateLintError(fmt::format("provided {} text contains a tag character", kind));
    }
    require_clean(*text);
    return std::move(*text);
}

}  // namespace ibis
