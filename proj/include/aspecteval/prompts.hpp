#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "aspecteval/corpus.hpp"
#include "aspecteval/taxonomy.hpp"

namespace aspecteval::prompts {

enum class TemplateKind {
    UA_Text,
    UA_Image,
    UA_MultiImage,
    TA_NLG,
    TA_IU,
    TA_IG,
    TA_ITIG_WithInput,
    TA_ITIG_NoInput,
};

std::string to_string(TemplateKind kind);

/// Canonical template text, embedded at build time. Tests assert these match
/// the checked-in resource files under data/templates/.
const std::string& template_text(TemplateKind kind);

struct UnsupportedCombination : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingField : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PlaceholderUnfilled : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RenderedPrompt {
    std::string text;
    std::vector<corpus::ImageRef> attachments;  // input, then response 1, then response 2
    corpus::Orientation orientation = corpus::Orientation::Original;
    bool operator==(const RenderedPrompt&) const = default;
};

TemplateKind select_template(const corpus::PairwiseSample& sample,
                             const taxonomy::Aspect& aspect);

RenderedPrompt render(const corpus::PairwiseSample& sample, const taxonomy::Aspect& aspect,
                      corpus::Orientation orientation);

}  // namespace aspecteval::prompts
