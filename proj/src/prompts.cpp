#include "aspecteval/prompts.hpp"

#include <map>

namespace aspecteval::prompts {

namespace {

using corpus::Orientation;
using corpus::PairwiseSample;
using corpus::ResponseContent;
using taxonomy::Modality;
using taxonomy::TaskType;

Modality output_modality(TaskType task) {
    switch (task) {
        case TaskType::NLG:
        case TaskType::IU: return Modality::Text;
        case TaskType::IG: return Modality::Image;
        case TaskType::ITIG: return Modality::TextWithImage;
    }
    throw std::logic_error("bad task type");
}

std::string joined_texts(const ResponseContent& content) {
    std::string out;
    for (const auto& t : content.texts()) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

// "[Text 1]: ... [Text 2]: ..." per segment, single spaces between pieces
std::string numbered_texts(const ResponseContent& content) {
    std::string out;
    std::size_t i = 0;
    for (const auto& t : content.texts()) {
        if (!out.empty()) out += ' ';
        out += "[Text " + std::to_string(++i) + "]: " + t;
    }
    return out;
}

std::string require_query(const PairwiseSample& sample, const char* slot) {
    if (!sample.query)
        throw MissingField("sample " + sample.id + " lacks the query needed for " + slot);
    return *sample.query;
}

std::string substitute(const std::string& tmpl,
                       const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto open = tmpl.find('{', pos);
        if (open == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        auto close = tmpl.find('}', open);
        if (close == std::string::npos)
            throw PlaceholderUnfilled("unterminated placeholder in template");
        out.append(tmpl, pos, open - pos);
        std::string name = tmpl.substr(open + 1, close - open - 1);
        auto it = values.find(name);
        if (it == values.end())
            throw PlaceholderUnfilled("no value for placeholder {" + name + "}");
        out += it->second;
        pos = close + 1;
    }
    return out;
}

}  // namespace

std::string to_string(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::UA_Text: return "ua_text";
        case TemplateKind::UA_Image: return "ua_image";
        case TemplateKind::UA_MultiImage: return "ua_multi_image";
        case TemplateKind::TA_NLG: return "ta_nlg";
        case TemplateKind::TA_IU: return "ta_iu";
        case TemplateKind::TA_IG: return "ta_ig";
        case TemplateKind::TA_ITIG_WithInput: return "ta_itig_with_input";
        case TemplateKind::TA_ITIG_NoInput: return "ta_itig_no_input";
    }
    throw std::logic_error("bad template kind");
}

TemplateKind select_template(const PairwiseSample& sample, const taxonomy::Aspect& aspect) {
    if (aspect.kind == taxonomy::AspectKind::Universal) {
        switch (output_modality(sample.task)) {
            case Modality::Text: return TemplateKind::UA_Text;
            case Modality::Image: return TemplateKind::UA_Image;
            case Modality::MultiImage:
            case Modality::TextWithImage: return TemplateKind::UA_MultiImage;
            case Modality::All: break;
        }
        throw UnsupportedCombination("no universal template for sample " + sample.id);
    }
    switch (sample.task) {
        case TaskType::NLG: return TemplateKind::TA_NLG;
        case TaskType::IU: return TemplateKind::TA_IU;
        case TaskType::IG: return TemplateKind::TA_IG;
        case TaskType::ITIG:
            return sample.input_content ? TemplateKind::TA_ITIG_WithInput
                                        : TemplateKind::TA_ITIG_NoInput;
    }
    throw UnsupportedCombination("no task-specific template for sample " + sample.id);
}

RenderedPrompt render(const PairwiseSample& sample, const taxonomy::Aspect& aspect,
                      Orientation orientation) {
    const PairwiseSample& oriented =
        orientation == Orientation::Swapped ? corpus::swap_responses(sample) : sample;

    TemplateKind kind = select_template(oriented, aspect);
    std::map<std::string, std::string> values;
    values["criterion_description"] = aspect.id.key() + ": " + aspect.definition;

    const auto& r1 = oriented.response_1;
    const auto& r2 = oriented.response_2;

    switch (kind) {
        case TemplateKind::UA_Text:
            values["response_1"] = joined_texts(r1);
            values["response_2"] = joined_texts(r2);
            break;
        case TemplateKind::UA_Image:
            break;
        case TemplateKind::UA_MultiImage:
            values["response1_image_count"] = std::to_string(r1.image_count());
            values["response2_image_count"] = std::to_string(r2.image_count());
            break;
        case TemplateKind::TA_NLG:
        case TemplateKind::TA_IU:
            values["query"] = require_query(oriented, "[Query]");
            values["response_1"] = joined_texts(r1);
            values["response_2"] = joined_texts(r2);
            break;
        case TemplateKind::TA_IG:
            values["image_description"] = require_query(oriented, "[Image Description]");
            break;
        case TemplateKind::TA_ITIG_WithInput:
            values["task_description"] = require_query(oriented, "[Task Description]");
            values["input_contents"] = numbered_texts(*oriented.input_content);
            values["input_content_image_count"] =
                std::to_string(oriented.input_content->image_count());
            values["response_1_texts"] = numbered_texts(r1);
            values["response_2_texts"] = numbered_texts(r2);
            values["response1_image_count"] = std::to_string(r1.image_count());
            values["response2_image_count"] = std::to_string(r2.image_count());
            break;
        case TemplateKind::TA_ITIG_NoInput:
            values["task_description"] = require_query(oriented, "[Task Description]");
            values["response_1_texts"] = numbered_texts(r1);
            values["response_2_texts"] = numbered_texts(r2);
            values["response1_image_count"] = std::to_string(r1.image_count());
            values["response2_image_count"] = std::to_string(r2.image_count());
            break;
    }

    RenderedPrompt prompt;
    prompt.orientation = orientation;
    prompt.text = substitute(template_text(kind), values);
    if (oriented.input_content)
        for (const auto& img : oriented.input_content->images())
            prompt.attachments.push_back(img);
    for (const auto& img : r1.images()) prompt.attachments.push_back(img);
    for (const auto& img : r2.images()) prompt.attachments.push_back(img);
    return prompt;
}

}  // namespace aspecteval::prompts
