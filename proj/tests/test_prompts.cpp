#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "aspecteval/corpus.hpp"
#include "aspecteval/prompts.hpp"
#include "aspecteval/taxonomy.hpp"

using namespace aspecteval;
using corpus::Orientation;
using corpus::PairwiseSample;
using prompts::TemplateKind;

namespace {

const taxonomy::AspectRegistry& shipped() {
    static auto reg = taxonomy::AspectRegistry::load(
        std::filesystem::path(PROJECT_DATA_DIR) / "registry.jsonl");
    return reg;
}

const std::map<std::string, PairwiseSample>& fixture_samples() {
    static auto samples = [] {
        std::map<std::string, PairwiseSample> out;
        for (auto& s : corpus::ingest_samples(
                 std::filesystem::path(PROJECT_FIXTURE_DIR) / "samples.jsonl"))
            out[s.id] = std::move(s);
        return out;
    }();
    return samples;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct GoldenCase {
    TemplateKind kind;
    const char* sample_id;
    const char* aspect_key;
};

const GoldenCase kGoldenCases[] = {
    {TemplateKind::UA_Text, "s_nlg", "Fluency"},
    {TemplateKind::UA_Image, "s_ig", "Fidelity"},
    {TemplateKind::UA_MultiImage, "s_itig_in", "Semantic Consistency"},
    {TemplateKind::TA_NLG, "s_nlg", "Coverage"},
    {TemplateKind::TA_IU, "s_iu", "Accuracy"},
    {TemplateKind::TA_IG, "s_ig", "Alignment"},
    {TemplateKind::TA_ITIG_WithInput, "s_itig_in", "Creativity†"},
    {TemplateKind::TA_ITIG_NoInput, "s_itig_noin", "Completeness*"},
};

}  // namespace

TEST_CASE("embedded template texts match the checked-in resources") {
    for (auto kind :
         {TemplateKind::UA_Text, TemplateKind::UA_Image, TemplateKind::UA_MultiImage,
          TemplateKind::TA_NLG, TemplateKind::TA_IU, TemplateKind::TA_IG,
          TemplateKind::TA_ITIG_WithInput, TemplateKind::TA_ITIG_NoInput}) {
        auto path = std::filesystem::path(PROJECT_DATA_DIR) / "templates" /
                    (prompts::to_string(kind) + ".txt");
        CHECK(prompts::template_text(kind) == slurp(path));
    }
}

TEST_CASE("select_template routes by aspect kind, modality, and input presence") {
    const auto& reg = shipped();
    const auto& samples = fixture_samples();
    auto aspect = [&](const char* key) -> const taxonomy::Aspect& {
        return reg.at(taxonomy::AspectId::parse(key));
    };

    CHECK(prompts::select_template(samples.at("s_nlg"), aspect("Fluency")) ==
          TemplateKind::UA_Text);
    CHECK(prompts::select_template(samples.at("s_iu"), aspect("Fluency")) ==
          TemplateKind::UA_Text);
    CHECK(prompts::select_template(samples.at("s_ig"), aspect("Fidelity")) ==
          TemplateKind::UA_Image);
    CHECK(prompts::select_template(samples.at("s_itig_in"), aspect("Harmfulness")) ==
          TemplateKind::UA_MultiImage);
    CHECK(prompts::select_template(samples.at("s_nlg"), aspect("Coverage")) ==
          TemplateKind::TA_NLG);
    CHECK(prompts::select_template(samples.at("s_iu"), aspect("Accuracy")) ==
          TemplateKind::TA_IU);
    CHECK(prompts::select_template(samples.at("s_ig"), aspect("Comparison")) ==
          TemplateKind::TA_IG);
    CHECK(prompts::select_template(samples.at("s_itig_in"), aspect("Creativity†")) ==
          TemplateKind::TA_ITIG_WithInput);
    CHECK(prompts::select_template(samples.at("s_itig_noin"), aspect("Completeness*")) ==
          TemplateKind::TA_ITIG_NoInput);
}

TEST_CASE("rendering reproduces the golden prompts byte for byte") {
    const auto& reg = shipped();
    const auto& samples = fixture_samples();
    for (const auto& gc : kGoldenCases) {
        CAPTURE(prompts::to_string(gc.kind));
        auto golden = slurp(std::filesystem::path(PROJECT_FIXTURE_DIR) /
                            "golden_prompts" / (prompts::to_string(gc.kind) + ".txt"));
        auto prompt = prompts::render(samples.at(gc.sample_id),
                                      reg.at(taxonomy::AspectId::parse(gc.aspect_key)),
                                      Orientation::Original);
        CHECK(prompt.text == golden);
    }
}

TEST_CASE("rendered prompts contain the expected slot markers") {
    const auto& reg = shipped();
    const auto& samples = fixture_samples();
    auto ua = prompts::render(samples.at("s_nlg"),
                              reg.at({"Fluency", taxonomy::Qualifier::None}),
                              Orientation::Original);
    CHECK(ua.text.find("[Response 1]:") != std::string::npos);
    CHECK(ua.text.find("[Query]") == std::string::npos);

    auto ig = prompts::render(samples.at("s_ig"),
                              reg.at({"Alignment", taxonomy::Qualifier::None}),
                              Orientation::Original);
    CHECK(ig.text.find("[Image Description]: A red bicycle") != std::string::npos);
    CHECK(ig.text.find("[Response 1]:") == std::string::npos);
}

TEST_CASE("attachments follow input, response 1, response 2 order") {
    const auto& reg = shipped();
    const auto& samples = fixture_samples();

    auto itig = prompts::render(samples.at("s_itig_in"),
                                reg.at(taxonomy::AspectId::parse("Creativity†")),
                                Orientation::Original);
    REQUIRE(itig.attachments.size() == 3);
    CHECK(itig.attachments[0].uri == "images/a.png");
    CHECK(itig.attachments[1].uri == "images/d.png");
    CHECK(itig.attachments[2].uri == "images/e.png");

    auto ig = prompts::render(samples.at("s_ig"),
                              reg.at({"Fidelity", taxonomy::Qualifier::None}),
                              Orientation::Original);
    REQUIRE(ig.attachments.size() == 2);
    CHECK(ig.attachments[0].uri == "images/b.png");
    CHECK(ig.attachments[1].uri == "images/c.png");

    auto swapped = prompts::render(samples.at("s_ig"),
                                   reg.at({"Fidelity", taxonomy::Qualifier::None}),
                                   Orientation::Swapped);
    CHECK(swapped.attachments[0].uri == "images/c.png");
    CHECK(swapped.attachments[1].uri == "images/b.png");
}

TEST_CASE("image-count placeholders match the attachment slices") {
    const auto& reg = shipped();
    const auto& samples = fixture_samples();
    auto noin = prompts::render(samples.at("s_itig_noin"),
                                reg.at(taxonomy::AspectId::parse("Completeness*")),
                                Orientation::Original);
    CHECK(noin.text.find("contains 2 images from Response 1") != std::string::npos);
    CHECK(noin.text.find("contains 1 images from Response 2") != std::string::npos);
    CHECK(noin.attachments.size() == 3);

    auto swapped = prompts::render(samples.at("s_itig_noin"),
                                   reg.at(taxonomy::AspectId::parse("Completeness*")),
                                   Orientation::Swapped);
    CHECK(swapped.text.find("contains 1 images from Response 1") != std::string::npos);
    CHECK(swapped.text.find("contains 2 images from Response 2") != std::string::npos);
}

TEST_CASE("missing sample fields fail loudly") {
    const auto& reg = shipped();
    auto sample = fixture_samples().at("s_nlg");
    sample.query.reset();
    CHECK_NOTHROW((void)prompts::render(sample,
                                        reg.at({"Fluency", taxonomy::Qualifier::None}),
                                        Orientation::Original));
    CHECK_THROWS_AS((void)prompts::render(sample,
                                          reg.at({"Coverage", taxonomy::Qualifier::None}),
                                          Orientation::Original),
                    prompts::MissingField);
}

TEST_CASE("swapped rendering equals rendering the swapped sample") {
    const auto& reg = shipped();
    std::mt19937_64 rng(314159);
    std::uniform_int_distribution<int> pick_task(0, 3);
    std::uniform_int_distribution<int> word(0, 999);
    std::uniform_int_distribution<int> n_seg(1, 4);
    std::uniform_int_distribution<int> coin(0, 1);

    auto rand_text = [&] { return "word" + std::to_string(word(rng)); };
    auto rand_content = [&](taxonomy::TaskType task) {
        corpus::ResponseContent c;
        switch (task) {
            case taxonomy::TaskType::NLG:
            case taxonomy::TaskType::IU:
                c.segments.emplace_back(rand_text());
                break;
            case taxonomy::TaskType::IG:
                c.segments.emplace_back(corpus::ImageRef{"img" + rand_text(), ""});
                break;
            case taxonomy::TaskType::ITIG: {
                int n = n_seg(rng);
                for (int i = 0; i < n; ++i) {
                    c.segments.emplace_back(rand_text());
                    c.segments.emplace_back(corpus::ImageRef{"img" + rand_text(), ""});
                }
                break;
            }
        }
        return c;
    };

    const char* sub_tasks[] = {"summarization", "academic_vqa",
                               "text_to_image_generation", "visual_story_completion"};
    const taxonomy::TaskType tasks[] = {taxonomy::TaskType::NLG, taxonomy::TaskType::IU,
                                        taxonomy::TaskType::IG, taxonomy::TaskType::ITIG};

    for (int i = 0; i < 200; ++i) {
        int t = pick_task(rng);
        PairwiseSample s;
        s.id = "r" + std::to_string(i);
        s.task = tasks[t];
        s.sub_task = sub_tasks[t];
        s.query = rand_text();
        s.response_1 = rand_content(s.task);
        s.response_2 = rand_content(s.task);
        if (s.task == taxonomy::TaskType::ITIG && coin(rng))
            s.input_content = rand_content(s.task);

        auto aspects = corpus::assign_aspects(s, reg);
        REQUIRE(!aspects.empty());
        const auto& aspect = reg.at(aspects[static_cast<std::size_t>(i) % aspects.size()]);

        auto swapped_render = prompts::render(s, aspect, Orientation::Swapped);
        auto render_of_swapped =
            prompts::render(corpus::swap_responses(s), aspect, Orientation::Original);
        CHECK(swapped_render.text == render_of_swapped.text);
        CHECK(swapped_render.attachments == render_of_swapped.attachments);
    }
}

TEST_CASE("rendering is a pure function") {
    const auto& reg = shipped();
    const auto& s = fixture_samples().at("s_itig_in");
    const auto& aspect = reg.at(taxonomy::AspectId::parse("Creativity†"));
    auto a = prompts::render(s, aspect, Orientation::Original);
    auto b = prompts::render(s, aspect, Orientation::Original);
    CHECK(a.text == b.text);
    CHECK(a.attachments == b.attachments);
}
