// Command-line front end: taxonomy inspection, corpus building, prompt
// rendering, judged evaluation runs, and report generation.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "aspecteval/corpus.hpp"
#include "aspecteval/judge.hpp"
#include "aspecteval/jsonl.hpp"
#include "aspecteval/metrics.hpp"
#include "aspecteval/prompts.hpp"
#include "aspecteval/taxonomy.hpp"

using namespace aspecteval;

namespace {

struct GlobalConfig {
    std::string registry_path = "data/registry.jsonl";
    judge::JudgeConfig judge_config;
    std::string cache_path = "cache.jsonl";
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    double tie_epsilon = 0.0;
    std::string log_level = "info";
};

bool is_secret_key(const std::string& key) {
    return key.find("key") != std::string::npos ||
           key.find("token") != std::string::npos ||
           key.find("secret") != std::string::npos;
}

// "${VAR}" values are expanded from the environment, but only under keys that
// look like secrets; everything else stays literal so config digests are stable.
void interpolate_secrets(nlohmann::json& node, const std::string& key = "") {
    if (node.is_object()) {
        for (auto& [k, v] : node.items()) interpolate_secrets(v, k);
    } else if (node.is_string() && is_secret_key(key)) {
        std::string s = node.get<std::string>();
        if (s.size() > 3 && s.rfind("${", 0) == 0 && s.back() == '}') {
            const char* val = std::getenv(s.substr(2, s.size() - 3).c_str());
            node = val ? std::string(val) : std::string();
        }
    }
}

GlobalConfig load_config(const std::string& path) {
    GlobalConfig c;
    if (path.empty()) return c;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    auto j = nlohmann::json::parse(in);
    interpolate_secrets(j);
    c.registry_path = j.value("registry_path", c.registry_path);
    if (j.contains("judge")) c.judge_config = judge::JudgeConfig::from_json(j["judge"]);
    c.cache_path = j.value("cache_path", c.cache_path);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
    c.tie_epsilon = j.value("tie_epsilon", c.tie_epsilon);
    c.log_level = j.value("log_level", c.log_level);
    return c;
}

taxonomy::AspectRegistry load_registry(const GlobalConfig& config) {
    return taxonomy::AspectRegistry::load(config.registry_path);
}

std::vector<corpus::PairwiseSample> load_samples(const std::string& path) {
    return corpus::ingest_samples(std::filesystem::path(path));
}

corpus::PromptRenderer make_renderer() {
    return [](const corpus::PairwiseSample& s, const taxonomy::Aspect& a,
              corpus::Orientation o) {
        auto p = prompts::render(s, a, o);
        nlohmann::json manifest = nlohmann::json::array();
        for (const auto& img : p.attachments)
            manifest.push_back({{"uri", img.uri}, {"sha256", img.sha256}});
        return std::make_pair(p.text, manifest);
    };
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (auto dir = path.parent_path(); !dir.empty())
        std::filesystem::create_directories(dir);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

// ---- taxonomy ----

int cmd_taxonomy_validate(const std::string& file) {
    auto reg = taxonomy::AspectRegistry::load(file);
    std::printf("%zu aspects\n", reg.aspect_count());
    return 0;
}

int cmd_taxonomy_select(const GlobalConfig& config, const std::string& modality,
                        const std::string& subtask) {
    auto reg = load_registry(config);
    std::vector<taxonomy::AspectId> ids;
    if (!modality.empty())
        ids = reg.select_universal(taxonomy::modality_from_string(modality));
    else
        ids = reg.select_task_specific(subtask);
    for (const auto& id : ids) std::printf("%s\n", id.key().c_str());
    return 0;
}

int cmd_taxonomy_show(const GlobalConfig& config, const std::string& key) {
    auto reg = load_registry(config);
    const auto& a = reg.resolve(key);
    nlohmann::json j{{"key", a.id.key()},
                     {"abbreviation", a.abbreviation},
                     {"kind", taxonomy::to_string(a.kind)},
                     {"definition", a.definition}};
    if (a.parent) j["parent"] = a.parent->key();
    if (a.kind == taxonomy::AspectKind::Universal) {
        auto targets = nlohmann::json::array();
        for (auto m : a.targets) targets.push_back(taxonomy::to_string(m));
        j["targets"] = targets;
    } else {
        j["sub_tasks"] = a.sub_tasks;
    }
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

// ---- corpus ----

int cmd_corpus_ingest(const std::string& samples_path, const std::string& labels_path) {
    auto samples = load_samples(samples_path);
    std::printf("%zu samples\n", samples.size());
    if (!labels_path.empty()) {
        auto labels = corpus::ingest_labels(std::filesystem::path(labels_path));
        std::set<std::string> ids;
        for (const auto& s : samples) ids.insert(s.id);
        for (const auto& l : labels)
            if (!ids.count(l.sample_id))
                throw corpus::UnknownSample("label references unknown sample " +
                                            l.sample_id);
        std::printf("%zu labels\n", labels.size());
    }
    return 0;
}

int cmd_corpus_stats(const std::string& samples_path, const std::string& labels_path) {
    auto samples = load_samples(samples_path);
    std::vector<corpus::EvaluationLabel> labels;
    if (!labels_path.empty())
        labels = corpus::ingest_labels(std::filesystem::path(labels_path));
    auto stats = corpus::compute_stats(samples, labels);
    std::printf("%s\n", stats.to_json().dump(2).c_str());
    return 0;
}

int cmd_corpus_balance(const std::string& samples_path, const std::string& labels_path,
                       const std::string& out_samples, const std::string& out_labels) {
    auto samples = load_samples(samples_path);
    auto labels = corpus::ingest_labels(std::filesystem::path(labels_path));
    auto balanced = corpus::balance_positions(samples, labels);
    {
        auto out = open_out(out_samples);
        corpus::serialize_samples(balanced.samples, out);
    }
    {
        auto out = open_out(out_labels);
        corpus::serialize_labels(balanced.labels, out);
    }
    std::printf("%zu samples swapped\n", balanced.swapped_ids.size());
    return 0;
}

int cmd_corpus_split(const GlobalConfig& config, const std::string& samples_path,
                     const std::string& spec_path, const std::string& out_path) {
    auto samples = load_samples(samples_path);
    std::ifstream spec_in(spec_path);
    if (!spec_in) throw std::runtime_error("cannot open split spec " + spec_path);
    auto spec = nlohmann::json::parse(spec_in);

    corpus::SplitConfig sc;
    for (const auto& s : spec.value("seen", nlohmann::json::array()))
        sc.seen.insert(s.get<std::string>());
    for (const auto& s : spec.value("unseen", nlohmann::json::array()))
        sc.unseen.insert(s.get<std::string>());
    for (const auto& s :
         spec.value("unseen_universal_aspects", nlohmann::json::array()))
        sc.unseen_universal_aspects.insert(s.get<std::string>());
    sc.train_fraction = spec.value("train_fraction", sc.train_fraction);
    sc.uas_ood_fraction = spec.value("uas_ood_fraction", sc.uas_ood_fraction);
    sc.seed = spec.value("seed", config.seed);

    auto assignment = corpus::partition(samples, sc);
    auto out = open_out(out_path);
    for (const auto& [id, split] : assignment)
        out << nlohmann::json{{"sample_id", id}, {"split", corpus::to_string(split)}}
                   .dump()
            << '\n';
    std::printf("%zu samples assigned\n", assignment.size());
    return 0;
}

int cmd_corpus_export_sft(const GlobalConfig& config, const std::string& samples_path,
                          const std::string& labels_path, const std::string& out_path,
                          bool strict) {
    auto reg = load_registry(config);
    auto samples = load_samples(samples_path);
    auto labels = corpus::ingest_labels(std::filesystem::path(labels_path));
    auto out = open_out(out_path);
    auto result =
        corpus::export_sft(samples, labels, reg, make_renderer(), out, strict);
    std::printf("%zu records written, %zu skipped\n", result.written, result.skipped);
    return 0;
}

int cmd_corpus_diversity(const GlobalConfig& config, std::size_t pairs,
                         std::uint64_t seed, const std::vector<std::string>& set_a,
                         const std::vector<std::string>& set_b) {
    auto reg = load_registry(config);
    auto hist = corpus::diversity_report(
        reg, pairs, seed, {set_a.begin(), set_a.end()}, {set_b.begin(), set_b.end()});
    nlohmann::json j{{"n", hist.n}, {"bins", hist.bins}};
    std::printf("%s\n", j.dump().c_str());
    return 0;
}

// ---- prompts ----

int cmd_prompts_render(const GlobalConfig& config, const std::string& samples_path,
                       const std::string& sample_id, const std::string& aspect_key,
                       bool swap) {
    auto reg = load_registry(config);
    auto samples = load_samples(samples_path);
    auto it = std::find_if(samples.begin(), samples.end(),
                           [&](const auto& s) { return s.id == sample_id; });
    if (it == samples.end())
        throw corpus::UnknownSample("no sample with id " + sample_id);
    const auto& aspect = reg.resolve(aspect_key);
    auto prompt = prompts::render(
        *it, aspect, swap ? corpus::Orientation::Swapped : corpus::Orientation::Original);
    std::fputs(prompt.text.c_str(), stdout);
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& img : prompt.attachments)
        manifest.push_back({{"uri", img.uri}, {"sha256", img.sha256}});
    std::fprintf(stderr, "%s\n", manifest.dump().c_str());
    return 0;
}

// ---- eval ----

int cmd_eval_run(const GlobalConfig& config, const std::string& plan_path, bool resume,
                 const std::string& mock_dir) {
    auto reg = load_registry(config);

    std::ifstream plan_in(plan_path);
    if (!plan_in) throw std::runtime_error("cannot open plan " + plan_path);
    auto plan_json = nlohmann::json::parse(plan_in);
    auto plan_dir = std::filesystem::path(plan_path).parent_path();

    auto samples_path = plan_dir / plan_json.at("samples").get<std::string>();
    std::map<std::string, corpus::PairwiseSample> by_id;
    for (auto& s : corpus::ingest_samples(samples_path)) by_id[s.id] = std::move(s);

    judge::Plan plan;
    for (const auto& unit : plan_json.at("units")) {
        auto sid = unit.at("sample_id").get<std::string>();
        auto it = by_id.find(sid);
        if (it == by_id.end())
            throw corpus::UnknownSample("plan references unknown sample " + sid);
        plan.emplace_back(
            it->second,
            taxonomy::AspectId::parse(unit.at("aspect").get<std::string>()));
    }

    std::unique_ptr<judge::Backend> backend;
    if (!mock_dir.empty())
        backend = std::make_unique<judge::MockDirBackend>(mock_dir, config.judge_config);
    else
        backend = std::make_unique<judge::HttpBackend>(config.judge_config,
                                                       samples_path.parent_path());

    std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    auto result = judge::run_batch(*backend, config.judge_config, plan, reg,
                                   config.cache_path, out_dir / "manifest.json", resume);

    {
        auto out = open_out(out_dir / "verdicts.jsonl");
        for (const auto& v : result.verdicts)
            out << nlohmann::json{{"sample_id", v.sample_id},
                                  {"aspect", v.aspect},
                                  {"orientation", v.orientation},
                                  {"scores", {v.verdict.score_1, v.verdict.score_2}},
                                  {"preference", metrics::to_string(v.verdict.preference)},
                                  {"feedback", v.verdict.feedback}}
                       .dump()
                << '\n';
    }
    {
        // label-schema records so the report commands can ingest them directly
        auto out = open_out(out_dir / "debiased.jsonl");
        for (const auto& d : result.debiased) {
            const auto& s = by_id.at(d.sample_id);
            out << nlohmann::json{
                       {"sample_id", d.sample_id},
                       {"aspect", d.aspect},
                       {"preference", metrics::to_string(d.final_preference)},
                       {"consistent", d.consistent},
                       {"task", taxonomy::to_string(s.task)},
                       {"sub_task", s.sub_task},
                       {"provenance",
                        {{"type", "model"}, {"id", config.judge_config.model_id}}}}
                       .dump()
                << '\n';
        }
    }

    std::size_t done = result.manifest.count(judge::UnitState::Done);
    std::size_t cached = result.manifest.count(judge::UnitState::Cached);
    std::size_t failed = result.manifest.count(judge::UnitState::Failed);
    std::printf("done=%zu cached=%zu failed=%zu backend_calls=%zu\n", done, cached,
                failed, backend->calls());
    return failed == 0 ? 0 : 1;
}

// ---- report ----

std::map<std::pair<std::string, std::string>, corpus::EvaluationLabel> label_index(
    const std::string& path) {
    std::map<std::pair<std::string, std::string>, corpus::EvaluationLabel> out;
    for (auto& l : corpus::ingest_labels(std::filesystem::path(path)))
        out[{l.sample_id, l.aspect.key()}] = std::move(l);
    return out;
}

int cmd_report_accuracy(const GlobalConfig& config, const std::string& pred_path,
                        const std::string& ref_path, const std::string& json_out) {
    auto preds = label_index(pred_path);
    auto refs = label_index(ref_path);

    // task/sub_task context for aggregation travels on the pred records
    std::map<std::pair<std::string, std::string>,
             std::pair<taxonomy::TaskType, std::string>>
        context;
    jsonl::for_each_record(std::filesystem::path(pred_path),
                           [&](const nlohmann::json& rec, std::size_t) {
                               if (!rec.contains("task") || !rec.contains("sub_task"))
                                   return;
                               context[{rec.at("sample_id").get<std::string>(),
                                        rec.at("aspect").get<std::string>()}] = {
                                   taxonomy::task_type_from_string(
                                       rec.at("task").get<std::string>()),
                                   rec.at("sub_task").get<std::string>()};
                           });

    std::vector<metrics::PreferenceRecord> records;
    for (const auto& [key, ref] : refs) {
        auto it = preds.find(key);
        if (it == preds.end()) continue;
        metrics::PreferenceRecord r;
        r.sample_id = key.first;
        r.aspect = ref.aspect;
        if (auto ctx = context.find(key); ctx != context.end()) {
            r.task = ctx->second.first;
            r.sub_task = ctx->second.second;
        }
        r.predicted = it->second.preference;
        r.reference = ref.preference;
        records.push_back(std::move(r));
    }

    auto report = metrics::accuracy(records);
    if (report.diff)
        std::printf("tau=%.3f diff=%.3f\n", report.tau, *report.diff);
    else
        std::printf("tau=%.3f diff=n/a\n", report.tau);

    if (!json_out.empty()) {
        auto reg = load_registry(config);
        auto out = open_out(json_out);
        out << metrics::aggregate(records, reg).dump(2) << '\n';
    }
    return 0;
}

int cmd_report_consistency(const std::string& pred_path) {
    // verdicts file with both orientations per (sample, aspect)
    std::map<std::pair<std::string, std::string>,
             std::map<std::string, metrics::Preference>>
        units;
    jsonl::for_each_record(
        std::filesystem::path(pred_path), [&](const nlohmann::json& rec, std::size_t) {
            units[{rec.at("sample_id").get<std::string>(),
                   rec.at("aspect").get<std::string>()}]
                 [rec.at("orientation").get<std::string>()] =
                     metrics::preference_from_string(
                         rec.at("preference").get<std::string>());
        });
    std::vector<std::pair<metrics::Preference, metrics::Preference>> pairs;
    for (const auto& [key, orientations] : units) {
        auto orig = orientations.find("original");
        auto swap = orientations.find("swapped");
        if (orig != orientations.end() && swap != orientations.end())
            pairs.emplace_back(orig->second, swap->second);
    }
    std::printf("consistency=%.3f\n", metrics::position_consistency(pairs));
    return 0;
}

int cmd_report_elo(const GlobalConfig& config, const std::string& pred_path,
                   double k_factor, int rounds, std::uint64_t seed) {
    std::vector<metrics::Outcome> outcomes;
    jsonl::for_each_record(
        std::filesystem::path(pred_path), [&](const nlohmann::json& rec, std::size_t) {
            std::string result = rec.at("result").get<std::string>();
            metrics::GameResult g;
            if (result == "a") g = metrics::GameResult::AWins;
            else if (result == "b") g = metrics::GameResult::BWins;
            else if (result == "tie") g = metrics::GameResult::Tie;
            else throw std::runtime_error("unknown game result: " + result);
            outcomes.emplace_back(rec.at("model_a").get<std::string>(),
                                  rec.at("model_b").get<std::string>(), g);
        });
    metrics::EloConfig ec;
    ec.k_factor = k_factor;
    ec.rounds = rounds;
    ec.seed = seed ? seed : config.seed;
    auto table = metrics::elo(outcomes, ec);
    for (const auto& model : table.ranking())
        std::printf("%s %.3f\n", model.c_str(), table.ratings.at(model));
    return 0;
}

int cmd_report_iaa(const std::string& pred_path) {
    std::map<std::string, std::vector<metrics::PreferenceRecord>> annotations;
    jsonl::for_each_record(
        std::filesystem::path(pred_path), [&](const nlohmann::json& rec, std::size_t) {
            metrics::PreferenceRecord r;
            r.sample_id = rec.at("sample_id").get<std::string>();
            r.aspect = taxonomy::AspectId::parse(rec.at("aspect").get<std::string>());
            r.task = taxonomy::task_type_from_string(rec.at("task").get<std::string>());
            r.sub_task = rec.value("sub_task", "");
            r.predicted = metrics::preference_from_string(
                rec.at("preference").get<std::string>());
            r.reference = r.predicted;
            annotations[rec.at("annotator").get<std::string>()].push_back(std::move(r));
        });
    auto report = metrics::iaa(annotations);
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [pair, by_task] : report.pairwise) {
        auto& slot = j[pair.first + "/" + pair.second];
        for (const auto& [task, ratio] : by_task)
            slot[taxonomy::to_string(task)] = ratio;
    }
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

// ---- fixtures ----

int cmd_fixtures_check(const std::string& data_dir) {
    std::filesystem::path dir(data_dir);
    auto reg = taxonomy::AspectRegistry::load(dir / "registry.jsonl");
    if (reg.aspect_count() != 112)
        throw taxonomy::IntegrityError("expected 112 aspects, found " +
                                       std::to_string(reg.aspect_count()));
    for (auto kind :
         {prompts::TemplateKind::UA_Text, prompts::TemplateKind::UA_Image,
          prompts::TemplateKind::UA_MultiImage, prompts::TemplateKind::TA_NLG,
          prompts::TemplateKind::TA_IU, prompts::TemplateKind::TA_IG,
          prompts::TemplateKind::TA_ITIG_WithInput,
          prompts::TemplateKind::TA_ITIG_NoInput}) {
        auto path = dir / "templates" / (prompts::to_string(kind) + ".txt");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("missing template resource " + path.string());
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        if (text != prompts::template_text(kind))
            throw std::runtime_error("template resource drifted: " + path.string());
    }
    std::printf("ok\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aspect-based pairwise evaluation toolkit"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string config_path;
    app.add_option("--config", config_path, "Global configuration file (JSON)");
    std::string registry_override;
    app.add_option("--registry", registry_override, "Aspect registry path override");
    std::uint64_t seed_override = 0;
    auto* seed_opt = app.add_option("--seed", seed_override, "Random seed override");

    int rc = 0;
    std::function<int(const GlobalConfig&)> action;

    // taxonomy
    auto* taxonomy_cmd = app.add_subcommand("taxonomy", "Inspect the aspect registry");
    taxonomy_cmd->require_subcommand(1);
    {
        static std::string file;
        auto* validate = taxonomy_cmd->add_subcommand("validate", "Check a registry file");
        validate->add_option("file", file, "Registry file (default: configured registry)");
        validate->callback([&] {
            action = [&](const GlobalConfig& c) {
                return cmd_taxonomy_validate(file.empty() ? c.registry_path : file);
            };
        });

        static std::string modality, subtask;
        auto* select = taxonomy_cmd->add_subcommand("select", "List applicable aspects");
        auto* mod_opt = select->add_option("--modality", modality, "Output modality");
        auto* sub_opt = select->add_option("--subtask", subtask, "Sub-task id");
        mod_opt->excludes(sub_opt);
        select->callback([&, mod_opt, sub_opt] {
            if (mod_opt->count() + sub_opt->count() != 1)
                throw CLI::RequiredError("exactly one of --modality / --subtask");
            action = [&](const GlobalConfig& c) {
                return cmd_taxonomy_select(c, modality, subtask);
            };
        });

        static std::string key;
        auto* show = taxonomy_cmd->add_subcommand("show", "Show one aspect");
        show->add_option("key", key, "Aspect name, marked name, or abbreviation")
            ->required();
        show->callback([&] {
            action = [&](const GlobalConfig& c) { return cmd_taxonomy_show(c, key); };
        });
    }

    // corpus
    auto* corpus_cmd = app.add_subcommand("corpus", "Build and inspect sample corpora");
    corpus_cmd->require_subcommand(1);
    {
        static std::string samples, labels, out_samples, out_labels, spec, out;
        static bool strict = false;
        static std::size_t pairs = 10000;
        static std::uint64_t div_seed = 0;
        static std::vector<std::string> set_a, set_b;

        auto* ingest = corpus_cmd->add_subcommand("ingest", "Validate sample/label files");
        ingest->add_option("samples", samples)->required();
        ingest->add_option("--labels", labels);
        ingest->callback([&] {
            action = [&](const GlobalConfig&) { return cmd_corpus_ingest(samples, labels); };
        });

        auto* stats = corpus_cmd->add_subcommand("stats", "Corpus statistics");
        stats->add_option("samples", samples)->required();
        stats->add_option("--labels", labels);
        stats->callback([&] {
            action = [&](const GlobalConfig&) { return cmd_corpus_stats(samples, labels); };
        });

        auto* balance = corpus_cmd->add_subcommand("balance", "Even out position counts");
        balance->add_option("samples", samples)->required();
        balance->add_option("--labels", labels)->required();
        balance->add_option("--out-samples", out_samples)->required();
        balance->add_option("--out-labels", out_labels)->required();
        balance->callback([&] {
            action = [&](const GlobalConfig&) {
                return cmd_corpus_balance(samples, labels, out_samples, out_labels);
            };
        });

        auto* split = corpus_cmd->add_subcommand("split", "Partition into training splits");
        split->add_option("samples", samples)->required();
        split->add_option("--spec", spec, "Split specification (JSON)")->required();
        split->add_option("--out", out)->required();
        split->callback([&] {
            action = [&](const GlobalConfig& c) {
                return cmd_corpus_split(c, samples, spec, out);
            };
        });

        auto* sft = corpus_cmd->add_subcommand("export-sft", "Emit fine-tuning records");
        sft->add_option("samples", samples)->required();
        sft->add_option("--labels", labels)->required();
        sft->add_option("--out", out)->required();
        sft->add_flag("--strict", strict, "Fail on labels without feedback");
        sft->callback([&] {
            action = [&](const GlobalConfig& c) {
                return cmd_corpus_export_sft(c, samples, labels, out, strict);
            };
        });

        auto* diversity =
            corpus_cmd->add_subcommand("diversity", "Definition-similarity histogram");
        diversity->add_option("--pairs", pairs);
        diversity->add_option("--seed", div_seed);
        diversity->add_option("--set-a", set_a);
        diversity->add_option("--set-b", set_b);
        diversity->callback([&] {
            action = [&](const GlobalConfig& c) {
                return cmd_corpus_diversity(c, pairs, div_seed ? div_seed : c.seed,
                                            set_a, set_b);
            };
        });
    }

    // prompts
    auto* prompts_cmd = app.add_subcommand("prompts", "Render judging prompts");
    prompts_cmd->require_subcommand(1);
    {
        static std::string samples, sample_id, aspect;
        static bool swap = false;
        auto* render = prompts_cmd->add_subcommand("render", "Render one prompt");
        render->add_option("--samples", samples, "Sample file (JSON Lines)")->required();
        render->add_option("--sample", sample_id, "Sample id")->required();
        render->add_option("--aspect", aspect, "Aspect key")->required();
        render->add_flag("--swap", swap, "Swap the response presentation order");
        render->callback([&] {
            action = [&](const GlobalConfig& c) {
                return cmd_prompts_render(c, samples, sample_id, aspect, swap);
            };
        });
    }

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Run judged evaluations");
    eval_cmd->require_subcommand(1);
    {
        static std::string plan, mock_dir;
        static bool resume = false;
        auto* run = eval_cmd->add_subcommand("run", "Execute an evaluation plan");
        run->add_option("--plan", plan, "Plan file (JSON)")->required();
        run->add_flag("--resume", resume, "Keep completed units from a previous run");
        run->add_option("--mock", mock_dir, "Fixture directory replacing the judge API");
        run->callback([&] {
            action = [&](const GlobalConfig& c) {
                return cmd_eval_run(c, plan, resume, mock_dir);
            };
        });
    }

    // report
    auto* report_cmd = app.add_subcommand("report", "Compute evaluation reports");
    report_cmd->require_subcommand(1);
    {
        static std::string pred, ref, json_out;
        static double k_factor = 4.0;
        static int rounds = 100;
        static std::uint64_t elo_seed = 0;

        auto* accuracy = report_cmd->add_subcommand("accuracy", "tau/diff agreement");
        accuracy->add_option("--pred", pred)->required();
        accuracy->add_option("--ref", ref)->required();
        accuracy->add_option("--json", json_out, "Write the hierarchical report here");
        accuracy->callback([&] {
            action = [&](const GlobalConfig& c) {
                return cmd_report_accuracy(c, pred, ref, json_out);
            };
        });

        auto* consistency =
            report_cmd->add_subcommand("consistency", "Position consistency");
        consistency->add_option("--pred", pred)->required();
        consistency->callback([&] {
            action = [&](const GlobalConfig&) { return cmd_report_consistency(pred); };
        });

        auto* elo = report_cmd->add_subcommand("elo", "Elo ratings from game outcomes");
        elo->add_option("--pred", pred)->required();
        elo->add_option("--k-factor", k_factor);
        elo->add_option("--rounds", rounds);
        elo->add_option("--seed", elo_seed);
        elo->callback([&] {
            action = [&](const GlobalConfig& c) {
                return cmd_report_elo(c, pred, k_factor, rounds, elo_seed);
            };
        });

        auto* iaa = report_cmd->add_subcommand("iaa", "Inter-annotator agreement");
        iaa->add_option("--pred", pred)->required();
        iaa->callback([&] {
            action = [&](const GlobalConfig&) { return cmd_report_iaa(pred); };
        });

        auto* diversity =
            report_cmd->add_subcommand("diversity", "Definition-similarity histogram");
        static std::size_t pairs = 10000;
        static std::uint64_t div_seed = 0;
        diversity->add_option("--pairs", pairs);
        diversity->add_option("--seed", div_seed);
        diversity->callback([&] {
            action = [&](const GlobalConfig& c) {
                return cmd_corpus_diversity(c, pairs, div_seed ? div_seed : c.seed, {},
                                            {});
            };
        });
    }

    // fixtures
    auto* fixtures_cmd = app.add_subcommand("fixtures", "Verify shipped data files");
    fixtures_cmd->require_subcommand(1);
    {
        static std::string data_dir = "data";
        auto* check = fixtures_cmd->add_subcommand("check", "Check shipped resources");
        check->add_option("--data-dir", data_dir, "Data directory");
        check->callback([&] {
            action = [&](const GlobalConfig&) { return cmd_fixtures_check(data_dir); };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        auto config = load_config(config_path);
        if (!registry_override.empty()) config.registry_path = registry_override;
        if (seed_opt->count() > 0) config.seed = seed_override;
        rc = action(config);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}
