#include "aspecteval/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "aspecteval/digest.hpp"
#include "aspecteval/jsonl.hpp"

namespace aspecteval::corpus {

namespace {

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

void check_response_modality(const PairwiseSample& sample, const ResponseContent& content,
                             const char* which) {
    std::size_t n_text = content.texts().size();
    std::size_t n_image = content.image_count();
    if (content.segments.empty())
        throw ModalityMismatch(sample.id + ": " + which + " has no segments");
    auto fail = [&](const char* expected) {
        throw ModalityMismatch(sample.id + ": " + which + " does not match the " +
                               expected + " output modality of " + sample.sub_task);
    };
    switch (output_modality(sample.task)) {
        case Modality::Text:
            if (n_image > 0) fail("text");
            break;
        case Modality::Image:
        case Modality::MultiImage:
            if (n_text > 0 || n_image == 0) fail("image");
            break;
        case Modality::TextWithImage:
            if (n_text == 0 || n_image == 0) fail("text-with-image");
            break;
        case Modality::All: break;
    }
}

ResponseContent content_from_json(const nlohmann::json& segments,
                                  const std::filesystem::path& base_dir) {
    ResponseContent content;
    for (const auto& seg : segments) {
        if (seg.contains("text")) {
            content.segments.emplace_back(seg.at("text").get<std::string>());
        } else if (seg.contains("image")) {
            ImageRef ref;
            ref.uri = seg.at("image").get<std::string>();
            if (seg.contains("sha256")) {
                ref.sha256 = seg.at("sha256").get<std::string>();
            } else {
                std::filesystem::path p(ref.uri);
                if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
                std::error_code ec;
                if (std::filesystem::is_regular_file(p, ec))
                    ref.sha256 = digest::sha256_file(p);
            }
            content.segments.push_back(std::move(ref));
        } else {
            throw std::invalid_argument("segment is neither text nor image");
        }
    }
    return content;
}

nlohmann::json content_to_json(const ResponseContent& content) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& seg : content.segments) {
        if (std::holds_alternative<std::string>(seg)) {
            out.push_back({{"text", std::get<std::string>(seg)}});
        } else {
            const auto& ref = std::get<ImageRef>(seg);
            nlohmann::json j{{"image", ref.uri}};
            if (!ref.sha256.empty()) j["sha256"] = ref.sha256;
            out.push_back(std::move(j));
        }
    }
    return out;
}

std::string format_score(double s) {
    char buf[32];
    if (s == std::floor(s) && std::abs(s) < 1e15)
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(s));
    else
        std::snprintf(buf, sizeof(buf), "%g", s);
    return buf;
}

}  // namespace

std::size_t ResponseContent::image_count() const {
    return static_cast<std::size_t>(
        std::count_if(segments.begin(), segments.end(), [](const Segment& s) {
            return std::holds_alternative<ImageRef>(s);
        }));
}

std::vector<ImageRef> ResponseContent::images() const {
    std::vector<ImageRef> out;
    for (const auto& s : segments)
        if (std::holds_alternative<ImageRef>(s)) out.push_back(std::get<ImageRef>(s));
    return out;
}

std::vector<std::string> ResponseContent::texts() const {
    std::vector<std::string> out;
    for (const auto& s : segments)
        if (std::holds_alternative<std::string>(s)) out.push_back(std::get<std::string>(s));
    return out;
}

PairwiseSample swap_responses(const PairwiseSample& sample) {
    PairwiseSample out = sample;
    std::swap(out.response_1, out.response_2);
    return out;
}

EvaluationLabel swap_label(const EvaluationLabel& label) {
    EvaluationLabel out = label;
    if (label.preference == metrics::Preference::First)
        out.preference = metrics::Preference::Second;
    else if (label.preference == metrics::Preference::Second)
        out.preference = metrics::Preference::First;
    if (out.scores) std::swap(out.scores->first, out.scores->second);
    return out;
}

std::vector<PairwiseSample> ingest_samples(std::istream& in,
                                           const std::filesystem::path& base_dir) {
    std::vector<PairwiseSample> samples;
    std::set<std::string> ids;
    jsonl::for_each_record(in, [&](const nlohmann::json& rec, std::size_t line) {
        try {
            PairwiseSample s;
            s.id = rec.at("id").get<std::string>();
            s.task = taxonomy::task_type_from_string(rec.at("task").get<std::string>());
            s.sub_task = rec.at("sub_task").get<std::string>();
            if (rec.contains("query")) s.query = rec.at("query").get<std::string>();
            if (rec.contains("input_content"))
                s.input_content = content_from_json(rec.at("input_content"), base_dir);
            s.response_1 = content_from_json(rec.at("response_1"), base_dir);
            s.response_2 = content_from_json(rec.at("response_2"), base_dir);
            s.source = rec.value("source", "");
            if (!ids.insert(s.id).second) throw DuplicateId("duplicate sample id: " + s.id);
            check_response_modality(s, s.response_1, "response_1");
            check_response_modality(s, s.response_2, "response_2");
            samples.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw jsonl::ParseError(std::string("bad sample record: ") + e.what(), line);
        } catch (const std::invalid_argument& e) {
            throw jsonl::ParseError(std::string("bad sample record: ") + e.what(), line);
        }
    });
    return samples;
}

std::vector<PairwiseSample> ingest_samples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw jsonl::ParseError("cannot open " + path.string(), 0);
    return ingest_samples(in, path.parent_path());
}

void serialize_samples(const std::vector<PairwiseSample>& samples, std::ostream& out) {
    for (const auto& s : samples) {
        nlohmann::json rec{{"id", s.id},
                           {"task", taxonomy::to_string(s.task)},
                           {"sub_task", s.sub_task}};
        if (s.query) rec["query"] = *s.query;
        if (s.input_content) rec["input_content"] = content_to_json(*s.input_content);
        rec["response_1"] = content_to_json(s.response_1);
        rec["response_2"] = content_to_json(s.response_2);
        rec["source"] = s.source;
        out << rec.dump() << '\n';
    }
}

std::vector<EvaluationLabel> ingest_labels(std::istream& in) {
    std::vector<EvaluationLabel> labels;
    jsonl::for_each_record(in, [&](const nlohmann::json& rec, std::size_t line) {
        try {
            EvaluationLabel l;
            l.sample_id = rec.at("sample_id").get<std::string>();
            l.aspect = taxonomy::AspectId::parse(rec.at("aspect").get<std::string>());
            l.preference =
                metrics::preference_from_string(rec.at("preference").get<std::string>());
            if (rec.contains("scores")) {
                const auto& sc = rec.at("scores");
                if (sc.size() != 2)
                    throw std::invalid_argument("scores must hold exactly two values");
                l.scores = {sc[0].get<double>(), sc[1].get<double>()};
                auto derived = metrics::preference_from_scores(l.scores->first,
                                                               l.scores->second);
                if (derived != l.preference)
                    throw std::invalid_argument("preference inconsistent with scores");
            }
            const auto& prov = rec.at("provenance");
            std::string type = prov.at("type").get<std::string>();
            if (type == "human")
                l.provenance.type = Provenance::Type::Human;
            else if (type == "model")
                l.provenance.type = Provenance::Type::Model;
            else
                throw std::invalid_argument("unknown provenance type: " + type);
            l.provenance.id = prov.at("id").get<std::string>();
            if (rec.contains("feedback")) l.feedback = rec.at("feedback").get<std::string>();
            labels.push_back(std::move(l));
        } catch (const nlohmann::json::exception& e) {
            throw jsonl::ParseError(std::string("bad label record: ") + e.what(), line);
        } catch (const std::invalid_argument& e) {
            throw jsonl::ParseError(std::string("bad label record: ") + e.what(), line);
        } catch (const metrics::ScoreRangeError& e) {
            throw jsonl::ParseError(std::string("bad label record: ") + e.what(), line);
        }
    });
    return labels;
}

std::vector<EvaluationLabel> ingest_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw jsonl::ParseError("cannot open " + path.string(), 0);
    return ingest_labels(in);
}

void serialize_labels(const std::vector<EvaluationLabel>& labels, std::ostream& out) {
    for (const auto& l : labels) {
        nlohmann::json rec{{"sample_id", l.sample_id},
                           {"aspect", l.aspect.key()},
                           {"preference", metrics::to_string(l.preference)}};
        if (l.scores) rec["scores"] = {l.scores->first, l.scores->second};
        rec["provenance"] = {
            {"type", l.provenance.type == Provenance::Type::Human ? "human" : "model"},
            {"id", l.provenance.id}};
        if (l.feedback) rec["feedback"] = *l.feedback;
        out << rec.dump() << '\n';
    }
}

std::vector<taxonomy::AspectId> assign_aspects(const PairwiseSample& sample,
                                               const taxonomy::AspectRegistry& registry) {
    Modality modality = registry.sub_task(sample.sub_task).output;
    auto out = registry.select_universal(modality);
    std::set<taxonomy::AspectId> seen(out.begin(), out.end());
    for (const auto& id : registry.select_task_specific(sample.sub_task))
        if (seen.insert(id).second) out.push_back(id);
    return out;
}

BalanceResult balance_positions(const std::vector<PairwiseSample>& samples,
                                const std::vector<EvaluationLabel>& labels) {
    BalanceResult result;
    result.samples = samples;
    result.labels = labels;

    std::map<std::string, std::size_t> sample_index;
    for (std::size_t i = 0; i < samples.size(); ++i)
        sample_index[samples[i].id] = i;
    for (const auto& l : labels)
        if (!sample_index.count(l.sample_id))
            throw UnknownSample("label references unknown sample: " + l.sample_id);

    // per-sample First/Second label counts
    std::map<std::string, std::pair<long, long>> per_sample;
    for (const auto& l : labels) {
        auto& [f, s] = per_sample[l.sample_id];
        if (l.preference == metrics::Preference::First) ++f;
        if (l.preference == metrics::Preference::Second) ++s;
    }

    std::map<std::pair<std::string, std::string>, std::vector<std::string>> groups;
    for (const auto& s : samples)
        groups[{taxonomy::to_string(s.task), s.sub_task}].push_back(s.id);

    std::set<std::string> swapped;
    for (auto& [_, ids] : groups) {
        std::sort(ids.begin(), ids.end());
        long diff = 0;
        for (const auto& id : ids) {
            auto it = per_sample.find(id);
            if (it != per_sample.end()) diff += it->second.first - it->second.second;
        }
        while (std::labs(diff) > 1) {
            bool progressed = false;
            for (const auto& id : ids) {
                if (swapped.count(id)) continue;
                auto it = per_sample.find(id);
                if (it == per_sample.end()) continue;
                long delta = it->second.first - it->second.second;
                if (std::labs(diff - 2 * delta) < std::labs(diff)) {
                    swapped.insert(id);
                    diff -= 2 * delta;
                    progressed = true;
                    break;
                }
            }
            if (!progressed) break;  // no single swap improves this group
        }
    }

    for (auto& s : result.samples)
        if (swapped.count(s.id)) s = swap_responses(s);
    for (auto& l : result.labels)
        if (swapped.count(l.sample_id)) l = swap_label(l);
    result.swapped_ids.assign(swapped.begin(), swapped.end());
    return result;
}

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::FRA_ID: return "fra_id";
        case Split::FRA_OOD: return "fra_ood";
        case Split::FRAUAs_OOD: return "fra_uas_ood";
    }
    throw std::logic_error("bad split");
}

SplitAssignment partition(const std::vector<PairwiseSample>& samples,
                          const SplitConfig& config) {
    for (const auto& st : config.seen)
        if (config.unseen.count(st))
            throw ConfigError("sub-task listed as both seen and unseen: " + st);
    if (config.train_fraction < 0.0 || config.train_fraction > 1.0 ||
        config.uas_ood_fraction < 0.0 || config.uas_ood_fraction > 1.0)
        throw ConfigError("fractions must lie in [0,1]");

    SplitAssignment assignment;
    std::vector<std::string> seen_ids;
    for (const auto& s : samples) {
        if (config.unseen.count(s.sub_task)) {
            assignment[s.id] = Split::FRA_OOD;  // membership is seed-independent
        } else if (config.seen.count(s.sub_task)) {
            seen_ids.push_back(s.id);
        } else {
            throw ConfigError("sub-task not listed as seen or unseen: " + s.sub_task);
        }
    }

    std::sort(seen_ids.begin(), seen_ids.end());
    std::mt19937_64 rng(config.seed);
    std::shuffle(seen_ids.begin(), seen_ids.end(), rng);

    std::size_t n = seen_ids.size();
    auto n_uas = static_cast<std::size_t>(
        std::llround(config.uas_ood_fraction * static_cast<double>(n)));
    std::size_t rest = n - n_uas;
    auto n_train = static_cast<std::size_t>(
        std::llround(config.train_fraction * static_cast<double>(rest)));

    for (std::size_t i = 0; i < n; ++i) {
        Split split = i < n_uas            ? Split::FRAUAs_OOD
                      : i < n_uas + n_train ? Split::Train
                                            : Split::FRA_ID;
        assignment[seen_ids[i]] = split;
    }
    return assignment;
}

nlohmann::json CorpusStats::to_json() const {
    nlohmann::json out;
    out["by_task"] = by_task;
    out["by_sub_task"] = by_sub_task;
    out["by_aspect"] = by_aspect;
    out["preference_histogram"] = nlohmann::json::object();
    for (const auto& [task, counts] : preference_histogram)
        out["preference_histogram"][task] = {{"first", counts[0]},
                                             {"second", counts[1]},
                                             {"tie", counts[2]}};
    return out;
}

CorpusStats compute_stats(const std::vector<PairwiseSample>& samples,
                          const std::vector<EvaluationLabel>& labels) {
    CorpusStats stats;
    std::map<std::string, std::string> task_of;
    for (const auto& s : samples) {
        std::string task = taxonomy::to_string(s.task);
        ++stats.by_task[task];
        ++stats.by_sub_task[s.sub_task];
        task_of[s.id] = task;
    }
    for (const auto& l : labels) {
        auto it = task_of.find(l.sample_id);
        if (it == task_of.end())
            throw UnknownSample("label references unknown sample: " + l.sample_id);
        ++stats.by_aspect[l.aspect.key()];
        auto& hist = stats.preference_histogram[it->second];
        switch (l.preference) {
            case metrics::Preference::First: ++hist[0]; break;
            case metrics::Preference::Second: ++hist[1]; break;
            case metrics::Preference::Tie: ++hist[2]; break;
            case metrics::Preference::NotApplicable: break;
        }
    }
    return stats;
}

SftExport export_sft(const std::vector<PairwiseSample>& samples,
                     const std::vector<EvaluationLabel>& labels,
                     const taxonomy::AspectRegistry& registry,
                     const PromptRenderer& render, std::ostream& out, bool strict) {
    std::map<std::string, const PairwiseSample*> by_id;
    for (const auto& s : samples) by_id[s.id] = &s;

    SftExport result;
    for (const auto& l : labels) {
        auto it = by_id.find(l.sample_id);
        if (it == by_id.end())
            throw UnknownSample("label references unknown sample: " + l.sample_id);
        if (!l.feedback || !l.scores) {
            if (strict)
                throw MissingFeedback("label for " + l.sample_id + "/" + l.aspect.key() +
                                      " lacks feedback or scores");
            ++result.skipped;
            continue;
        }
        const taxonomy::Aspect& aspect = registry.at(l.aspect);
        for (auto orientation : {Orientation::Original, Orientation::Swapped}) {
            auto [text, manifest] = render(*it->second, aspect, orientation);
            double s1 = l.scores->first, s2 = l.scores->second;
            if (orientation == Orientation::Swapped) std::swap(s1, s2);
            nlohmann::json rec{
                {"sample_id", l.sample_id},
                {"aspect", l.aspect.key()},
                {"orientation",
                 orientation == Orientation::Original ? "original" : "swapped"},
                {"input", {{"text", text}, {"attachments", manifest}}},
                {"target", "[Feedback]: " + *l.feedback + " [Result]: " +
                               format_score(s1) + " " + format_score(s2)}};
            out << rec.dump() << '\n';
            ++result.written;
        }
    }
    return result;
}

metrics::DiversityHistogram diversity_report(const taxonomy::AspectRegistry& registry,
                                             std::size_t n_pairs, std::uint64_t seed,
                                             const std::set<std::string>& set_a,
                                             const std::set<std::string>& set_b) {
    if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");

    auto collect = [&](const std::set<std::string>& keys) {
        std::vector<const taxonomy::Aspect*> pool;
        for (const auto& a : registry.aspects()) {
            if (a.structural || !a.selectable) continue;
            if (!keys.empty() && !keys.count(a.id.key())) continue;
            pool.push_back(&a);
        }
        return pool;
    };
    auto pool_a = collect(set_a);
    auto pool_b = set_b.empty() ? pool_a : collect(set_b);
    if (pool_a.empty() || pool_b.empty() || (set_b.empty() && pool_a.size() < 2))
        throw std::invalid_argument("aspect pool too small to draw pairs");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> da(0, pool_a.size() - 1);
    std::uniform_int_distribution<std::size_t> db(0, pool_b.size() - 1);

    metrics::DiversityHistogram hist;
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const taxonomy::Aspect *x, *y;
        do {
            x = pool_a[da(rng)];
            y = pool_b[db(rng)];
        } while (x->id == y->id);  // no self-pairs
        hist.add(metrics::rouge_l(x->definition, y->definition));
    }
    return hist;
}

}  // namespace aspecteval::corpus
