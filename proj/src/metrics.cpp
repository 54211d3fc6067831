#include "aspecteval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace aspecteval::metrics {

std::string to_string(Preference p) {
    switch (p) {
        case Preference::First: return "first";
        case Preference::Second: return "second";
        case Preference::Tie: return "tie";
        case Preference::NotApplicable: return "not_applicable";
    }
    throw std::logic_error("bad preference");
}

Preference preference_from_string(std::string_view s) {
    if (s == "first") return Preference::First;
    if (s == "second") return Preference::Second;
    if (s == "tie") return Preference::Tie;
    if (s == "not_applicable") return Preference::NotApplicable;
    throw std::invalid_argument("unknown preference: " + std::string(s));
}

Preference preference_from_scores(double s1, double s2, double epsilon) {
    auto in_domain = [](double s) { return s == -1.0 || (s >= 1.0 && s <= 5.0); };
    if (!in_domain(s1) || !in_domain(s2))
        throw ScoreRangeError("score outside {-1} U [1,5]");
    bool na1 = s1 == -1.0, na2 = s2 == -1.0;
    if (na1 && na2) return Preference::NotApplicable;
    if (na1 || na2) throw ScoreRangeError("mixed -1 and applicable score");
    if (std::abs(s1 - s2) <= epsilon) return Preference::Tie;
    return s1 > s2 ? Preference::First : Preference::Second;
}

namespace {

struct Counts {
    std::size_t n = 0;           // records after NotApplicable filtering
    std::size_t tau_hits = 0;
    std::size_t nontie = 0;      // non-tie references
    std::size_t diff_hits = 0;

    void add(const PreferenceRecord& r) {
        if (r.predicted == Preference::NotApplicable ||
            r.reference == Preference::NotApplicable)
            return;
        ++n;
        if (r.predicted == r.reference) ++tau_hits;
        if (r.reference != Preference::Tie) {
            ++nontie;
            if (r.predicted == r.reference) ++diff_hits;
        }
    }
};

Counts count_all(const std::vector<PreferenceRecord>& records) {
    Counts c;
    for (const auto& r : records) c.add(r);
    return c;
}

std::optional<double> mean(const std::vector<double>& xs) {
    if (xs.empty()) return std::nullopt;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

double tau_accuracy(const std::vector<PreferenceRecord>& records) {
    Counts c = count_all(records);
    if (c.n == 0) throw EmptyInput("no applicable records");
    return static_cast<double>(c.tau_hits) / static_cast<double>(c.n);
}

double diff_accuracy(const std::vector<PreferenceRecord>& records) {
    Counts c = count_all(records);
    if (c.n == 0) throw EmptyInput("no applicable records");
    if (c.nontie == 0) throw NoNonTieReferences("all references tied");
    return static_cast<double>(c.diff_hits) / static_cast<double>(c.nontie);
}

AccuracyReport accuracy(const std::vector<PreferenceRecord>& records) {
    Counts c = count_all(records);
    if (c.n == 0) throw EmptyInput("no applicable records");
    AccuracyReport rep;
    rep.n_total = c.n;
    rep.n_nontie_reference = c.nontie;
    rep.tau = static_cast<double>(c.tau_hits) / static_cast<double>(c.n);
    if (c.nontie > 0)
        rep.diff = static_cast<double>(c.diff_hits) / static_cast<double>(c.nontie);
    return rep;
}

nlohmann::json aggregate(const std::vector<PreferenceRecord>& records,
                         const taxonomy::AspectRegistry& registry) {
    using taxonomy::TaskType;

    // level 1: exact counts per (aspect, sub_task)
    std::map<std::pair<std::string, std::string>, Counts> cells;
    Counts total;
    for (const auto& r : records) {
        registry.at(r.aspect);                       // NotFound on unknown aspect
        (void)registry.sub_task(r.sub_task);         // UnknownSubTask
        cells[{r.aspect.key(), r.sub_task}].add(r);
        total.add(r);
    }

    nlohmann::json out;
    out["cells"] = nlohmann::json::array();

    // level 2 accumulation: (aspect, task) → child cell ratios
    std::map<std::pair<std::string, TaskType>, std::pair<std::vector<double>, std::vector<double>>>
        by_aspect_task;

    for (const auto& [key, c] : cells) {
        const auto& [aspect_key, sub_task] = key;
        TaskType task = registry.sub_task(sub_task).task;
        nlohmann::json cell{{"aspect", aspect_key},
                            {"sub_task", sub_task},
                            {"task", taxonomy::to_string(task)},
                            {"n", c.n}};
        if (c.n == 0) {
            out["cells"].push_back(std::move(cell));
            continue;
        }
        double tau = static_cast<double>(c.tau_hits) / static_cast<double>(c.n);
        cell["tau"] = tau;
        auto& [taus, diffs] = by_aspect_task[{aspect_key, task}];
        taus.push_back(tau);
        if (c.nontie > 0) {
            double diff = static_cast<double>(c.diff_hits) / static_cast<double>(c.nontie);
            cell["diff"] = diff;
            diffs.push_back(diff);
        } else {
            cell["diff"] = nullptr;
        }
        out["cells"].push_back(std::move(cell));
    }

    // level 2 report + level 3 accumulation
    out["aspect_task"] = nlohmann::json::array();
    struct TaskAcc {
        std::vector<double> ua_tau, ua_diff, ta_tau, ta_diff;
    };
    std::map<TaskType, TaskAcc> by_task;
    for (const auto& [key, ratios] : by_aspect_task) {
        const auto& [aspect_key, task] = key;
        auto tau = mean(ratios.first);
        auto diff = mean(ratios.second);
        nlohmann::json entry{{"aspect", aspect_key},
                             {"task", taxonomy::to_string(task)},
                             {"tau", *tau}};
        entry["diff"] = diff ? nlohmann::json(*diff) : nlohmann::json(nullptr);
        out["aspect_task"].push_back(std::move(entry));

        auto kind = registry.at(taxonomy::AspectId::parse(aspect_key)).kind;
        TaskAcc& acc = by_task[task];
        auto& taus = kind == taxonomy::AspectKind::Universal ? acc.ua_tau : acc.ta_tau;
        auto& diffs = kind == taxonomy::AspectKind::Universal ? acc.ua_diff : acc.ta_diff;
        taus.push_back(*tau);
        if (diff) diffs.push_back(*diff);
    }

    // level 3: per task, UA/TA split plus combined mean over all aspects
    out["tasks"] = nlohmann::json::array();
    std::vector<double> task_taus, task_diffs;
    for (const auto& [task, acc] : by_task) {
        std::vector<double> all_tau = acc.ua_tau, all_diff = acc.ua_diff;
        all_tau.insert(all_tau.end(), acc.ta_tau.begin(), acc.ta_tau.end());
        all_diff.insert(all_diff.end(), acc.ta_diff.begin(), acc.ta_diff.end());
        nlohmann::json entry{{"task", taxonomy::to_string(task)}};
        auto put = [](nlohmann::json& j, const char* field, std::optional<double> v) {
            j[field] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        };
        put(entry, "tau", mean(all_tau));
        put(entry, "diff", mean(all_diff));
        entry["universal"] = nlohmann::json::object();
        put(entry["universal"], "tau", mean(acc.ua_tau));
        put(entry["universal"], "diff", mean(acc.ua_diff));
        entry["task_specific"] = nlohmann::json::object();
        put(entry["task_specific"], "tau", mean(acc.ta_tau));
        put(entry["task_specific"], "diff", mean(acc.ta_diff));
        out["tasks"].push_back(std::move(entry));
        if (auto t = mean(all_tau)) task_taus.push_back(*t);
        if (auto d = mean(all_diff)) task_diffs.push_back(*d);
    }

    // overall: macro over tasks (headline) and micro over records
    nlohmann::json overall;
    overall["macro"] = nlohmann::json::object();
    overall["macro"]["tau"] = task_taus.empty() ? nlohmann::json(nullptr)
                                                : nlohmann::json(*mean(task_taus));
    overall["macro"]["diff"] = task_diffs.empty() ? nlohmann::json(nullptr)
                                                  : nlohmann::json(*mean(task_diffs));
    overall["micro"] = nlohmann::json::object();
    if (total.n > 0) {
        overall["micro"]["tau"] =
            static_cast<double>(total.tau_hits) / static_cast<double>(total.n);
        overall["micro"]["diff"] =
            total.nontie > 0
                ? nlohmann::json(static_cast<double>(total.diff_hits) /
                                 static_cast<double>(total.nontie))
                : nlohmann::json(nullptr);
    } else {
        overall["micro"]["tau"] = nullptr;
        overall["micro"]["diff"] = nullptr;
    }
    overall["n"] = total.n;
    out["overall"] = std::move(overall);
    return out;
}

std::string aggregate_csv(const nlohmann::json& report) {
    std::ostringstream out;
    out << "aspect,sub_task,task,n,tau,diff\n";
    for (const auto& cell : report.at("cells")) {
        out << cell.at("aspect").get<std::string>() << ','
            << cell.at("sub_task").get<std::string>() << ','
            << cell.at("task").get<std::string>() << ',' << cell.at("n").get<std::size_t>()
            << ',';
        if (cell.contains("tau") && !cell.at("tau").is_null()) out << cell.at("tau").get<double>();
        out << ',';
        if (cell.contains("diff") && !cell.at("diff").is_null())
            out << cell.at("diff").get<double>();
        out << '\n';
    }
    return out.str();
}

double position_consistency(
    const std::vector<std::pair<Preference, Preference>>& orientation_pairs) {
    if (orientation_pairs.empty()) throw EmptyInput("no orientation pairs");
    auto corrected = [](Preference p) {
        if (p == Preference::First) return Preference::Second;
        if (p == Preference::Second) return Preference::First;
        return p;
    };
    std::size_t hits = 0;
    for (const auto& [original, swapped_raw] : orientation_pairs)
        if (original == corrected(swapped_raw)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(orientation_pairs.size());
}

std::vector<std::string> EloTable::ranking() const {
    std::vector<std::string> items;
    for (const auto& [id, _] : ratings) items.push_back(id);
    std::sort(items.begin(), items.end(), [&](const std::string& a, const std::string& b) {
        double ra = ratings.at(a), rb = ratings.at(b);
        return ra != rb ? ra > rb : a < b;
    });
    return items;
}

EloTable elo(const std::vector<Outcome>& outcomes, const EloConfig& config) {
    std::set<std::string> models;
    for (const auto& [a, b, _] : outcomes) {
        models.insert(a);
        models.insert(b);
    }
    if (models.size() < 2) throw InsufficientModels("need at least two models");
    if (config.rounds < 1) throw std::invalid_argument("rounds must be >= 1");

    std::map<std::string, double> sum;
    for (const auto& m : models) sum[m] = 0.0;

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(outcomes.size());
    std::iota(order.begin(), order.end(), 0);

    for (int round = 0; round < config.rounds; ++round) {
        std::shuffle(order.begin(), order.end(), rng);
        std::map<std::string, double> r;
        for (const auto& m : models) r[m] = config.initial_rating;
        for (std::size_t i : order) {
            const auto& [a, b, result] = outcomes[i];
            double expected_a = 1.0 / (1.0 + std::pow(10.0, (r[b] - r[a]) / 400.0));
            double score_a = result == GameResult::AWins   ? 1.0
                             : result == GameResult::BWins ? 0.0
                                                           : 0.5;
            double delta = config.k_factor * (score_a - expected_a);
            r[a] += delta;
            r[b] -= delta;
        }
        for (const auto& [m, v] : r) sum[m] += v;
    }

    EloTable table;
    table.config = config;
    for (const auto& [m, v] : sum)
        table.ratings[m] = v / static_cast<double>(config.rounds);
    return table;
}

double kendall_tau(const std::vector<std::string>& rank_a,
                   const std::vector<std::string>& rank_b) {
    if (rank_a.size() != rank_b.size() || rank_a.size() < 2)
        throw MismatchedItems("rankings must cover the same items, n >= 2");
    std::map<std::string, std::size_t> pos_b;
    for (std::size_t i = 0; i < rank_b.size(); ++i)
        if (!pos_b.emplace(rank_b[i], i).second)
            throw MismatchedItems("duplicate item: " + rank_b[i]);
    long long concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < rank_a.size(); ++i) {
        auto it_i = pos_b.find(rank_a[i]);
        if (it_i == pos_b.end()) throw MismatchedItems("item missing: " + rank_a[i]);
        for (std::size_t j = i + 1; j < rank_a.size(); ++j) {
            auto it_j = pos_b.find(rank_a[j]);
            if (it_j == pos_b.end()) throw MismatchedItems("item missing: " + rank_a[j]);
            (it_i->second < it_j->second ? concordant : discordant) += 1;
        }
    }
    double n = static_cast<double>(rank_a.size());
    return static_cast<double>(concordant - discordant) / (n * (n - 1.0) / 2.0);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c) || std::ispunct(c)) {
            if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

double rouge_l(std::string_view a, std::string_view b) {
    auto ta = tokenize(a), tb = tokenize(b);
    if (ta.empty() || tb.empty()) return 0.0;
    // LCS over tokens, two-row DP
    std::vector<std::size_t> prev(tb.size() + 1, 0), cur(tb.size() + 1, 0);
    for (std::size_t i = 1; i <= ta.size(); ++i) {
        for (std::size_t j = 1; j <= tb.size(); ++j)
            cur[j] = ta[i - 1] == tb[j - 1] ? prev[j - 1] + 1
                                           : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    double lcs = static_cast<double>(prev[tb.size()]);
    if (lcs == 0.0) return 0.0;
    double recall = lcs / static_cast<double>(ta.size());
    double precision = lcs / static_cast<double>(tb.size());
    return 2.0 * precision * recall / (precision + recall);
}

double IAAReport::agreement(const std::string& a, const std::string& b,
                            taxonomy::TaskType task) const {
    if (a == b) return 1.0;
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    return pairwise.at(key).at(task);
}

IAAReport iaa(const std::map<std::string, std::vector<PreferenceRecord>>& annotations) {
    if (annotations.empty()) throw EmptyInput("no annotators");

    using Key = std::pair<std::string, std::string>;  // (sample_id, aspect key)
    std::map<std::string, std::map<Key, const PreferenceRecord*>> indexed;
    for (const auto& [annotator, records] : annotations) {
        auto& idx = indexed[annotator];
        for (const auto& r : records) {
            if (!idx.emplace(Key{r.sample_id, r.aspect.key()}, &r).second)
                throw KeyMismatch("duplicate key for annotator " + annotator);
        }
    }
    const auto& reference_idx = indexed.begin()->second;
    for (const auto& [annotator, idx] : indexed) {
        if (idx.size() != reference_idx.size())
            throw KeyMismatch("annotator " + annotator + " covers a different key set");
        for (const auto& [key, _] : idx)
            if (!reference_idx.count(key))
                throw KeyMismatch("annotator " + annotator + " covers a different key set");
    }

    IAAReport report;
    for (auto it_a = indexed.begin(); it_a != indexed.end(); ++it_a) {
        for (auto it_b = std::next(it_a); it_b != indexed.end(); ++it_b) {
            std::map<taxonomy::TaskType, std::pair<std::size_t, std::size_t>> counts;
            for (const auto& [key, rec_a] : it_a->second) {
                const PreferenceRecord* rec_b = it_b->second.at(key);
                auto& [hits, n] = counts[rec_a->task];
                ++n;
                if (rec_a->predicted == rec_b->predicted) ++hits;
            }
            auto& cell = report.pairwise[{it_a->first, it_b->first}];
            for (const auto& [task, hn] : counts)
                cell[task] =
                    static_cast<double>(hn.first) / static_cast<double>(hn.second);
        }
    }
    return report;
}

void DiversityHistogram::add(double score) {
    if (score < 0.0) score = 0.0;
    auto bin = static_cast<std::size_t>(score * 10.0);
    if (bin >= bins.size()) bin = bins.size() - 1;  // 1.0 lands in the top bin
    ++bins[bin];
    ++n;
}

}  // namespace aspecteval::metrics
