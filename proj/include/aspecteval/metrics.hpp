#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aspecteval/taxonomy.hpp"

namespace aspecteval::metrics {

enum class Preference { First, Second, Tie, NotApplicable };

std::string to_string(Preference p);
Preference preference_from_string(std::string_view s);

struct ScoreRangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoNonTieReferences : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientModels : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MismatchedItems : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct KeyMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Both scores -1 means the criterion does not apply; a lone -1 is an error.
Preference preference_from_scores(double s1, double s2, double epsilon = 0.0);

struct PreferenceRecord {
    std::string sample_id;
    taxonomy::AspectId aspect;
    taxonomy::SubTaskId sub_task;
    taxonomy::TaskType task = taxonomy::TaskType::NLG;
    Preference predicted = Preference::Tie;
    Preference reference = Preference::Tie;
};

struct AccuracyReport {
    double tau = 0.0;
    std::optional<double> diff;     // absent when no non-tie references
    std::size_t n_total = 0;
    std::size_t n_nontie_reference = 0;
};

/// Three-class agreement rate; NotApplicable records are filtered first.
double tau_accuracy(const std::vector<PreferenceRecord>& records);

/// Agreement over non-tie references; a predicted Tie there counts as wrong.
double diff_accuracy(const std::vector<PreferenceRecord>& records);

AccuracyReport accuracy(const std::vector<PreferenceRecord>& records);

/// Hierarchical accuracy report: (aspect, sub_task) cells, per-(aspect, task)
/// means, per-task means split by aspect kind, macro and micro overall.
nlohmann::json aggregate(const std::vector<PreferenceRecord>& records,
                         const taxonomy::AspectRegistry& registry);

/// CSV flattening of the aggregate cell level.
std::string aggregate_csv(const nlohmann::json& report);

/// Fraction of (original, swapped-raw) pairs that agree after correcting the
/// swapped verdict's orientation.
double position_consistency(
    const std::vector<std::pair<Preference, Preference>>& orientation_pairs);

enum class GameResult { AWins, BWins, Tie };

struct EloConfig {
    double k_factor = 4.0;
    double initial_rating = 1000.0;
    int rounds = 100;
    std::uint64_t seed = 0;
};

struct EloTable {
    std::map<std::string, double> ratings;
    EloConfig config;
    /// Items sorted best-first, ties broken by id.
    std::vector<std::string> ranking() const;
};

using Outcome = std::tuple<std::string, std::string, GameResult>;

EloTable elo(const std::vector<Outcome>& outcomes, const EloConfig& config = {});

/// Rankings given as item lists in rank order over the same item set.
double kendall_tau(const std::vector<std::string>& rank_a,
                   const std::vector<std::string>& rank_b);

/// Lowercased tokens split on whitespace and punctuation.
std::vector<std::string> tokenize(std::string_view text);

/// ROUGE-L F1 over token sequences.
double rouge_l(std::string_view a, std::string_view b);

struct IAAReport {
    /// (annotator_a, annotator_b) with a < b → per-task agreement ratio.
    std::map<std::pair<std::string, std::string>, std::map<taxonomy::TaskType, double>>
        pairwise;
    double agreement(const std::string& a, const std::string& b,
                     taxonomy::TaskType task) const;
};

IAAReport iaa(const std::map<std::string, std::vector<PreferenceRecord>>& annotations);

struct DiversityHistogram {
    std::array<std::size_t, 10> bins{};
    std::size_t n = 0;
    void add(double score);
};

}  // namespace aspecteval::metrics
