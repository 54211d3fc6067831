#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "aspecteval/metrics.hpp"
#include "aspecteval/taxonomy.hpp"

namespace aspecteval::corpus {

struct ModalityMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DuplicateId : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingFeedback : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownSample : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Orientation { Original, Swapped };

struct ImageRef {
    std::string uri;
    std::string sha256;  // filled at ingest for readable local files
    bool operator==(const ImageRef&) const = default;
};

using Segment = std::variant<std::string, ImageRef>;

struct ResponseContent {
    std::vector<Segment> segments;

    std::size_t image_count() const;
    std::vector<ImageRef> images() const;
    std::vector<std::string> texts() const;
    bool operator==(const ResponseContent&) const = default;
};

struct PairwiseSample {
    std::string id;
    taxonomy::TaskType task = taxonomy::TaskType::NLG;
    taxonomy::SubTaskId sub_task;
    std::optional<std::string> query;
    std::optional<ResponseContent> input_content;
    ResponseContent response_1;
    ResponseContent response_2;
    std::string source;
    bool operator==(const PairwiseSample&) const = default;
};

/// Exchanges the two responses; labels must be swapped alongside.
PairwiseSample swap_responses(const PairwiseSample& sample);

struct Provenance {
    enum class Type { Human, Model };
    Type type = Type::Model;
    std::string id;
    bool operator==(const Provenance&) const = default;
};

struct EvaluationLabel {
    std::string sample_id;
    taxonomy::AspectId aspect;
    metrics::Preference preference = metrics::Preference::Tie;
    std::optional<std::pair<double, double>> scores;
    Provenance provenance;
    std::optional<std::string> feedback;
    bool operator==(const EvaluationLabel&) const = default;
};

EvaluationLabel swap_label(const EvaluationLabel& label);

/// base_dir anchors relative image paths for digest computation.
std::vector<PairwiseSample> ingest_samples(std::istream& in,
                                           const std::filesystem::path& base_dir = {});
std::vector<PairwiseSample> ingest_samples(const std::filesystem::path& path);
void serialize_samples(const std::vector<PairwiseSample>& samples, std::ostream& out);

std::vector<EvaluationLabel> ingest_labels(std::istream& in);
std::vector<EvaluationLabel> ingest_labels(const std::filesystem::path& path);
void serialize_labels(const std::vector<EvaluationLabel>& labels, std::ostream& out);

/// Universal aspects for the sub-task's output modality followed by its
/// task-specific aspects, deduplicated, registry order within each group.
std::vector<taxonomy::AspectId> assign_aspects(const PairwiseSample& sample,
                                               const taxonomy::AspectRegistry& registry);

struct BalanceResult {
    std::vector<PairwiseSample> samples;
    std::vector<EvaluationLabel> labels;
    std::vector<std::string> swapped_ids;
};

/// Evens out First/Second label counts per (task, sub_task) group by swapping
/// the presentation order of the lexicographically smallest sample ids.
BalanceResult balance_positions(const std::vector<PairwiseSample>& samples,
                                const std::vector<EvaluationLabel>& labels);

enum class Split { Train, FRA_ID, FRA_OOD, FRAUAs_OOD };

std::string to_string(Split s);

struct SplitConfig {
    std::set<taxonomy::SubTaskId> seen;
    std::set<taxonomy::SubTaskId> unseen;
    std::set<std::string> unseen_universal_aspects;  // aspect keys
    double train_fraction = 0.8;
    double uas_ood_fraction = 0.0;
    std::uint64_t seed = 0;
};

using SplitAssignment = std::map<std::string, Split>;

SplitAssignment partition(const std::vector<PairwiseSample>& samples,
                          const SplitConfig& config);

struct CorpusStats {
    std::map<std::string, std::size_t> by_task;
    std::map<std::string, std::size_t> by_sub_task;
    std::map<std::string, std::size_t> by_aspect;
    /// task → counts for First/Second/Tie
    std::map<std::string, std::array<std::size_t, 3>> preference_histogram;
    nlohmann::json to_json() const;
};

CorpusStats compute_stats(const std::vector<PairwiseSample>& samples,
                          const std::vector<EvaluationLabel>& labels);

/// Renders the judging prompt for one (sample, aspect, orientation) unit and
/// returns (prompt text, attachment manifest).
using PromptRenderer = std::function<std::pair<std::string, nlohmann::json>(
    const PairwiseSample&, const taxonomy::Aspect&, Orientation)>;

struct SftExport {
    std::size_t written = 0;
    std::size_t skipped = 0;  // labels without feedback in lenient mode
};

SftExport export_sft(const std::vector<PairwiseSample>& samples,
                     const std::vector<EvaluationLabel>& labels,
                     const taxonomy::AspectRegistry& registry,
                     const PromptRenderer& render, std::ostream& out,
                     bool strict = false);

/// ROUGE-L similarity histogram over randomly drawn aspect-definition pairs.
/// Empty key sets mean "all selectable aspects"; a non-empty second set draws
/// cross-set pairs for the out-of-distribution check.
metrics::DiversityHistogram diversity_report(const taxonomy::AspectRegistry& registry,
                                             std::size_t n_pairs, std::uint64_t seed,
                                             const std::set<std::string>& set_a = {},
                                             const std::set<std::string>& set_b = {});

}  // namespace aspecteval::corpus
