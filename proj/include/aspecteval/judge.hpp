#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "aspecteval/corpus.hpp"
#include "aspecteval/metrics.hpp"
#include "aspecteval/prompts.hpp"
#include "aspecteval/taxonomy.hpp"

namespace aspecteval::judge {

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AuthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingResultMarker : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ScoreCountError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
using metrics::ScoreRangeError;

struct JudgeConfig {
    std::string endpoint;
    std::string model_id;
    std::string api_key_env = "JUDGE_API_KEY";
    double temperature = 0.0;
    int max_output_tokens = 1024;
    double request_timeout = 60.0;
    int max_retries = 3;
    double backoff_base = 0.5;
    int concurrency_limit = 4;

    static JudgeConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct JudgeVerdict {
    std::string feedback;
    int score_1 = 0;
    int score_2 = 0;
    metrics::Preference preference = metrics::Preference::Tie;
    std::string raw;

    bool operator==(const JudgeVerdict& other) const {
        return feedback == other.feedback && score_1 == other.score_1 &&
               score_2 == other.score_2 && preference == other.preference;
    }
};

/// Anchors on the LAST "[Result]:" marker; feedback is the text between the
/// last "[Feedback]:" and that marker.
JudgeVerdict parse_verdict(const std::string& text);

/// "[Feedback]: <feedback> [Result]: <s1> <s2>"
std::string format_verdict(const JudgeVerdict& verdict);

struct DebiasedVerdict {
    JudgeVerdict original;
    JudgeVerdict swapped;    // as parsed, before orientation correction
    bool consistent = false;
    metrics::Preference final_preference = metrics::Preference::Tie;
};

/// Judge transport. complete() counts invocations for call accounting.
class Backend {
public:
    virtual ~Backend() = default;
    std::string complete(const prompts::RenderedPrompt& prompt,
                         const std::string& sample_id, const std::string& aspect_key,
                         corpus::Orientation orientation);
    std::size_t calls() const { return calls_; }

protected:
    virtual std::string do_complete(const prompts::RenderedPrompt& prompt,
                                    const std::string& sample_id,
                                    const std::string& aspect_key,
                                    corpus::Orientation orientation) = 0;

private:
    std::atomic<std::size_t> calls_{0};
};

/// Chat-completion client: POST <endpoint>/chat/completions, images inlined as
/// base64 data URLs, bearer token from the configured env var.
class HttpBackend : public Backend {
public:
    HttpBackend(JudgeConfig config, std::filesystem::path attachment_base = {});

protected:
    std::string do_complete(const prompts::RenderedPrompt& prompt,
                            const std::string& sample_id, const std::string& aspect_key,
                            corpus::Orientation orientation) override;

private:
    JudgeConfig config_;
    std::filesystem::path attachment_base_;
};

/// Offline fixture backend: replays canned completions from *.jsonl files in a
/// directory, keyed by unit digest or by (sample_id, aspect, orientation).
class MockDirBackend : public Backend {
public:
    MockDirBackend(const std::filesystem::path& dir, const JudgeConfig& config);

protected:
    std::string do_complete(const prompts::RenderedPrompt& prompt,
                            const std::string& sample_id, const std::string& aspect_key,
                            corpus::Orientation orientation) override;

private:
    JudgeConfig config_;
    std::map<std::string, std::string> by_digest_;
    std::map<std::tuple<std::string, std::string, std::string>, std::string> by_unit_;
};

/// Cache key: sha256 over model id, prompt text, attachment digests, and
/// temperature.
std::string unit_digest(const JudgeConfig& config, const prompts::RenderedPrompt& prompt);

/// Orientation-corrects the swapped verdict, sets the consistency flag, and
/// derives the final preference: the agreed preference when consistent, Tie
/// otherwise.
DebiasedVerdict aggregate_orientations(const JudgeVerdict& original,
                                       const JudgeVerdict& swapped);

DebiasedVerdict evaluate_debiased(Backend& backend, const corpus::PairwiseSample& sample,
                                  const taxonomy::Aspect& aspect);

enum class UnitState { Pending, Cached, Done, Failed };

std::string to_string(UnitState s);

struct UnitRecord {
    std::string sample_id;
    std::string aspect;       // aspect key
    std::string orientation;  // "original" / "swapped"
    UnitState state = UnitState::Pending;
    std::string error;
};

struct RunManifest {
    std::string run_id;
    std::string config_digest;
    std::vector<UnitRecord> units;  // sorted by (sample_id, aspect, orientation)

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static std::optional<RunManifest> load(const std::filesystem::path& path);
    std::size_t count(UnitState state) const;
};

struct OrientedVerdict {
    std::string sample_id;
    std::string aspect;
    std::string orientation;
    JudgeVerdict verdict;
};

struct DebiasedRecord {
    std::string sample_id;
    std::string aspect;
    bool consistent = false;
    metrics::Preference final_preference = metrics::Preference::Tie;
};

struct BatchResult {
    RunManifest manifest;
    std::vector<OrientedVerdict> verdicts;   // deterministic unit order
    std::vector<DebiasedRecord> debiased;    // only units with both orientations done
};

using Plan = std::vector<std::pair<corpus::PairwiseSample, taxonomy::AspectId>>;

/// Runs both orientations of every planned unit with at most
/// config.concurrency_limit requests in flight. Completed responses land in the
/// append-only cache; cached units are never re-sent. With resume, Done units
/// from the previous manifest are kept and only Pending/Failed re-run.
BatchResult run_batch(Backend& backend, const JudgeConfig& config, const Plan& plan,
                      const taxonomy::AspectRegistry& registry,
                      const std::filesystem::path& cache_path,
                      const std::filesystem::path& manifest_path, bool resume);

}  // namespace aspecteval::judge
