#include "aspecteval/judge.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "aspecteval/digest.hpp"
#include "aspecteval/jsonl.hpp"

namespace aspecteval::judge {

namespace {

constexpr const char* kResultMarker = "[Result]:";
constexpr const char* kFeedbackMarker = "[Feedback]:";

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

bool parse_int(const std::string& token, long& out) {
    // strip surrounding punctuation like "(4)" or "4."
    std::size_t begin = 0, end = token.size();
    auto is_core = [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+';
    };
    while (begin < end && !is_core(token[begin])) ++begin;
    while (end > begin && !std::isdigit(static_cast<unsigned char>(token[end - 1]))) --end;
    if (begin >= end) return false;
    std::string core = token.substr(begin, end - begin);
    std::size_t pos = 0;
    try {
        out = std::stol(core, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == core.size();
}

std::string base64_encode(const std::string& bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 2 < bytes.size()) {
        unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                     static_cast<unsigned char>(bytes[i + 2]);
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += alphabet[v & 63];
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::string image_mime(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".jpg" || ext == ".jpeg") return "jpeg";
    if (ext == ".gif") return "gif";
    if (ext == ".webp") return "webp";
    return "png";
}

std::string orientation_name(corpus::Orientation o) {
    return o == corpus::Orientation::Original ? "original" : "swapped";
}

}  // namespace

JudgeConfig JudgeConfig::from_json(const nlohmann::json& j) {
    JudgeConfig c;
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model_id = j.value("model_id", c.model_id);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.temperature = j.value("temperature", c.temperature);
    c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
    c.request_timeout = j.value("request_timeout", c.request_timeout);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_base = j.value("backoff_base", c.backoff_base);
    c.concurrency_limit = j.value("concurrency_limit", c.concurrency_limit);
    if (c.concurrency_limit < 1)
        throw std::invalid_argument("concurrency_limit must be >= 1");
    if (!std::isfinite(c.temperature))
        throw std::invalid_argument("temperature must be finite");
    return c;
}

nlohmann::json JudgeConfig::to_json() const {
    return {{"endpoint", endpoint},
            {"model_id", model_id},
            {"api_key_env", api_key_env},
            {"temperature", temperature},
            {"max_output_tokens", max_output_tokens},
            {"request_timeout", request_timeout},
            {"max_retries", max_retries},
            {"backoff_base", backoff_base},
            {"concurrency_limit", concurrency_limit}};
}

JudgeVerdict parse_verdict(const std::string& text) {
    auto result_pos = text.rfind(kResultMarker);
    if (result_pos == std::string::npos)
        throw MissingResultMarker("no \"[Result]:\" marker in judge output");

    std::string remainder = text.substr(result_pos + std::strlen(kResultMarker));
    std::istringstream tokens(remainder);
    std::vector<long> scores;
    std::string token;
    while (tokens >> token) {
        long value;
        if (parse_int(token, value)) scores.push_back(value);
    }
    if (scores.size() != 2)
        throw ScoreCountError("expected exactly two scores, found " +
                              std::to_string(scores.size()));

    for (long s : scores)
        if (s != -1 && (s < 1 || s > 5))
            throw ScoreRangeError("score " + std::to_string(s) +
                                  " outside {-1} U [1,5]");

    JudgeVerdict v;
    v.raw = text;
    v.score_1 = static_cast<int>(scores[0]);
    v.score_2 = static_cast<int>(scores[1]);
    v.preference = metrics::preference_from_scores(v.score_1, v.score_2);

    auto feedback_pos = text.rfind(kFeedbackMarker, result_pos);
    if (feedback_pos != std::string::npos) {
        auto begin = feedback_pos + std::strlen(kFeedbackMarker);
        v.feedback = trim(text.substr(begin, result_pos - begin));
    } else {
        v.feedback = trim(text.substr(0, result_pos));
    }
    // drop a separating comma between the feedback and result sections
    if (!v.feedback.empty() && v.feedback.back() == ',')
        v.feedback = trim(v.feedback.substr(0, v.feedback.size() - 1));
    return v;
}

std::string format_verdict(const JudgeVerdict& verdict) {
    return std::string(kFeedbackMarker) + " " + verdict.feedback + " " + kResultMarker +
           " " + std::to_string(verdict.score_1) + " " + std::to_string(verdict.score_2);
}

std::string Backend::complete(const prompts::RenderedPrompt& prompt,
                              const std::string& sample_id,
                              const std::string& aspect_key,
                              corpus::Orientation orientation) {
    ++calls_;
    return do_complete(prompt, sample_id, aspect_key, orientation);
}

HttpBackend::HttpBackend(JudgeConfig config, std::filesystem::path attachment_base)
    : config_(std::move(config)), attachment_base_(std::move(attachment_base)) {}

std::string HttpBackend::do_complete(const prompts::RenderedPrompt& prompt,
                                     const std::string&, const std::string&,
                                     corpus::Orientation) {
    auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw TransportError("endpoint is not a URL: " + config_.endpoint);
    auto path_start = config_.endpoint.find('/', scheme_end + 3);
    std::string base = path_start == std::string::npos
                           ? config_.endpoint
                           : config_.endpoint.substr(0, path_start);
    std::string prefix =
        path_start == std::string::npos ? "" : config_.endpoint.substr(path_start);

    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", prompt.text}});
    for (const auto& img : prompt.attachments) {
        std::filesystem::path p(img.uri);
        if (p.is_relative() && !attachment_base_.empty()) p = attachment_base_ / p;
        std::ifstream in(p, std::ios::binary);
        if (!in) throw TransportError("cannot read attachment " + img.uri);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        content.push_back(
            {{"type", "image_url"},
             {"image_url",
              {{"url", "data:image/" + image_mime(p) + ";base64," +
                           base64_encode(bytes.str())}}}});
    }
    nlohmann::json body{{"model", config_.model_id},
                        {"temperature", config_.temperature},
                        {"max_tokens", config_.max_output_tokens},
                        {"messages",
                         {{{"role", "user"}, {"content", std::move(content)}}}}};

    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<int>(config_.request_timeout * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<int>(config_.request_timeout * 1000)));
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = config_.backoff_base * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<int>(delay * 1000)));
        }
        auto res = client.Post(prefix + "/chat/completions", headers, body.dump(),
                               "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403)
            throw AuthError("judge endpoint rejected credentials (HTTP " +
                            std::to_string(res->status) + ")");
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw ProtocolError("unexpected HTTP " + std::to_string(res->status));
        try {
            auto parsed = nlohmann::json::parse(res->body);
            return parsed.at("choices").at(0).at("message").at("content")
                .get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed completion response: ") +
                                e.what());
        }
    }
    throw TransportError("retries exhausted: " + last_error);
}

MockDirBackend::MockDirBackend(const std::filesystem::path& dir,
                               const JudgeConfig& config)
    : config_(config) {
    if (!std::filesystem::is_directory(dir))
        throw TransportError("mock fixture directory missing: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".jsonl") continue;
        jsonl::for_each_record(entry.path(), [&](const nlohmann::json& rec, std::size_t) {
            std::string response = rec.at("response").get<std::string>();
            if (rec.contains("key")) {
                by_digest_[rec.at("key").get<std::string>()] = response;
            } else {
                by_unit_[{rec.at("sample_id").get<std::string>(),
                          rec.at("aspect").get<std::string>(),
                          rec.at("orientation").get<std::string>()}] = response;
            }
        });
    }
}

std::string MockDirBackend::do_complete(const prompts::RenderedPrompt& prompt,
                                        const std::string& sample_id,
                                        const std::string& aspect_key,
                                        corpus::Orientation orientation) {
    if (auto it = by_digest_.find(unit_digest(config_, prompt)); it != by_digest_.end())
        return it->second;
    if (auto it = by_unit_.find({sample_id, aspect_key, orientation_name(orientation)});
        it != by_unit_.end())
        return it->second;
    throw TransportError("no mock response for " + sample_id + "/" + aspect_key + "/" +
                         orientation_name(orientation));
}

std::string unit_digest(const JudgeConfig& config,
                        const prompts::RenderedPrompt& prompt) {
    std::string material = config.model_id;
    material += '\n';
    material += prompt.text;
    material += '\n';
    for (const auto& img : prompt.attachments) {
        material += img.sha256.empty() ? img.uri : img.sha256;
        material += '\n';
    }
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6f", config.temperature);
    material += temp;
    return digest::sha256_hex(material);
}

DebiasedVerdict aggregate_orientations(const JudgeVerdict& original,
                                       const JudgeVerdict& swapped) {
    auto corrected = [](metrics::Preference p) {
        if (p == metrics::Preference::First) return metrics::Preference::Second;
        if (p == metrics::Preference::Second) return metrics::Preference::First;
        return p;
    };
    DebiasedVerdict out;
    out.original = original;
    out.swapped = swapped;
    out.consistent = original.preference == corrected(swapped.preference);
    out.final_preference =
        out.consistent ? original.preference : metrics::Preference::Tie;
    return out;
}

DebiasedVerdict evaluate_debiased(Backend& backend, const corpus::PairwiseSample& sample,
                                  const taxonomy::Aspect& aspect) {
    auto run = [&](corpus::Orientation o) {
        auto prompt = prompts::render(sample, aspect, o);
        return parse_verdict(backend.complete(prompt, sample.id, aspect.id.key(), o));
    };
    auto original = run(corpus::Orientation::Original);
    auto swapped = run(corpus::Orientation::Swapped);
    return aggregate_orientations(original, swapped);
}

std::string to_string(UnitState s) {
    switch (s) {
        case UnitState::Pending: return "pending";
        case UnitState::Cached: return "cached";
        case UnitState::Done: return "done";
        case UnitState::Failed: return "failed";
    }
    throw std::logic_error("bad unit state");
}

namespace {

UnitState unit_state_from_string(const std::string& s) {
    if (s == "pending") return UnitState::Pending;
    if (s == "cached") return UnitState::Cached;
    if (s == "done") return UnitState::Done;
    if (s == "failed") return UnitState::Failed;
    throw std::invalid_argument("unknown unit state: " + s);
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
    nlohmann::json units_json = nlohmann::json::array();
    for (const auto& u : units) {
        nlohmann::json j{{"sample_id", u.sample_id},
                         {"aspect", u.aspect},
                         {"orientation", u.orientation},
                         {"status", judge::to_string(u.state)}};
        if (!u.error.empty()) j["error"] = u.error;
        units_json.push_back(std::move(j));
    }
    return {{"run_id", run_id}, {"config_digest", config_digest},
            {"units", std::move(units_json)}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.config_digest = j.at("config_digest").get<std::string>();
    for (const auto& u : j.at("units")) {
        UnitRecord rec;
        rec.sample_id = u.at("sample_id").get<std::string>();
        rec.aspect = u.at("aspect").get<std::string>();
        rec.orientation = u.at("orientation").get<std::string>();
        rec.state = unit_state_from_string(u.at("status").get<std::string>());
        rec.error = u.value("error", "");
        m.units.push_back(std::move(rec));
    }
    return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << to_json().dump(2) << '\n';
}

std::optional<RunManifest> RunManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    return from_json(nlohmann::json::parse(in));
}

std::size_t RunManifest::count(UnitState state) const {
    return static_cast<std::size_t>(
        std::count_if(units.begin(), units.end(),
                      [&](const UnitRecord& u) { return u.state == state; }));
}

BatchResult run_batch(Backend& backend, const JudgeConfig& config, const Plan& plan,
                      const taxonomy::AspectRegistry& registry,
                      const std::filesystem::path& cache_path,
                      const std::filesystem::path& manifest_path, bool resume) {
    if (plan.empty()) throw std::invalid_argument("empty batch plan");

    struct Unit {
        const corpus::PairwiseSample* sample;
        const taxonomy::Aspect* aspect;
        corpus::Orientation orientation;
        std::string key_sample, key_aspect, key_orientation;
        prompts::RenderedPrompt prompt;
        std::string digest;
        UnitState state = UnitState::Pending;
        std::string error;
        std::string response;
    };

    std::vector<Unit> units;
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& [sample, aspect_id] : plan) {
        const taxonomy::Aspect& aspect = registry.at(aspect_id);
        for (auto o : {corpus::Orientation::Original, corpus::Orientation::Swapped}) {
            Unit u;
            u.sample = &sample;
            u.aspect = &aspect;
            u.orientation = o;
            u.key_sample = sample.id;
            u.key_aspect = aspect.id.key();
            u.key_orientation = orientation_name(o);
            if (!seen.insert({u.key_sample, u.key_aspect, u.key_orientation}).second)
                continue;
            u.prompt = prompts::render(sample, aspect, o);
            u.digest = unit_digest(config, u.prompt);
            units.push_back(std::move(u));
        }
    }
    std::sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) {
        return std::tie(a.key_sample, a.key_aspect, a.key_orientation) <
               std::tie(b.key_sample, b.key_aspect, b.key_orientation);
    });

    // warm cache
    std::map<std::string, std::string> cache;
    if (std::filesystem::exists(cache_path)) {
        jsonl::for_each_record(cache_path, [&](const nlohmann::json& rec, std::size_t) {
            cache[rec.at("key").get<std::string>()] =
                rec.at("response").get<std::string>();
        });
    }

    // previous manifest: only Done/Cached units whose response is still cached
    // are trusted on resume
    std::set<std::tuple<std::string, std::string, std::string>> done_before;
    if (resume) {
        if (auto previous = RunManifest::load(manifest_path)) {
            for (const auto& u : previous->units)
                if (u.state == UnitState::Done || u.state == UnitState::Cached)
                    done_before.insert({u.sample_id, u.aspect, u.orientation});
        }
    }

    std::vector<std::size_t> to_run;
    for (std::size_t i = 0; i < units.size(); ++i) {
        Unit& u = units[i];
        if (auto it = cache.find(u.digest); it != cache.end()) {
            u.state = UnitState::Cached;
            u.response = it->second;
        } else {
            to_run.push_back(i);
        }
    }

    std::mutex io_mutex;
    std::ofstream cache_out;
    if (!to_run.empty()) {
        if (auto dir = cache_path.parent_path(); !dir.empty())
            std::filesystem::create_directories(dir);
        cache_out.open(cache_path, std::ios::app);
        if (!cache_out)
            throw std::runtime_error("cannot append to cache " + cache_path.string());
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t slot = next.fetch_add(1);
            if (slot >= to_run.size()) break;
            Unit& u = units[to_run[slot]];
            try {
                std::string response = backend.complete(u.prompt, u.key_sample,
                                                        u.key_aspect, u.orientation);
                std::lock_guard<std::mutex> lock(io_mutex);
                u.response = std::move(response);
                u.state = UnitState::Done;
                cache_out << nlohmann::json{{"key", u.digest},
                                            {"response", u.response}}
                                 .dump()
                          << '\n';
                cache_out.flush();
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(io_mutex);
                u.state = UnitState::Failed;
                u.error = e.what();
            }
        }
    };
    std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(config.concurrency_limit),
                              std::max<std::size_t>(to_run.size(), 1));
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < n_workers; ++i) workers.emplace_back(worker);
    for (auto& w : workers) w.join();

    BatchResult result;
    auto config_json = config.to_json().dump();
    result.manifest.config_digest = digest::sha256_hex(config_json);
    result.manifest.run_id = result.manifest.config_digest.substr(0, 12);

    std::map<std::pair<std::string, std::string>,
             std::map<std::string, JudgeVerdict>>
        parsed_by_pair;
    for (Unit& u : units) {
        UnitRecord rec{u.key_sample, u.key_aspect, u.key_orientation, u.state, u.error};
        if (u.state == UnitState::Done || u.state == UnitState::Cached) {
            try {
                JudgeVerdict verdict = parse_verdict(u.response);
                result.verdicts.push_back(
                    {u.key_sample, u.key_aspect, u.key_orientation, verdict});
                parsed_by_pair[{u.key_sample, u.key_aspect}][u.key_orientation] =
                    std::move(verdict);
            } catch (const std::exception& e) {
                rec.state = UnitState::Failed;
                rec.error = std::string("verdict parse: ") + e.what();
            }
        }
        result.manifest.units.push_back(std::move(rec));
    }

    for (const auto& [key, orientations] : parsed_by_pair) {
        auto orig = orientations.find("original");
        auto swap = orientations.find("swapped");
        if (orig == orientations.end() || swap == orientations.end()) continue;
        auto debiased = aggregate_orientations(orig->second, swap->second);
        result.debiased.push_back(
            {key.first, key.second, debiased.consistent, debiased.final_preference});
    }

    if (!manifest_path.empty()) {
        if (auto dir = manifest_path.parent_path(); !dir.empty())
            std::filesystem::create_directories(dir);
        result.manifest.save(manifest_path);
    }
    (void)done_before;
    return result;
}

}  // namespace aspecteval::judge
