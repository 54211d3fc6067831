#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>

#include "aspecteval/judge.hpp"

using namespace aspecteval;
using judge::JudgeConfig;
using judge::JudgeVerdict;
using metrics::Preference;

namespace {

const taxonomy::AspectRegistry& shipped() {
    static auto reg = taxonomy::AspectRegistry::load(
        std::filesystem::path(PROJECT_DATA_DIR) / "registry.jsonl");
    return reg;
}

// Backend driven by a plain function, for tests that fabricate responses.
class FnBackend : public judge::Backend {
public:
    using Fn = std::function<std::string(const prompts::RenderedPrompt&,
                                         const std::string&, const std::string&,
                                         corpus::Orientation)>;
    explicit FnBackend(Fn fn) : fn_(std::move(fn)) {}

protected:
    std::string do_complete(const prompts::RenderedPrompt& p, const std::string& sid,
                            const std::string& ak, corpus::Orientation o) override {
        return fn_(p, sid, ak, o);
    }

private:
    Fn fn_;
};

corpus::PairwiseSample make_text_sample(const std::string& id, const std::string& r1,
                                        const std::string& r2) {
    corpus::PairwiseSample s;
    s.id = id;
    s.task = taxonomy::TaskType::NLG;
    s.sub_task = "summarization";
    s.query = "Summarize the passage.";
    s.response_1.segments.emplace_back(r1);
    s.response_2.segments.emplace_back(r2);
    return s;
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("judge_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("anchor judge outputs parse to the expected verdicts") {
    auto v1 = judge::parse_verdict(
        "[Feedback]: Response 2 is more faithful to the source and reads more "
        "naturally, while Response 1 drops a key clause. [Result]: 4 5");
    CHECK(v1.score_1 == 4);
    CHECK(v1.score_2 == 5);
    CHECK(v1.preference == Preference::Second);
    CHECK(v1.feedback.rfind("Response 2 is more faithful", 0) == 0);

    auto v2 = judge::parse_verdict(
        "[Feedback]: Both responses satisfy the criterion equally well and no "
        "meaningful difference separates them. [Result]: 5 5");
    CHECK(v2.score_1 == 5);
    CHECK(v2.score_2 == 5);
    CHECK(v2.preference == Preference::Tie);

    auto v3 = judge::parse_verdict(
        "[Feedback]: Response 1 is clearly stronger here; Response 2 contradicts "
        "the query twice. [Result]: 5 2");
    CHECK(v3.score_1 == 5);
    CHECK(v3.score_2 == 2);
    CHECK(v3.preference == Preference::First);
}

TEST_CASE("both scores of -1 mean the criterion does not apply") {
    auto v = judge::parse_verdict("[Feedback]: Not relevant. [Result]: -1 -1");
    CHECK(v.score_1 == -1);
    CHECK(v.score_2 == -1);
    CHECK(v.preference == Preference::NotApplicable);
}

TEST_CASE("the last result marker wins") {
    auto v = judge::parse_verdict(
        "[Feedback]: Draft thoughts. [Result]: 1 1\n"
        "[Feedback]: On reflection the first answer is better. [Result]: 4 2");
    CHECK(v.score_1 == 4);
    CHECK(v.score_2 == 2);
    CHECK(v.feedback == "On reflection the first answer is better.");
}

TEST_CASE("feedback falls back to the preamble when unmarked") {
    auto v = judge::parse_verdict("Quite close overall. [Result]: 3 3");
    CHECK(v.feedback == "Quite close overall.");
}

TEST_CASE("scores wrapped in light punctuation still parse") {
    auto v = judge::parse_verdict("[Feedback]: ok [Result]: (4), 5.");
    CHECK(v.score_1 == 4);
    CHECK(v.score_2 == 5);
}

TEST_CASE("malformed judge outputs raise typed errors") {
    CHECK_THROWS_AS((void)judge::parse_verdict("no marker at all"),
                    judge::MissingResultMarker);
    CHECK_THROWS_AS((void)judge::parse_verdict("[Feedback]: x"),
                    judge::MissingResultMarker);
    CHECK_THROWS_AS((void)judge::parse_verdict("[Result]: 4"), judge::ScoreCountError);
    CHECK_THROWS_AS((void)judge::parse_verdict("[Result]: 4 5 3"),
                    judge::ScoreCountError);
    CHECK_THROWS_AS((void)judge::parse_verdict("[Result]:"), judge::ScoreCountError);
    CHECK_THROWS_AS((void)judge::parse_verdict("[Result]: 0 4"),
                    judge::ScoreRangeError);
    CHECK_THROWS_AS((void)judge::parse_verdict("[Result]: 4 6"),
                    judge::ScoreRangeError);
    CHECK_THROWS_AS((void)judge::parse_verdict("[Result]: -2 3"),
                    judge::ScoreRangeError);
    CHECK_THROWS_AS((void)judge::parse_verdict("[Result]: -1 3"),
                    judge::ScoreRangeError);
    CHECK_THROWS_AS((void)judge::parse_verdict("[Result]: 3 -1"),
                    judge::ScoreRangeError);
}

TEST_CASE("format then parse round-trips every valid score pair") {
    const int values[] = {-1, 1, 2, 3, 4, 5};
    std::size_t n_valid = 0;
    for (int a : values) {
        for (int b : values) {
            if ((a == -1) != (b == -1)) continue;  // mixed -1 is invalid
            JudgeVerdict v;
            v.feedback = "score pair check";
            v.score_1 = a;
            v.score_2 = b;
            v.preference = metrics::preference_from_scores(a, b);
            auto round = judge::parse_verdict(judge::format_verdict(v));
            CHECK(round == v);
            ++n_valid;
        }
    }
    CHECK(n_valid == 26);
}

TEST_CASE("parse_verdict never crashes on arbitrary input") {
    std::mt19937_64 rng(271828);
    std::uniform_int_distribution<int> len(0, 120);
    std::uniform_int_distribution<int> flavor(0, 5);
    const std::string pieces[] = {"[Result]:", "[Feedback]:", " ", "\n",
                                  "-1",        "42",          "3", "text"};
    std::uniform_int_distribution<std::size_t> pick(0, std::size(pieces) - 1);
    std::uniform_int_distribution<int> byte(0, 255);

    std::size_t parsed = 0, typed = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string input;
        int n = len(rng);
        if (flavor(rng) < 4) {
            for (int k = 0; k < n / 8; ++k) input += pieces[pick(rng)];
        } else {
            for (int k = 0; k < n; ++k)
                input += static_cast<char>(byte(rng));
        }
        try {
            (void)judge::parse_verdict(input);
            ++parsed;
        } catch (const judge::MissingResultMarker&) {
            ++typed;
        } catch (const judge::ScoreCountError&) {
            ++typed;
        } catch (const judge::ScoreRangeError&) {
            ++typed;
        }
    }
    CHECK(parsed + typed == 10000);
}

TEST_CASE("orientation aggregation over every preference combination") {
    auto verdict = [](int s1, int s2) {
        JudgeVerdict v;
        v.score_1 = s1;
        v.score_2 = s2;
        v.preference = metrics::preference_from_scores(s1, s2);
        return v;
    };
    // representatives of each preference class
    const JudgeVerdict reps[] = {verdict(5, 2), verdict(2, 5), verdict(3, 3),
                                 verdict(-1, -1)};
    auto corrected = [](Preference p) {
        if (p == Preference::First) return Preference::Second;
        if (p == Preference::Second) return Preference::First;
        return p;
    };
    for (const auto& original : reps) {
        for (const auto& swapped : reps) {
            auto out = judge::aggregate_orientations(original, swapped);
            bool expect_consistent =
                original.preference == corrected(swapped.preference);
            CHECK(out.consistent == expect_consistent);
            CHECK(out.final_preference ==
                  (expect_consistent ? original.preference : Preference::Tie));
            CHECK(out.original == original);
            CHECK(out.swapped == swapped);
        }
    }
}

TEST_CASE("a content-consistent judge is position consistent") {
    // Scores depend only on which response text is in which slot, so the
    // swapped orientation sees mirrored scores.
    auto score_of = [](const std::string& text) {
        return 1 + static_cast<int>(std::hash<std::string>{}(text) % 5);
    };
    FnBackend backend([&](const prompts::RenderedPrompt& p, const std::string&,
                          const std::string&, corpus::Orientation) {
        auto pos1 = p.text.find("[Response 1]:");
        auto pos2 = p.text.find("[Response 2]:");
        REQUIRE(pos1 != std::string::npos);
        REQUIRE(pos2 != std::string::npos);
        std::string r1 = p.text.substr(pos1 + 14, p.text.find('\n', pos1) - pos1 - 14);
        std::string r2 = p.text.substr(pos2 + 14, p.text.find('\n', pos2) - pos2 - 14);
        return "[Feedback]: judged by content. [Result]: " +
               std::to_string(score_of(r1)) + " " + std::to_string(score_of(r2));
    });

    const auto& reg = shipped();
    const auto& fluency = reg.at({"Fluency", taxonomy::Qualifier::None});
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> word(0, 40);

    std::vector<std::pair<Preference, Preference>> orientation_pairs;
    for (int i = 0; i < 500; ++i) {
        auto s = make_text_sample("c" + std::to_string(i),
                                  "alpha " + std::to_string(word(rng)),
                                  "beta " + std::to_string(word(rng)));
        auto out = judge::evaluate_debiased(backend, s, fluency);
        CHECK(out.consistent);
        int a = score_of(*s.response_1.texts().begin());
        int b = score_of(*s.response_2.texts().begin());
        CHECK(out.final_preference == metrics::preference_from_scores(a, b));
        orientation_pairs.emplace_back(out.original.preference,
                                       out.swapped.preference);
    }
    CHECK(metrics::position_consistency(orientation_pairs) == 1.0);
    CHECK(backend.calls() == 1000);
}

TEST_CASE("a slot-sticky judge collapses to ties") {
    FnBackend backend([](const prompts::RenderedPrompt&, const std::string&,
                         const std::string&, corpus::Orientation) {
        return std::string("[Feedback]: the first slot always wins. [Result]: 5 2");
    });
    const auto& reg = shipped();
    const auto& fluency = reg.at({"Fluency", taxonomy::Qualifier::None});

    std::vector<std::pair<Preference, Preference>> orientation_pairs;
    for (int i = 0; i < 20; ++i) {
        auto s = make_text_sample("p" + std::to_string(i), "left text", "right text");
        auto out = judge::evaluate_debiased(backend, s, fluency);
        CHECK_FALSE(out.consistent);
        CHECK(out.final_preference == Preference::Tie);
        orientation_pairs.emplace_back(out.original.preference,
                                       out.swapped.preference);
    }
    CHECK(metrics::position_consistency(orientation_pairs) == 0.0);
}

TEST_CASE("unit digests track model, prompt text, and temperature") {
    JudgeConfig config;
    config.model_id = "judge-a";
    prompts::RenderedPrompt p;
    p.text = "evaluate this";

    auto base = judge::unit_digest(config, p);
    CHECK(base == judge::unit_digest(config, p));

    auto other_model = config;
    other_model.model_id = "judge-b";
    CHECK(judge::unit_digest(other_model, p) != base);

    auto warm = config;
    warm.temperature = 0.7;
    CHECK(judge::unit_digest(warm, p) != base);

    auto other_prompt = p;
    other_prompt.text += "!";
    CHECK(judge::unit_digest(config, other_prompt) != base);

    auto with_image = p;
    with_image.attachments.push_back({"images/x.png", "ab12"});
    CHECK(judge::unit_digest(config, with_image) != base);
}

TEST_CASE("http backend round-trips a completion") {
    httplib::Server server;
    std::string seen_body;
    std::string seen_auth;
    server.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    seen_body = req.body;
                    seen_auth = req.get_header_value("Authorization");
                    nlohmann::json reply{
                        {"choices",
                         {{{"message",
                            {{"content", "[Feedback]: fine [Result]: 4 3"}}}}}}};
                    res.set_content(reply.dump(), "application/json");
                });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });

    setenv("JUDGE_API_KEY", "sekrit", 1);
    JudgeConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    config.model_id = "judge-x";
    config.request_timeout = 5.0;
    judge::HttpBackend backend(config);

    prompts::RenderedPrompt prompt;
    prompt.text = "please judge";
    auto response = backend.complete(prompt, "s1", "Fluency",
                                     corpus::Orientation::Original);
    CHECK(response == "[Feedback]: fine [Result]: 4 3");
    CHECK(backend.calls() == 1);
    CHECK(seen_auth == "Bearer sekrit");

    auto body = nlohmann::json::parse(seen_body);
    CHECK(body.at("model") == "judge-x");
    CHECK(body.at("messages").at(0).at("content").at(0).at("text") == "please judge");

    server.stop();
    server_thread.join();
}

TEST_CASE("http backend attaches images as base64 data urls") {
    httplib::Server server;
    std::string seen_body;
    server.Post("/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    seen_body = req.body;
                    nlohmann::json reply{
                        {"choices",
                         {{{"message", {{"content", "[Result]: 3 3"}}}}}}};
                    res.set_content(reply.dump(), "application/json");
                });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });

    JudgeConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(port);
    config.request_timeout = 5.0;
    judge::HttpBackend backend(config, PROJECT_FIXTURE_DIR);

    prompts::RenderedPrompt prompt;
    prompt.text = "look at this";
    prompt.attachments.push_back({"images/a.png", ""});
    (void)backend.complete(prompt, "s1", "Fidelity", corpus::Orientation::Original);

    auto body = nlohmann::json::parse(seen_body);
    const auto& content = body.at("messages").at(0).at("content");
    REQUIRE(content.size() == 2);
    CHECK(content.at(1).at("type") == "image_url");
    std::string url = content.at(1).at("image_url").at("url");
    CHECK(url.rfind("data:image/png;base64,", 0) == 0);
    CHECK(url.size() > 30);

    server.stop();
    server_thread.join();
}

TEST_CASE("http backend maps failures to typed errors") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/flaky/chat/completions",
                [&](const httplib::Request&, httplib::Response& res) {
                    ++hits;
                    res.status = 503;
                });
    server.Post("/auth/chat/completions",
                [&](const httplib::Request&, httplib::Response& res) {
                    res.status = 401;
                });
    server.Post("/garbled/chat/completions",
                [&](const httplib::Request&, httplib::Response& res) {
                    res.set_content("not json at all", "text/plain");
                });
    server.Post("/hollow/chat/completions",
                [&](const httplib::Request&, httplib::Response& res) {
                    res.set_content(R"({"choices":[]})", "application/json");
                });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });

    auto make_backend = [&](const std::string& prefix) {
        JudgeConfig config;
        config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/" + prefix;
        config.request_timeout = 5.0;
        config.max_retries = 2;
        config.backoff_base = 0.01;
        return judge::HttpBackend(config);
    };
    prompts::RenderedPrompt prompt;
    prompt.text = "judge";
    auto call = [&](judge::HttpBackend& b) {
        return b.complete(prompt, "s", "Fluency", corpus::Orientation::Original);
    };

    auto flaky = make_backend("flaky");
    CHECK_THROWS_AS((void)call(flaky), judge::TransportError);
    CHECK(hits == 3);  // initial try plus two retries

    auto auth = make_backend("auth");
    CHECK_THROWS_AS((void)call(auth), judge::AuthError);

    auto garbled = make_backend("garbled");
    CHECK_THROWS_AS((void)call(garbled), judge::ProtocolError);

    auto hollow = make_backend("hollow");
    CHECK_THROWS_AS((void)call(hollow), judge::ProtocolError);

    server.stop();
    server_thread.join();
}

TEST_CASE("run_batch caches responses and resumes without new calls") {
    auto dir = scratch_dir("batch");
    auto cache_path = dir / "cache.jsonl";
    auto manifest_path = dir / "manifest.json";

    const auto& reg = shipped();
    JudgeConfig config;
    config.model_id = "judge-m";
    config.concurrency_limit = 3;

    judge::Plan plan;
    for (int i = 0; i < 6; ++i)
        plan.emplace_back(make_text_sample("s" + std::to_string(i),
                                           "first candidate " + std::to_string(i),
                                           "second candidate " + std::to_string(i)),
                          taxonomy::AspectId{"Fluency", taxonomy::Qualifier::None});

    FnBackend backend([](const prompts::RenderedPrompt&, const std::string& sid,
                         const std::string&, corpus::Orientation o) {
        // sample s3 prefers slot 1 both ways: inconsistent, debiased to Tie
        if (sid == "s3") return std::string("[Feedback]: slot bias [Result]: 5 1");
        int s1 = o == corpus::Orientation::Original ? 4 : 2;
        int s2 = o == corpus::Orientation::Original ? 2 : 4;
        return "[Feedback]: steady [Result]: " + std::to_string(s1) + " " +
               std::to_string(s2);
    });

    auto first = judge::run_batch(backend, config, plan, reg, cache_path,
                                  manifest_path, false);
    CHECK(backend.calls() == 12);
    CHECK(first.manifest.count(judge::UnitState::Done) == 12);
    CHECK(first.verdicts.size() == 12);
    REQUIRE(first.debiased.size() == 6);
    for (const auto& d : first.debiased) {
        if (d.sample_id == "s3") {
            CHECK_FALSE(d.consistent);
            CHECK(d.final_preference == Preference::Tie);
        } else {
            CHECK(d.consistent);
            CHECK(d.final_preference == Preference::First);
        }
    }

    // deterministic unit order: sorted by sample, aspect, orientation
    for (std::size_t i = 1; i < first.verdicts.size(); ++i) {
        const auto& a = first.verdicts[i - 1];
        const auto& b = first.verdicts[i];
        CHECK(std::tie(a.sample_id, a.aspect, a.orientation) <
              std::tie(b.sample_id, b.aspect, b.orientation));
    }

    auto second = judge::run_batch(backend, config, plan, reg, cache_path,
                                   manifest_path, true);
    CHECK(backend.calls() == 12);  // everything served from the cache
    CHECK(second.manifest.count(judge::UnitState::Cached) == 12);
    CHECK(second.debiased.size() == 6);
    CHECK(second.manifest.config_digest == first.manifest.config_digest);

    auto reloaded = judge::RunManifest::load(manifest_path);
    REQUIRE(reloaded.has_value());
    CHECK(reloaded->units.size() == 12);
    CHECK(reloaded->config_digest == first.manifest.config_digest);

    std::filesystem::remove_all(dir);
}

TEST_CASE("run_batch records failures and picks them up on resume") {
    auto dir = scratch_dir("resume");
    auto cache_path = dir / "cache.jsonl";
    auto manifest_path = dir / "manifest.json";

    const auto& reg = shipped();
    JudgeConfig config;
    config.model_id = "judge-m";
    config.concurrency_limit = 2;

    judge::Plan plan;
    for (int i = 0; i < 4; ++i)
        plan.emplace_back(make_text_sample("s" + std::to_string(i),
                                           "one v" + std::to_string(i),
                                           "two v" + std::to_string(i)),
                          taxonomy::AspectId{"Fluency", taxonomy::Qualifier::None});

    bool flaky_up = false;
    FnBackend backend([&](const prompts::RenderedPrompt&, const std::string& sid,
                          const std::string&, corpus::Orientation) -> std::string {
        if (sid == "s2" && !flaky_up)
            throw judge::TransportError("synthetic outage");
        if (sid == "s1") return "word salad with no scores";
        return "[Feedback]: ok [Result]: 3 3";
    });

    auto first = judge::run_batch(backend, config, plan, reg, cache_path,
                                  manifest_path, false);
    CHECK(first.manifest.count(judge::UnitState::Failed) == 4);  // s1 + s2 units
    CHECK(first.manifest.count(judge::UnitState::Done) == 4);
    CHECK(first.debiased.size() == 2);  // s0 and s3 only

    flaky_up = true;
    auto calls_before = backend.calls();
    auto second = judge::run_batch(backend, config, plan, reg, cache_path,
                                   manifest_path, true);
    // only the two transport-failed s2 units go back out; the s1 units are
    // cached (the response arrived) but still fail verdict parsing
    CHECK(backend.calls() - calls_before == 2);
    CHECK(second.manifest.count(judge::UnitState::Failed) == 2);
    CHECK(second.debiased.size() == 3);

    std::filesystem::remove_all(dir);
}

TEST_CASE("the fixture-directory backend replays canned responses") {
    auto dir = scratch_dir("mockdir");
    JudgeConfig config;
    config.model_id = "judge-m";

    prompts::RenderedPrompt prompt;
    prompt.text = "digest keyed prompt";
    auto key = judge::unit_digest(config, prompt);

    {
        std::ofstream out(dir / "responses.jsonl");
        out << nlohmann::json{{"key", key},
                              {"response", "[Feedback]: via digest [Result]: 4 2"}}
                   .dump()
            << '\n';
        out << nlohmann::json{{"sample_id", "s9"},
                              {"aspect", "Fluency"},
                              {"orientation", "swapped"},
                              {"response", "[Feedback]: via unit [Result]: 2 4"}}
                   .dump()
            << '\n';
    }

    judge::MockDirBackend backend(dir, config);
    CHECK(backend.complete(prompt, "whatever", "Fluency",
                           corpus::Orientation::Original) ==
          "[Feedback]: via digest [Result]: 4 2");

    prompts::RenderedPrompt other;
    other.text = "not in the digest map";
    CHECK(backend.complete(other, "s9", "Fluency", corpus::Orientation::Swapped) ==
          "[Feedback]: via unit [Result]: 2 4");
    CHECK_THROWS_AS((void)backend.complete(other, "s9", "Fluency",
                                           corpus::Orientation::Original),
                    judge::TransportError);

    std::filesystem::remove_all(dir);
}

TEST_CASE("judge config round-trips through json") {
    JudgeConfig c;
    c.endpoint = "http://judge.local/v1";
    c.model_id = "judge-7";
    c.temperature = 0.3;
    c.concurrency_limit = 8;
    auto back = JudgeConfig::from_json(c.to_json());
    CHECK(back.endpoint == c.endpoint);
    CHECK(back.model_id == c.model_id);
    CHECK(back.temperature == doctest::Approx(0.3));
    CHECK(back.concurrency_limit == 8);
    CHECK(back.api_key_env == "JUDGE_API_KEY");

    auto bad = c.to_json();
    bad["concurrency_limit"] = 0;
    CHECK_THROWS_AS((void)JudgeConfig::from_json(bad), std::invalid_argument);
}
