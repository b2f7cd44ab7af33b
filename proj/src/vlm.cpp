#include "hardcase/vlm.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "hardcase/errors.h"
#include "hardcase/parser.h"
#include "hardcase/rng.h"
#include "hardcase/util.h"

using nlohmann::json;

namespace hardcase {

std::string to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::remote: return "remote";
        case BackendKind::oracle_mock: return "oracle_mock";
        case BackendKind::noisy_mock: return "noisy_mock";
        case BackendKind::scripted_mock: return "scripted_mock";
    }
    throw InternalError("unhandled BackendKind");
}

BackendKind backend_kind_from_string(const std::string& s) {
    if (s == "remote") return BackendKind::remote;
    if (s == "oracle_mock") return BackendKind::oracle_mock;
    if (s == "noisy_mock") return BackendKind::noisy_mock;
    if (s == "scripted_mock") return BackendKind::scripted_mock;
    throw UsageError("unknown backend '" + s +
                     "' (expected remote|oracle_mock|noisy_mock|scripted_mock)");
}

std::string to_string(ExchangeStatus status) {
    switch (status) {
        case ExchangeStatus::ok: return "ok";
        case ExchangeStatus::refusal_suspected: return "refusal_suspected";
        case ExchangeStatus::transport_error: return "transport_error";
    }
    throw InternalError("unhandled ExchangeStatus");
}

ExchangeStatus exchange_status_from_string(const std::string& s) {
    if (s == "ok") return ExchangeStatus::ok;
    if (s == "refusal_suspected") return ExchangeStatus::refusal_suspected;
    if (s == "transport_error") return ExchangeStatus::transport_error;
    throw DataError("unknown exchange status '" + s + "'");
}

int mock_difficulty_score(const Scenario& scenario) {
    double sum = 0.0;
    for (const auto& agent : scenario.agents) sum += min_ade(agent);
    const double mean = sum / static_cast<double>(scenario.agents.size());
    const int score = static_cast<int>(std::lround(mean * 2.2));
    return std::clamp(score, 1, 10);
}

namespace {

std::string ranking_explanation_text(const Scenario& scenario, const Ranking& ranking) {
    std::ostringstream out;
    out << "Agent " << ranking.front() << " shows the least predictable motion; agent "
        << ranking.back() << " is the steadiest of the " << scenario.agents.size() << " agents.";
    return out.str();
}

std::string score_explanation_text(int score) {
    std::ostringstream out;
    out << "Scene-level difficulty judged at " << score << " from the overall agent behavior.";
    return out.str();
}

class OracleMockBackend : public Backend {
public:
    std::string respond(const PromptBundle&, const Scenario& scenario) override {
        const GtRanking gt = gt_hardness_ranking(scenario);
        const int score = mock_difficulty_score(scenario);
        return render_response(gt.ranking, score, ranking_explanation_text(scenario, gt.ranking),
                               score_explanation_text(score));
    }
    std::string identity() const override { return "oracle_mock"; }
};

class NoisyMockBackend : public Backend {
public:
    NoisyMockBackend(double noise_p, std::uint64_t seed) : noise_p_(noise_p), seed_(seed) {
        if (noise_p_ < 0.0 || noise_p_ > 1.0) throw UsageError("noise_p must be in [0, 1]");
    }

    std::string respond(const PromptBundle&, const Scenario& scenario) override {
        const GtRanking gt = gt_hardness_ranking(scenario);
        Ranking ranking = gt.ranking;
        // Corrupt with round(p * n) random adjacent transpositions, seeded by
        // (mock_seed, scenario_id) so repeated calls are bit-identical.
        const auto n = static_cast<std::uint64_t>(ranking.size());
        const auto swaps = static_cast<int>(std::llround(noise_p_ * static_cast<double>(n)));
        if (n > 1 && swaps > 0) {
            Rng rng(derive_seed(seed_, fnv1a64(scenario.scenario_id)));
            for (int s = 0; s < swaps; ++s) {
                const std::size_t i = static_cast<std::size_t>(rng.below(n - 1));
                std::swap(ranking[i], ranking[i + 1]);
            }
        }
        const int score = mock_difficulty_score(scenario);
        return render_response(ranking, score, ranking_explanation_text(scenario, ranking),
                               score_explanation_text(score));
    }

    std::string identity() const override {
        return "noisy_mock:p=" + format_sig(noise_p_, 6) + ":seed=" + std::to_string(seed_);
    }

private:
    double noise_p_;
    std::uint64_t seed_;
};

class ScriptedMockBackend : public Backend {
public:
    explicit ScriptedMockBackend(const std::string& script_path) {
        if (script_path.empty())
            throw UsageError("scripted_mock requires a script file (--script)");
        json doc;
        try {
            doc = json::parse(read_file(script_path));
        } catch (const std::exception& e) {
            throw DataError("cannot load mock script " + script_path + ": " + e.what());
        }
        if (doc.contains("default")) default_text_ = doc["default"].get<std::string>();
        if (doc.contains("by_scenario"))
            for (const auto& [key, value] : doc["by_scenario"].items())
                by_scenario_[key] = value.get<std::string>();
        identity_ = "scripted_mock:" + std::to_string(fnv1a64(doc.dump()));
    }

    std::string respond(const PromptBundle&, const Scenario& scenario) override {
        const auto it = by_scenario_.find(scenario.scenario_id);
        if (it != by_scenario_.end()) return it->second;
        if (!default_text_.empty()) return default_text_;
        throw BackendError("mock script has no entry for scenario '" + scenario.scenario_id +
                           "' and no default");
    }

    std::string identity() const override { return identity_; }

private:
    std::string default_text_;
    std::map<std::string, std::string> by_scenario_;
    std::string identity_;
};

std::string media_type_for(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : to_lower(path.substr(dot + 1));
    if (ext == "png") return "image/png";
    if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
    if (ext == "webp") return "image/webp";
    return "application/octet-stream";
}

constexpr std::size_t kMaxPayloadBytes = 20 * 1024 * 1024;

class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(BackendConfig config) : config_(std::move(config)) {
        if (config_.endpoint_url.empty() || config_.model_name.empty())
            throw UsageError("remote backend requires --endpoint and --model");
        const auto scheme_end = config_.endpoint_url.find("://");
        if (scheme_end == std::string::npos)
            throw UsageError("endpoint URL must include a scheme: " + config_.endpoint_url);
        const auto path_begin = config_.endpoint_url.find('/', scheme_end + 3);
        host_ = config_.endpoint_url.substr(0, path_begin);
        path_ = path_begin == std::string::npos ? "/" : config_.endpoint_url.substr(path_begin);
    }

    std::string respond(const PromptBundle& bundle, const Scenario&) override {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw AuthError("API key environment variable " + config_.api_key_env +
                            " is not set");

        const std::string body = build_request_body(bundle);
        if (body.size() > kMaxPayloadBytes)
            throw BackendError("request payload exceeds " + std::to_string(kMaxPayloadBytes) +
                               " bytes");

        httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                const double delay = config_.retry_backoff_s * std::pow(2.0, attempt - 1);
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            httplib::Client client(host_);
            client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
            client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
            client.set_write_timeout(std::chrono::duration<double>(config_.timeout_s));

            auto res = client.Post(path_, headers, body, "application/json");
            if (!res) {
                last_error = "connection error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403)
                throw AuthError("endpoint rejected credentials (HTTP " +
                                std::to_string(res->status) + ")");
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw BackendError("endpoint returned HTTP " + std::to_string(res->status) + ": " +
                                   res->body.substr(0, 200));
            return extract_content(res->body);
        }
        throw TransportError("retries exhausted (" + std::to_string(config_.max_retries + 1) +
                             " attempts): " + last_error);
    }

    std::string identity() const override { return config_.model_name; }

private:
    std::string build_request_body(const PromptBundle& bundle) const {
        json messages = json::array();
        messages.push_back({{"role", "system"}, {"content", bundle.system_text}});
        for (const auto& [user, assistant] : bundle.fewshot_turns) {
            messages.push_back({{"role", "user"}, {"content", user}});
            messages.push_back({{"role", "assistant"}, {"content", assistant}});
        }
        json content = json::array();
        content.push_back({{"type", "text"}, {"text", bundle.user_turn.text}});
        for (const auto& image : bundle.user_turn.images) {
            std::string data;
            try {
                data = read_file(image);
            } catch (const std::exception& e) {
                throw DataError(std::string("cannot read image for remote query: ") + e.what());
            }
            content.push_back(
                {{"type", "image_url"},
                 {"image_url",
                  {{"url", "data:" + media_type_for(image) + ";base64," + base64_encode(data)}}}});
        }
        messages.push_back({{"role", "user"}, {"content", std::move(content)}});

        json body;
        body["model"] = config_.model_name;
        body["messages"] = std::move(messages);
        if (config_.options.is_object())
            for (const auto& [key, value] : config_.options.items()) body[key] = value;
        return body.dump();
    }

    static std::string extract_content(const std::string& body) {
        try {
            const json doc = json::parse(body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw BackendError(std::string("unexpected response shape: ") + e.what());
        }
    }

    BackendConfig config_;
    std::string host_;
    std::string path_;
};

} // namespace

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    switch (config.kind) {
        case BackendKind::remote: return std::make_unique<RemoteBackend>(config);
        case BackendKind::oracle_mock: return std::make_unique<OracleMockBackend>();
        case BackendKind::noisy_mock:
            return std::make_unique<NoisyMockBackend>(config.noise_p, config.mock_seed);
        case BackendKind::scripted_mock:
            return std::make_unique<ScriptedMockBackend>(config.script_path);
    }
    throw InternalError("unhandled BackendKind");
}

std::string config_fingerprint(const PromptConfig& config, const std::string& backend_identity,
                               const std::vector<FewShotExample>& fewshots) {
    json j;
    j["config"] = prompt_config_to_json(config);
    j["backend"] = backend_identity;
    j["fewshots"] = json::array();
    for (const auto& shot : fewshots) {
        j["fewshots"].push_back({{"user", shot.user_text}, {"assistant", shot.assistant_text}});
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

VlmExchange query(const PromptBundle& bundle, const Scenario& scenario, Backend& backend,
                  const std::string& fingerprint) {
    VlmExchange exchange;
    exchange.scenario_id = scenario.scenario_id;
    exchange.config_fingerprint = fingerprint;
    {
        std::ostringstream summary;
        summary << bundle.system_text << "\n";
        for (const auto& [user, assistant] : bundle.fewshot_turns)
            summary << "[user] " << user << "\n[assistant] " << assistant << "\n";
        summary << "[user] " << bundle.user_turn.text;
        exchange.request_summary = summary.str();
    }
    exchange.timestamp_utc = utc_now_iso8601();

    const auto start = std::chrono::steady_clock::now();
    try {
        exchange.raw_response = backend.respond(bundle, scenario);
        exchange.status = ExchangeStatus::ok;
    } catch (const AuthError&) {
        throw; // credentials problems abort the batch
    } catch (const BackendError& e) {
        exchange.status = ExchangeStatus::transport_error;
        exchange.raw_response.clear();
        std::cerr << "warning: scenario '" << scenario.scenario_id << "': " << e.what() << "\n";
    }
    exchange.latency_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return exchange;
}

json cache_line_to_json(const VlmExchange& exchange, const json& meta) {
    json line;
    line["scenario_id"] = exchange.scenario_id;
    line["config_fingerprint"] = exchange.config_fingerprint;
    line["request_summary"] = exchange.request_summary;
    line["raw_response"] = exchange.raw_response;
    line["status"] = to_string(exchange.status);
    line["latency_s"] = exchange.latency_s;
    line["timestamp"] = exchange.timestamp_utc;
    line["checksum"] = crc32(exchange.raw_response);
    if (!meta.is_null()) line["meta"] = meta;
    return line;
}

std::vector<CachedExchange> read_cache(const std::string& path, int* corrupt_lines) {
    std::vector<CachedExchange> out;
    if (corrupt_lines) *corrupt_lines = 0;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json doc = json::parse(line, nullptr, false);
        bool ok = doc.is_object() && doc.contains("scenario_id") &&
                  doc.contains("config_fingerprint") && doc.contains("raw_response") &&
                  doc.contains("checksum") && doc.contains("status");
        if (ok) {
            const std::string raw = doc["raw_response"].get<std::string>();
            ok = doc["checksum"].is_number_unsigned() &&
                 doc["checksum"].get<std::uint64_t>() == crc32(raw);
        }
        if (!ok) {
            // Truncated final lines from a crashed run land here too.
            std::cerr << "warning: skipping corrupt cache line " << lineno << " in " << path
                      << "\n";
            if (corrupt_lines) ++*corrupt_lines;
            continue;
        }
        CachedExchange entry;
        entry.exchange.scenario_id = doc["scenario_id"].get<std::string>();
        entry.exchange.config_fingerprint = doc["config_fingerprint"].get<std::string>();
        if (doc.contains("request_summary"))
            entry.exchange.request_summary = doc["request_summary"].get<std::string>();
        entry.exchange.raw_response = doc["raw_response"].get<std::string>();
        entry.exchange.status = exchange_status_from_string(doc["status"].get<std::string>());
        if (doc.contains("latency_s")) entry.exchange.latency_s = doc["latency_s"].get<double>();
        if (doc.contains("timestamp"))
            entry.exchange.timestamp_utc = doc["timestamp"].get<std::string>();
        if (doc.contains("meta")) entry.meta = doc["meta"];
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<VlmExchange> batch_query(const std::vector<Scenario>& scenarios,
                                     const PromptConfig& config,
                                     const std::vector<FewShotExample>& fewshots,
                                     const PromptTemplates& templates, Backend& backend,
                                     const std::string& cache_path, int max_in_flight) {
    if (max_in_flight < 1) throw UsageError("max_in_flight must be >= 1");

    const std::string fingerprint = config_fingerprint(config, backend.identity(), fewshots);
    const json meta = {{"config", prompt_config_to_json(config)},
                       {"backend", backend.identity()}};

    std::map<std::string, VlmExchange> cached;
    for (auto& entry : read_cache(cache_path)) {
        if (entry.exchange.config_fingerprint == fingerprint)
            cached[entry.exchange.scenario_id] = std::move(entry.exchange);
    }

    std::vector<VlmExchange> results(scenarios.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto it = cached.find(scenarios[i].scenario_id);
        if (it != cached.end()) {
            results[i] = it->second;
        } else {
            pending.push_back(i);
        }
    }

    if (pending.empty()) return results;

    std::ofstream cache_out(cache_path, std::ios::binary | std::ios::app);
    if (!cache_out) throw DataError("cannot open cache for append: " + cache_path);

    std::mutex work_mutex;
    std::mutex cache_mutex;
    std::size_t next = 0;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(work_mutex);
                if (first_error || next >= pending.size()) return;
                idx = pending[next++];
            }
            try {
                const PromptBundle bundle =
                    assemble(scenarios[idx], config, fewshots, templates);
                VlmExchange exchange = query(bundle, scenarios[idx], backend, fingerprint);
                if (exchange.status == ExchangeStatus::ok) {
                    // one writer at a time; full line + flush per exchange
                    std::lock_guard<std::mutex> lock(cache_mutex);
                    cache_out << cache_line_to_json(exchange, meta).dump() << "\n";
                    cache_out.flush();
                }
                results[idx] = std::move(exchange);
            } catch (...) {
                std::lock_guard<std::mutex> lock(work_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int n_threads = std::min<int>(max_in_flight, static_cast<int>(pending.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

} // namespace hardcase
