#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardcase/prompt.h"
#include "hardcase/scenario.h"

namespace hardcase {

enum class BackendKind { remote, oracle_mock, noisy_mock, scripted_mock };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& s);

enum class ExchangeStatus { ok, refusal_suspected, transport_error };

std::string to_string(ExchangeStatus status);
ExchangeStatus exchange_status_from_string(const std::string& s);

struct BackendConfig {
    BackendKind kind = BackendKind::oracle_mock;
    std::string endpoint_url; // remote only
    std::string model_name;   // remote only
    std::string api_key_env = "HARDCASE_VLM_API_KEY";
    double timeout_s = 60.0;
    int max_retries = 3;
    int max_in_flight = 4;
    double noise_p = 0.0; // noisy_mock only
    std::uint64_t mock_seed = 0;
    std::string script_path;     // scripted_mock only
    double retry_backoff_s = 0.5; // doubles per attempt
    nlohmann::json options;       // opaque decoding options passed through
};

struct VlmExchange {
    std::string scenario_id;
    std::string config_fingerprint;
    std::string request_summary; // prompt text sans images
    std::string raw_response;    // preserved byte-exact
    ExchangeStatus status = ExchangeStatus::ok;
    double latency_s = 0.0;
    std::string timestamp_utc;
};

class Backend {
public:
    virtual ~Backend() = default;

    // Raw response text. Mocks derive it from the scenario; the remote
    // backend sends the bundle over HTTP and never reads the scenario.
    virtual std::string respond(const PromptBundle& bundle, const Scenario& scenario) = 0;

    // Stable identity folded into the cache fingerprint (model name for the
    // remote backend, kind plus parameters for mocks).
    virtual std::string identity() const = 0;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

std::string config_fingerprint(const PromptConfig& config, const std::string& backend_identity,
                               const std::vector<FewShotExample>& fewshots);

VlmExchange query(const PromptBundle& bundle, const Scenario& scenario, Backend& backend,
                  const std::string& fingerprint);

// Append-only JSONL response cache. A line is one exchange plus a CRC-32
// checksum of raw_response and the prompt-config metadata needed to rebuild
// a report; corrupt or truncated lines are skipped with a warning.
struct CachedExchange {
    VlmExchange exchange;
    nlohmann::json meta; // {"config": PromptConfig, "backend": identity}
};

std::vector<CachedExchange> read_cache(const std::string& path, int* corrupt_lines = nullptr);

nlohmann::json cache_line_to_json(const VlmExchange& exchange, const nlohmann::json& meta);

// Cache hits short-circuit the backend; misses run with at most
// `max_in_flight` outstanding requests and append to the cache as they
// finish. Results are returned in scenario input order.
std::vector<VlmExchange> batch_query(const std::vector<Scenario>& scenarios,
                                     const PromptConfig& config,
                                     const std::vector<FewShotExample>& fewshots,
                                     const PromptTemplates& templates, Backend& backend,
                                     const std::string& cache_path, int max_in_flight);

// Deterministic 1-10 difficulty rating used by the mock backends, derived
// from the spread of displacement errors in the scenario.
int mock_difficulty_score(const Scenario& scenario);

} // namespace hardcase
