#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hardcase/baseline.h"
#include "hardcase/metrics.h"
#include "hardcase/parser.h"
#include "hardcase/selection.h"
#include "hardcase/vlm.h"

namespace hardcase {

struct FailureRecord {
    std::string scenario_id;
    ParseFailure failure;
};

struct EvalOutcome {
    std::vector<MetricReportRow> rows; // successfully parsed exchanges
    AggregateReport aggregate;
    std::vector<FailureRecord> failures;
    std::vector<SceneScore> scores; // per-scene difficulty; refusal when unparsed
};

// Joins exchanges with ground truth. A scenario with no ok exchange becomes a
// failure, not an error.
EvalOutcome evaluate_dataset(const std::vector<Scenario>& scenarios,
                             const std::vector<VlmExchange>& exchanges, ParseMode mode, int k,
                             const RefusalPhrases& phrases = RefusalPhrases::defaults());

nlohmann::json aggregate_to_json(const AggregateReport& aggregate);
AggregateReport aggregate_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const nlohmann::json& config, const EvalOutcome& outcome);

// Per-metric observed value joined against its random-trial baseline:
// histogram bins, baseline mean, and the cumulative probability of the
// observed value. Validated against its own schema before returning.
nlohmann::json fig3_data(
    const AggregateReport& aggregate,
    const std::map<MetricName, std::pair<TrialDistribution, BaselineSummary>>& baselines);

void validate_fig3_data(const nlohmann::json& doc);

nlohmann::json baselines_to_json(
    const std::map<MetricName, std::pair<TrialDistribution, BaselineSummary>>& baselines, int k,
    int n_samples);
std::map<MetricName, std::pair<TrialDistribution, BaselineSummary>> baselines_from_json(
    const nlohmann::json& doc);

// Canonical form: alphabetically sorted keys (nlohmann's default object
// order) with every float snapped to 6 significant digits, so identical
// inputs serialize byte-identically.
std::string canonical_dump(const nlohmann::json& doc);
void emit_json(const nlohmann::json& doc, const std::string& path);

// One row per scenario; *_display columns mirror the floats at 3 decimals.
std::string rows_to_csv(const std::vector<MetricReportRow>& rows);
void emit_csv(const std::vector<MetricReportRow>& rows, const std::string& path);

} // namespace hardcase
