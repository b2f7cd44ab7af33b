#include "hardcase/report.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "hardcase/errors.h"
#include "hardcase/util.h"

using nlohmann::json;

namespace hardcase {

EvalOutcome evaluate_dataset(const std::vector<Scenario>& scenarios,
                             const std::vector<VlmExchange>& exchanges, ParseMode mode, int k,
                             const RefusalPhrases& phrases) {
    // last exchange per scenario wins, matching the cache-replay rule
    std::map<std::string, const VlmExchange*> by_id;
    for (const auto& e : exchanges) by_id[e.scenario_id] = &e;

    EvalOutcome outcome;
    for (const auto& scenario : scenarios) {
        const auto it = by_id.find(scenario.scenario_id);
        if (it == by_id.end() || it->second->status == ExchangeStatus::transport_error) {
            const std::string why = it == by_id.end() ? "no exchange for scenario"
                                                      : "exchange ended in a transport error";
            outcome.failures.push_back(
                {scenario.scenario_id, ParseFailure{FailureKind::malformed_ranking, why, ""}});
            outcome.scores.push_back({scenario.scenario_id, std::nullopt, why});
            continue;
        }

        const GtRanking gt = gt_hardness_ranking(scenario);
        const std::set<AgentId> expected(gt.ranking.begin(), gt.ranking.end());
        ParseResult parsed = parse_response(it->second->raw_response, expected, mode, phrases);

        if (auto* failure = std::get_if<ParseFailure>(&parsed)) {
            outcome.failures.push_back({scenario.scenario_id, std::move(*failure)});
            outcome.scores.push_back({scenario.scenario_id, std::nullopt,
                                      outcome.failures.back().failure.detail});
            continue;
        }
        auto& response = std::get<ParsedResponse>(parsed);
        outcome.rows.push_back(
            evaluate_sample(scenario.scenario_id, gt.ranking, response.ranking, gt.relevance, k));
        outcome.scores.push_back(
            {scenario.scenario_id, response.score, response.score_explanation});
    }

    if (!outcome.rows.empty()) {
        outcome.aggregate = aggregate(outcome.rows, static_cast<int>(outcome.failures.size()));
    } else {
        outcome.aggregate = AggregateReport{};
        outcome.aggregate.n_parse_failures = static_cast<int>(outcome.failures.size());
    }
    return outcome;
}

json aggregate_to_json(const AggregateReport& aggregate) {
    json j;
    j["mean_c_index"] = aggregate.mean_c_index;
    j["mean_kendall_tau"] = aggregate.mean_tau;
    j["mean_ndcg"] = aggregate.mean_ndcg;
    j["top_k_accuracy"] = aggregate.top_k_accuracy;
    j["n_samples"] = aggregate.n_samples;
    j["n_applicable"] = aggregate.n_applicable;
    j["n_parse_failures"] = aggregate.n_parse_failures;
    return j;
}

AggregateReport aggregate_from_json(const json& j) {
    AggregateReport a;
    a.mean_c_index = j.at("mean_c_index").get<double>();
    a.mean_tau = j.at("mean_kendall_tau").get<double>();
    a.mean_ndcg = j.at("mean_ndcg").get<double>();
    a.top_k_accuracy = j.at("top_k_accuracy").get<double>();
    a.n_samples = j.at("n_samples").get<int>();
    a.n_applicable = j.at("n_applicable").get<int>();
    a.n_parse_failures = j.at("n_parse_failures").get<int>();
    return a;
}

json report_to_json(const json& config, const EvalOutcome& outcome) {
    json j;
    j["config"] = config;
    j["aggregate"] = aggregate_to_json(outcome.aggregate);
    json rows = json::array();
    for (const auto& row : outcome.rows) {
        json r;
        r["scenario_id"] = row.scenario_id;
        r["c_index"] = row.c_index;
        r["kendall_tau"] = row.kendall_tau;
        r["ndcg"] = row.ndcg;
        if (row.top_k_hit.has_value())
            r["top_k_hit"] = *row.top_k_hit;
        else
            r["top_k_hit"] = nullptr; // not applicable: fewer agents than k
        r["n_agents"] = row.n_agents;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    json failures = json::array();
    for (const auto& record : outcome.failures) {
        failures.push_back({{"scenario_id", record.scenario_id},
                            {"kind", to_string(record.failure.kind)},
                            {"detail", record.failure.detail},
                            {"raw_excerpt", record.failure.raw_excerpt}});
    }
    j["failures"] = std::move(failures);
    return j;
}

namespace {

double observed_value(const AggregateReport& aggregate, MetricName metric) {
    switch (metric) {
        case MetricName::c_index: return aggregate.mean_c_index;
        case MetricName::ndcg: return aggregate.mean_ndcg;
        case MetricName::top_k_accuracy: return aggregate.top_k_accuracy;
        case MetricName::kendall_tau: return aggregate.mean_tau;
    }
    throw InternalError("unhandled MetricName");
}

json bins_to_json(const std::vector<HistogramBin>& bins) {
    json arr = json::array();
    for (const auto& b : bins)
        arr.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
    return arr;
}

} // namespace

json fig3_data(const AggregateReport& aggregate,
               const std::map<MetricName, std::pair<TrialDistribution, BaselineSummary>>&
                   baselines) {
    json metrics;
    int n_trials = 0;
    std::uint64_t master_seed = 0;
    for (MetricName name : kAllMetrics) {
        const auto it = baselines.find(name);
        if (it == baselines.end())
            throw DataError("baseline missing metric " + to_string(name));
        const auto& [dist, summary] = it->second;
        n_trials = dist.n_trials;
        master_seed = dist.master_seed;
        const double observed = observed_value(aggregate, name);
        json m;
        m["observed"] = observed;
        m["baseline_mean"] = summary.mean;
        m["cumulative_probability"] = cumulative_probability(dist, observed);
        m["histogram"] = bins_to_json(summary.bins);
        metrics[to_string(name)] = std::move(m);
    }
    json doc;
    doc["metrics"] = std::move(metrics);
    doc["n_trials"] = n_trials;
    doc["master_seed"] = master_seed;
    validate_fig3_data(doc);
    return doc;
}

void validate_fig3_data(const json& doc) {
    if (!doc.is_object() || !doc.contains("metrics") || !doc.contains("n_trials"))
        throw DataError("plot-data document missing required keys");
    const auto n_trials = doc["n_trials"].get<std::int64_t>();
    for (MetricName name : kAllMetrics) {
        const std::string key = to_string(name);
        if (!doc["metrics"].contains(key))
            throw DataError("plot-data document missing metric '" + key + "'");
        const auto& m = doc["metrics"][key];
        for (const char* field : {"observed", "baseline_mean", "cumulative_probability"})
            if (!m.contains(field))
                throw DataError("plot-data metric '" + key + "' missing '" + field + "'");
        const double p = m["cumulative_probability"].get<double>();
        if (p < 0.0 || p > 100.0)
            throw DataError("plot-data metric '" + key + "': cumulative probability " +
                            format_sig(p, 6) + " outside [0, 100]");
        if (!m.contains("histogram") || !m["histogram"].is_array())
            throw DataError("plot-data metric '" + key + "' missing histogram");
        std::int64_t total = 0;
        for (const auto& bin : m["histogram"]) total += bin.at("count").get<std::int64_t>();
        if (total != n_trials)
            throw DataError("plot-data metric '" + key + "': histogram counts sum to " +
                            std::to_string(total) + ", expected " + std::to_string(n_trials));
    }
}

json baselines_to_json(
    const std::map<MetricName, std::pair<TrialDistribution, BaselineSummary>>& baselines, int k,
    int n_samples) {
    json metrics;
    int n_trials = 0;
    std::uint64_t master_seed = 0;
    for (const auto& [name, pair] : baselines) {
        const auto& [dist, summary] = pair;
        n_trials = dist.n_trials;
        master_seed = dist.master_seed;
        json m;
        m["mean"] = summary.mean;
        m["values"] = dist.values;
        m["histogram"] = bins_to_json(summary.bins);
        metrics[to_string(name)] = std::move(m);
    }
    json doc;
    doc["metrics"] = std::move(metrics);
    doc["n_trials"] = n_trials;
    doc["master_seed"] = master_seed;
    doc["k"] = k;
    doc["n_samples"] = n_samples;
    return doc;
}

std::map<MetricName, std::pair<TrialDistribution, BaselineSummary>> baselines_from_json(
    const json& doc) {
    std::map<MetricName, std::pair<TrialDistribution, BaselineSummary>> out;
    const int n_trials = doc.at("n_trials").get<int>();
    const auto master_seed = doc.at("master_seed").get<std::uint64_t>();
    for (const auto& [key, m] : doc.at("metrics").items()) {
        TrialDistribution dist;
        dist.metric = metric_name_from_string(key);
        dist.n_trials = n_trials;
        dist.master_seed = master_seed;
        dist.values = m.at("values").get<std::vector<double>>();
        BaselineSummary summary;
        summary.mean = m.at("mean").get<double>();
        summary.sorted_values = dist.values;
        std::sort(summary.sorted_values.begin(), summary.sorted_values.end());
        for (const auto& bin : m.at("histogram"))
            summary.bins.push_back({bin.at("lo").get<double>(), bin.at("hi").get<double>(),
                                    bin.at("count").get<std::int64_t>()});
        out.emplace(dist.metric, std::make_pair(std::move(dist), std::move(summary)));
    }
    return out;
}

namespace {

json canonicalize(const json& node) {
    switch (node.type()) {
        case json::value_t::number_float:
            return json(round_sig(node.get<double>(), 6));
        case json::value_t::object: {
            json out = json::object();
            for (const auto& [key, value] : node.items()) out[key] = canonicalize(value);
            return out;
        }
        case json::value_t::array: {
            json out = json::array();
            for (const auto& value : node) out.push_back(canonicalize(value));
            return out;
        }
        default:
            return node;
    }
}

} // namespace

std::string canonical_dump(const json& doc) { return canonicalize(doc).dump(2) + "\n"; }

void emit_json(const json& doc, const std::string& path) {
    write_file(path, canonical_dump(doc));
}

std::string rows_to_csv(const std::vector<MetricReportRow>& rows) {
    std::string out =
        "scenario_id,n_agents,c_index,kendall_tau,ndcg,top_k_hit,"
        "c_index_display,kendall_tau_display,ndcg_display\n";
    char buf[256];
    for (const auto& row : rows) {
        const std::string hit =
            row.top_k_hit.has_value() ? (*row.top_k_hit ? "true" : "false") : "na";
        std::snprintf(buf, sizeof(buf), "%s,%d,%s,%s,%s,%s,%.3f,%.3f,%.3f\n",
                      row.scenario_id.c_str(), row.n_agents, format_sig(row.c_index, 6).c_str(),
                      format_sig(row.kendall_tau, 6).c_str(), format_sig(row.ndcg, 6).c_str(),
                      hit.c_str(), row.c_index, row.kendall_tau, row.ndcg);
        out += buf;
    }
    return out;
}

void emit_csv(const std::vector<MetricReportRow>& rows, const std::string& path) {
    write_file(path, rows_to_csv(rows));
}

} // namespace hardcase
