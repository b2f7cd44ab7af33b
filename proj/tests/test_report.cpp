#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <doctest.h>

#include "hardcase/errors.h"
#include "hardcase/report.h"
#include "hardcase/util.h"
#include "support/synthetic.h"

using namespace hardcase;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<VlmExchange> mock_exchanges(const std::vector<Scenario>& scenarios, Backend& backend) {
    std::vector<VlmExchange> out;
    const PromptBundle dummy;
    for (const auto& scenario : scenarios) {
        VlmExchange e;
        e.scenario_id = scenario.scenario_id;
        e.config_fingerprint = "test";
        e.raw_response = backend.respond(dummy, scenario);
        e.status = ExchangeStatus::ok;
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<VlmExchange> noisy_exchanges(const std::vector<Scenario>& scenarios, double p,
                                         std::uint64_t seed) {
    BackendConfig config;
    config.kind = BackendKind::noisy_mock;
    config.noise_p = p;
    config.mock_seed = seed;
    const auto backend = make_backend(config);
    return mock_exchanges(scenarios, *backend);
}

} // namespace

TEST_CASE("evaluate_dataset with the oracle is perfect") {
    const auto scenarios = testsupport::make_scenarios(12, 6, {5, 7});
    BackendConfig config;
    config.kind = BackendKind::oracle_mock;
    const auto backend = make_backend(config);
    const auto outcome =
        evaluate_dataset(scenarios, mock_exchanges(scenarios, *backend), ParseMode::strict, 5);

    CHECK(outcome.failures.empty());
    CHECK(outcome.rows.size() == scenarios.size());
    CHECK(outcome.aggregate.mean_c_index == doctest::Approx(1.0));
    CHECK(outcome.aggregate.mean_tau == doctest::Approx(1.0));
    CHECK(outcome.aggregate.mean_ndcg == doctest::Approx(1.0));
    CHECK(outcome.aggregate.top_k_accuracy == doctest::Approx(100.0));
    CHECK(outcome.scores.size() == scenarios.size());
    for (const auto& s : outcome.scores) CHECK_FALSE(s.refusal());
}

TEST_CASE("an all-refusal backend yields failures, not rows") {
    const auto scenarios = testsupport::make_scenarios(6, 8, {4, 4});
    std::vector<VlmExchange> exchanges;
    for (const auto& scenario : scenarios) {
        VlmExchange e;
        e.scenario_id = scenario.scenario_id;
        e.raw_response = "I'm sorry, I can't assist with that request.";
        e.status = ExchangeStatus::ok;
        exchanges.push_back(std::move(e));
    }
    const auto outcome = evaluate_dataset(scenarios, exchanges, ParseMode::strict, 5);
    CHECK(outcome.rows.empty());
    REQUIRE(outcome.failures.size() == scenarios.size());
    for (const auto& record : outcome.failures)
        CHECK(record.failure.kind == FailureKind::refusal);
    CHECK(outcome.aggregate.n_parse_failures == static_cast<int>(scenarios.size()));
    for (const auto& s : outcome.scores) CHECK(s.refusal());
}

TEST_CASE("rows plus failures cover every scenario") {
    const auto scenarios = testsupport::make_scenarios(10, 4, {5, 5});
    BackendConfig config;
    config.kind = BackendKind::oracle_mock;
    const auto backend = make_backend(config);
    auto exchanges = mock_exchanges(scenarios, *backend);
    exchanges.pop_back();                     // missing exchange
    exchanges[0].raw_response = "garbage";    // malformed
    exchanges[1].status = ExchangeStatus::transport_error;

    const auto outcome = evaluate_dataset(scenarios, exchanges, ParseMode::strict, 5);
    CHECK(outcome.rows.size() + outcome.failures.size() == scenarios.size());
    CHECK(outcome.failures.size() == 3);
    CHECK(outcome.scores.size() == scenarios.size());
}

TEST_CASE("refusal accounting at scale: 446 scored, 5 refused of 451") {
    // one shared roster so a single canned answer fits every scenario
    const auto scenarios = testsupport::make_scenarios(451, 5150, {5, 5});
    const std::string canned = render_response({3, 1, 2, 5, 4}, 6, "r", "s");
    std::vector<VlmExchange> exchanges;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        VlmExchange e;
        e.scenario_id = scenarios[i].scenario_id;
        e.raw_response =
            (i % 90 == 7) ? "I'm sorry, I can't assist with that request." : canned;
        e.status = ExchangeStatus::ok;
        exchanges.push_back(std::move(e));
    }
    const auto outcome = evaluate_dataset(scenarios, exchanges, ParseMode::strict, 5);
    CHECK(outcome.rows.size() == 446);
    CHECK(outcome.failures.size() == 5);
    for (const auto& record : outcome.failures)
        CHECK(record.failure.kind == FailureKind::refusal);

    const ScoreHistogram hist = score_histogram(outcome.scores);
    std::int64_t bar_sum = 0;
    for (std::int64_t c : hist.bars) bar_sum += c;
    CHECK(bar_sum == 446);
    CHECK(hist.refusal_count == 5);
}

TEST_CASE("noise degrades every aggregate monotonically") {
    const auto scenarios = testsupport::make_scenarios(200, 777, {6, 8});
    const auto mild =
        evaluate_dataset(scenarios, noisy_exchanges(scenarios, 0.25, 99), ParseMode::strict, 5);
    const auto heavy =
        evaluate_dataset(scenarios, noisy_exchanges(scenarios, 0.5, 99), ParseMode::strict, 5);
    CHECK(mild.aggregate.mean_c_index > heavy.aggregate.mean_c_index);
    CHECK(mild.aggregate.mean_tau > heavy.aggregate.mean_tau);
    CHECK(mild.aggregate.mean_ndcg > heavy.aggregate.mean_ndcg);
    CHECK(mild.aggregate.top_k_accuracy > heavy.aggregate.top_k_accuracy);
}

TEST_CASE("report JSON is canonical and reloads structurally intact") {
    const auto scenarios = testsupport::make_scenarios(8, 21, {5, 6});
    BackendConfig config;
    config.kind = BackendKind::oracle_mock;
    const auto backend = make_backend(config);
    const auto outcome =
        evaluate_dataset(scenarios, mock_exchanges(scenarios, *backend), ParseMode::strict, 5);

    const json cfg = {{"fingerprint", "test"}, {"k", 5}};
    const json report = report_to_json(cfg, outcome);
    const std::string once = canonical_dump(report);
    const std::string twice = canonical_dump(report_to_json(cfg, outcome));
    CHECK(once == twice);

    const fs::path path =
        fs::temp_directory_path() / ("hardcase_report_" + std::to_string(::getpid()) + ".json");
    emit_json(report, path.string());
    const json reloaded = json::parse(read_file(path.string()));
    CHECK(reloaded["aggregate"]["n_samples"] == 8);
    CHECK(reloaded["rows"].size() == 8);
    CHECK(reloaded["failures"].empty());
    fs::remove(path);
}

TEST_CASE("canonical_dump snaps floats to 6 significant digits") {
    json doc;
    doc["value"] = 0.12345678901234;
    doc["nested"] = json::array({json{{"x", 1.0 / 3.0}}});
    doc["int"] = 42;
    const std::string text = canonical_dump(doc);
    CHECK(text.find("0.123457") != std::string::npos);
    CHECK(text.find("0.333333") != std::string::npos);
    CHECK(text.find("42") != std::string::npos);
}

TEST_CASE("CSV output") {
    MetricReportRow row;
    row.scenario_id = "sc1";
    row.c_index = 0.5704;
    row.kendall_tau = 0.1404;
    row.ndcg = 0.8373;
    row.top_k_hit = true;
    row.n_agents = 6;
    MetricReportRow na = row;
    na.scenario_id = "sc2";
    na.top_k_hit = std::nullopt;
    na.n_agents = 3;

    const std::string csv = rows_to_csv({row, na});
    const auto lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == 3); // header + 2 rows
    // display columns mirror the reported 3-decimal precision
    CHECK(csv.find("0.570,0.140,0.837") != std::string::npos);
    CHECK(csv.find(",na,") != std::string::npos);
    CHECK(csv.rfind("scenario_id,", 0) == 0);
}

TEST_CASE("fig3 plot data") {
    const auto scenarios = testsupport::make_scenarios(10, 3, {5, 5});
    std::vector<GtSample> samples;
    for (const auto& scenario : scenarios) {
        GtRanking gt = gt_hardness_ranking(scenario);
        samples.push_back({std::move(gt.ranking), std::move(gt.relevance)});
    }
    const auto dists = run_trials(samples, 500, 5, 12);
    std::map<MetricName, std::pair<TrialDistribution, BaselineSummary>> baselines;
    for (const auto& [name, dist] : dists)
        baselines.emplace(name, std::make_pair(dist, summarize(dist, 20)));

    AggregateReport perfect;
    perfect.mean_c_index = 1.0;
    perfect.mean_tau = 1.0;
    perfect.mean_ndcg = 1.0;
    perfect.top_k_accuracy = 100.0;
    perfect.n_samples = 10;
    perfect.n_applicable = 10;

    SUBCASE("observed above every trial annotates 100%") {
        const json doc = fig3_data(perfect, baselines);
        CHECK(doc["metrics"]["c_index"]["observed"] == 1.0);
        CHECK(doc["metrics"]["c_index"]["cumulative_probability"] == 100.0);
        CHECK(doc["metrics"]["kendall_tau"]["cumulative_probability"] == 100.0);
        // n == k makes every random trial hit 100% too: nothing surpassed
        CHECK(doc["metrics"]["top_k_accuracy"]["cumulative_probability"] == 0.0);
    }
    SUBCASE("the baseline mean sits near the middle of its own distribution") {
        AggregateReport at_mean = perfect;
        at_mean.mean_c_index = baselines.at(MetricName::c_index).second.mean;
        const json doc = fig3_data(at_mean, baselines);
        const double p = doc["metrics"]["c_index"]["cumulative_probability"].get<double>();
        CHECK(p > 20.0);
        CHECK(p < 80.0);
    }
    SUBCASE("the document validates against its own schema") {
        const json doc = fig3_data(perfect, baselines);
        CHECK_NOTHROW(validate_fig3_data(doc));
        json broken = doc;
        broken["metrics"].erase("ndcg");
        CHECK_THROWS_AS(validate_fig3_data(broken), DataError);
        json bad_p = doc;
        bad_p["metrics"]["ndcg"]["cumulative_probability"] = 140.0;
        CHECK_THROWS_AS(validate_fig3_data(bad_p), DataError);
    }
    SUBCASE("baseline JSON round trip feeds fig3 identically") {
        const json baseline_doc = baselines_to_json(baselines, 5, 10);
        const auto reloaded = baselines_from_json(baseline_doc);
        const json a = fig3_data(perfect, baselines);
        const json b = fig3_data(perfect, reloaded);
        CHECK(canonical_dump(a) == canonical_dump(b));
    }
}
