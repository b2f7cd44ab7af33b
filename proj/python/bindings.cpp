#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hardcase/baseline.h"
#include "hardcase/errors.h"
#include "hardcase/metrics.h"
#include "hardcase/parser.h"
#include "hardcase/prompt.h"
#include "hardcase/report.h"
#include "hardcase/scenario.h"
#include "hardcase/selection.h"
#include "hardcase/vlm.h"

namespace py = pybind11;
using namespace hardcase;

namespace {

// Manifests and plot documents cross the boundary as plain dicts via JSON text.
py::object json_to_py(const nlohmann::json& doc) {
    py::module_ json_mod = py::module_::import("json");
    return json_mod.attr("loads")(doc.dump());
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "VLM hard-case detection harness";

    py::register_exception<UsageError>(m, "UsageError");
    py::register_exception<DataError>(m, "DataError");
    py::register_exception<BackendError>(m, "BackendError");

    // --- scenario model -----------------------------------------------------
    py::class_<Point>(m, "Point")
        .def(py::init<double, double>(), py::arg("x") = 0.0, py::arg("y") = 0.0)
        .def_readwrite("x", &Point::x)
        .def_readwrite("y", &Point::y);

    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init([](const std::vector<std::pair<double, double>>& pts) {
                 Trajectory t;
                 for (const auto& [x, y] : pts) t.points.push_back({x, y});
                 return t;
             }),
             py::arg("points") = std::vector<std::pair<double, double>>{})
        .def_readwrite("points", &Trajectory::points);

    py::enum_<AgentType>(m, "AgentType")
        .value("car", AgentType::car)
        .value("truck", AgentType::truck)
        .value("pedestrian", AgentType::pedestrian)
        .value("cyclist", AgentType::cyclist)
        .value("motorcycle", AgentType::motorcycle)
        .value("other", AgentType::other);

    py::class_<PixelBox>(m, "PixelBox")
        .def(py::init<double, double, double, double>(), py::arg("x_min"), py::arg("y_min"),
             py::arg("x_max"), py::arg("y_max"))
        .def_readwrite("x_min", &PixelBox::x_min)
        .def_readwrite("y_min", &PixelBox::y_min)
        .def_readwrite("x_max", &PixelBox::x_max)
        .def_readwrite("y_max", &PixelBox::y_max);

    py::class_<AgentRecord>(m, "AgentRecord")
        .def(py::init<>())
        .def_readwrite("agent_id", &AgentRecord::agent_id)
        .def_readwrite("agent_type", &AgentRecord::agent_type)
        .def_readwrite("pixel_box", &AgentRecord::pixel_box)
        .def_readwrite("modes", &AgentRecord::modes)
        .def_readwrite("ground_truth", &AgentRecord::ground_truth)
        .def_readwrite("validity_mask", &AgentRecord::validity_mask);

    py::class_<FrameRef>(m, "FrameRef")
        .def(py::init<>())
        .def_readwrite("image_path", &FrameRef::image_path)
        .def_readwrite("image_path_cam", &FrameRef::image_path_cam)
        .def_readwrite("image_path_bev", &FrameRef::image_path_bev)
        .def_readwrite("timestamp_s", &FrameRef::timestamp_s)
        .def_readwrite("description", &FrameRef::description);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("scenario_id", &Scenario::scenario_id)
        .def_readwrite("horizon_steps", &Scenario::horizon_steps)
        .def_readwrite("frames", &Scenario::frames)
        .def_readwrite("agents", &Scenario::agents)
        .def("agent_ids", &Scenario::agent_ids);

    py::class_<GtRanking>(m, "GtRanking")
        .def_readonly("ranking", &GtRanking::ranking)
        .def_readonly("relevance", &GtRanking::relevance);

    m.def("load_scenarios", &load_scenarios, py::arg("path"));
    m.def("ade", &ade, py::arg("mode"), py::arg("gt"), py::arg("mask") = py::none());
    m.def("fde", &fde, py::arg("mode"), py::arg("gt"), py::arg("mask") = py::none());
    m.def("min_ade", &min_ade, py::arg("agent"));
    m.def("min_fde", &min_fde, py::arg("agent"));
    m.def("gt_hardness_ranking", &gt_hardness_ranking, py::arg("scenario"));

    // --- rank metrics -------------------------------------------------------
    py::class_<MetricReportRow>(m, "MetricReportRow")
        .def_readonly("scenario_id", &MetricReportRow::scenario_id)
        .def_readonly("c_index", &MetricReportRow::c_index)
        .def_readonly("kendall_tau", &MetricReportRow::kendall_tau)
        .def_readonly("ndcg", &MetricReportRow::ndcg)
        .def_readonly("top_k_hit", &MetricReportRow::top_k_hit)
        .def_readonly("n_agents", &MetricReportRow::n_agents);

    py::class_<AggregateReport>(m, "AggregateReport")
        .def_readonly("mean_c_index", &AggregateReport::mean_c_index)
        .def_readonly("mean_tau", &AggregateReport::mean_tau)
        .def_readonly("mean_ndcg", &AggregateReport::mean_ndcg)
        .def_readonly("top_k_accuracy", &AggregateReport::top_k_accuracy)
        .def_readonly("n_samples", &AggregateReport::n_samples)
        .def_readonly("n_applicable", &AggregateReport::n_applicable)
        .def_readonly("n_parse_failures", &AggregateReport::n_parse_failures);

    m.def("c_index", &c_index, py::arg("gt"), py::arg("cand"), py::arg("relevance"));
    m.def("kendall_tau", &kendall_tau, py::arg("gt"), py::arg("cand"), py::arg("relevance"));
    m.def("top_k_hit", &top_k_hit, py::arg("gt"), py::arg("cand"), py::arg("k"));
    m.def("ndcg", &ndcg, py::arg("cand"), py::arg("relevance"));
    m.def("evaluate_sample", &evaluate_sample, py::arg("scenario_id"), py::arg("gt"),
          py::arg("cand"), py::arg("relevance"), py::arg("k"));
    m.def("aggregate", &aggregate, py::arg("rows"), py::arg("parse_failures") = 0);

    // --- Monte Carlo baseline -----------------------------------------------
    py::enum_<MetricName>(m, "MetricName")
        .value("c_index", MetricName::c_index)
        .value("ndcg", MetricName::ndcg)
        .value("top_k_accuracy", MetricName::top_k_accuracy)
        .value("kendall_tau", MetricName::kendall_tau);

    py::class_<GtSample>(m, "GtSample")
        .def(py::init<Ranking, RelevanceMap>(), py::arg("gt"), py::arg("relevance"))
        .def_readwrite("gt", &GtSample::gt)
        .def_readwrite("relevance", &GtSample::relevance);

    py::class_<TrialDistribution>(m, "TrialDistribution")
        .def_readonly("metric", &TrialDistribution::metric)
        .def_readonly("values", &TrialDistribution::values)
        .def_readonly("n_trials", &TrialDistribution::n_trials)
        .def_readonly("master_seed", &TrialDistribution::master_seed);

    py::class_<HistogramBin>(m, "HistogramBin")
        .def_readonly("lo", &HistogramBin::lo)
        .def_readonly("hi", &HistogramBin::hi)
        .def_readonly("count", &HistogramBin::count);

    py::class_<BaselineSummary>(m, "BaselineSummary")
        .def_readonly("mean", &BaselineSummary::mean)
        .def_readonly("bins", &BaselineSummary::bins)
        .def("percentile_of", &BaselineSummary::percentile_of, py::arg("value"));

    m.def("run_trials", &run_trials, py::arg("samples"), py::arg("n_trials"), py::arg("k"),
          py::arg("master_seed"), py::arg("n_threads") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("cumulative_probability", &cumulative_probability, py::arg("dist"), py::arg("observed"));
    m.def("summarize", &summarize, py::arg("dist"), py::arg("n_bins"));

    // --- prompt assembly ----------------------------------------------------
    py::enum_<InputMode>(m, "InputMode")
        .value("cam", InputMode::cam)
        .value("bev", InputMode::bev)
        .value("cam_bev", InputMode::cam_bev);

    py::class_<PromptConfig>(m, "PromptConfig")
        .def(py::init<>())
        .def_static("from_ablation", &PromptConfig::from_ablation, py::arg("id"))
        .def_readwrite("input_mode", &PromptConfig::input_mode)
        .def_readwrite("include_pos", &PromptConfig::include_pos)
        .def_readwrite("include_type", &PromptConfig::include_type)
        .def_readwrite("n_frames", &PromptConfig::n_frames)
        .def_readwrite("ablation_id", &PromptConfig::ablation_id);

    py::class_<FewShotExample>(m, "FewShotExample")
        .def(py::init<>())
        .def_readwrite("images", &FewShotExample::images)
        .def_readwrite("user_text", &FewShotExample::user_text)
        .def_readwrite("assistant_text", &FewShotExample::assistant_text);

    py::class_<UserTurn>(m, "UserTurn")
        .def_readonly("text", &UserTurn::text)
        .def_readonly("images", &UserTurn::images);

    py::class_<PromptBundle>(m, "PromptBundle")
        .def_readonly("system_text", &PromptBundle::system_text)
        .def_readonly("fewshot_turns", &PromptBundle::fewshot_turns)
        .def_readonly("user_turn", &PromptBundle::user_turn);

    py::class_<PromptTemplates>(m, "PromptTemplates")
        .def_static("load", &PromptTemplates::load, py::arg("dir"))
        .def_readwrite("system_template", &PromptTemplates::system_template)
        .def_readwrite("user_template", &PromptTemplates::user_template);

    m.def("build_system_prompt", &build_system_prompt, py::arg("config"), py::arg("templates"));
    m.def("build_user_message", &build_user_message, py::arg("scenario"), py::arg("config"),
          py::arg("templates"));
    m.def("assemble", &assemble, py::arg("scenario"), py::arg("config"), py::arg("fewshots"),
          py::arg("templates"));
    m.def("load_fewshots", &load_fewshots, py::arg("dir"));

    // --- response parsing ---------------------------------------------------
    py::enum_<ParseMode>(m, "ParseMode")
        .value("strict", ParseMode::strict)
        .value("lenient", ParseMode::lenient);

    py::enum_<FailureKind>(m, "FailureKind")
        .value("refusal", FailureKind::refusal)
        .value("malformed_ranking", FailureKind::malformed_ranking)
        .value("incomplete_ranking", FailureKind::incomplete_ranking)
        .value("unknown_agent_id", FailureKind::unknown_agent_id)
        .value("score_missing", FailureKind::score_missing)
        .value("score_out_of_range", FailureKind::score_out_of_range);

    py::class_<ParsedResponse>(m, "ParsedResponse")
        .def_readonly("ranking", &ParsedResponse::ranking)
        .def_readonly("score", &ParsedResponse::score)
        .def_readonly("ranking_explanation", &ParsedResponse::ranking_explanation)
        .def_readonly("score_explanation", &ParsedResponse::score_explanation)
        .def_readonly("leniency_applied", &ParsedResponse::leniency_applied);

    py::class_<ParseFailure>(m, "ParseFailure")
        .def_readonly("kind", &ParseFailure::kind)
        .def_readonly("detail", &ParseFailure::detail)
        .def_readonly("raw_excerpt", &ParseFailure::raw_excerpt);

    py::class_<RefusalPhrases>(m, "RefusalPhrases")
        .def_static("defaults", &RefusalPhrases::defaults)
        .def_static("load", &RefusalPhrases::load, py::arg("path"))
        .def_readwrite("phrases", &RefusalPhrases::phrases);

    m.def("detect_refusal", &detect_refusal, py::arg("text"),
          py::arg("phrases") = RefusalPhrases::defaults());
    m.def("parse_response", &parse_response, py::arg("text"), py::arg("expected_ids"),
          py::arg("mode") = ParseMode::strict, py::arg("phrases") = RefusalPhrases::defaults());
    m.def("render_response", &render_response, py::arg("ranking"), py::arg("score"),
          py::arg("ranking_explanation") = "", py::arg("score_explanation") = "");

    // --- VLM client ---------------------------------------------------------
    py::enum_<BackendKind>(m, "BackendKind")
        .value("remote", BackendKind::remote)
        .value("oracle_mock", BackendKind::oracle_mock)
        .value("noisy_mock", BackendKind::noisy_mock)
        .value("scripted_mock", BackendKind::scripted_mock);

    py::enum_<ExchangeStatus>(m, "ExchangeStatus")
        .value("ok", ExchangeStatus::ok)
        .value("refusal_suspected", ExchangeStatus::refusal_suspected)
        .value("transport_error", ExchangeStatus::transport_error);

    py::class_<BackendConfig>(m, "BackendConfig")
        .def(py::init<>())
        .def_readwrite("kind", &BackendConfig::kind)
        .def_readwrite("endpoint_url", &BackendConfig::endpoint_url)
        .def_readwrite("model_name", &BackendConfig::model_name)
        .def_readwrite("api_key_env", &BackendConfig::api_key_env)
        .def_readwrite("timeout_s", &BackendConfig::timeout_s)
        .def_readwrite("max_retries", &BackendConfig::max_retries)
        .def_readwrite("max_in_flight", &BackendConfig::max_in_flight)
        .def_readwrite("noise_p", &BackendConfig::noise_p)
        .def_readwrite("mock_seed", &BackendConfig::mock_seed)
        .def_readwrite("script_path", &BackendConfig::script_path)
        .def_readwrite("retry_backoff_s", &BackendConfig::retry_backoff_s);

    py::class_<VlmExchange>(m, "VlmExchange")
        .def(py::init<>())
        .def_readwrite("scenario_id", &VlmExchange::scenario_id)
        .def_readwrite("config_fingerprint", &VlmExchange::config_fingerprint)
        .def_readwrite("request_summary", &VlmExchange::request_summary)
        .def_readwrite("raw_response", &VlmExchange::raw_response)
        .def_readwrite("status", &VlmExchange::status)
        .def_readwrite("latency_s", &VlmExchange::latency_s)
        .def_readwrite("timestamp_utc", &VlmExchange::timestamp_utc);

    py::class_<Backend>(m, "Backend")
        .def("respond", &Backend::respond, py::arg("bundle"), py::arg("scenario"))
        .def("identity", &Backend::identity);

    m.def("make_backend", &make_backend, py::arg("config"));
    m.def("config_fingerprint", &config_fingerprint, py::arg("config"),
          py::arg("backend_identity"), py::arg("fewshots"));
    m.def(
        "batch_query",
        [](const std::vector<Scenario>& scenarios, const PromptConfig& config,
           const std::vector<FewShotExample>& fewshots, const PromptTemplates& templates,
           Backend& backend, const std::string& cache_path, int max_in_flight) {
            py::gil_scoped_release release;
            return batch_query(scenarios, config, fewshots, templates, backend, cache_path,
                               max_in_flight);
        },
        py::arg("scenarios"), py::arg("config"), py::arg("fewshots"), py::arg("templates"),
        py::arg("backend"), py::arg("cache_path"), py::arg("max_in_flight") = 4);

    // --- selection ----------------------------------------------------------
    py::class_<SceneScore>(m, "SceneScore")
        .def(py::init<std::string, std::optional<int>, std::string>(), py::arg("scenario_id"),
             py::arg("score") = py::none(), py::arg("explanation") = "")
        .def_readwrite("scenario_id", &SceneScore::scenario_id)
        .def_readwrite("score", &SceneScore::score)
        .def_readwrite("explanation", &SceneScore::explanation)
        .def("refusal", &SceneScore::refusal);

    py::class_<Manifest>(m, "Manifest")
        .def_readonly("name", &Manifest::name)
        .def_readonly("method", &Manifest::method)
        .def_readonly("band_lo", &Manifest::band_lo)
        .def_readonly("band_hi", &Manifest::band_hi)
        .def_readonly("count", &Manifest::count)
        .def_readonly("seed", &Manifest::seed)
        .def_readonly("shortfall", &Manifest::shortfall)
        .def_readonly("scenario_ids", &Manifest::scenario_ids);

    py::class_<ScoreHistogram>(m, "ScoreHistogram")
        .def_readonly("bars", &ScoreHistogram::bars)
        .def_readonly("refusal_count", &ScoreHistogram::refusal_count)
        .def("total", &ScoreHistogram::total);

    m.def("select_by_difficulty", &select_by_difficulty, py::arg("scores"), py::arg("band_lo"),
          py::arg("band_hi"), py::arg("count"), py::arg("seed"));
    m.def("select_random", &select_random, py::arg("scores"), py::arg("count"), py::arg("seed"));
    m.def("score_histogram", &score_histogram, py::arg("scores"));
    m.def("load_scores", &load_scores, py::arg("path"));

    // --- report -------------------------------------------------------------
    py::class_<FailureRecord>(m, "FailureRecord")
        .def_readonly("scenario_id", &FailureRecord::scenario_id)
        .def_readonly("failure", &FailureRecord::failure);

    py::class_<EvalOutcome>(m, "EvalOutcome")
        .def_readonly("rows", &EvalOutcome::rows)
        .def_readonly("aggregate", &EvalOutcome::aggregate)
        .def_readonly("failures", &EvalOutcome::failures)
        .def_readonly("scores", &EvalOutcome::scores);

    m.def("evaluate_dataset", &evaluate_dataset, py::arg("scenarios"), py::arg("exchanges"),
          py::arg("mode") = ParseMode::strict, py::arg("k") = 5,
          py::arg("phrases") = RefusalPhrases::defaults());
    m.def(
        "fig3_data",
        [](const AggregateReport& aggregate,
           const std::map<MetricName, std::pair<TrialDistribution, BaselineSummary>>& baselines) {
            return json_to_py(fig3_data(aggregate, baselines));
        },
        py::arg("aggregate"), py::arg("baselines"));
    m.def(
        "manifest_to_dict",
        [](const Manifest& manifest) { return json_to_py(manifest_to_json(manifest)); },
        py::arg("manifest"));
}
