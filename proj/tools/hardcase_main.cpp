// Batch harness for rating how well a vision-language model spots
// hard-to-predict agents and hard driving scenes.
//
// Pipeline: validate -> gt-rank -> query -> eval -> baseline -> fig3,
// plus select/hist for score-based training-subset manifests.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hardcase/baseline.h"
#include "hardcase/errors.h"
#include "hardcase/metrics.h"
#include "hardcase/parser.h"
#include "hardcase/prompt.h"
#include "hardcase/report.h"
#include "hardcase/scenario.h"
#include "hardcase/selection.h"
#include "hardcase/util.h"
#include "hardcase/vlm.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hardcase;

namespace {

// Config-file overlay: flags win, then --config JSON, then built-in defaults.
class ConfigOverlay {
public:
    void load(const std::string& path) {
        if (path.empty()) return;
        try {
            doc_ = json::parse(read_file(path));
        } catch (const std::exception& e) {
            throw UsageError("cannot load --config " + path + ": " + e.what());
        }
        if (!doc_.is_object()) throw UsageError("--config must hold a JSON object");
    }

    template <class T>
    void fill(const CLI::Option* opt, T& value, const std::string& key) const {
        if (opt != nullptr && opt->count() > 0) return;
        if (doc_.is_object() && doc_.contains(key)) {
            try {
                value = doc_[key].get<T>();
            } catch (const json::exception& e) {
                throw UsageError("config key '" + key + "': " + e.what());
            }
        }
    }

    bool has(const std::string& key) const { return doc_.is_object() && doc_.contains(key); }
    const json& raw() const { return doc_; }

private:
    json doc_;
};

RefusalPhrases refusals_from(const std::string& path) {
    return path.empty() ? RefusalPhrases::defaults() : RefusalPhrases::load(path);
}

void write_sibling_text_manifest(const Manifest& manifest, const std::string& json_path) {
    fs::path txt(json_path);
    txt.replace_extension(".txt");
    write_file(txt.string(), manifest_to_text(manifest));
}

struct QueryArgs {
    std::string data_dir, backend = "oracle_mock", fewshots_dir, cache_path;
    std::string templates_dir = "data/templates";
    std::string endpoint, model, api_key_env = "HARDCASE_VLM_API_KEY", script, config_file;
    int ablation = 0;
    std::string input_mode = "cam_bev";
    bool include_pos = false;
    bool include_type = true;
    int frames = 3;
    int max_in_flight = 4;
    double timeout = 60.0;
    int retries = 3;
    double noise_p = 0.0;
    std::uint64_t seed = 0;
};

int run_query(QueryArgs& args, const CLI::App& sub) {
    ConfigOverlay overlay;
    overlay.load(args.config_file);
    overlay.fill(sub.get_option_no_throw("--backend"), args.backend, "backend");
    overlay.fill(sub.get_option_no_throw("--ablation"), args.ablation, "ablation");
    overlay.fill(sub.get_option_no_throw("--input-mode"), args.input_mode, "input_mode");
    overlay.fill(sub.get_option_no_throw("--include-pos"), args.include_pos, "include_pos");
    overlay.fill(sub.get_option_no_throw("--include-type"), args.include_type, "include_type");
    overlay.fill(sub.get_option_no_throw("--frames"), args.frames, "frames");
    overlay.fill(sub.get_option_no_throw("--fewshots"), args.fewshots_dir, "fewshots");
    overlay.fill(sub.get_option_no_throw("--templates"), args.templates_dir, "templates");
    overlay.fill(sub.get_option_no_throw("--endpoint"), args.endpoint, "endpoint");
    overlay.fill(sub.get_option_no_throw("--model"), args.model, "model");
    overlay.fill(sub.get_option_no_throw("--api-key-env"), args.api_key_env, "api_key_env");
    overlay.fill(sub.get_option_no_throw("--max-in-flight"), args.max_in_flight, "max_in_flight");
    overlay.fill(sub.get_option_no_throw("--timeout"), args.timeout, "timeout");
    overlay.fill(sub.get_option_no_throw("--retries"), args.retries, "retries");
    overlay.fill(sub.get_option_no_throw("--noise-p"), args.noise_p, "noise_p");
    overlay.fill(sub.get_option_no_throw("--seed"), args.seed, "seed");
    overlay.fill(sub.get_option_no_throw("--script"), args.script, "script");

    PromptConfig config;
    const bool ablation_set = sub.count("--ablation") > 0 || overlay.has("ablation");
    if (ablation_set) {
        config = PromptConfig::from_ablation(args.ablation);
    } else {
        config.input_mode = input_mode_from_string(args.input_mode);
        config.include_pos = args.include_pos;
        config.include_type = args.include_type;
    }
    config.n_frames = args.frames;

    BackendConfig backend_config;
    backend_config.kind = backend_kind_from_string(args.backend);
    backend_config.endpoint_url = args.endpoint;
    backend_config.model_name = args.model;
    backend_config.api_key_env = args.api_key_env;
    backend_config.timeout_s = args.timeout;
    backend_config.max_retries = args.retries;
    backend_config.max_in_flight = args.max_in_flight;
    backend_config.noise_p = args.noise_p;
    backend_config.mock_seed = args.seed;
    backend_config.script_path = args.script;
    if (overlay.has("options")) backend_config.options = overlay.raw()["options"];

    const auto scenarios = load_scenarios(args.data_dir);
    const auto templates = PromptTemplates::load(args.templates_dir);
    std::vector<FewShotExample> fewshots;
    if (!args.fewshots_dir.empty()) fewshots = load_fewshots(args.fewshots_dir);

    const auto backend = make_backend(backend_config);
    const auto exchanges = batch_query(scenarios, config, fewshots, templates, *backend,
                                       args.cache_path, backend_config.max_in_flight);

    int transport_errors = 0;
    for (const auto& e : exchanges)
        if (e.status == ExchangeStatus::transport_error) ++transport_errors;
    std::cout << exchanges.size() << " exchanges in " << args.cache_path << " (fingerprint "
              << config_fingerprint(config, backend->identity(), fewshots) << ")\n";
    if (transport_errors > 0) {
        std::cerr << "ERROR backend: " << transport_errors
                  << " scenario(s) failed after retries; rerun to resume from the cache\n";
        return 3;
    }
    return 0;
}

struct EvalArgs {
    std::string data_dir, cache_path, mode = "strict", out, csv, scores, fingerprint, refusals;
    int k = 5;
};

int run_eval(const EvalArgs& args) {
    const auto scenarios = load_scenarios(args.data_dir);
    const auto entries = read_cache(args.cache_path);
    if (entries.empty()) throw DataError("cache is empty or unreadable: " + args.cache_path);

    std::string fingerprint = args.fingerprint;
    if (fingerprint.empty()) {
        std::vector<std::string> seen;
        for (const auto& entry : entries) {
            if (std::find(seen.begin(), seen.end(), entry.exchange.config_fingerprint) ==
                seen.end())
                seen.push_back(entry.exchange.config_fingerprint);
        }
        if (seen.size() > 1) {
            std::string all;
            for (const auto& f : seen) all += " " + f;
            throw UsageError("cache holds several configurations; pick one with --fingerprint:" +
                             all);
        }
        fingerprint = seen.front();
    }

    std::vector<VlmExchange> exchanges;
    json meta;
    for (const auto& entry : entries) {
        if (entry.exchange.config_fingerprint != fingerprint) continue;
        if (meta.is_null() && !entry.meta.is_null()) meta = entry.meta;
        exchanges.push_back(entry.exchange);
    }
    if (exchanges.empty())
        throw DataError("no cache entries with fingerprint " + fingerprint);

    const ParseMode mode = parse_mode_from_string(args.mode);
    const auto outcome =
        evaluate_dataset(scenarios, exchanges, mode, args.k, refusals_from(args.refusals));

    json config;
    config["fingerprint"] = fingerprint;
    config["parse_mode"] = to_string(mode);
    config["k"] = args.k;
    if (!meta.is_null()) {
        if (meta.contains("config")) config["prompt"] = meta["config"];
        if (meta.contains("backend")) config["backend"] = meta["backend"];
    }

    emit_json(report_to_json(config, outcome), args.out);
    if (!args.csv.empty()) emit_csv(outcome.rows, args.csv);
    if (!args.scores.empty()) emit_json(scores_to_json(outcome.scores), args.scores);

    std::cout << outcome.rows.size() << " scenarios evaluated, " << outcome.failures.size()
              << " failures -> " << args.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"VLM hard-case detection harness"};
    app.require_subcommand(1);

    // validate
    auto* validate = app.add_subcommand("validate", "Load and schema-check scenario files");
    std::string validate_dir;
    validate->add_option("data_dir", validate_dir, "Scenario file or directory")->required();

    // gt-rank
    auto* gtrank = app.add_subcommand(
        "gt-rank", "Emit ground-truth hardness rankings and minADE relevance maps");
    std::string gtrank_dir, gtrank_out;
    gtrank->add_option("data_dir", gtrank_dir, "Scenario file or directory")->required();
    gtrank->add_option("-o,--output", gtrank_out, "Output JSON path")->required();

    // query
    auto* query_cmd = app.add_subcommand("query", "Produce or extend the VLM exchange cache");
    QueryArgs qa;
    query_cmd->add_option("data_dir", qa.data_dir, "Scenario file or directory")->required();
    query_cmd->add_option("--backend", qa.backend,
                          "remote|oracle_mock|noisy_mock|scripted_mock");
    query_cmd->add_option("--ablation", qa.ablation, "Preset prompt configuration id (1-7)")
        ->check(CLI::Range(1, 7));
    query_cmd->add_option("--input-mode", qa.input_mode, "cam|bev|cam_bev (ignored with --ablation)");
    query_cmd->add_flag("--include-pos,!--no-include-pos", qa.include_pos,
                        "Append pixel-box positions to the roster text");
    query_cmd->add_flag("--include-type,!--no-include-type", qa.include_type,
                        "Name agent types in the roster text");
    query_cmd->add_option("--frames", qa.frames, "Frames per query");
    query_cmd->add_option("--fewshots", qa.fewshots_dir, "Directory of few-shot JSON files");
    query_cmd->add_option("--cache", qa.cache_path, "JSONL exchange cache")->required();
    query_cmd->add_option("--templates", qa.templates_dir, "Prompt template directory");
    query_cmd->add_option("--endpoint", qa.endpoint, "Chat-completion endpoint URL (remote)");
    query_cmd->add_option("--model", qa.model, "Model name (remote)");
    query_cmd->add_option("--api-key-env", qa.api_key_env,
                          "Environment variable holding the API key");
    query_cmd->add_option("--max-in-flight", qa.max_in_flight, "Concurrent request bound");
    query_cmd->add_option("--timeout", qa.timeout, "Per-request timeout in seconds");
    query_cmd->add_option("--retries", qa.retries, "Retries on transport failures");
    query_cmd->add_option("--noise-p", qa.noise_p, "Adjacent-swap rate for noisy_mock");
    query_cmd->add_option("--seed", qa.seed, "Mock backend seed");
    query_cmd->add_option("--script", qa.script, "Response script for scripted_mock");
    query_cmd->add_option("--config", qa.config_file, "JSON config file (flags take precedence)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score cached exchanges against ground truth");
    EvalArgs ea;
    eval_cmd->add_option("data_dir", ea.data_dir, "Scenario file or directory")->required();
    eval_cmd->add_option("--cache", ea.cache_path, "JSONL exchange cache")->required();
    eval_cmd->add_option("--mode", ea.mode, "strict|lenient response parsing");
    eval_cmd->add_option("-k", ea.k, "Top-K prefix size");
    eval_cmd->add_option("-o,--output", ea.out, "Report JSON path")->required();
    eval_cmd->add_option("--csv", ea.csv, "Optional per-scenario CSV path");
    eval_cmd->add_option("--scores", ea.scores, "Optional per-scene difficulty scores JSON");
    eval_cmd->add_option("--fingerprint", ea.fingerprint,
                         "Cache fingerprint to evaluate (needed with mixed caches)");
    eval_cmd->add_option("--refusals", ea.refusals, "Refusal phrase list file");

    // baseline
    auto* base_cmd =
        app.add_subcommand("baseline", "Monte Carlo random-ordering null distributions");
    std::string base_dir, base_out, base_config;
    int base_trials = 10000, base_k = 5, base_bins = 30;
    std::uint64_t base_seed = 0;
    base_cmd->add_option("data_dir", base_dir, "Scenario file or directory")->required();
    auto* base_trials_opt = base_cmd->add_option("--trials", base_trials, "Random trials to run");
    base_cmd->add_option("--seed", base_seed, "Master seed")->required();
    auto* base_k_opt = base_cmd->add_option("-k", base_k, "Top-K prefix size");
    auto* base_bins_opt = base_cmd->add_option("--bins", base_bins, "Histogram bins");
    base_cmd->add_option("-o,--output", base_out, "Baseline JSON path")->required();
    base_cmd->add_option("--config", base_config, "JSON config file (flags take precedence)");

    // fig3
    auto* fig3_cmd = app.add_subcommand(
        "fig3", "Join an evaluation report with a baseline into plot-ready data");
    std::string fig3_report, fig3_baseline, fig3_out;
    fig3_cmd->add_option("--report", fig3_report, "Report JSON from eval")->required();
    fig3_cmd->add_option("--baseline", fig3_baseline, "Baseline JSON from baseline")->required();
    fig3_cmd->add_option("-o,--output", fig3_out, "Plot-data JSON path")->required();

    // select
    auto* select_cmd =
        app.add_subcommand("select", "Build a training-subset manifest from scene scores");
    std::string select_scores, select_out;
    std::vector<int> select_band = {7, 9};
    int select_count = 0;
    std::uint64_t select_seed = 0;
    bool select_random_flag = false;
    select_cmd->add_option("--scores", select_scores, "Scene scores JSON")->required();
    select_cmd->add_option("--band", select_band, "Difficulty band lo hi")->expected(2);
    select_cmd->add_flag("--random", select_random_flag,
                         "Uniform draw from all scenes instead of a difficulty band");
    select_cmd->add_option("--count", select_count, "Manifest size")->required();
    select_cmd->add_option("--seed", select_seed, "Sampling seed")->required();
    select_cmd->add_option("-o,--output", select_out, "Manifest JSON path (a .txt twin is written)")
        ->required();

    // hist
    auto* hist_cmd = app.add_subcommand("hist", "Difficulty-score histogram with refusal count");
    std::string hist_scores, hist_out;
    hist_cmd->add_option("--scores", hist_scores, "Scene scores JSON")->required();
    hist_cmd->add_option("-o,--output", hist_out, "Histogram JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "ERROR usage: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*validate) {
            const auto scenarios = load_scenarios(validate_dir);
            std::cout << scenarios.size() << " scenario(s) valid\n";
            return 0;
        }
        if (*gtrank) {
            const auto scenarios = load_scenarios(gtrank_dir);
            json out = json::array();
            for (const auto& scenario : scenarios) {
                const GtRanking gt = gt_hardness_ranking(scenario);
                json entry;
                entry["scenario_id"] = scenario.scenario_id;
                entry["ranking"] = gt.ranking;
                json relevance;
                for (const auto& [id, value] : gt.relevance)
                    relevance[std::to_string(id)] = value;
                entry["min_ade"] = std::move(relevance);
                out.push_back(std::move(entry));
            }
            emit_json(out, gtrank_out);
            std::cout << out.size() << " ranking(s) -> " << gtrank_out << "\n";
            return 0;
        }
        if (*query_cmd) return run_query(qa, *query_cmd);
        if (*eval_cmd) return run_eval(ea);
        if (*base_cmd) {
            ConfigOverlay overlay;
            overlay.load(base_config);
            overlay.fill(base_trials_opt, base_trials, "trials");
            overlay.fill(base_k_opt, base_k, "k");
            overlay.fill(base_bins_opt, base_bins, "bins");

            const auto scenarios = load_scenarios(base_dir);
            std::vector<GtSample> samples;
            for (const auto& scenario : scenarios) {
                GtRanking gt = gt_hardness_ranking(scenario);
                samples.push_back({std::move(gt.ranking), std::move(gt.relevance)});
            }
            const auto dists = run_trials(samples, base_trials, base_k, base_seed);
            std::map<MetricName, std::pair<TrialDistribution, BaselineSummary>> baselines;
            for (const auto& [name, dist] : dists) {
                BaselineSummary summary = summarize(dist, base_bins);
                baselines.emplace(name, std::make_pair(dist, std::move(summary)));
            }
            emit_json(baselines_to_json(baselines, base_k, static_cast<int>(samples.size())),
                      base_out);
            std::cout << base_trials << " trials over " << samples.size() << " samples -> "
                      << base_out << "\n";
            return 0;
        }
        if (*fig3_cmd) {
            const json report = json::parse(read_file(fig3_report));
            if (!report.contains("aggregate")) throw DataError("report JSON missing 'aggregate'");
            const AggregateReport aggregate = aggregate_from_json(report["aggregate"]);
            const auto baselines = baselines_from_json(json::parse(read_file(fig3_baseline)));
            emit_json(fig3_data(aggregate, baselines), fig3_out);
            std::cout << "plot data -> " << fig3_out << "\n";
            return 0;
        }
        if (*select_cmd) {
            const auto scores = load_scores(select_scores);
            const Manifest manifest =
                select_random_flag
                    ? select_random(scores, select_count, select_seed)
                    : select_by_difficulty(scores, select_band[0], select_band[1], select_count,
                                           select_seed);
            emit_json(manifest_to_json(manifest), select_out);
            write_sibling_text_manifest(manifest, select_out);
            std::cout << manifest.scenario_ids.size() << " scene(s) -> " << select_out
                      << (manifest.shortfall ? " (pool smaller than count)" : "") << "\n";
            return 0;
        }
        if (*hist_cmd) {
            const auto scores = load_scores(hist_scores);
            emit_json(histogram_to_json(score_histogram(scores)), hist_out);
            std::cout << "histogram -> " << hist_out << "\n";
            return 0;
        }
        throw InternalError("no subcommand dispatched");
    } catch (const UsageError& e) {
        std::cerr << "ERROR usage: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "ERROR data: " << e.what() << "\n";
        return 2;
    } catch (const BackendError& e) {
        std::cerr << "ERROR backend: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "ERROR internal: " << e.what() << "\n";
        return 4;
    }
}
