#include "hardcase/baseline.h"

#include <algorithm>
#include <cmath>
#include <thread>

#include "hardcase/errors.h"
#include "hardcase/rng.h"

namespace hardcase {

std::string to_string(MetricName name) {
    switch (name) {
        case MetricName::c_index: return "c_index";
        case MetricName::ndcg: return "ndcg";
        case MetricName::top_k_accuracy: return "top_k_accuracy";
        case MetricName::kendall_tau: return "kendall_tau";
    }
    throw InternalError("unhandled MetricName");
}

MetricName metric_name_from_string(const std::string& s) {
    for (MetricName m : kAllMetrics)
        if (to_string(m) == s) return m;
    throw DataError("unknown metric name '" + s + "'");
}

namespace {

struct TrialAggregates {
    double c_index = 0.0;
    double ndcg = 0.0;
    double top_k_accuracy = 0.0;
    double kendall_tau = 0.0;
};

TrialAggregates run_one_trial(const std::vector<GtSample>& samples, int k, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<MetricReportRow> rows;
    rows.reserve(samples.size());
    Ranking cand;
    for (const auto& sample : samples) {
        cand = sample.gt;
        rng.shuffle(cand);
        rows.push_back(evaluate_sample("", sample.gt, cand, sample.relevance, k));
    }
    const AggregateReport agg = aggregate(rows, 0);
    return {agg.mean_c_index, agg.mean_ndcg, agg.top_k_accuracy, agg.mean_tau};
}

} // namespace

std::map<MetricName, TrialDistribution> run_trials(const std::vector<GtSample>& samples,
                                                   int n_trials, int k,
                                                   std::uint64_t master_seed, int n_threads) {
    if (n_trials < 1) throw UsageError("n_trials must be >= 1");
    if (samples.empty()) throw DataError("run_trials needs at least one sample");

    std::vector<TrialAggregates> per_trial(static_cast<std::size_t>(n_trials));
    if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    n_threads = std::min(n_threads, n_trials);

    auto worker = [&](int begin, int end) {
        for (int t = begin; t < end; ++t)
            per_trial[static_cast<std::size_t>(t)] =
                run_one_trial(samples, k, derive_seed(master_seed, static_cast<std::uint64_t>(t)));
    };

    if (n_threads == 1) {
        worker(0, n_trials);
    } else {
        std::vector<std::thread> threads;
        const int chunk = (n_trials + n_threads - 1) / n_threads;
        for (int i = 0; i < n_threads; ++i) {
            const int begin = i * chunk;
            const int end = std::min(n_trials, begin + chunk);
            if (begin >= end) break;
            threads.emplace_back(worker, begin, end);
        }
        for (auto& th : threads) th.join();
    }

    std::map<MetricName, TrialDistribution> out;
    for (MetricName m : kAllMetrics) {
        TrialDistribution dist;
        dist.metric = m;
        dist.n_trials = n_trials;
        dist.master_seed = master_seed;
        dist.values.reserve(per_trial.size());
        for (const auto& agg : per_trial) {
            switch (m) {
                case MetricName::c_index: dist.values.push_back(agg.c_index); break;
                case MetricName::ndcg: dist.values.push_back(agg.ndcg); break;
                case MetricName::top_k_accuracy: dist.values.push_back(agg.top_k_accuracy); break;
                case MetricName::kendall_tau: dist.values.push_back(agg.kendall_tau); break;
            }
        }
        out.emplace(m, std::move(dist));
    }
    return out;
}

double cumulative_probability(const TrialDistribution& dist, double observed) {
    if (dist.values.empty()) throw DataError("empty trial distribution");
    const auto below = std::count_if(dist.values.begin(), dist.values.end(),
                                     [&](double v) { return v < observed; });
    return 100.0 * static_cast<double>(below) / static_cast<double>(dist.values.size());
}

double BaselineSummary::percentile_of(double value) const {
    if (sorted_values.empty()) return 0.0;
    const auto it = std::lower_bound(sorted_values.begin(), sorted_values.end(), value);
    return 100.0 * static_cast<double>(it - sorted_values.begin()) /
           static_cast<double>(sorted_values.size());
}

BaselineSummary summarize(const TrialDistribution& dist, int n_bins) {
    if (n_bins < 1) throw UsageError("n_bins must be >= 1");
    if (dist.values.empty()) throw DataError("empty trial distribution");

    BaselineSummary summary;
    summary.sorted_values = dist.values;
    std::sort(summary.sorted_values.begin(), summary.sorted_values.end());

    double sum = 0.0;
    for (double v : dist.values) sum += v;
    summary.mean = sum / static_cast<double>(dist.values.size());

    const double lo = summary.sorted_values.front();
    const double hi = summary.sorted_values.back();
    const double width = (hi - lo) / static_cast<double>(n_bins);
    summary.bins.resize(static_cast<std::size_t>(n_bins));
    for (int i = 0; i < n_bins; ++i) {
        summary.bins[static_cast<std::size_t>(i)].lo = lo + width * i;
        summary.bins[static_cast<std::size_t>(i)].hi = (i == n_bins - 1) ? hi : lo + width * (i + 1);
    }
    for (double v : dist.values) {
        std::size_t idx = 0;
        if (width > 0.0) {
            idx = static_cast<std::size_t>((v - lo) / width);
            if (idx >= static_cast<std::size_t>(n_bins)) idx = static_cast<std::size_t>(n_bins) - 1;
        }
        ++summary.bins[idx].count;
    }
    return summary;
}

} // namespace hardcase
