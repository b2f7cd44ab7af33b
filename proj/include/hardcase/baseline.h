#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "hardcase/metrics.h"

namespace hardcase {

enum class MetricName { c_index, ndcg, top_k_accuracy, kendall_tau };

inline constexpr std::array<MetricName, 4> kAllMetrics = {
    MetricName::c_index, MetricName::ndcg, MetricName::top_k_accuracy, MetricName::kendall_tau};

std::string to_string(MetricName name);
MetricName metric_name_from_string(const std::string& s);

/// The per-sample inputs a random-ordering trial permutes.
struct GtSample {
    Ranking gt;
    RelevanceMap relevance;
};

/// Empirical distribution of one metric's aggregate over random trials.
struct TrialDistribution {
    MetricName metric{};
    std::vector<double> values; // one aggregate per trial
    int n_trials = 0;
    std::uint64_t master_seed = 0;
};

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t count = 0;
};

struct BaselineSummary {
    double mean = 0.0;
    std::vector<HistogramBin> bins;
    std::vector<double> sorted_values;

    // Percent of trials strictly below `value`.
    double percentile_of(double value) const;
};

// Trial t draws one uniform random permutation per sample from a generator
// seeded by derive_seed(master_seed, t), evaluates all four metrics, and
// records the aggregate. Output is identical for identical inputs regardless
// of `n_threads` (0 = hardware concurrency).
std::map<MetricName, TrialDistribution> run_trials(const std::vector<GtSample>& samples,
                                                   int n_trials, int k,
                                                   std::uint64_t master_seed, int n_threads = 0);

// Percent of trials strictly surpassed by `observed`.
double cumulative_probability(const TrialDistribution& dist, double observed);

// Equal-width bins over [min, max]; the last bin is right-closed.
BaselineSummary summarize(const TrialDistribution& dist, int n_bins);

} // namespace hardcase
