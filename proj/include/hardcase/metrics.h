#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hardcase/scenario.h"

namespace hardcase {

struct MetricReportRow {
    std::string scenario_id;
    double c_index = 0.0;     // [0, 1]
    double kendall_tau = 0.0; // [-1, 1]
    double ndcg = 0.0;        // [0, 1]
    std::optional<bool> top_k_hit; // nullopt when n_agents < k
    int n_agents = 0;
};

struct AggregateReport {
    double mean_c_index = 0.0;
    double mean_tau = 0.0;
    double mean_ndcg = 0.0;
    double top_k_accuracy = 0.0; // percent over applicable rows
    int n_samples = 0;
    int n_applicable = 0;
    int n_parse_failures = 0;
};

// Pairwise agreement between `cand` order and GT relevance. A pair placed the
// same way as its relevance order counts 1, relevance-tied pairs count 0.5.
// Zero pairs (single agent) degenerates to 0.5.
double c_index(const Ranking& gt, const Ranking& cand, const RelevanceMap& relevance);

// (concordant - discordant) / total pairs; relevance-tied pairs stay in the
// denominator. Zero pairs degenerates to 0. Equals 2*c_index - 1.
double kendall_tau(const Ranking& gt, const Ranking& cand, const RelevanceMap& relevance);

// Set equality of the two top-k prefixes; nullopt when fewer than k agents.
std::optional<bool> top_k_hit(const Ranking& gt, const Ranking& cand, int k);

// DCG with gain rel(id)/log2(rank+1) normalized by the ideal ordering.
// All relevances zero degenerates to 1.
double ndcg(const Ranking& cand, const RelevanceMap& relevance);

MetricReportRow evaluate_sample(std::string scenario_id, const Ranking& gt, const Ranking& cand,
                                const RelevanceMap& relevance, int k);

AggregateReport aggregate(const std::vector<MetricReportRow>& rows, int parse_failures);

} // namespace hardcase
