#include "hardcase/metrics.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "hardcase/errors.h"

namespace hardcase {

namespace {

void check_id_sets(const Ranking& gt, const Ranking& cand, const RelevanceMap& relevance) {
    if (gt.size() != cand.size())
        throw DataError("ranking size mismatch: " + std::to_string(gt.size()) + " vs " +
                        std::to_string(cand.size()));
    std::set<AgentId> gt_set(gt.begin(), gt.end());
    std::set<AgentId> cand_set(cand.begin(), cand.end());
    if (gt_set.size() != gt.size()) throw DataError("ground-truth ranking has duplicate ids");
    if (gt_set != cand_set) throw DataError("candidate ranking is not a permutation of the ground-truth ids");
    for (AgentId id : gt)
        if (!relevance.count(id))
            throw DataError("relevance map missing agent id " + std::to_string(id));
}

struct PairCounts {
    double concordant = 0.0;
    double discordant = 0.0;
    double tied = 0.0;
    double total = 0.0;
};

PairCounts count_pairs(const Ranking& cand, const RelevanceMap& relevance) {
    PairCounts counts;
    const std::size_t n = cand.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double ri = relevance.at(cand[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double rj = relevance.at(cand[j]);
            // cand places i before j, so concordance means rel[i] > rel[j]
            if (ri > rj)
                counts.concordant += 1.0;
            else if (ri < rj)
                counts.discordant += 1.0;
            else
                counts.tied += 1.0;
            counts.total += 1.0;
        }
    }
    return counts;
}

} // namespace

double c_index(const Ranking& gt, const Ranking& cand, const RelevanceMap& relevance) {
    check_id_sets(gt, cand, relevance);
    const PairCounts counts = count_pairs(cand, relevance);
    if (counts.total == 0.0) return 0.5;
    return (counts.concordant + 0.5 * counts.tied) / counts.total;
}

double kendall_tau(const Ranking& gt, const Ranking& cand, const RelevanceMap& relevance) {
    check_id_sets(gt, cand, relevance);
    const PairCounts counts = count_pairs(cand, relevance);
    if (counts.total == 0.0) return 0.0;
    return (counts.concordant - counts.discordant) / counts.total;
}

std::optional<bool> top_k_hit(const Ranking& gt, const Ranking& cand, int k) {
    if (k <= 0) throw UsageError("k must be positive");
    if (gt.size() != cand.size())
        throw DataError("ranking size mismatch: " + std::to_string(gt.size()) + " vs " +
                        std::to_string(cand.size()));
    {
        std::set<AgentId> gt_set(gt.begin(), gt.end());
        std::set<AgentId> cand_set(cand.begin(), cand.end());
        if (gt_set.size() != gt.size() || gt_set != cand_set)
            throw DataError("candidate ranking is not a permutation of the ground-truth ids");
    }
    if (gt.size() < static_cast<std::size_t>(k)) return std::nullopt;
    std::set<AgentId> gt_top(gt.begin(), gt.begin() + k);
    std::set<AgentId> cand_top(cand.begin(), cand.begin() + k);
    return gt_top == cand_top;
}

double ndcg(const Ranking& cand, const RelevanceMap& relevance) {
    if (cand.empty()) throw DataError("empty ranking");
    std::vector<double> rels;
    rels.reserve(cand.size());
    for (AgentId id : cand) {
        auto it = relevance.find(id);
        if (it == relevance.end())
            throw DataError("relevance map missing agent id " + std::to_string(id));
        if (it->second < 0.0)
            throw DataError("negative relevance for agent id " + std::to_string(id));
        rels.push_back(it->second);
    }
    double dcg = 0.0;
    for (std::size_t i = 0; i < rels.size(); ++i)
        dcg += rels[i] / std::log2(static_cast<double>(i) + 2.0);

    std::vector<double> ideal = rels;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < ideal.size(); ++i)
        idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);

    if (idcg == 0.0) return 1.0; // all relevances zero: every order is ideal
    return dcg / idcg;
}

MetricReportRow evaluate_sample(std::string scenario_id, const Ranking& gt, const Ranking& cand,
                                const RelevanceMap& relevance, int k) {
    MetricReportRow row;
    row.scenario_id = std::move(scenario_id);
    row.c_index = c_index(gt, cand, relevance);
    row.kendall_tau = kendall_tau(gt, cand, relevance);
    row.ndcg = ndcg(cand, relevance);
    row.top_k_hit = top_k_hit(gt, cand, k);
    row.n_agents = static_cast<int>(gt.size());
    return row;
}

AggregateReport aggregate(const std::vector<MetricReportRow>& rows, int parse_failures) {
    if (rows.empty()) throw DataError("cannot aggregate zero metric rows");
    AggregateReport report;
    report.n_samples = static_cast<int>(rows.size());
    report.n_parse_failures = parse_failures;
    int hits = 0;
    for (const auto& row : rows) {
        report.mean_c_index += row.c_index;
        report.mean_tau += row.kendall_tau;
        report.mean_ndcg += row.ndcg;
        if (row.top_k_hit.has_value()) {
            ++report.n_applicable;
            if (*row.top_k_hit) ++hits;
        }
    }
    report.mean_c_index /= rows.size();
    report.mean_tau /= rows.size();
    report.mean_ndcg /= rows.size();
    report.top_k_accuracy =
        report.n_applicable > 0 ? 100.0 * hits / report.n_applicable : 0.0;
    return report;
}

} // namespace hardcase
