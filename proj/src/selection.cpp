#include "hardcase/selection.h"

#include <algorithm>
#include <set>

#include "hardcase/errors.h"
#include "hardcase/rng.h"
#include "hardcase/util.h"

using nlohmann::json;

namespace hardcase {

namespace {

void check_unique(const std::vector<SceneScore>& scores) {
    std::set<std::string> seen;
    for (const auto& s : scores)
        if (!seen.insert(s.scenario_id).second)
            throw DataError("duplicate scenario_id in scores: '" + s.scenario_id + "'");
}

// Uniform draw of `count` ids without replacement; pool is sorted first so
// the result depends only on (contents, seed).
std::vector<std::string> draw(std::vector<std::string> pool, std::size_t count,
                              std::uint64_t seed) {
    std::sort(pool.begin(), pool.end());
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace

Manifest select_by_difficulty(const std::vector<SceneScore>& scores, int band_lo, int band_hi,
                              int count, std::uint64_t seed) {
    if (band_lo < 1 || band_hi > 10 || band_lo > band_hi)
        throw UsageError("band must satisfy 1 <= lo <= hi <= 10");
    if (count < 1) throw UsageError("count must be >= 1");
    check_unique(scores);

    std::vector<std::string> pool;
    for (const auto& s : scores) {
        if (s.refusal()) continue;
        if (*s.score >= band_lo && *s.score <= band_hi) pool.push_back(s.scenario_id);
    }
    if (pool.empty())
        throw DataError("no scenes with score in [" + std::to_string(band_lo) + ", " +
                        std::to_string(band_hi) + "]");

    Manifest m;
    m.method = "difficulty_band";
    m.band_lo = band_lo;
    m.band_hi = band_hi;
    m.count = count;
    m.seed = seed;
    if (pool.size() <= static_cast<std::size_t>(count)) {
        std::sort(pool.begin(), pool.end());
        m.shortfall = pool.size() < static_cast<std::size_t>(count);
        m.scenario_ids = std::move(pool);
    } else {
        m.scenario_ids = draw(std::move(pool), static_cast<std::size_t>(count), seed);
    }
    m.name = "difficulty_band_" + std::to_string(band_lo) + "-" + std::to_string(band_hi) +
             "_count" + std::to_string(count) + "_seed" + std::to_string(seed);
    return m;
}

Manifest select_random(const std::vector<SceneScore>& scores, int count, std::uint64_t seed) {
    if (count < 1) throw UsageError("count must be >= 1");
    check_unique(scores);

    std::vector<std::string> pool;
    for (const auto& s : scores) pool.push_back(s.scenario_id);
    if (static_cast<std::size_t>(count) > pool.size())
        throw DataError("count " + std::to_string(count) + " exceeds pool of " +
                        std::to_string(pool.size()) + " scenes");

    Manifest m;
    m.method = "random";
    m.count = count;
    m.seed = seed;
    m.scenario_ids = draw(std::move(pool), static_cast<std::size_t>(count), seed);
    m.name = "random_count" + std::to_string(count) + "_seed" + std::to_string(seed);
    return m;
}

std::int64_t ScoreHistogram::total() const {
    std::int64_t sum = refusal_count;
    for (std::int64_t c : bars) sum += c;
    return sum;
}

ScoreHistogram score_histogram(const std::vector<SceneScore>& scores) {
    ScoreHistogram h;
    for (const auto& s : scores) {
        if (s.refusal()) {
            ++h.refusal_count;
        } else {
            if (*s.score < 1 || *s.score > 10)
                throw DataError("scene '" + s.scenario_id + "' score " +
                                std::to_string(*s.score) + " outside [1, 10]");
            ++h.bars[static_cast<std::size_t>(*s.score - 1)];
        }
    }
    return h;
}

std::vector<SceneScore> scores_from_json(const json& doc) {
    if (!doc.is_array()) throw DataError("scores document must be a JSON array");
    std::vector<SceneScore> out;
    for (const auto& entry : doc) {
        SceneScore s;
        if (!entry.contains("scenario_id"))
            throw DataError("scores entry missing 'scenario_id'");
        s.scenario_id = entry["scenario_id"].get<std::string>();
        const bool refusal = entry.value("refusal", false);
        if (!refusal) {
            if (!entry.contains("score") || !entry["score"].is_number_integer())
                throw DataError("scene '" + s.scenario_id +
                                "': needs an integer 'score' or \"refusal\": true");
            const int score = entry["score"].get<int>();
            if (score < 1 || score > 10)
                throw DataError("scene '" + s.scenario_id + "': score " + std::to_string(score) +
                                " outside [1, 10]");
            s.score = score;
        }
        if (entry.contains("explanation")) s.explanation = entry["explanation"].get<std::string>();
        out.push_back(std::move(s));
    }
    check_unique(out);
    return out;
}

json scores_to_json(const std::vector<SceneScore>& scores) {
    json arr = json::array();
    for (const auto& s : scores) {
        json entry;
        entry["scenario_id"] = s.scenario_id;
        if (s.refusal()) {
            entry["refusal"] = true;
        } else {
            entry["score"] = *s.score;
        }
        if (!s.explanation.empty()) entry["explanation"] = s.explanation;
        arr.push_back(std::move(entry));
    }
    return arr;
}

std::vector<SceneScore> load_scores(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const std::exception& e) {
        throw DataError("cannot load scores " + path + ": " + e.what());
    }
    return scores_from_json(doc);
}

json manifest_to_json(const Manifest& manifest) {
    json j;
    j["name"] = manifest.name;
    j["method"] = manifest.method;
    json params;
    if (manifest.method == "difficulty_band") {
        params["band_lo"] = manifest.band_lo;
        params["band_hi"] = manifest.band_hi;
    }
    params["count"] = manifest.count;
    params["seed"] = manifest.seed;
    if (manifest.shortfall) params["shortfall"] = true;
    j["params"] = std::move(params);
    j["scenario_ids"] = manifest.scenario_ids;
    return j;
}

std::string manifest_to_text(const Manifest& manifest) {
    std::string out;
    for (const auto& id : manifest.scenario_ids) {
        out += id;
        out += '\n';
    }
    return out;
}

json histogram_to_json(const ScoreHistogram& histogram) {
    json bars = json::array();
    for (int score = 1; score <= 10; ++score)
        bars.push_back({{"score", score}, {"count", histogram.bars[static_cast<std::size_t>(score - 1)]}});
    json j;
    j["bars"] = std::move(bars);
    j["refusal_count"] = histogram.refusal_count;
    j["total"] = histogram.total();
    return j;
}

} // namespace hardcase
