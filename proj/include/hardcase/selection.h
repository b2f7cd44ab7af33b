#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hardcase {

struct SceneScore {
    std::string scenario_id;
    std::optional<int> score; // 1..10; nullopt marks a refusal (no usable score)
    std::string explanation;

    bool refusal() const { return !score.has_value(); }
};

struct Manifest {
    std::string name;
    std::string method; // "difficulty_band" | "random"
    int band_lo = 0;    // difficulty_band only
    int band_hi = 0;
    int count = 0;
    std::uint64_t seed = 0;
    bool shortfall = false; // candidate pool was smaller than count
    std::vector<std::string> scenario_ids; // sorted for stable diffs
};

// Scenes with band_lo <= score <= band_hi (refusals excluded), sampled
// uniformly without replacement when the pool exceeds `count`.
Manifest select_by_difficulty(const std::vector<SceneScore>& scores, int band_lo, int band_hi,
                              int count, std::uint64_t seed);

// Uniform draw from all scored scenes; refusals included, scores ignored.
Manifest select_random(const std::vector<SceneScore>& scores, int count, std::uint64_t seed);

struct ScoreHistogram {
    std::array<std::int64_t, 10> bars{}; // index i = score i+1
    std::int64_t refusal_count = 0;
    std::int64_t total() const;
};

ScoreHistogram score_histogram(const std::vector<SceneScore>& scores);

std::vector<SceneScore> scores_from_json(const nlohmann::json& doc);
nlohmann::json scores_to_json(const std::vector<SceneScore>& scores);
std::vector<SceneScore> load_scores(const std::string& path);

nlohmann::json manifest_to_json(const Manifest& manifest);
std::string manifest_to_text(const Manifest& manifest); // one scenario id per line
nlohmann::json histogram_to_json(const ScoreHistogram& histogram);

} // namespace hardcase
