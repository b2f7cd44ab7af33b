#include <algorithm>
#include <map>
#include <set>

#include <doctest.h>

#include "hardcase/errors.h"
#include "hardcase/rng.h"
#include "hardcase/selection.h"

using namespace hardcase;

namespace {

std::string sid(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "scene_%04d", i);
    return buf;
}

// 451 scenes, 5 refusals, scores cycling 1..10 over the rest (the selection
// workload size this harness is sized for).
std::vector<SceneScore> full_batch_scores() {
    std::vector<SceneScore> scores;
    for (int i = 0; i < 451; ++i) {
        SceneScore s;
        s.scenario_id = sid(i);
        if (i % 90 == 7) {
            s.explanation = "declined";
        } else {
            s.score = 1 + i % 10;
            s.explanation = "scored";
        }
        scores.push_back(std::move(s));
    }
    return scores;
}

} // namespace

TEST_CASE("select_by_difficulty") {
    SUBCASE("band filter then full take") {
        std::vector<SceneScore> scores = {{"A", 7, ""}, {"B", 9, ""}, {"C", 3, ""}};
        const Manifest m = select_by_difficulty(scores, 7, 9, 2, 1);
        CHECK(m.scenario_ids == std::vector<std::string>{"A", "B"});
        CHECK_FALSE(m.shortfall);
        CHECK(m.method == "difficulty_band");
    }
    SUBCASE("identity band keeps every scored scene") {
        std::vector<SceneScore> scores = {{"A", 7, ""}, {"B", 9, ""}, {"C", 3, ""},
                                          {"D", std::nullopt, "refused"}};
        const Manifest m = select_by_difficulty(scores, 1, 10, 3, 9);
        CHECK(m.scenario_ids == std::vector<std::string>{"A", "B", "C"});
    }
    SUBCASE("shortfall is flagged when the pool is too small") {
        std::vector<SceneScore> scores = {{"A", 8, ""}, {"B", 2, ""}};
        const Manifest m = select_by_difficulty(scores, 7, 9, 5, 1);
        CHECK(m.scenario_ids == std::vector<std::string>{"A"});
        CHECK(m.shortfall);
    }
    SUBCASE("empty pool is an error") {
        std::vector<SceneScore> scores = {{"A", 2, ""}};
        CHECK_THROWS_AS(select_by_difficulty(scores, 7, 9, 1, 1), DataError);
    }
    SUBCASE("every selected id sits inside the band") {
        const auto scores = full_batch_scores();
        std::map<std::string, int> by_id;
        for (const auto& s : scores)
            if (!s.refusal()) by_id[s.scenario_id] = *s.score;
        const Manifest m = select_by_difficulty(scores, 7, 9, 50, 33);
        CHECK(m.scenario_ids.size() == 50);
        for (const auto& id : m.scenario_ids) {
            CHECK(by_id.at(id) >= 7);
            CHECK(by_id.at(id) <= 9);
        }
    }
    SUBCASE("refusals are never eligible") {
        std::vector<SceneScore> scores = {{"A", 8, ""}, {"B", std::nullopt, ""}};
        const Manifest m = select_by_difficulty(scores, 1, 10, 2, 1);
        CHECK(m.scenario_ids == std::vector<std::string>{"A"});
    }
}

TEST_CASE("select_random") {
    const auto scores = full_batch_scores();

    SUBCASE("draws from all scenes including refusals") {
        // over many seeds, refused scenes must appear
        bool saw_refused = false;
        std::set<std::string> refused;
        for (const auto& s : scores)
            if (s.refusal()) refused.insert(s.scenario_id);
        for (std::uint64_t seed = 0; seed < 20 && !saw_refused; ++seed) {
            const Manifest m = select_random(scores, 200, seed);
            for (const auto& id : m.scenario_ids)
                if (refused.count(id)) saw_refused = true;
        }
        CHECK(saw_refused);
    }
    SUBCASE("count equal to the pool returns the whole pool") {
        const Manifest m = select_random(scores, 451, 5);
        CHECK(m.scenario_ids.size() == 451);
    }
    SUBCASE("count beyond the pool is an error") {
        CHECK_THROWS_AS(select_random(scores, 452, 5), DataError);
    }
    SUBCASE("full-scale draw: 200 unique of 451") {
        const Manifest m = select_random(scores, 200, 42);
        CHECK(m.scenario_ids.size() == 200);
        const std::set<std::string> unique(m.scenario_ids.begin(), m.scenario_ids.end());
        CHECK(unique.size() == 200);
        CHECK(std::is_sorted(m.scenario_ids.begin(), m.scenario_ids.end()));
    }
}

TEST_CASE("manifests are deterministic under seed and differ across seeds") {
    const auto scores = full_batch_scores();
    const Manifest a = select_by_difficulty(scores, 7, 9, 60, 11);
    const Manifest b = select_by_difficulty(scores, 7, 9, 60, 11);
    CHECK(a.scenario_ids == b.scenario_ids);
    const Manifest c = select_by_difficulty(scores, 7, 9, 60, 12);
    CHECK(a.scenario_ids != c.scenario_ids);

    const Manifest r1 = select_random(scores, 100, 3);
    const Manifest r2 = select_random(scores, 100, 3);
    CHECK(r1.scenario_ids == r2.scenario_ids);
}

TEST_CASE("random selection covers the pool roughly uniformly") {
    std::vector<SceneScore> scores;
    for (int i = 0; i < 40; ++i) scores.push_back({sid(i), 5, ""});
    std::map<std::string, int> hits;
    const int draws = 400;
    for (int seed = 0; seed < draws; ++seed) {
        for (const auto& id : select_random(scores, 10, static_cast<std::uint64_t>(seed) + 1000)
                                  .scenario_ids)
            ++hits[id];
    }
    // expectation per scene = draws * 10/40 = 100; chi-square sanity bound
    double chi2 = 0.0;
    for (const auto& [id, count] : hits) chi2 += (count - 100.0) * (count - 100.0) / 100.0;
    CHECK(hits.size() == 40);
    CHECK(chi2 < 80.0); // df = 39, p ~ 1e-4 cutoff
}

TEST_CASE("score_histogram") {
    SUBCASE("all scores equal give a single bar") {
        std::vector<SceneScore> scores = {{"A", 5, ""}, {"B", 5, ""}, {"C", 5, ""}};
        const ScoreHistogram h = score_histogram(scores);
        CHECK(h.bars[4] == 3);
        CHECK(h.refusal_count == 0);
        CHECK(h.total() == 3);
    }
    SUBCASE("451 inputs with 5 refusals plot 446 bars") {
        const ScoreHistogram h = score_histogram(full_batch_scores());
        std::int64_t bar_sum = 0;
        for (std::int64_t c : h.bars) bar_sum += c;
        CHECK(bar_sum == 446);
        CHECK(h.refusal_count == 5);
        CHECK(h.total() == 451);
    }
    SUBCASE("empty input gives all-zero bars") {
        const ScoreHistogram h = score_histogram({});
        for (std::int64_t c : h.bars) CHECK(c == 0);
        CHECK(h.refusal_count == 0);
    }
}

TEST_CASE("scores JSON io") {
    const auto scores = full_batch_scores();
    const auto back = scores_from_json(scores_to_json(scores));
    REQUIRE(back.size() == scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        CHECK(back[i].scenario_id == scores[i].scenario_id);
        CHECK(back[i].score == scores[i].score);
    }
    SUBCASE("duplicate ids rejected") {
        std::vector<SceneScore> dup = {{"A", 5, ""}, {"A", 6, ""}};
        CHECK_THROWS_AS(scores_from_json(scores_to_json(dup)), DataError);
    }
    SUBCASE("out-of-range score rejected") {
        nlohmann::json doc = nlohmann::json::array();
        doc.push_back({{"scenario_id", "A"}, {"score", 11}});
        CHECK_THROWS_AS(scores_from_json(doc), DataError);
    }
}

TEST_CASE("manifest serialization") {
    std::vector<SceneScore> scores = {{"B", 8, ""}, {"A", 7, ""}, {"C", 9, ""}};
    const Manifest m = select_by_difficulty(scores, 7, 9, 2, 4);
    const auto j = manifest_to_json(m);
    CHECK(j["method"] == "difficulty_band");
    CHECK(j["params"]["band_lo"] == 7);
    CHECK(j["params"]["band_hi"] == 9);
    CHECK(j["params"]["count"] == 2);
    CHECK(j["params"]["seed"] == 4);
    CHECK(j["scenario_ids"].size() == 2);

    const std::string text = manifest_to_text(m);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
