#include <set>

#include <doctest.h>

#include "hardcase/errors.h"
#include "hardcase/parser.h"
#include "hardcase/prompt.h"
#include "support/synthetic.h"

using namespace hardcase;

namespace {

const PromptTemplates& templates() {
    static const PromptTemplates t = PromptTemplates::load(std::string(HARDCASE_DATA_DIR) +
                                                           "/templates");
    return t;
}

constexpr const char* kBevMarker = "On the right, it is the bird-eye-view image";

Scenario five_agent_scene() {
    // pedestrian, pedestrian, car, motorcycle, pedestrian
    Scenario s = testsupport::make_scenario(1234, 0, {5, 5});
    s.agents[0].agent_type = AgentType::pedestrian;
    s.agents[1].agent_type = AgentType::pedestrian;
    s.agents[2].agent_type = AgentType::car;
    s.agents[3].agent_type = AgentType::motorcycle;
    s.agents[4].agent_type = AgentType::pedestrian;
    return s;
}

} // namespace

TEST_CASE("ablation ids reproduce the input/pos/type matrix") {
    struct Row {
        int id;
        InputMode mode;
        bool pos, type;
    };
    const Row expected[] = {
        {1, InputMode::cam, false, true},  {2, InputMode::cam, true, true},
        {3, InputMode::bev, false, true},  {4, InputMode::cam_bev, false, false},
        {5, InputMode::cam_bev, true, false}, {6, InputMode::cam_bev, false, true},
        {7, InputMode::cam_bev, true, true},
    };
    for (const auto& row : expected) {
        const PromptConfig config = PromptConfig::from_ablation(row.id);
        CHECK(config.input_mode == row.mode);
        CHECK(config.include_pos == row.pos);
        CHECK(config.include_type == row.type);
        CHECK(config.ablation_id == row.id);
        CHECK(config.n_frames == 3);
    }
    CHECK_THROWS_AS(PromptConfig::from_ablation(0), UsageError);
    CHECK_THROWS_AS(PromptConfig::from_ablation(8), UsageError);
}

TEST_CASE("system prompt") {
    SUBCASE("markers present for every configuration") {
        for (int id = 1; id <= 7; ++id) {
            const std::string text =
                build_system_prompt(PromptConfig::from_ablation(id), templates());
            CHECK(text.find("Question 1") != std::string::npos);
            CHECK(text.find("Question 2") != std::string::npos);
            CHECK(text.find("The most difficult to predict agents' rank is [A1") !=
                  std::string::npos);
            CHECK(text.find("Overall, the prediction difficulty is <score>") != std::string::npos);
        }
    }
    SUBCASE("configuration 6 keeps the full composite wording") {
        const std::string text = build_system_prompt(PromptConfig::from_ablation(6), templates());
        CHECK(text.find("You are a mature driver behind the wheel.") == 0);
        CHECK(text.find("six images captured and put together by the surround view camera") !=
              std::string::npos);
        CHECK(text.find(kBevMarker) != std::string::npos);
        CHECK(text.find("The HD map is also plotted in the bird-eye-view image.") !=
              std::string::npos);
        CHECK(text.find("Score the difficulty of prediction from 1 to 10") != std::string::npos);
    }
    SUBCASE("camera-only drops the bird-eye-view sentence") {
        const std::string text = build_system_prompt(PromptConfig::from_ablation(1), templates());
        CHECK(text.find(kBevMarker) == std::string::npos);
    }
    SUBCASE("bev-only keeps it") {
        const std::string text = build_system_prompt(PromptConfig::from_ablation(3), templates());
        CHECK(text.find(kBevMarker) != std::string::npos);
    }
    SUBCASE("the format lines parse once instantiated with a sample answer") {
        std::string text = build_system_prompt(PromptConfig::from_ablation(6), templates());
        const std::string stencil = "[A1, A2, A3, A4, A5, A6, A7, A8]";
        text.replace(text.find(stencil), stencil.size(), "[2, 1, 3]");
        const std::string score_stencil = "prediction difficulty is <score>";
        text.replace(text.find(score_stencil), score_stencil.size(), "prediction difficulty is 4");
        const auto result = parse_response(text, {1, 2, 3}, ParseMode::strict);
        REQUIRE(std::holds_alternative<ParsedResponse>(result));
        CHECK(std::get<ParsedResponse>(result).ranking == Ranking{2, 1, 3});
        CHECK(std::get<ParsedResponse>(result).score == 4);
    }
}

TEST_CASE("user message roster text") {
    const Scenario s = five_agent_scene();

    SUBCASE("count plus type list in agent id order") {
        PromptConfig config = PromptConfig::from_ablation(6);
        const UserTurn turn = build_user_message(s, config, templates());
        CHECK(turn.text.find("There are 5 different IDs of agents in these images. From ID 1 to "
                             "ID 5, they are pedestrian, pedestrian, car, motorcycle, and "
                             "pedestrian.") != std::string::npos);
    }
    SUBCASE("without types only the count and id range remain") {
        PromptConfig config = PromptConfig::from_ablation(4);
        const UserTurn turn = build_user_message(s, config, templates());
        CHECK(turn.text.find("There are 5 different IDs of agents in these images.") !=
              std::string::npos);
        CHECK(turn.text.find("pedestrian") == std::string::npos);
        CHECK(turn.text.find("From ID 1") == std::string::npos);
        CHECK(turn.text.find("from ID 1 to ID 5") != std::string::npos);
    }
    SUBCASE("positions add one line per agent") {
        PromptConfig config = PromptConfig::from_ablation(7);
        const UserTurn turn = build_user_message(s, config, templates());
        for (const auto& agent : s.agents) {
            const auto& box = *agent.pixel_box;
            std::string line = "ID " + std::to_string(agent.agent_id) + " at [" +
                               std::to_string(static_cast<long long>(box.x_min)) + "," +
                               std::to_string(static_cast<long long>(box.y_min)) + "," +
                               std::to_string(static_cast<long long>(box.x_max)) + "," +
                               std::to_string(static_cast<long long>(box.y_max)) + "].";
            CHECK(turn.text.find(line) != std::string::npos);
        }
    }
    SUBCASE("positions without boxes fail") {
        Scenario bare = s;
        bare.agents[2].pixel_box.reset();
        CHECK_THROWS_AS(build_user_message(bare, PromptConfig::from_ablation(7), templates()),
                        DataError);
    }
}

TEST_CASE("user message images follow the input mode") {
    const Scenario s = five_agent_scene();

    const UserTurn composite = build_user_message(s, PromptConfig::from_ablation(6), templates());
    REQUIRE(composite.images.size() == 3);
    CHECK(composite.images[0] == s.frames[0].image_path);

    const UserTurn cam = build_user_message(s, PromptConfig::from_ablation(1), templates());
    CHECK(cam.images[0] == *s.frames[0].image_path_cam);

    const UserTurn bev = build_user_message(s, PromptConfig::from_ablation(3), templates());
    CHECK(bev.images[2] == *s.frames[2].image_path_bev);

    SUBCASE("missing pre-rendered variant fails") {
        Scenario bare = s;
        for (auto& frame : bare.frames) frame.image_path_cam.reset();
        CHECK_THROWS_AS(build_user_message(bare, PromptConfig::from_ablation(1), templates()),
                        DataError);
    }
    SUBCASE("fewer frames than requested fails") {
        PromptConfig config = PromptConfig::from_ablation(6);
        config.n_frames = 4;
        CHECK_THROWS_AS(build_user_message(s, config, templates()), DataError);
    }
    SUBCASE("a shorter window keeps the most recent frames") {
        PromptConfig config = PromptConfig::from_ablation(6);
        config.n_frames = 2;
        const UserTurn turn = build_user_message(s, config, templates());
        REQUIRE(turn.images.size() == 2);
        CHECK(turn.images[0] == s.frames[1].image_path);
        CHECK(turn.images[1] == s.frames[2].image_path);
    }
}

TEST_CASE("assemble") {
    const Scenario s = five_agent_scene();
    const auto fewshots = load_fewshots(std::string(HARDCASE_DATA_DIR) + "/fewshots");
    REQUIRE(fewshots.size() == 2);

    SUBCASE("zero-shot bundles are allowed") {
        const PromptBundle bundle = assemble(s, PromptConfig::from_ablation(6), {}, templates());
        CHECK(bundle.fewshot_turns.empty());
        CHECK_FALSE(bundle.system_text.empty());
        CHECK(bundle.user_turn.images.size() == 3);
    }
    SUBCASE("two few-shot turns precede the test turn") {
        const PromptBundle bundle =
            assemble(s, PromptConfig::from_ablation(6), fewshots, templates());
        REQUIRE(bundle.fewshot_turns.size() == 2);
        CHECK(bundle.fewshot_turns[0].first == fewshots[0].user_text);
        CHECK(bundle.fewshot_turns[1].second == fewshots[1].assistant_text);
    }
    SUBCASE("assembly is a pure function") {
        const PromptBundle a = assemble(s, PromptConfig::from_ablation(7), fewshots, templates());
        const PromptBundle b = assemble(s, PromptConfig::from_ablation(7), fewshots, templates());
        CHECK(a.system_text == b.system_text);
        CHECK(a.user_turn.text == b.user_turn.text);
        CHECK(a.user_turn.images == b.user_turn.images);
        CHECK(a.fewshot_turns == b.fewshot_turns);
    }
    SUBCASE("an unparseable few-shot is rejected") {
        FewShotExample broken;
        broken.user_text = "u";
        broken.assistant_text = "no ranking here";
        CHECK_THROWS_AS(assemble(s, PromptConfig::from_ablation(6), {broken}, templates()),
                        DataError);
        broken.assistant_text =
            "1: The most difficult to predict agents' rank is [1, 2].\n"
            "2: Overall, the prediction difficulty is 99.";
        CHECK_THROWS_AS(assemble(s, PromptConfig::from_ablation(6), {broken}, templates()),
                        DataError);
    }
}

TEST_CASE("unknown template markers are rejected") {
    PromptTemplates bad = templates();
    bad.system_template += "\n{{mystery}}";
    CHECK_THROWS_AS(build_system_prompt(PromptConfig::from_ablation(6), bad), DataError);
}
