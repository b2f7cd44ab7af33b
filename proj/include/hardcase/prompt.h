#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hardcase/scenario.h"

namespace hardcase {

enum class InputMode { cam, bev, cam_bev };

std::string to_string(InputMode mode);
InputMode input_mode_from_string(const std::string& s);

struct PromptConfig {
    InputMode input_mode = InputMode::cam_bev;
    bool include_pos = false;
    bool include_type = true;
    int n_frames = 3;
    std::optional<int> ablation_id; // 1..7; fixes the three fields above

    // The ablation matrix:
    //   1 cam      -    type      5 cam_bev  pos  -
    //   2 cam      pos  type      6 cam_bev  -    type
    //   3 bev      -    type      7 cam_bev  pos  type
    //   4 cam_bev  -    -
    static PromptConfig from_ablation(int id);
};

nlohmann::json prompt_config_to_json(const PromptConfig& config);
PromptConfig prompt_config_from_json(const nlohmann::json& j);

/// A worked (user, assistant) turn prepended before the test query.
struct FewShotExample {
    std::vector<std::string> images;
    std::string user_text;
    std::string assistant_text; // must parse under strict mode
};

struct UserTurn {
    std::string text;
    std::vector<std::string> images;
};

struct PromptBundle {
    std::string system_text;
    std::vector<std::pair<std::string, std::string>> fewshot_turns; // (user, assistant)
    UserTurn user_turn;
};

// External template text with {{agent_roster}}, {{frame_count}} and
// {{bev_sentence}} markers; unknown markers are an error so edits stay
// auditable.
struct PromptTemplates {
    std::string system_template;
    std::string user_template;
    static PromptTemplates load(const std::string& dir); // expects system.txt + user.txt
};

std::string build_system_prompt(const PromptConfig& config, const PromptTemplates& templates);

// Roster text plus the frame images matching config.input_mode. Throws
// DataError when include_pos is set but an agent lacks a pixel_box, or when
// a frame lacks the pre-rendered variant the input mode needs.
UserTurn build_user_message(const Scenario& scenario, const PromptConfig& config,
                            const PromptTemplates& templates);

PromptBundle assemble(const Scenario& scenario, const PromptConfig& config,
                      const std::vector<FewShotExample>& fewshots,
                      const PromptTemplates& templates);

std::vector<FewShotExample> load_fewshots(const std::string& dir);
void validate_fewshot(const FewShotExample& example); // throws DataError

} // namespace hardcase
