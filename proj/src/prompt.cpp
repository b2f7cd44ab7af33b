#include "hardcase/prompt.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hardcase/errors.h"
#include "hardcase/parser.h"
#include "hardcase/util.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hardcase {

std::string to_string(InputMode mode) {
    switch (mode) {
        case InputMode::cam: return "cam";
        case InputMode::bev: return "bev";
        case InputMode::cam_bev: return "cam_bev";
    }
    throw InternalError("unhandled InputMode");
}

InputMode input_mode_from_string(const std::string& s) {
    if (s == "cam") return InputMode::cam;
    if (s == "bev") return InputMode::bev;
    if (s == "cam_bev") return InputMode::cam_bev;
    throw UsageError("unknown input mode '" + s + "' (expected cam|bev|cam_bev)");
}

PromptConfig PromptConfig::from_ablation(int id) {
    PromptConfig c;
    c.ablation_id = id;
    switch (id) {
        case 1: c.input_mode = InputMode::cam;     c.include_pos = false; c.include_type = true;  break;
        case 2: c.input_mode = InputMode::cam;     c.include_pos = true;  c.include_type = true;  break;
        case 3: c.input_mode = InputMode::bev;     c.include_pos = false; c.include_type = true;  break;
        case 4: c.input_mode = InputMode::cam_bev; c.include_pos = false; c.include_type = false; break;
        case 5: c.input_mode = InputMode::cam_bev; c.include_pos = true;  c.include_type = false; break;
        case 6: c.input_mode = InputMode::cam_bev; c.include_pos = false; c.include_type = true;  break;
        case 7: c.input_mode = InputMode::cam_bev; c.include_pos = true;  c.include_type = true;  break;
        default: throw UsageError("ablation id must be in 1..7, got " + std::to_string(id));
    }
    return c;
}

json prompt_config_to_json(const PromptConfig& config) {
    json j;
    j["input_mode"] = to_string(config.input_mode);
    j["include_pos"] = config.include_pos;
    j["include_type"] = config.include_type;
    j["n_frames"] = config.n_frames;
    if (config.ablation_id) j["ablation_id"] = *config.ablation_id;
    return j;
}

PromptConfig prompt_config_from_json(const json& j) {
    PromptConfig c;
    if (j.contains("input_mode")) c.input_mode = input_mode_from_string(j["input_mode"]);
    if (j.contains("include_pos")) c.include_pos = j["include_pos"].get<bool>();
    if (j.contains("include_type")) c.include_type = j["include_type"].get<bool>();
    if (j.contains("n_frames")) c.n_frames = j["n_frames"].get<int>();
    if (j.contains("ablation_id")) c.ablation_id = j["ablation_id"].get<int>();
    return c;
}

namespace {

constexpr const char* kBevSentence =
    "On the right, it is the bird-eye-view image with labeled agents, centered on your "
    "vehicle.\nThe HD map is also plotted in the bird-eye-view image.\n";

// {x} when integral, %g otherwise; pixel coordinates are usually whole.
std::string format_coord(double v) {
    if (v == static_cast<long long>(v)) return std::to_string(static_cast<long long>(v));
    return format_sig(v, 6);
}

std::string render_template(const std::string& tmpl,
                            const std::vector<std::pair<std::string, std::string>>& values,
                            const std::string& which) {
    std::string out = tmpl;
    for (const auto& [key, value] : values) {
        const std::string marker = "{{" + key + "}}";
        std::size_t pos = 0;
        while ((pos = out.find(marker, pos)) != std::string::npos) {
            out.replace(pos, marker.size(), value);
            pos += value.size();
        }
    }
    const std::size_t open = out.find("{{");
    if (open != std::string::npos) {
        const std::size_t close = out.find("}}", open);
        const std::string marker =
            close == std::string::npos ? out.substr(open) : out.substr(open, close - open + 2);
        throw DataError(which + " template has unsupported marker " + marker);
    }
    return out;
}

std::string join_types(const std::vector<std::string>& types) {
    if (types.size() == 1) return types.front();
    if (types.size() == 2) return types[0] + " and " + types[1];
    std::string out;
    for (std::size_t i = 0; i + 1 < types.size(); ++i) out += types[i] + ", ";
    out += "and " + types.back();
    return out;
}

std::string agent_roster_text(const Scenario& scenario, const PromptConfig& config) {
    std::vector<const AgentRecord*> agents;
    for (const auto& a : scenario.agents) agents.push_back(&a);
    std::sort(agents.begin(), agents.end(),
              [](const AgentRecord* a, const AgentRecord* b) { return a->agent_id < b->agent_id; });

    std::ostringstream out;
    out << "There are " << agents.size() << " different IDs of agents in these images.";
    if (config.include_type) {
        std::vector<std::string> types;
        for (const auto* a : agents) types.push_back(to_string(a->agent_type));
        out << " From ID " << agents.front()->agent_id << " to ID " << agents.back()->agent_id
            << ", they are " << join_types(types) << ".";
    } else {
        out << " They are labeled from ID " << agents.front()->agent_id << " to ID "
            << agents.back()->agent_id << ".";
    }
    if (config.include_pos) {
        for (const auto* a : agents) {
            if (!a->pixel_box)
                throw DataError("scenario '" + scenario.scenario_id + "': agent " +
                                std::to_string(a->agent_id) +
                                " has no pixel_box but include_pos is set");
            const auto& b = *a->pixel_box;
            out << "\nID " << a->agent_id << " at [" << format_coord(b.x_min) << ","
                << format_coord(b.y_min) << "," << format_coord(b.x_max) << ","
                << format_coord(b.y_max) << "].";
        }
    }
    return out.str();
}

std::string frame_image_for_mode(const FrameRef& frame, InputMode mode,
                                 const std::string& scenario_id) {
    switch (mode) {
        case InputMode::cam_bev:
            return frame.image_path;
        case InputMode::cam:
            if (!frame.image_path_cam)
                throw DataError("scenario '" + scenario_id +
                                "': frame lacks image_path_cam required by input mode cam");
            return *frame.image_path_cam;
        case InputMode::bev:
            if (!frame.image_path_bev)
                throw DataError("scenario '" + scenario_id +
                                "': frame lacks image_path_bev required by input mode bev");
            return *frame.image_path_bev;
    }
    throw InternalError("unhandled InputMode");
}

} // namespace

PromptTemplates PromptTemplates::load(const std::string& dir) {
    const fs::path base(dir);
    PromptTemplates t;
    try {
        t.system_template = read_file((base / "system.txt").string());
        t.user_template = read_file((base / "user.txt").string());
    } catch (const std::exception& e) {
        throw DataError(std::string("cannot load prompt templates: ") + e.what());
    }
    return t;
}

std::string build_system_prompt(const PromptConfig& config, const PromptTemplates& templates) {
    const bool with_bev = config.input_mode != InputMode::cam;
    return render_template(templates.system_template,
                           {{"bev_sentence", with_bev ? kBevSentence : ""},
                            {"frame_count", std::to_string(config.n_frames)}},
                           "system");
}

UserTurn build_user_message(const Scenario& scenario, const PromptConfig& config,
                            const PromptTemplates& templates) {
    if (scenario.agents.empty())
        throw DataError("scenario '" + scenario.scenario_id + "' has no agents");
    if (config.n_frames <= 0) throw UsageError("n_frames must be positive");
    if (scenario.frames.size() < static_cast<std::size_t>(config.n_frames))
        throw DataError("scenario '" + scenario.scenario_id + "' has " +
                        std::to_string(scenario.frames.size()) + " frames, config needs " +
                        std::to_string(config.n_frames));

    UserTurn turn;
    const bool with_bev = config.input_mode != InputMode::cam;
    turn.text = render_template(templates.user_template,
                                {{"agent_roster", agent_roster_text(scenario, config)},
                                 {"frame_count", std::to_string(config.n_frames)},
                                 {"bev_sentence", with_bev ? kBevSentence : ""}},
                                "user");

    // most recent n_frames, oldest first
    const std::size_t begin = scenario.frames.size() - static_cast<std::size_t>(config.n_frames);
    for (std::size_t i = begin; i < scenario.frames.size(); ++i)
        turn.images.push_back(
            frame_image_for_mode(scenario.frames[i], config.input_mode, scenario.scenario_id));
    return turn;
}

PromptBundle assemble(const Scenario& scenario, const PromptConfig& config,
                      const std::vector<FewShotExample>& fewshots,
                      const PromptTemplates& templates) {
    PromptBundle bundle;
    bundle.system_text = build_system_prompt(config, templates);
    for (const auto& shot : fewshots) {
        validate_fewshot(shot);
        bundle.fewshot_turns.emplace_back(shot.user_text, shot.assistant_text);
    }
    bundle.user_turn = build_user_message(scenario, config, templates);
    return bundle;
}

void validate_fewshot(const FewShotExample& example) {
    // The assistant text must hold a self-consistent ranking: strict-parse it
    // against the ids it itself names.
    const auto list = first_bracketed_list(example.assistant_text);
    if (!list) throw DataError("few-shot assistant_text has no agent ranking list");
    const std::set<AgentId> ids(list->begin(), list->end());
    if (ids.size() != list->size())
        throw DataError("few-shot assistant_text ranking has duplicate ids");
    const ParseResult result = parse_response(example.assistant_text, ids, ParseMode::strict);
    if (const auto* fail = std::get_if<ParseFailure>(&result))
        throw DataError("few-shot assistant_text does not parse strictly: " + fail->detail);
}

std::vector<FewShotExample> load_fewshots(const std::string& dir) {
    const fs::path base(dir);
    if (!fs::is_directory(base)) throw DataError("few-shot directory not found: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(base)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<FewShotExample> out;
    for (const auto& file : files) {
        std::ifstream in(file);
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw DataError("invalid few-shot JSON in " + file.string() + ": " + e.what());
        }
        FewShotExample shot;
        if (doc.contains("images"))
            for (const auto& img : doc["images"]) shot.images.push_back(img.get<std::string>());
        if (!doc.contains("user_text") || !doc.contains("assistant_text"))
            throw DataError("few-shot file " + file.string() +
                            " needs 'user_text' and 'assistant_text'");
        shot.user_text = doc["user_text"].get<std::string>();
        shot.assistant_text = doc["assistant_text"].get<std::string>();
        validate_fewshot(shot);
        out.push_back(std::move(shot));
    }
    return out;
}

} // namespace hardcase
