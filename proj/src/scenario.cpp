#include "hardcase/scenario.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hardcase/errors.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hardcase {

std::string to_string(AgentType type) {
    switch (type) {
        case AgentType::car: return "car";
        case AgentType::truck: return "truck";
        case AgentType::pedestrian: return "pedestrian";
        case AgentType::cyclist: return "cyclist";
        case AgentType::motorcycle: return "motorcycle";
        case AgentType::other: return "other";
    }
    throw InternalError("unhandled AgentType");
}

AgentType agent_type_from_string(const std::string& s) {
    if (s == "car") return AgentType::car;
    if (s == "truck") return AgentType::truck;
    if (s == "pedestrian") return AgentType::pedestrian;
    if (s == "cyclist") return AgentType::cyclist;
    if (s == "motorcycle") return AgentType::motorcycle;
    if (s == "other") return AgentType::other;
    throw DataError("unknown agent_type '" + s + "'");
}

std::vector<AgentId> Scenario::agent_ids() const {
    std::vector<AgentId> ids;
    ids.reserve(agents.size());
    for (const auto& a : agents) ids.push_back(a.agent_id);
    return ids;
}

const AgentRecord& Scenario::agent(AgentId id) const {
    for (const auto& a : agents)
        if (a.agent_id == id) return a;
    throw DataError("scenario '" + scenario_id + "': no agent with id " + std::to_string(id));
}

namespace {

double step_distance(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

void check_pair(const Trajectory& mode, const Trajectory& gt,
                const std::optional<std::vector<bool>>& mask) {
    if (mode.points.size() != gt.points.size())
        throw DataError("trajectory length mismatch: " + std::to_string(mode.points.size()) +
                        " vs " + std::to_string(gt.points.size()));
    if (mask) {
        if (mask->size() != gt.points.size())
            throw DataError("validity mask length mismatch");
        if (std::none_of(mask->begin(), mask->end(), [](bool b) { return b; }))
            throw DataError("validity mask has no valid steps");
    }
}

} // namespace

double ade(const Trajectory& mode, const Trajectory& gt,
           const std::optional<std::vector<bool>>& mask) {
    check_pair(mode, gt, mask);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < gt.points.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        sum += step_distance(mode.points[i], gt.points[i]);
        ++n;
    }
    if (n == 0) throw DataError("no valid steps");
    return sum / static_cast<double>(n);
}

double fde(const Trajectory& mode, const Trajectory& gt,
           const std::optional<std::vector<bool>>& mask) {
    check_pair(mode, gt, mask);
    if (gt.points.empty()) throw DataError("empty trajectory");
    std::size_t last = gt.points.size();
    while (last > 0) {
        --last;
        if (!mask || (*mask)[last]) return step_distance(mode.points[last], gt.points[last]);
    }
    throw DataError("no valid steps");
}

double min_ade(const AgentRecord& agent) {
    if (agent.modes.empty())
        throw DataError("agent " + std::to_string(agent.agent_id) + " has no prediction modes");
    double best = ade(agent.modes.front(), agent.ground_truth, agent.validity_mask);
    for (std::size_t i = 1; i < agent.modes.size(); ++i)
        best = std::min(best, ade(agent.modes[i], agent.ground_truth, agent.validity_mask));
    return best;
}

double min_fde(const AgentRecord& agent) {
    if (agent.modes.empty())
        throw DataError("agent " + std::to_string(agent.agent_id) + " has no prediction modes");
    double best = fde(agent.modes.front(), agent.ground_truth, agent.validity_mask);
    for (std::size_t i = 1; i < agent.modes.size(); ++i)
        best = std::min(best, fde(agent.modes[i], agent.ground_truth, agent.validity_mask));
    return best;
}

GtRanking gt_hardness_ranking(const Scenario& scenario) {
    GtRanking out;
    for (const auto& agent : scenario.agents)
        out.relevance[agent.agent_id] = min_ade(agent);
    out.ranking = scenario.agent_ids();
    std::sort(out.ranking.begin(), out.ranking.end(), [&](AgentId a, AgentId b) {
        const double ra = out.relevance.at(a);
        const double rb = out.relevance.at(b);
        if (ra != rb) return ra > rb;
        return a < b;
    });
    return out;
}

namespace {

[[noreturn]] void schema_error(const std::string& scenario_id, const std::string& field,
                               const std::string& what) {
    throw DataError("scenario '" + scenario_id + "' field '" + field + "': " + what);
}

bool all_finite(const Trajectory& t) {
    for (const auto& p : t.points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    return true;
}

} // namespace

void validate_scenario(Scenario& scenario) {
    const std::string& sid = scenario.scenario_id;
    if (sid.empty()) throw DataError("scenario with empty scenario_id");
    if (scenario.horizon_steps <= 0) schema_error(sid, "horizon_steps", "must be positive");
    if (scenario.frames.empty()) schema_error(sid, "frames", "must be non-empty");
    for (std::size_t i = 1; i < scenario.frames.size(); ++i) {
        if (!(scenario.frames[i].timestamp_s > scenario.frames[i - 1].timestamp_s))
            schema_error(sid, "frames[" + std::to_string(i) + "].timestamp_s",
                         "timestamps must be strictly increasing");
    }
    if (scenario.agents.empty()) schema_error(sid, "agents", "must be non-empty");

    std::set<AgentId> seen;
    const std::size_t horizon = static_cast<std::size_t>(scenario.horizon_steps);
    for (std::size_t ai = 0; ai < scenario.agents.size(); ++ai) {
        const auto& agent = scenario.agents[ai];
        const std::string base = "agents[" + std::to_string(ai) + "]";
        if (agent.agent_id <= 0) schema_error(sid, base + ".agent_id", "must be a positive integer");
        if (!seen.insert(agent.agent_id).second)
            schema_error(sid, base + ".agent_id",
                         "duplicate agent id " + std::to_string(agent.agent_id));
        if (agent.modes.empty()) schema_error(sid, base + ".modes", "at least one mode required");
        if (agent.ground_truth.points.size() != horizon)
            schema_error(sid, base + ".ground_truth",
                         "expected " + std::to_string(horizon) + " points, got " +
                             std::to_string(agent.ground_truth.points.size()));
        if (!all_finite(agent.ground_truth))
            schema_error(sid, base + ".ground_truth", "coordinates must be finite");
        for (std::size_t mi = 0; mi < agent.modes.size(); ++mi) {
            if (agent.modes[mi].points.size() != horizon)
                schema_error(sid, base + ".modes[" + std::to_string(mi) + "]",
                             "expected " + std::to_string(horizon) + " points, got " +
                                 std::to_string(agent.modes[mi].points.size()));
            if (!all_finite(agent.modes[mi]))
                schema_error(sid, base + ".modes[" + std::to_string(mi) + "]",
                             "coordinates must be finite");
        }
        if (agent.validity_mask) {
            if (agent.validity_mask->size() != horizon)
                schema_error(sid, base + ".validity_mask",
                             "expected " + std::to_string(horizon) + " entries");
            if (std::none_of(agent.validity_mask->begin(), agent.validity_mask->end(),
                             [](bool b) { return b; }))
                schema_error(sid, base + ".validity_mask", "needs at least one valid step");
        }
        if (agent.pixel_box) {
            if (!(agent.pixel_box->x_max > agent.pixel_box->x_min) ||
                !(agent.pixel_box->y_max > agent.pixel_box->y_min))
                schema_error(sid, base + ".pixel_box", "width and height must be positive");
        }
    }

    std::sort(scenario.agents.begin(), scenario.agents.end(),
              [](const AgentRecord& a, const AgentRecord& b) { return a.agent_id < b.agent_id; });
}

namespace {

Trajectory trajectory_from_json(const json& arr, const std::string& sid, const std::string& field) {
    if (!arr.is_array()) schema_error(sid, field, "expected an array of [x,y] pairs");
    Trajectory t;
    t.points.reserve(arr.size());
    for (const auto& p : arr) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            schema_error(sid, field, "each point must be a numeric [x,y] pair");
        t.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return t;
}

json trajectory_to_json(const Trajectory& t) {
    json arr = json::array();
    for (const auto& p : t.points) arr.push_back({p.x, p.y});
    return arr;
}

} // namespace

Scenario scenario_from_json(const json& doc, const std::string& origin) {
    if (!doc.is_object()) throw DataError(origin + ": scenario document must be a JSON object");
    Scenario s;
    if (!doc.contains("scenario_id") || !doc["scenario_id"].is_string())
        throw DataError(origin + ": field 'scenario_id' missing or not a string");
    s.scenario_id = doc["scenario_id"].get<std::string>();
    const std::string& sid = s.scenario_id;

    s.horizon_steps = 12;
    if (doc.contains("horizon_steps")) {
        if (!doc["horizon_steps"].is_number_integer())
            schema_error(sid, "horizon_steps", "must be an integer");
        s.horizon_steps = doc["horizon_steps"].get<int>();
    }

    if (!doc.contains("frames")) schema_error(sid, "frames", "missing");
    for (const auto& f : doc["frames"]) {
        FrameRef frame;
        if (!f.contains("image_path") || !f["image_path"].is_string())
            schema_error(sid, "frames[].image_path", "missing or not a string");
        frame.image_path = f["image_path"].get<std::string>();
        if (f.contains("image_path_cam")) frame.image_path_cam = f["image_path_cam"].get<std::string>();
        if (f.contains("image_path_bev")) frame.image_path_bev = f["image_path_bev"].get<std::string>();
        if (!f.contains("timestamp_s") || !f["timestamp_s"].is_number())
            schema_error(sid, "frames[].timestamp_s", "missing or not a number");
        frame.timestamp_s = f["timestamp_s"].get<double>();
        if (f.contains("description")) frame.description = f["description"].get<std::string>();
        s.frames.push_back(std::move(frame));
    }

    if (!doc.contains("agents")) schema_error(sid, "agents", "missing");
    for (const auto& a : doc["agents"]) {
        AgentRecord agent;
        if (!a.contains("agent_id") || !a["agent_id"].is_number_integer())
            schema_error(sid, "agents[].agent_id", "missing or not an integer");
        agent.agent_id = a["agent_id"].get<AgentId>();
        if (!a.contains("agent_type") || !a["agent_type"].is_string())
            schema_error(sid, "agents[].agent_type", "missing or not a string");
        agent.agent_type = agent_type_from_string(a["agent_type"].get<std::string>());
        if (a.contains("pixel_box")) {
            const auto& b = a["pixel_box"];
            if (!b.is_array() || b.size() != 4)
                schema_error(sid, "agents[].pixel_box", "expected [x_min,y_min,x_max,y_max]");
            agent.pixel_box = PixelBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                       b[3].get<double>()};
        }
        if (!a.contains("modes")) schema_error(sid, "agents[].modes", "missing");
        for (std::size_t mi = 0; mi < a["modes"].size(); ++mi)
            agent.modes.push_back(trajectory_from_json(
                a["modes"][mi], sid, "agents[].modes[" + std::to_string(mi) + "]"));
        if (!a.contains("ground_truth")) schema_error(sid, "agents[].ground_truth", "missing");
        agent.ground_truth = trajectory_from_json(a["ground_truth"], sid, "agents[].ground_truth");
        if (a.contains("validity_mask")) {
            std::vector<bool> mask;
            for (const auto& v : a["validity_mask"]) {
                if (!v.is_boolean()) schema_error(sid, "agents[].validity_mask", "must be booleans");
                mask.push_back(v.get<bool>());
            }
            agent.validity_mask = std::move(mask);
        }
        s.agents.push_back(std::move(agent));
    }

    validate_scenario(s);
    return s;
}

json scenario_to_json(const Scenario& scenario) {
    json doc;
    doc["scenario_id"] = scenario.scenario_id;
    doc["horizon_steps"] = scenario.horizon_steps;
    doc["frames"] = json::array();
    for (const auto& f : scenario.frames) {
        json jf;
        jf["image_path"] = f.image_path;
        if (f.image_path_cam) jf["image_path_cam"] = *f.image_path_cam;
        if (f.image_path_bev) jf["image_path_bev"] = *f.image_path_bev;
        jf["timestamp_s"] = f.timestamp_s;
        if (f.description) jf["description"] = *f.description;
        doc["frames"].push_back(std::move(jf));
    }
    doc["agents"] = json::array();
    for (const auto& a : scenario.agents) {
        json ja;
        ja["agent_id"] = a.agent_id;
        ja["agent_type"] = to_string(a.agent_type);
        if (a.pixel_box)
            ja["pixel_box"] = {a.pixel_box->x_min, a.pixel_box->y_min, a.pixel_box->x_max,
                               a.pixel_box->y_max};
        ja["modes"] = json::array();
        for (const auto& m : a.modes) ja["modes"].push_back(trajectory_to_json(m));
        ja["ground_truth"] = trajectory_to_json(a.ground_truth);
        if (a.validity_mask) {
            json mask = json::array();
            for (bool b : *a.validity_mask) mask.push_back(b);
            ja["validity_mask"] = std::move(mask);
        }
        doc["agents"].push_back(std::move(ja));
    }
    return doc;
}

namespace {

Scenario load_one(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read scenario file: " + file.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("invalid JSON in " + file.string() + ": " + e.what());
    }
    return scenario_from_json(doc, file.string());
}

} // namespace

std::vector<Scenario> load_scenarios(const std::string& path) {
    const fs::path p(path);
    std::vector<Scenario> scenarios;
    if (fs::is_directory(p)) {
        for (const auto& entry : fs::directory_iterator(p)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
            scenarios.push_back(load_one(entry.path()));
        }
        if (scenarios.empty()) throw DataError("no scenario *.json files in " + path);
    } else if (fs::is_regular_file(p)) {
        scenarios.push_back(load_one(p));
    } else {
        throw DataError("no such file or directory: " + path);
    }

    std::sort(scenarios.begin(), scenarios.end(),
              [](const Scenario& a, const Scenario& b) { return a.scenario_id < b.scenario_id; });
    for (std::size_t i = 1; i < scenarios.size(); ++i) {
        if (scenarios[i].scenario_id == scenarios[i - 1].scenario_id)
            throw DataError("duplicate scenario_id '" + scenarios[i].scenario_id + "'");
    }
    return scenarios;
}

} // namespace hardcase
