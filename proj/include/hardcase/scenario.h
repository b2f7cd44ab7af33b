#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hardcase {

using AgentId = std::int64_t;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Fixed-length 2D track in ego-relative meters.
struct Trajectory {
    std::vector<Point> points;
};

enum class AgentType { car, truck, pedestrian, cyclist, motorcycle, other };

std::string to_string(AgentType type);
AgentType agent_type_from_string(const std::string& s);

/// Axis-aligned box in composite-image pixel coordinates.
struct PixelBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
};

struct AgentRecord {
    AgentId agent_id = 0;
    AgentType agent_type = AgentType::other;
    std::optional<PixelBox> pixel_box;
    std::vector<Trajectory> modes;
    Trajectory ground_truth;
    // Per future step; masked-out steps are excluded from displacement errors.
    std::optional<std::vector<bool>> validity_mask;
};

struct FrameRef {
    std::string image_path; // composite: six camera views + BEV
    std::optional<std::string> image_path_cam;
    std::optional<std::string> image_path_bev;
    double timestamp_s = 0.0;
    std::optional<std::string> description;
};

struct Scenario {
    std::string scenario_id;
    int horizon_steps = 12;
    std::vector<FrameRef> frames; // temporally ordered past -> present
    std::vector<AgentRecord> agents; // sorted by agent_id after validation

    std::vector<AgentId> agent_ids() const;
    const AgentRecord& agent(AgentId id) const;
};

/// Agent IDs ordered hardest first.
using Ranking = std::vector<AgentId>;

/// agent_id -> minADE; the NDCG relevance weights and the GT-ranking key.
using RelevanceMap = std::map<AgentId, double>;

// Displacement errors. `mask`, when present, must match the trajectory length
// and have at least one valid step; FDE is taken at the last valid step.
double ade(const Trajectory& mode, const Trajectory& gt,
           const std::optional<std::vector<bool>>& mask = std::nullopt);
double fde(const Trajectory& mode, const Trajectory& gt,
           const std::optional<std::vector<bool>>& mask = std::nullopt);

double min_ade(const AgentRecord& agent);
double min_fde(const AgentRecord& agent);

struct GtRanking {
    Ranking ranking; // descending minADE, ties broken by ascending agent_id
    RelevanceMap relevance;
};

GtRanking gt_hardness_ranking(const Scenario& scenario);

// Throws DataError naming the offending field and scenario_id. Sorts agents
// by agent_id as a side effect so roster order is canonical.
void validate_scenario(Scenario& scenario);

Scenario scenario_from_json(const nlohmann::json& doc, const std::string& origin);
nlohmann::json scenario_to_json(const Scenario& scenario);

// `path` is a scenario JSON file or a directory of *.json files. Result is
// ordered by scenario_id; duplicate IDs are an error.
std::vector<Scenario> load_scenarios(const std::string& path);

} // namespace hardcase
