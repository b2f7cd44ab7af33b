#pragma once

#include <cstdint>
#include <vector>

#include "hardcase/scenario.h"

namespace hardcase::testsupport {

struct SynthOptions {
    int min_agents = 5;
    int max_agents = 5;
    int n_modes = 3;
    int horizon = 12;
    bool with_boxes = true;
    bool with_variants = true; // cam-only / bev-only image alternates
};

// Deterministic scenario with distinct per-agent minADE values: the best
// mode is the ground truth shifted by a known offset, so min_ade(agent)
// equals the drawn target exactly.
Scenario make_scenario(std::uint64_t seed, int index, const SynthOptions& options = {});

std::vector<Scenario> make_scenarios(int count, std::uint64_t seed,
                                     const SynthOptions& options = {});

} // namespace hardcase::testsupport
