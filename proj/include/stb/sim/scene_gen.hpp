#pragma once

#include <cstdint>
#include <string>

#include "stb/sim/scene.hpp"

namespace stb::sim {

enum class SceneFamily { OpenRoom, Corridor, MultiRoom };

const char* family_name(SceneFamily f);

// Builds one valid scene of the given family. Retries internally with derived
// sub-seeds until start/goal are free, the goal is reachable, and the geodesic
// start-goal length falls in [4, 9] m. The goal always sits next to a landmark
// whose label is unique within the scene, so instructions are unambiguous.
Scene generate_scene(SceneFamily family, std::uint64_t seed);

struct SceneSetSummary {
    int train = 0;
    int eval = 0;
};

// Writes `per_family` scenes of each of the three families to
// <out_dir>/train and <out_dir>/eval (80/20 split).
SceneSetSummary generate_scene_set(const std::string& out_dir, int per_family,
                                   std::uint64_t master_seed);

}  // namespace stb::sim
