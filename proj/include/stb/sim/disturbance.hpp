#pragma once

#include <random>
#include <string>
#include <vector>

#include "stb/sim/env.hpp"
#include "stb/topo_graph.hpp"

namespace stb::sim {

enum class DisturbKind { None, FovLoss, LocalNoise, MemoryDecay };

struct Disturbance {
    DisturbKind kind = DisturbKind::None;
    double level = 0.0;  // in [0, 1]
    std::uint64_t seed = 0;

    bool active() const { return kind != DisturbKind::None && level > 0.0; }
};

// Parses "fov_loss:0.5" style specs; "none" or "" -> inactive. Throws
// std::invalid_argument on unknown kind or level outside [0,1].
Disturbance parse_disturbance(const std::string& spec);
std::string disturb_kind_name(DisturbKind k);

// Field-of-view loss: replaces round(level * k) candidates with uniform
// random free-space waypoints (feature/view re-derived from the panorama).
// Level 0 performs no RNG draws and leaves the input untouched.
void disturb_candidates(const Env& env, const geom::Pose& pose,
                        const SurrogateObservation& obs,
                        std::vector<topo::Candidate>& candidates, double level,
                        std::mt19937_64& rng);

// Local sensing noise: per-row box blur of the depth images with radius
// round(3 * level) plus zero-masking of round(level * 12) view features.
void disturb_observation(SurrogateObservation& obs, double level,
                         std::mt19937_64& rng);

// Long-term memory decay: removes round(level * n) non-current visited nodes.
void disturb_graph(topo::TopoGraph& graph, double level, std::mt19937_64& rng);

}  // namespace stb::sim
