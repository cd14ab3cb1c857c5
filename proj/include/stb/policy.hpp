#pragma once

#include <string>
#include <vector>

#include "stb/encoder.hpp"
#include "stb/grid_map.hpp"
#include "stb/mgaf.hpp"
#include "stb/sim/disturbance.hpp"
#include "stb/sim/env.hpp"
#include "stb/topo_graph.hpp"
#include "stb/vgwg.hpp"

namespace stb::policy {

using Ref = nn::Tape::Ref;

enum class ExpertMode { Topo, Grid, Hybrid };

ExpertMode parse_expert(const std::string& name);
std::string expert_name(ExpertMode m);

/// One full encoder pass over the current maps: instruction embedding,
/// grid-to-graph transfer, graph transformer, graph-to-grid transfer, and the
/// heatmap head. All refs live on the caller's tape.
struct StepForward {
    std::vector<int> node_ids;  // sorted; rows of `aligned`
    Ref instr = -1;             // L x D
    Ref text = -1;              // L x D post-transformer text stream
    Ref aligned = -1;           // N x D node features
    Ref fused_grid = -1;        // (U*V) x D
    Ref gah = -1;               // (U*V) x (m*n) heatmap blocks
    bool empty_grid = false;
    int excluded_nodes = 0;     // neighborhood nodes outside the grid footprint
};

StepForward encode_step(nn::Tape& t, const enc::Model& model,
                        const topo::TopoGraph& graph, const map::GridMap& grid,
                        const geom::Pose& pose, const std::vector<int>& instr_ids,
                        bool use_mgaf, double neighborhood_radius);

/// Hybrid action scores. Graph targets cover the virtual stop plus every
/// observed node; grid targets cover the current candidates whose projected
/// cell lies inside the grid footprint.
struct ActionScores {
    std::vector<int> graph_targets;   // node ids, index 0 = virtual stop
    std::vector<double> graph_scores;
    std::vector<int> grid_targets;    // node ids (subset of current candidates)
    std::vector<double> grid_scores;
    double gamma = 0.5;

    Ref graph_ref = -1;  // 1 x |graph_targets|
    Ref grid_ref = -1;   // 1 x |grid_targets| (or -1 when empty)
    Ref fused_ref = -1;  // 1 x |graph_targets|, the Eq.-10 style mixed logits
};

ActionScores predict_actions(nn::Tape& t, const enc::Model& model,
                             const StepForward& sf, const topo::TopoGraph& graph,
                             const geom::Pose& pose);

// Weighted graph/grid fusion: take the graph argmax; when it is one of the
// grid-scored current candidates, re-choose among those by
// gamma*graph + (1-gamma)*grid, otherwise return it directly (graph-level
// backtracking). Ties break toward the lowest node id.
int fuse_action(const ActionScores& s, ExpertMode mode = ExpertMode::Hybrid);

struct EpisodeConfig {
    int t_m = 15;                      // decision-step cap
    vgwg::GahConfig gah;               // delta, rho, sigma, k
    bool use_mgaf = true;
    bool use_vgwg = true;              // off forces delta = 0
    ExpertMode expert = ExpertMode::Hybrid;
    double neighborhood_radius = 5.0;  // meters, node-to-grid broadcast set
    std::uint64_t seed = 0;
    sim::Disturbance disturb;
    int low_level_budget = 60;         // primitive actions per decision step
    geom::GridSpec grid;
};

struct StepRecord {
    geom::Pose pose;
    std::vector<Eigen::Vector2d> w;      // stage-1 candidates
    std::vector<Eigen::Vector2d> w_hat;  // stage-2 (resampled) candidates
    double p_sum = 0.0;                  // waypoint-prior mass (should be 1)
    double h_max = 0.0;                  // predicted heatmap peak
    double hhat_max = 0.0;               // fused heatmap peak
    int chosen = 0;                      // node id; 0 = stop
    double gamma = 0.5;
    std::uint64_t stage1_graph_hash = 0;
    std::uint64_t graph_hash = 0;        // persisted (stage-2) graph
    std::uint64_t grid_hash = 0;
};

struct EpisodeRecord {
    static constexpr int kSchemaVersion = 1;
    std::string scene_id;
    std::vector<std::string> instruction;
    std::vector<StepRecord> steps;
    std::vector<geom::Pose> trajectory;  // every executed pose, start included
    geom::Pose final_pose;
    Eigen::Vector2d goal{0.0, 0.0};
    double geodesic = 0.0;               // start -> goal shortest path
    std::string stop_reason;             // stop_action | max_steps | aborted
    bool partial = false;

    std::string to_jsonl() const;  // one JSON object, no trailing newline
};

EpisodeRecord parse_episode(const std::string& json_line);

EpisodeRecord run_episode(const sim::Env& env, const enc::Model& model,
                          const EpisodeConfig& cfg);

// Low-level executor: rotate-then-forward toward `target`, re-planning on the
// occupancy raster when the straight line is blocked. Appends every executed
// pose to `traj`. Returns the final pose.
geom::Pose navigate_to(const sim::Env& env, geom::Pose pose,
                       const Eigen::Vector2d& target,
                       std::vector<geom::Pose>& traj, int budget);

// Builds the step's candidate set from sampled waypoints (feature = the view
// feature covering the waypoint's bearing).
std::vector<topo::Candidate> make_candidates(
    const sim::Env& env, const geom::Pose& pose,
    const sim::SurrogateObservation& obs,
    const std::vector<Eigen::Vector2d>& waypoints);

}  // namespace stb::policy
