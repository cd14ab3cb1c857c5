#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stb/geometry.hpp"

namespace stb::topo {

using Mat = Eigen::MatrixXd;
using FeatVec = Eigen::RowVectorXd;

enum class NodeKind { VirtualStop, Visited, Observed };

constexpr int kVirtualStopId = 0;

struct TopoNode {
    int id = 0;
    NodeKind kind = NodeKind::Observed;
    Eigen::Vector2d position{0.0, 0.0};  // world frame
    FeatVec feature;
    int last_step = 0;
    int view_index = -1;  // observed nodes only
};

struct Candidate {
    Eigen::Vector2d world_pos;
    int view_index = 0;
    FeatVec feature;
};

/// Global topological memory: visited + observed waypoints plus the virtual
/// stop node (id 0, zero position) that models the stop action.
class TopoGraph {
public:
    // Inserts/refreshes the visited node at `pose`, merges or inserts the
    // step's candidates as observed nodes, and rebuilds the step's edges.
    // Throws on non-monotonic t.
    void update(const geom::Pose& pose, const std::vector<Candidate>& candidates,
                const FeatVec& pano_mean_feature, int t);

    // Visited nodes strictly closer than `radius` to the current visited node
    // (includes it; empty when no visited node exists).
    std::vector<int> neighborhood(double radius) const;

    // Unweighted hop distance matrix over `ids` (in the given order), bucketed
    // into {0,1,2,3,>=4}.
    Eigen::MatrixXi hop_buckets(const std::vector<int>& ids, int max_bucket = 4) const;

    // Shortest path by edge distance from the current visited node to
    // `target`; returns the node id sequence including both endpoints.
    std::vector<int> shortest_path(int target) const;

    // Drops a node and its edges (used by the memory-decay disturbance).
    void remove_node(int id);

    const TopoNode& node(int id) const;
    bool has_node(int id) const { return nodes_.count(id) > 0; }
    std::vector<int> node_ids() const;            // sorted
    std::vector<int> visited_ids() const;         // sorted
    std::vector<int> observed_ids() const;        // sorted
    const std::vector<int>& current_candidates() const { return current_candidates_; }
    int current_visited() const { return current_visited_; }
    int step() const { return step_; }
    std::size_t node_count() const { return nodes_.size(); }

    const std::map<std::pair<int, int>, double>& edges() const { return edges_; }
    int degree(int id) const;
    std::vector<std::pair<int, double>> neighbors(int id) const;

    double dedup_radius = 0.5;  // meters

    std::string dump_json() const;

private:
    int nearest_node(const Eigen::Vector2d& pos, double radius) const;
    void set_edge(int a, int b);
    void ensure_stop_node(int feature_dim);

    std::map<int, TopoNode> nodes_;
    std::map<std::pair<int, int>, double> edges_;  // key: (min id, max id)
    std::vector<int> current_candidates_;
    int current_visited_ = -1;
    int next_id_ = 1;
    int step_ = -1;
};

// Context embedding ids for a node relative to the agent: relative-position
// bucket (0.5 m distance x 30 deg heading buckets) and a capped time bucket.
struct NodeContext {
    int rel_id = 0;
    int time_id = 0;
};
constexpr int kDistBuckets = 24;
constexpr int kHeadingBuckets = 12;
constexpr int kRelBuckets = kDistBuckets * kHeadingBuckets;
constexpr int kMaxTimeBucket = 32;

NodeContext node_context(const TopoNode& n, const geom::Pose& pose, int current_step);

}  // namespace stb::topo
