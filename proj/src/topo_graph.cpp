#include "stb/topo_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <deque>
#include <queue>
#include <stdexcept>

#include <json.hpp>

namespace stb::topo {

namespace {
std::pair<int, int> ekey(int a, int b) { return {std::min(a, b), std::max(a, b)}; }
}  // namespace

void TopoGraph::ensure_stop_node(int feature_dim) {
    if (nodes_.count(kVirtualStopId)) return;
    TopoNode stop;
    stop.id = kVirtualStopId;
    stop.kind = NodeKind::VirtualStop;
    stop.position.setZero();
    stop.feature = FeatVec::Zero(feature_dim);
    stop.last_step = 0;
    nodes_[kVirtualStopId] = std::move(stop);
}

int TopoGraph::nearest_node(const Eigen::Vector2d& pos, double radius) const {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, n] : nodes_) {
        if (n.kind == NodeKind::VirtualStop) continue;
        double d = (n.position - pos).norm();
        if (d <= radius && d < best_d) {
            best = id;
            best_d = d;
        }
    }
    return best;
}

void TopoGraph::set_edge(int a, int b) {
    if (a == b) return;
    edges_[ekey(a, b)] = (nodes_.at(a).position - nodes_.at(b).position).norm();
}

void TopoGraph::update(const geom::Pose& pose, const std::vector<Candidate>& candidates,
                       const FeatVec& pano_mean_feature, int t) {
    if (t <= step_) throw std::invalid_argument("TopoGraph::update: non-monotonic step");
    step_ = t;
    ensure_stop_node(static_cast<int>(pano_mean_feature.cols()));

    Eigen::Vector2d agent{pose.x, pose.y};
    int cur = nearest_node(agent, dedup_radius);
    if (cur < 0) {
        TopoNode n;
        n.id = next_id_++;
        n.kind = NodeKind::Visited;
        n.position = agent;
        cur = n.id;
        nodes_[n.id] = std::move(n);
    } else if (nodes_[cur].kind == NodeKind::Observed) {
        nodes_[cur].kind = NodeKind::Visited;  // promotion on arrival
        nodes_[cur].view_index = -1;
    }
    nodes_[cur].feature = pano_mean_feature;
    nodes_[cur].last_step = t;
    current_visited_ = cur;
    set_edge(kVirtualStopId, cur);

    current_candidates_.clear();
    for (const auto& c : candidates) {
        int target = nearest_node(c.world_pos, dedup_radius);
        if (target < 0) {
            TopoNode n;
            n.id = next_id_++;
            n.kind = NodeKind::Observed;
            n.position = c.world_pos;
            n.feature = c.feature;
            n.last_step = t;
            n.view_index = c.view_index;
            target = n.id;
            nodes_[n.id] = std::move(n);
        } else if (nodes_[target].kind == NodeKind::Observed) {
            // re-observation: freshest view wins, edge re-homes to the
            // current observer so observed nodes keep exactly one edge
            nodes_[target].feature = c.feature;
            nodes_[target].last_step = t;
            nodes_[target].view_index = c.view_index;
            for (auto it = edges_.begin(); it != edges_.end();) {
                if (it->first.first == target || it->first.second == target)
                    it = edges_.erase(it);
                else
                    ++it;
            }
        }
        if (target != cur) set_edge(cur, target);
        if (std::find(current_candidates_.begin(), current_candidates_.end(), target) ==
            current_candidates_.end())
            current_candidates_.push_back(target);
    }
}

std::vector<int> TopoGraph::neighborhood(double radius) const {
    std::vector<int> out;
    if (current_visited_ < 0 || !nodes_.count(current_visited_)) return out;
    const Eigen::Vector2d& ref = nodes_.at(current_visited_).position;
    for (const auto& [id, n] : nodes_) {
        if (n.kind != NodeKind::Visited) continue;
        if ((n.position - ref).norm() < radius) out.push_back(id);
    }
    return out;
}

Eigen::MatrixXi TopoGraph::hop_buckets(const std::vector<int>& ids, int max_bucket) const {
    int N = static_cast<int>(ids.size());
    std::map<int, int> pos;
    for (int i = 0; i < N; ++i) pos[ids[i]] = i;
    Eigen::MatrixXi out = Eigen::MatrixXi::Constant(N, N, max_bucket);
    for (int i = 0; i < N; ++i) {
        // BFS over the whole graph from ids[i]
        std::map<int, int> hops;
        std::deque<int> q{ids[i]};
        hops[ids[i]] = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            if (hops[u] >= max_bucket) continue;
            for (const auto& [v, d] : neighbors(u)) {
                if (!hops.count(v)) {
                    hops[v] = hops[u] + 1;
                    q.push_back(v);
                }
            }
        }
        for (const auto& [id, h] : hops) {
            auto it = pos.find(id);
            if (it != pos.end()) out(i, it->second) = std::min(h, max_bucket);
        }
    }
    return out;
}

std::vector<std::pair<int, double>> TopoGraph::neighbors(int id) const {
    std::vector<std::pair<int, double>> out;
    for (const auto& [k, d] : edges_) {
        if (k.first == id) out.emplace_back(k.second, d);
        else if (k.second == id) out.emplace_back(k.first, d);
    }
    return out;
}

int TopoGraph::degree(int id) const { return static_cast<int>(neighbors(id).size()); }

std::vector<int> TopoGraph::shortest_path(int target) const {
    std::vector<int> empty;
    if (current_visited_ < 0 || !nodes_.count(target)) return empty;
    int src = current_visited_;
    std::map<int, double> dist;
    std::map<int, int> prev;
    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u] + 1e-12) continue;
        if (u == target) break;
        for (const auto& [v, w] : neighbors(u)) {
            if (v == kVirtualStopId) continue;  // stop node is not traversable
            double nd = d + w;
            if (!dist.count(v) || nd < dist[v] - 1e-12) {
                dist[v] = nd;
                prev[v] = u;
                pq.push({nd, v});
            }
        }
    }
    if (!dist.count(target)) return empty;
    std::vector<int> path{target};
    int u = target;
    while (u != src) {
        u = prev[u];
        path.push_back(u);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

void TopoGraph::remove_node(int id) {
    if (id == kVirtualStopId || id == current_visited_) return;
    nodes_.erase(id);
    for (auto it = edges_.begin(); it != edges_.end();) {
        if (it->first.first == id || it->first.second == id)
            it = edges_.erase(it);
        else
            ++it;
    }
    current_candidates_.erase(
        std::remove(current_candidates_.begin(), current_candidates_.end(), id),
        current_candidates_.end());
}

const TopoNode& TopoGraph::node(int id) const { return nodes_.at(id); }

std::vector<int> TopoGraph::node_ids() const {
    std::vector<int> out;
    for (const auto& [id, n] : nodes_) out.push_back(id);
    return out;
}

std::vector<int> TopoGraph::visited_ids() const {
    std::vector<int> out;
    for (const auto& [id, n] : nodes_)
        if (n.kind == NodeKind::Visited) out.push_back(id);
    return out;
}

std::vector<int> TopoGraph::observed_ids() const {
    std::vector<int> out;
    for (const auto& [id, n] : nodes_)
        if (n.kind == NodeKind::Observed) out.push_back(id);
    return out;
}

std::string TopoGraph::dump_json() const {
    nlohmann::json j;
    j["step"] = step_;
    j["current_visited"] = current_visited_;
    j["nodes"] = nlohmann::json::array();
    for (const auto& [id, n] : nodes_) {
        const char* kind = n.kind == NodeKind::VirtualStop ? "virtual_stop"
                           : n.kind == NodeKind::Visited   ? "visited"
                                                           : "observed";
        j["nodes"].push_back({{"id", id},
                              {"kind", kind},
                              {"position", {n.position.x(), n.position.y()}},
                              {"last_step", n.last_step},
                              {"view_index", n.view_index}});
    }
    j["edges"] = nlohmann::json::array();
    for (const auto& [k, d] : edges_)
        j["edges"].push_back({{"a", k.first}, {"b", k.second}, {"distance", d}});
    return j.dump();
}

NodeContext node_context(const TopoNode& n, const geom::Pose& pose, int current_step) {
    NodeContext ctx;
    Eigen::Vector2d ego = geom::world_to_ego(n.position, pose);
    double dist = ego.norm();
    int db = std::min(static_cast<int>(dist / 0.5), kDistBuckets - 1);
    double bearing = std::atan2(ego.y(), ego.x()) * 180.0 / M_PI;
    if (bearing < 0) bearing += 360.0;
    int hb = std::min(static_cast<int>(bearing / 30.0), kHeadingBuckets - 1);
    ctx.rel_id = db * kHeadingBuckets + hb;
    int age = std::max(0, current_step - n.last_step);
    ctx.time_id = std::min(age, kMaxTimeBucket - 1);
    return ctx;
}

}  // namespace stb::topo
