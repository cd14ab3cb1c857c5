#include "stb/sim/disturbance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stb::sim {

Disturbance parse_disturbance(const std::string& spec) {
    Disturbance d;
    if (spec.empty() || spec == "none") return d;
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon);
    if (kind == "fov_loss")
        d.kind = DisturbKind::FovLoss;
    else if (kind == "local_noise")
        d.kind = DisturbKind::LocalNoise;
    else if (kind == "memory_decay")
        d.kind = DisturbKind::MemoryDecay;
    else
        throw std::invalid_argument("unknown disturbance kind: " + kind);
    if (colon != std::string::npos) d.level = std::stod(spec.substr(colon + 1));
    if (d.level < 0.0 || d.level > 1.0)
        throw std::invalid_argument("disturbance level outside [0,1]: " + spec);
    return d;
}

std::string disturb_kind_name(DisturbKind k) {
    switch (k) {
        case DisturbKind::FovLoss: return "fov_loss";
        case DisturbKind::LocalNoise: return "local_noise";
        case DisturbKind::MemoryDecay: return "memory_decay";
        default: return "none";
    }
}

void disturb_candidates(const Env& env, const geom::Pose& pose,
                        const SurrogateObservation& obs,
                        std::vector<topo::Candidate>& candidates, double level,
                        std::mt19937_64& rng) {
    if (level <= 0.0 || candidates.empty()) return;
    int k = static_cast<int>(candidates.size());
    int n = static_cast<int>(std::lround(level * k));
    if (n <= 0) return;
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const Scene& scene = env.scene();
    std::uniform_real_distribution<double> ux(0.0, scene.bounds.x());
    std::uniform_real_distribution<double> uy(0.0, scene.bounds.y());
    for (int i = 0; i < n; ++i) {
        Eigen::Vector2d p;
        do {
            p = {ux(rng), uy(rng)};
        } while (!scene.free_point(p));
        topo::Candidate& c = candidates[order[i]];
        c.world_pos = p;
        c.view_index = env.view_of_bearing(pose, p);
        c.feature = obs.view_features[c.view_index];
    }
}

void disturb_observation(SurrogateObservation& obs, double level,
                         std::mt19937_64& rng) {
    if (level <= 0.0) return;
    int radius = static_cast<int>(std::lround(3.0 * level));
    if (radius > 0) {
        for (auto& img : obs.depth_images) {
            Mat blurred = img;
            int W = static_cast<int>(img.cols());
            for (int r = 0; r < img.rows(); ++r)
                for (int c = 0; c < W; ++c) {
                    double sum = 0.0;
                    int n = 0;
                    for (int k = std::max(0, c - radius);
                         k <= std::min(W - 1, c + radius); ++k) {
                        sum += img(r, k);
                        ++n;
                    }
                    blurred(r, c) = sum / n;
                }
            img = std::move(blurred);
        }
    }
    int views = static_cast<int>(obs.view_features.size());
    int masked = static_cast<int>(std::lround(level * views));
    if (masked <= 0) return;
    std::vector<int> order(views);
    for (int i = 0; i < views; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < masked; ++i) obs.view_features[order[i]].setZero();
}

void disturb_graph(topo::TopoGraph& graph, double level, std::mt19937_64& rng) {
    if (level <= 0.0) return;
    std::vector<int> victims;
    for (int id : graph.visited_ids())
        if (id != graph.current_visited()) victims.push_back(id);
    int n = static_cast<int>(std::lround(level * victims.size()));
    if (n <= 0) return;
    std::shuffle(victims.begin(), victims.end(), rng);
    for (int i = 0; i < n; ++i) graph.remove_node(victims[i]);
}

}  // namespace stb::sim
