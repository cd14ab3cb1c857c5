#pragma once

#include <random>

#include "stb/grid_map.hpp"
#include "stb/sim/scene.hpp"
#include "stb/topo_graph.hpp"
#include "stb/vgwg.hpp"

namespace stb::sim {

using Mat = Eigen::MatrixXd;

struct EnvConfig {
    int depth_res = 28;         // H' = W'
    int patch = 14;             // P after pooling
    int feat_dim = 32;          // surrogate feature dimension D
    double hfov = 90.0;
    double max_range = 10.0;    // rays beyond this are marked invalid (0)
    double sensing_range = 3.5; // WP mass radius
    double wp_peak_range = 2.0; // preferred candidate distance
    double wp_range_width = 0.6;
    int descriptor_rays = 16;
    geom::HeightBand band{};
};

struct SurrogateObservation {
    std::vector<Eigen::RowVectorXd> view_features;  // 12 x D
    std::vector<Mat> depth_images;                  // 12 x (H' x W')
};

struct WpResult {
    vgwg::Heatmap distribution;  // P_t, sums to 1
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> nav_mask;
    bool fallback = false;
};

struct ExpertResult {
    Eigen::Vector2d waypoint;   // a*_t
    double geodesic = 0.0;      // shortest-path length pose -> goal
};

/// Deterministic sensing and supervision around one loaded scene. Surrogate
/// "visual" features are a fixed seeded random projection of a geometric
/// descriptor (ray distances + visible landmark labels), so identical poses
/// always produce identical observations.
class Env {
public:
    // `label_vocab` fixes the landmark-label slots of the descriptor; it must
    // be shared across scenes so features are comparable.
    Env(const Scene& scene, const EnvConfig& cfg,
        const std::vector<std::string>& label_vocab);

    SurrogateObservation render_panorama(const geom::Pose& pose) const;
    map::PanoramaFeatures to_panorama(const SurrogateObservation& obs) const;

    WpResult surrogate_wp(const geom::Pose& pose, const geom::GridSpec& spec) const;

    ExpertResult expert_action(const geom::Pose& pose) const;
    double geodesic(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const;

    // Executes one low-level action with collision clamping (blocked forward
    // steps leave the pose unchanged).
    geom::Pose step(const geom::Pose& pose, geom::Action a) const;

    const Scene& scene() const { return scene_; }
    const EnvConfig& config() const { return cfg_; }
    int view_of_bearing(const geom::Pose& pose, const Eigen::Vector2d& world) const;

private:
    Eigen::RowVectorXd view_feature(const geom::Pose& pose, int view) const;

    Scene scene_;
    EnvConfig cfg_;
    std::vector<std::string> labels_;
    Mat projection_;  // K x D, fixed seed
};

}  // namespace stb::sim
