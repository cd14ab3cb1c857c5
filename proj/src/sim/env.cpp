#include "stb/sim/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stb::sim {

namespace {
constexpr std::uint64_t kProjectionSeed = 0x57b005732fea7ULL;
}

Env::Env(const Scene& scene, const EnvConfig& cfg,
         const std::vector<std::string>& label_vocab)
    : scene_(scene), cfg_(cfg), labels_(label_vocab) {
    int K = cfg_.descriptor_rays + static_cast<int>(labels_.size());
    projection_.resize(K, cfg_.feat_dim);
    std::mt19937_64 rng(kProjectionSeed);
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(double(K)));
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < cfg_.feat_dim; ++j) projection_(i, j) = dist(rng);
}

Eigen::RowVectorXd Env::view_feature(const geom::Pose& pose, int view) const {
    int K = static_cast<int>(projection_.rows());
    Eigen::RowVectorXd desc = Eigen::RowVectorXd::Zero(K);
    Eigen::Vector2d origin{pose.x, pose.y};
    double view_az = pose.heading + geom::kViewSpacing * view;

    // ray-distance part: descriptor_rays rays spread across the view sector
    for (int r = 0; r < cfg_.descriptor_rays; ++r) {
        double frac = (r + 0.5) / cfg_.descriptor_rays - 0.5;  // [-0.5, 0.5)
        double az = geom::deg2rad(view_az + frac * geom::kViewSpacing);
        double d = std::min(ray_distance(scene_, origin, az), cfg_.max_range);
        desc(r) = std::exp(-d / 3.0);
    }

    // landmark part: visible labels weighted by inverse distance
    double half_sector = geom::kViewSpacing / 2.0;
    for (const auto& lm : scene_.landmarks) {
        Eigen::Vector2d rel = lm.pos - origin;
        double dist = rel.norm();
        if (dist < 1e-9) continue;
        double bearing = std::atan2(rel.y(), rel.x()) * 180.0 / M_PI;
        double diff = std::remainder(bearing - view_az, 360.0);
        if (std::abs(diff) > half_sector) continue;
        if (!scene_.line_of_sight(origin, lm.pos)) continue;
        auto it = std::find(labels_.begin(), labels_.end(), lm.label);
        if (it == labels_.end()) continue;
        int slot = cfg_.descriptor_rays + static_cast<int>(it - labels_.begin());
        desc(slot) += 1.0 / (1.0 + dist);
    }
    return (desc * projection_).array().tanh().matrix();
}

SurrogateObservation Env::render_panorama(const geom::Pose& pose) const {
    SurrogateObservation obs;
    obs.view_features.reserve(geom::kNumViews);
    obs.depth_images.reserve(geom::kNumViews);
    Eigen::Vector2d origin{pose.x, pose.y};
    int H = cfg_.depth_res, W = cfg_.depth_res;
    for (int i = 0; i < geom::kNumViews; ++i) {
        obs.view_features.push_back(view_feature(pose, i));
        Mat img(H, W);
        double view_az = pose.heading + geom::kViewSpacing * i;
        for (int c = 0; c < W; ++c) {
            double az = geom::deg2rad(view_az + geom::column_azimuth(c, W, cfg_.hfov));
            double d = ray_distance(scene_, origin, az);
            double val = d <= cfg_.max_range ? d : 0.0;  // 0 = invalid
            for (int r = 0; r < H; ++r) img(r, c) = val;  // full-height walls
        }
        obs.depth_images.push_back(std::move(img));
    }
    return obs;
}

map::PanoramaFeatures Env::to_panorama(const SurrogateObservation& obs) const {
    map::PanoramaFeatures pano;
    pano.patch = cfg_.patch;
    int PP = cfg_.patch * cfg_.patch;
    for (int i = 0; i < geom::kNumViews; ++i) {
        pano.pooled_depths.push_back(map::pool_depth(obs.depth_images[i], cfg_.patch));
        Mat feats(PP, cfg_.feat_dim);
        feats.rowwise() = obs.view_features[i];  // patches inherit the view feature
        pano.view_features.push_back(std::move(feats));
    }
    return pano;
}

WpResult Env::surrogate_wp(const geom::Pose& pose, const geom::GridSpec& spec) const {
    WpResult out;
    int R = spec.sub_rows(), C = spec.sub_cols();
    out.nav_mask.setConstant(R, C, false);
    Mat logits = Mat::Constant(R, C, -std::numeric_limits<double>::infinity());
    Eigen::Vector2d origin{pose.x, pose.y};

    bool any = false;
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) {
            Eigen::Vector2d ego = vgwg::subcell_center(i, j, spec);
            double r = ego.norm();
            if (r < 0.3 || r > cfg_.sensing_range) continue;
            Eigen::Vector2d world = geom::ego_to_world(ego, pose);
            if (!scene_.free_point(world)) continue;
            if (!scene_.line_of_sight(origin, world)) continue;
            out.nav_mask(i, j) = true;
            double dr = (r - cfg_.wp_peak_range) / cfg_.wp_range_width;
            logits(i, j) = -0.5 * dr * dr;
            any = true;
        }

    out.distribution.sub_res = spec.sub_res();
    out.distribution.values = Mat::Zero(R, C);
    if (!any) {
        // boxed in: uniform mass over the agent's own sub-cell neighborhood
        out.fallback = true;
        int ci = (R - 1) / 2, cj = (C - 1) / 2;
        int n = 0;
        for (int i = std::max(0, ci - 1); i <= std::min(R - 1, ci + 1); ++i)
            for (int j = std::max(0, cj - 1); j <= std::min(C - 1, cj + 1); ++j) {
                out.nav_mask(i, j) = true;
                ++n;
            }
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < C; ++j)
                if (out.nav_mask(i, j)) out.distribution.values(i, j) = 1.0 / n;
        return out;
    }
    // softmax over valid sub-cells
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j)
            if (out.nav_mask(i, j)) mx = std::max(mx, logits(i, j));
    double sum = 0.0;
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j)
            if (out.nav_mask(i, j)) {
                out.distribution.values(i, j) = std::exp(logits(i, j) - mx);
                sum += out.distribution.values(i, j);
            }
    out.distribution.values /= sum;
    return out;
}

ExpertResult Env::expert_action(const geom::Pose& pose) const {
    Eigen::Vector2d origin{pose.x, pose.y};
    auto path = scene_.raster.shortest_path(origin, scene_.goal);
    if (!path) throw std::runtime_error("expert_action: goal unreachable from pose");
    ExpertResult out;
    out.geodesic = OccupancyRaster::path_length(*path);
    out.waypoint = scene_.goal;
    // farthest path point within 2.5 m that is straight-line visible
    for (auto it = path->rbegin(); it != path->rend(); ++it) {
        if ((*it - origin).norm() > 2.5) continue;
        if ((*it - origin).norm() < 1e-9) continue;
        if (scene_.line_of_sight(origin, *it)) {
            out.waypoint = *it;
            return out;
        }
    }
    out.waypoint = origin;  // already at (or boxed next to) the goal
    if ((scene_.goal - origin).norm() <= 2.5 &&
        scene_.line_of_sight(origin, scene_.goal))
        out.waypoint = scene_.goal;
    return out;
}

double Env::geodesic(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
    auto path = scene_.raster.shortest_path(a, b);
    if (!path) return std::numeric_limits<double>::infinity();
    return OccupancyRaster::path_length(*path);
}

geom::Pose Env::step(const geom::Pose& pose, geom::Action a) const {
    geom::Pose next = geom::compose_pose(pose, a);
    if (a != geom::Action::Forward) return next;
    // collision clamp: the swept segment must stay in free space
    Eigen::Vector2d from{pose.x, pose.y}, to{next.x, next.y};
    const int kChecks = 5;
    for (int i = 1; i <= kChecks; ++i) {
        Eigen::Vector2d p = from + (to - from) * (double(i) / kChecks);
        if (!scene_.free_point(p)) return pose;  // blocked, stay put
    }
    return next;
}

int Env::view_of_bearing(const geom::Pose& pose, const Eigen::Vector2d& world) const {
    Eigen::Vector2d rel = world - Eigen::Vector2d{pose.x, pose.y};
    double bearing = std::atan2(rel.y(), rel.x()) * 180.0 / M_PI - pose.heading;
    bearing = geom::normalize_heading(bearing);
    int v = static_cast<int>(std::floor((bearing + geom::kViewSpacing / 2.0) /
                                        geom::kViewSpacing));
    return ((v % geom::kNumViews) + geom::kNumViews) % geom::kNumViews;
}

}  // namespace stb::sim
