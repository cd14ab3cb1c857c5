#include "stb/geometry.hpp"

#include <cmath>

namespace stb::geom {

double normalize_heading(double deg) {
    double h = std::fmod(deg, 360.0);
    if (h < 0) h += 360.0;
    if (h == 360.0) h = 0.0;  // fmod can land exactly on 360 after +=
    return h;
}

double deg2rad(double deg) { return deg * M_PI / 180.0; }

Pose compose_pose(const Pose& p, Action a) {
    Pose out = p;
    switch (a) {
        case Action::Forward: {
            double h = deg2rad(p.heading);
            out.x += kForwardStep * std::cos(h);
            out.y += kForwardStep * std::sin(h);
            break;
        }
        case Action::TurnLeft:
            out.heading = normalize_heading(p.heading + kTurnStep);
            break;
        case Action::TurnRight:
            out.heading = normalize_heading(p.heading - kTurnStep);
            break;
        case Action::Stop:
            break;
    }
    return out;
}

double column_azimuth(int c, int patch, double hfov) {
    double t = std::tan(deg2rad(hfov / 2.0)) * (2.0 * c + 1.0 - patch) / patch;
    return std::atan(t) * 180.0 / M_PI;
}

double row_elevation(int r, int patch, double vfov) {
    // row 0 is the top of the image: positive elevation
    double t = std::tan(deg2rad(vfov / 2.0)) * (patch - 1.0 - 2.0 * r) / patch;
    return std::atan(t) * 180.0 / M_PI;
}

BackprojectResult backproject_view(const Eigen::MatrixXd& depth_patch,
                                   const ViewRay& ray, const Pose& pose,
                                   const HeightBand& band) {
    (void)pose;  // output is already in the heading-aligned ego frame
    BackprojectResult out;
    int P = static_cast<int>(depth_patch.rows());
    for (int r = 0; r < P; ++r) {
        double elev = deg2rad(row_elevation(r, P, ray.hfov));
        for (int c = 0; c < static_cast<int>(depth_patch.cols()); ++c) {
            double d = depth_patch(r, c);
            if (!(d > 0.0) || !std::isfinite(d)) {
                ++out.dropped_invalid;
                continue;
            }
            double height = band.camera_height + d * std::tan(elev);
            if (height < band.low || height > band.high) {
                ++out.dropped_height;
                continue;
            }
            double az = deg2rad(ray.azimuth + column_azimuth(c, static_cast<int>(depth_patch.cols()), ray.hfov));
            out.points.emplace_back(d * std::cos(az), d * std::sin(az));
            out.pixels.emplace_back(r, c);
        }
    }
    return out;
}

std::optional<std::pair<int, int>> world_to_cell(const Eigen::Vector2d& ego_pos,
                                                 const GridSpec& spec) {
    int u = static_cast<int>(std::floor(ego_pos.x() / spec.cell_res)) + spec.center_u();
    int v = static_cast<int>(std::floor(ego_pos.y() / spec.cell_res)) + spec.center_v();
    if (u < 0 || u >= spec.U || v < 0 || v >= spec.V) return std::nullopt;
    return std::make_pair(u, v);
}

Eigen::Vector2d cell_center(int u, int v, const GridSpec& spec) {
    return {(u - spec.center_u() + 0.5) * spec.cell_res,
            (v - spec.center_v() + 0.5) * spec.cell_res};
}

Eigen::Vector2d world_to_ego(const Eigen::Vector2d& world, const Pose& pose) {
    double h = deg2rad(pose.heading);
    double dx = world.x() - pose.x;
    double dy = world.y() - pose.y;
    return {std::cos(h) * dx + std::sin(h) * dy,
            -std::sin(h) * dx + std::cos(h) * dy};
}

Eigen::Vector2d ego_to_world(const Eigen::Vector2d& ego, const Pose& pose) {
    double h = deg2rad(pose.heading);
    return {pose.x + std::cos(h) * ego.x() - std::sin(h) * ego.y(),
            pose.y + std::sin(h) * ego.x() + std::cos(h) * ego.y()};
}

}  // namespace stb::geom
