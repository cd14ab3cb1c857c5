#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace stb::geom {

// Heading convention used everywhere: 0 deg = +x, angles grow
// counter-clockwise, headings normalized to [0, 360).

constexpr double kForwardStep = 0.25;   // meters
constexpr double kTurnStep = 15.0;      // degrees
constexpr int kNumViews = 12;
constexpr double kViewSpacing = 30.0;   // degrees between adjacent views

double normalize_heading(double deg);
double deg2rad(double deg);

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  // degrees in [0, 360)
};

enum class Action { Forward, TurnLeft, TurnRight, Stop };

Pose compose_pose(const Pose& p, Action a);

struct GridSpec {
    int U = 11;             // rows (x axis)
    int V = 11;             // cols (y axis)
    double cell_res = 1.0;  // meters per cell
    int upsample_m = 5;
    int upsample_n = 5;

    bool valid() const {
        return U >= 3 && V >= 3 && U % 2 == 1 && V % 2 == 1 && cell_res > 0 &&
               upsample_m >= 1 && upsample_n >= 1;
    }
    int center_u() const { return (U - 1) / 2; }
    int center_v() const { return (V - 1) / 2; }
    double half_footprint() const { return U * cell_res / 2.0; }
    int sub_rows() const { return U * upsample_m; }
    int sub_cols() const { return V * upsample_n; }
    double sub_res() const { return cell_res / upsample_m; }
};

struct ViewRay {
    int view_index = 0;    // 0..11
    double azimuth = 0.0;  // degrees, CCW from the agent's heading
    double hfov = 90.0;    // degrees

    static ViewRay for_view(int i, double hfov = 90.0) {
        return ViewRay{i, kViewSpacing * i, hfov};
    }
};

struct HeightBand {
    double camera_height = 1.0;  // meters above the floor
    double low = 0.2;
    double high = 1.8;
};

struct BackprojectResult {
    std::vector<Eigen::Vector2d> points;      // ego-frame (x, y), heading-aligned
    std::vector<std::pair<int, int>> pixels;  // (row, col) of each point
    int dropped_invalid = 0;                  // depth <= 0 entries
    int dropped_height = 0;                   // outside the height band
};

// Azimuth of pixel column c within a P-column view (degrees, relative to the
// view axis): atan(tan(hfov/2) * (2c+1-P)/P).
double column_azimuth(int c, int patch, double hfov);

// Elevation angle of pixel row r (degrees). Row 0 looks up.
double row_elevation(int r, int patch, double vfov);

// Planar pinhole back-projection of a P x P depth patch into the ego frame.
// Depth is range along the pixel azimuth; entries <= 0 are invalid. Pixels
// whose implied height leaves `band` are dropped before projection.
BackprojectResult backproject_view(const Eigen::MatrixXd& depth_patch,
                                   const ViewRay& ray, const Pose& pose,
                                   const HeightBand& band = {});

// Ego position -> grid cell via floor indexing; nullopt when out of range.
std::optional<std::pair<int, int>> world_to_cell(const Eigen::Vector2d& ego_pos,
                                                 const GridSpec& spec);

// Center of a grid cell in ego coordinates.
Eigen::Vector2d cell_center(int u, int v, const GridSpec& spec);

// World <-> ego transforms for the agent's heading-aligned frame.
Eigen::Vector2d world_to_ego(const Eigen::Vector2d& world, const Pose& pose);
Eigen::Vector2d ego_to_world(const Eigen::Vector2d& ego, const Pose& pose);

}  // namespace stb::geom
