#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stb/geometry.hpp"

namespace stb::sim {

struct Rect {
    double x = 0, y = 0, w = 0, h = 0;
    bool contains(const Eigen::Vector2d& p) const {
        return p.x() >= x && p.x() <= x + w && p.y() >= y && p.y() <= y + h;
    }
};

struct Landmark {
    std::string label;
    Eigen::Vector2d pos;
    double radius = 0.5;
};

enum class SceneError { MalformedJson, StartBlocked, GoalBlocked, Unreachable };

struct SceneLoadError : std::runtime_error {
    SceneError code;
    SceneLoadError(SceneError c, const std::string& msg)
        : std::runtime_error(msg), code(c) {}
};

/// 0.1 m occupancy raster with A* shortest paths; shared by reachability
/// checks and expert supervision.
class OccupancyRaster {
public:
    static constexpr double kRes = 0.1;

    OccupancyRaster() = default;
    OccupancyRaster(const Eigen::Vector2d& bounds, const std::vector<Rect>& obstacles);

    bool occupied(int i, int j) const;
    bool occupied_at(const Eigen::Vector2d& p) const;
    std::pair<int, int> cell_of(const Eigen::Vector2d& p) const;
    Eigen::Vector2d center_of(int i, int j) const;
    int rows() const { return rows_; }
    int cols() const { return cols_; }

    // Nearest free cell to `p`, searching outward up to `max_ring` cells;
    // nullopt when the whole neighborhood is blocked.
    std::optional<std::pair<int, int>> nearest_free(const Eigen::Vector2d& p,
                                                    int max_ring) const;

    // A* with Euclidean heuristic, 8-connected. Endpoints whose cell center is
    // blocked snap to the nearest free cell. Returns the world-space path
    // (cell centers, endpoints snapped back to the query points) or nullopt
    // when unreachable.
    std::optional<std::vector<Eigen::Vector2d>> shortest_path(
        const Eigen::Vector2d& from, const Eigen::Vector2d& to) const;

    static double path_length(const std::vector<Eigen::Vector2d>& path);

private:
    int rows_ = 0, cols_ = 0;
    std::vector<char> occ_;
};

struct Scene {
    int version = 1;
    Eigen::Vector2d bounds{12.0, 12.0};  // free space is [0,w] x [0,h]
    std::vector<Rect> obstacles;
    std::vector<Landmark> landmarks;
    geom::Pose start;
    Eigen::Vector2d goal{0.0, 0.0};
    std::uint64_t seed = 0;
    std::string id;
    std::vector<std::string> instruction;  // token sequence

    OccupancyRaster raster;  // built at load/validate time

    bool in_bounds(const Eigen::Vector2d& p) const {
        return p.x() > 0 && p.x() < bounds.x() && p.y() > 0 && p.y() < bounds.y();
    }
    bool free_point(const Eigen::Vector2d& p) const {
        if (!in_bounds(p)) return false;
        for (const auto& r : obstacles)
            if (r.contains(p)) return false;
        return true;
    }
    // Segment entirely in free space (obstacle-AABB clipping + bounds).
    bool line_of_sight(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const;

    std::string to_json() const;
};

// Parses, validates (start/goal free, goal reachable) and builds the raster.
Scene load_scene(const std::string& path);
Scene parse_scene(const std::string& json_text, const std::string& id = "");
void validate_scene(Scene& scene);  // throws SceneLoadError; fills raster
void save_scene(const Scene& scene, const std::string& path);

// Distance along a ray from `origin` in direction `dir_rad` to the nearest
// obstacle or boundary wall; infinity only for degenerate scenes.
double ray_distance(const Scene& scene, const Eigen::Vector2d& origin, double dir_rad);

}  // namespace stb::sim
