#include "stb/sim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include <json.hpp>

namespace stb::sim {

OccupancyRaster::OccupancyRaster(const Eigen::Vector2d& bounds,
                                 const std::vector<Rect>& obstacles) {
    rows_ = static_cast<int>(std::ceil(bounds.x() / kRes));
    cols_ = static_cast<int>(std::ceil(bounds.y() / kRes));
    occ_.assign(static_cast<std::size_t>(rows_) * cols_, 0);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) {
            Eigen::Vector2d c = center_of(i, j);
            bool blocked = c.x() >= bounds.x() || c.y() >= bounds.y();
            for (const auto& r : obstacles)
                if (!blocked && r.contains(c)) blocked = true;
            occ_[static_cast<std::size_t>(i) * cols_ + j] = blocked ? 1 : 0;
        }
}

bool OccupancyRaster::occupied(int i, int j) const {
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_) return true;
    return occ_[static_cast<std::size_t>(i) * cols_ + j] != 0;
}

bool OccupancyRaster::occupied_at(const Eigen::Vector2d& p) const {
    auto [i, j] = cell_of(p);
    return occupied(i, j);
}

std::pair<int, int> OccupancyRaster::cell_of(const Eigen::Vector2d& p) const {
    return {static_cast<int>(std::floor(p.x() / kRes)),
            static_cast<int>(std::floor(p.y() / kRes))};
}

Eigen::Vector2d OccupancyRaster::center_of(int i, int j) const {
    return {(i + 0.5) * kRes, (j + 0.5) * kRes};
}

std::optional<std::pair<int, int>> OccupancyRaster::nearest_free(
    const Eigen::Vector2d& p, int max_ring) const {
    auto [ci, cj] = cell_of(p);
    if (!occupied(ci, cj)) return std::make_pair(ci, cj);
    // The continuous collision model lets points sit in cells whose center is
    // blocked; snap such queries to the closest free cell center nearby.
    std::optional<std::pair<int, int>> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int ring = 1; ring <= max_ring && !best; ++ring) {
        for (int i = ci - ring; i <= ci + ring; ++i)
            for (int j = cj - ring; j <= cj + ring; ++j) {
                if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
                if (occupied(i, j)) continue;
                double d = (center_of(i, j) - p).norm();
                if (d < best_d) {
                    best_d = d;
                    best = std::make_pair(i, j);
                }
            }
    }
    return best;
}

std::optional<std::vector<Eigen::Vector2d>> OccupancyRaster::shortest_path(
    const Eigen::Vector2d& from, const Eigen::Vector2d& to) const {
    auto start = nearest_free(from, 2);
    auto target = nearest_free(to, 2);
    if (!start || !target) return std::nullopt;
    auto [si, sj] = *start;
    auto [ti, tj] = *target;

    auto idx = [this](int i, int j) { return static_cast<std::size_t>(i) * cols_ + j; };
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> g(static_cast<std::size_t>(rows_) * cols_, INF);
    std::vector<int> parent(static_cast<std::size_t>(rows_) * cols_, -1);
    auto h = [&](int i, int j) {
        return std::hypot(double(i - ti), double(j - tj)) * kRes;
    };
    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> open;
    g[idx(si, sj)] = 0.0;
    open.push({h(si, sj), static_cast<int>(idx(si, sj))});
    static const int di[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dj[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    bool found = false;
    while (!open.empty()) {
        auto [f, u] = open.top();
        open.pop();
        int ui = u / cols_, uj = u % cols_;
        if (ui == ti && uj == tj) {
            found = true;
            break;
        }
        if (f > g[u] + h(ui, uj) + 1e-12) continue;
        for (int k = 0; k < 8; ++k) {
            int vi = ui + di[k], vj = uj + dj[k];
            if (occupied(vi, vj)) continue;
            if (k >= 4 && (occupied(ui, vj) || occupied(vi, uj)))
                continue;  // no corner cutting
            double step = (k < 4 ? 1.0 : std::sqrt(2.0)) * kRes;
            double ng = g[u] + step;
            std::size_t v = idx(vi, vj);
            if (ng < g[v] - 1e-12) {
                g[v] = ng;
                parent[v] = u;
                open.push({ng + h(vi, vj), static_cast<int>(v)});
            }
        }
    }
    if (!found) return std::nullopt;
    std::vector<Eigen::Vector2d> path;
    int u = static_cast<int>(idx(ti, tj));
    while (u >= 0) {
        path.push_back(center_of(u / cols_, u % cols_));
        u = parent[u];
    }
    std::reverse(path.begin(), path.end());
    path.front() = from;
    path.back() = to;
    return path;
}

double OccupancyRaster::path_length(const std::vector<Eigen::Vector2d>& path) {
    double len = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i)
        len += (path[i] - path[i - 1]).norm();
    return len;
}

namespace {
// Segment vs axis-aligned rectangle overlap (slab clipping).
bool segment_hits_rect(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                       const Rect& r) {
    double t0 = 0.0, t1 = 1.0;
    Eigen::Vector2d d = b - a;
    double lo[2] = {r.x, r.y}, hi[2] = {r.x + r.w, r.y + r.h};
    for (int k = 0; k < 2; ++k) {
        if (std::abs(d[k]) < 1e-12) {
            if (a[k] < lo[k] || a[k] > hi[k]) return false;
        } else {
            double ta = (lo[k] - a[k]) / d[k];
            double tb = (hi[k] - a[k]) / d[k];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) return false;
        }
    }
    return true;
}
}  // namespace

bool Scene::line_of_sight(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
    if (!in_bounds(a) || !in_bounds(b)) return false;
    for (const auto& r : obstacles)
        if (segment_hits_rect(a, b, r)) return false;
    return true;
}

double ray_distance(const Scene& scene, const Eigen::Vector2d& origin, double dir_rad) {
    Eigen::Vector2d d{std::cos(dir_rad), std::sin(dir_rad)};
    double best = std::numeric_limits<double>::infinity();
    // boundary walls
    if (d.x() > 1e-12) best = std::min(best, (scene.bounds.x() - origin.x()) / d.x());
    if (d.x() < -1e-12) best = std::min(best, (0.0 - origin.x()) / d.x());
    if (d.y() > 1e-12) best = std::min(best, (scene.bounds.y() - origin.y()) / d.y());
    if (d.y() < -1e-12) best = std::min(best, (0.0 - origin.y()) / d.y());
    // obstacle slabs: nearest entry distance
    for (const auto& r : scene.obstacles) {
        double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
        double lo[2] = {r.x, r.y}, hi[2] = {r.x + r.w, r.y + r.h};
        Eigen::Vector2d o = origin;
        bool miss = false;
        for (int k = 0; k < 2 && !miss; ++k) {
            if (std::abs(d[k]) < 1e-12) {
                if (o[k] < lo[k] || o[k] > hi[k]) miss = true;
            } else {
                double ta = (lo[k] - o[k]) / d[k];
                double tb = (hi[k] - o[k]) / d[k];
                if (ta > tb) std::swap(ta, tb);
                t0 = std::max(t0, ta);
                t1 = std::min(t1, tb);
                if (t0 > t1) miss = true;
            }
        }
        if (!miss && t1 >= 0.0) best = std::min(best, std::max(t0, 0.0));
    }
    return std::max(best, 0.0);
}

std::string Scene::to_json() const {
    nlohmann::json j;
    j["version"] = version;
    j["bounds"] = {bounds.x(), bounds.y()};
    j["obstacles"] = nlohmann::json::array();
    for (const auto& r : obstacles) j["obstacles"].push_back({r.x, r.y, r.w, r.h});
    j["landmarks"] = nlohmann::json::array();
    for (const auto& l : landmarks)
        j["landmarks"].push_back(
            {{"label", l.label}, {"pos", {l.pos.x(), l.pos.y()}}, {"r", l.radius}});
    j["start"] = {start.x, start.y, start.heading};
    j["goal"] = {goal.x(), goal.y()};
    j["seed"] = seed;
    j["instruction"] = instruction;
    return j.dump(2);
}

Scene parse_scene(const std::string& json_text, const std::string& id) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw SceneLoadError(SceneError::MalformedJson,
                             std::string("malformed scene JSON: ") + e.what());
    }
    Scene s;
    s.id = id;
    try {
        s.version = j.at("version");
        s.bounds = Eigen::Vector2d(j.at("bounds").at(0).get<double>(),
                                   j.at("bounds").at(1).get<double>());
        for (const auto& o : j.at("obstacles"))
            s.obstacles.push_back(Rect{o.at(0), o.at(1), o.at(2), o.at(3)});
        for (const auto& l : j.value("landmarks", nlohmann::json::array()))
            s.landmarks.push_back(
                Landmark{l.at("label"),
                         Eigen::Vector2d(l.at("pos").at(0).get<double>(),
                                         l.at("pos").at(1).get<double>()),
                         l.value("r", 0.5)});
        s.start = geom::Pose{j.at("start").at(0), j.at("start").at(1),
                             geom::normalize_heading(j.at("start").at(2))};
        s.goal = Eigen::Vector2d(j.at("goal").at(0).get<double>(),
                                 j.at("goal").at(1).get<double>());
        s.seed = j.value("seed", 0);
        if (j.contains("instruction"))
            s.instruction = j.at("instruction").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw SceneLoadError(SceneError::MalformedJson,
                             std::string("bad scene schema: ") + e.what());
    }
    return s;
}

void validate_scene(Scene& s) {
    if (!s.free_point({s.start.x, s.start.y}))
        throw SceneLoadError(SceneError::StartBlocked, "start blocked");
    if (!s.free_point(s.goal))
        throw SceneLoadError(SceneError::GoalBlocked, "goal blocked");
    s.raster = OccupancyRaster(s.bounds, s.obstacles);
    if (s.raster.occupied_at({s.start.x, s.start.y}))
        throw SceneLoadError(SceneError::StartBlocked, "start blocked");
    if (s.raster.occupied_at(s.goal))
        throw SceneLoadError(SceneError::GoalBlocked, "goal blocked");
    if (!s.raster.shortest_path({s.start.x, s.start.y}, s.goal))
        throw SceneLoadError(SceneError::Unreachable, "unreachable");
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw SceneLoadError(SceneError::MalformedJson, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string id = path;
    auto slash = id.find_last_of('/');
    if (slash != std::string::npos) id = id.substr(slash + 1);
    auto dot = id.rfind(".json");
    if (dot != std::string::npos) id = id.substr(0, dot);
    Scene s = parse_scene(ss.str(), id);
    validate_scene(s);
    return s;
}

void save_scene(const Scene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << scene.to_json() << "\n";
}

}  // namespace stb::sim
