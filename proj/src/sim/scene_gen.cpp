#include "stb/sim/scene_gen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "stb/sim/instructions.hpp"

namespace stb::sim {

const char* family_name(SceneFamily f) {
    switch (f) {
        case SceneFamily::OpenRoom: return "open";
        case SceneFamily::Corridor: return "corridor";
        default: return "rooms";
    }
}

namespace {

using Rng = std::mt19937_64;

double uni(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uni_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Random point at least `margin` away from bounds and from every obstacle.
std::optional<Eigen::Vector2d> free_point(const Scene& s, Rng& rng, double margin) {
    for (int a = 0; a < 200; ++a) {
        Eigen::Vector2d p{uni(rng, margin, s.bounds.x() - margin),
                          uni(rng, margin, s.bounds.y() - margin)};
        bool ok = true;
        for (const auto& r : s.obstacles) {
            Rect grown{r.x - margin, r.y - margin, r.w + 2 * margin, r.h + 2 * margin};
            if (grown.contains(p)) { ok = false; break; }
        }
        if (ok) return p;
    }
    return std::nullopt;
}

void place_landmarks(Scene& s, Rng& rng, int count) {
    std::vector<std::string> labels = landmark_labels();
    std::shuffle(labels.begin(), labels.end(), rng);
    for (int i = 0; i < count; ++i) {
        auto p = free_point(s, rng, 0.6);
        if (!p) break;
        s.landmarks.push_back(Landmark{labels[i], *p, 0.5});
    }
}

// Goal next to the landmark nearest some sampled free point, offset so the
// goal itself stays free.
bool place_goal_near_landmark(Scene& s, Rng& rng) {
    if (s.landmarks.empty()) return false;
    const Landmark& lm = s.landmarks[uni_int(rng, 0, int(s.landmarks.size()) - 1)];
    for (int a = 0; a < 40; ++a) {
        double ang = uni(rng, 0.0, 2 * M_PI);
        double rad = uni(rng, 0.3, 0.7);
        Eigen::Vector2d g = lm.pos + rad * Eigen::Vector2d{std::cos(ang), std::sin(ang)};
        Scene probe = s;
        probe.goal = g;
        if (probe.free_point(g)) {
            s.goal = g;
            return true;
        }
    }
    return false;
}

Scene make_open_room(Rng& rng) {
    Scene s;
    s.bounds = {12.0, 12.0};
    int boxes = uni_int(rng, 3, 5);
    for (int i = 0; i < boxes; ++i) {
        double w = uni(rng, 0.8, 1.8), h = uni(rng, 0.8, 1.8);
        s.obstacles.push_back(Rect{uni(rng, 1.0, s.bounds.x() - 1.0 - w),
                                   uni(rng, 1.0, s.bounds.y() - 1.0 - h), w, h});
    }
    place_landmarks(s, rng, uni_int(rng, 4, 6));
    return s;
}

Scene make_corridor(Rng& rng) {
    Scene s;
    s.bounds = {14.0, 8.0};
    // vertical baffles with alternating gaps force an S-shaped route
    int walls = uni_int(rng, 2, 3);
    double gap = uni(rng, 1.8, 2.4);
    for (int i = 0; i < walls; ++i) {
        double x = 3.0 + i * (8.0 / walls) + uni(rng, -0.5, 0.5);
        double t = uni(rng, 0.3, 0.5);
        if (i % 2 == 0)
            s.obstacles.push_back(Rect{x, gap, t, s.bounds.y() - gap});
        else
            s.obstacles.push_back(Rect{x, 0.0, t, s.bounds.y() - gap});
    }
    place_landmarks(s, rng, uni_int(rng, 4, 6));
    return s;
}

Scene make_multi_room(Rng& rng) {
    Scene s;
    s.bounds = {12.0, 10.0};
    double t = 0.3;  // wall thickness
    double door = uni(rng, 1.2, 1.6);
    double vx = uni(rng, 5.0, 7.0);   // vertical divider
    double hy = uni(rng, 4.0, 6.0);   // horizontal divider
    // each wall half carries one doorway
    double d1 = uni(rng, 0.8, hy - door - 0.8);
    double d2 = uni(rng, hy + 0.8, s.bounds.y() - door - 0.8);
    s.obstacles.push_back(Rect{vx, 0.0, t, d1});
    s.obstacles.push_back(Rect{vx, d1 + door, t, d2 - (d1 + door)});
    s.obstacles.push_back(Rect{vx, d2 + door, t, s.bounds.y() - (d2 + door)});
    double d3 = uni(rng, 0.8, vx - door - 0.8);
    double d4 = uni(rng, vx + t + 0.8, s.bounds.x() - door - 0.8);
    s.obstacles.push_back(Rect{0.0, hy, d3, t});
    s.obstacles.push_back(Rect{d3 + door, hy, vx - (d3 + door), t});
    s.obstacles.push_back(Rect{vx + t, hy, d4 - (vx + t), t});
    s.obstacles.push_back(Rect{d4 + door, hy, s.bounds.x() - (d4 + door), t});
    place_landmarks(s, rng, uni_int(rng, 4, 6));
    return s;
}

}  // namespace

Scene generate_scene(SceneFamily family, std::uint64_t seed) {
    for (std::uint64_t attempt = 0; attempt < 400; ++attempt) {
        Rng rng(seed * 0x9e3779b97f4a7c15ULL + attempt);
        Scene s;
        switch (family) {
            case SceneFamily::OpenRoom: s = make_open_room(rng); break;
            case SceneFamily::Corridor: s = make_corridor(rng); break;
            default: s = make_multi_room(rng); break;
        }
        if (s.landmarks.size() < 3) continue;
        if (!place_goal_near_landmark(s, rng)) continue;
        auto sp = free_point(s, rng, 0.5);
        if (!sp) continue;
        s.start = geom::Pose{sp->x(), sp->y(), 30.0 * uni_int(rng, 0, 11)};
        s.seed = seed;
        s.id = std::string(family_name(family)) + "_" + std::to_string(seed);
        try {
            validate_scene(s);
        } catch (const SceneLoadError&) {
            continue;
        }
        auto path = s.raster.shortest_path({s.start.x, s.start.y}, s.goal);
        double geo = OccupancyRaster::path_length(*path);
        if (geo < 4.0 || geo > 9.0) continue;
        s.instruction = instruction_for(s);
        return s;
    }
    throw std::runtime_error("generate_scene: no valid scene after 400 attempts");
}

SceneSetSummary generate_scene_set(const std::string& out_dir, int per_family,
                                   std::uint64_t master_seed) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "train");
    fs::create_directories(fs::path(out_dir) / "eval");
    SceneSetSummary sum;
    int eval_per_family = std::max(1, per_family / 5);
    const SceneFamily fams[] = {SceneFamily::OpenRoom, SceneFamily::Corridor,
                                SceneFamily::MultiRoom};
    for (int f = 0; f < 3; ++f) {
        for (int i = 0; i < per_family; ++i) {
            std::uint64_t seed = master_seed * 1000003ULL + f * 10007ULL + i;
            Scene s = generate_scene(fams[f], seed);
            bool is_eval = i >= per_family - eval_per_family;
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%03d.json", family_name(fams[f]), i);
            fs::path dir = fs::path(out_dir) / (is_eval ? "eval" : "train");
            save_scene(s, (dir / name).string());
            (is_eval ? sum.eval : sum.train)++;
        }
    }
    return sum;
}

}  // namespace stb::sim
