#include "stb/sim/instructions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stb::sim {

const std::vector<std::string>& landmark_labels() {
    static const std::vector<std::string> labels = {
        "chair", "table", "door", "lamp",  "sofa",   "plant",
        "sink",  "shelf", "bed",  "desk",  "fridge", "piano"};
    return labels;
}

const std::vector<std::string>& instruction_vocab() {
    static const std::vector<std::string> vocab = [] {
        std::vector<std::string> v = landmark_labels();
        for (const char* w : {"walk", "to", "the", "and", "stop", "go", "past",
                              "then", "at", "turn", "left", "right", "find",
                              "near", "room"})
            v.push_back(w);
        return v;
    }();
    return vocab;
}

namespace {
const Landmark* nearest_landmark(const Scene& s, const Eigen::Vector2d& p,
                                 const Landmark* exclude = nullptr) {
    const Landmark* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& lm : s.landmarks) {
        if (&lm == exclude) continue;
        double d = (lm.pos - p).norm();
        if (d < best_d) {
            best_d = d;
            best = &lm;
        }
    }
    return best;
}
}  // namespace

std::vector<std::string> generate_instruction(const Scene& s, std::mt19937_64& rng) {
    const Landmark* goal_lm = nearest_landmark(s, s.goal);
    if (!goal_lm) return {"walk", "and", "stop"};
    const std::string& G = goal_lm->label;

    Eigen::Vector2d mid = (Eigen::Vector2d{s.start.x, s.start.y} + s.goal) / 2.0;
    const Landmark* via_lm = nearest_landmark(s, mid, goal_lm);

    Eigen::Vector2d rel = s.goal - Eigen::Vector2d{s.start.x, s.start.y};
    double bearing = std::atan2(rel.y(), rel.x()) * 180.0 / M_PI - s.start.heading;
    bearing = std::remainder(bearing, 360.0);
    std::string dir = bearing >= 0 ? "left" : "right";

    std::uniform_int_distribution<int> pick(0, via_lm ? 3 : 1);
    switch (pick(rng)) {
        case 0:
            return {"walk", "to", "the", G, "and", "stop"};
        case 1:
            return {"turn", dir, "and", "walk", "to", "the", G};
        case 2:
            return {"go", "past", "the", via_lm->label, "then", "stop", "at",
                    "the", G};
        default:
            return {"find", "the", G, "near", "the", via_lm->label};
    }
}

std::vector<std::string> instruction_for(const Scene& scene) {
    if (!scene.instruction.empty()) return scene.instruction;
    std::mt19937_64 rng(scene.seed ^ 0x1257ULL);
    return generate_instruction(scene, rng);
}

}  // namespace stb::sim
