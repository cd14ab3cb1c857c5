#pragma once

#include <random>
#include <string>
#include <vector>

#include "stb/encoder.hpp"
#include "stb/sim/instructions.hpp"
#include "stb/sim/scene.hpp"

namespace testutil {

// Parses and validates a scene literal (raster + reachability included).
inline stb::sim::Scene scene_from_json(const std::string& json,
                                       const std::string& id = "test") {
    stb::sim::Scene s = stb::sim::parse_scene(json, id);
    stb::sim::validate_scene(s);
    return s;
}

// 10 x 10 empty room with one landmark by the goal.
inline stb::sim::Scene open_room() {
    return scene_from_json(R"({
        "version": 1, "bounds": [10, 10], "obstacles": [],
        "landmarks": [{"label": "chair", "pos": [7.5, 5.0], "r": 0.5}],
        "start": [2, 5, 0], "goal": [7, 5], "seed": 7
    })");
}

// Room split by a wall with a doorway gap at the top.
inline stb::sim::Scene doorway_room() {
    return scene_from_json(R"({
        "version": 1, "bounds": [10, 10],
        "obstacles": [[4.5, 0, 0.5, 8]],
        "landmarks": [{"label": "lamp", "pos": [8.0, 2.0], "r": 0.5}],
        "start": [2, 2, 0], "goal": [8, 2], "seed": 8
    })");
}

inline stb::enc::ModelConfig tiny_config(int dim = 8, int U = 5, int m = 3) {
    stb::enc::ModelConfig cfg;
    cfg.dim = dim;
    cfg.heads = 2;
    cfg.layers = 1;
    cfg.ffn_hidden = 16;
    cfg.hffn_hidden = 16;
    cfg.grid.U = U;
    cfg.grid.V = U;
    cfg.grid.cell_res = 1.0;
    cfg.grid.upsample_m = m;
    cfg.grid.upsample_n = m;
    return cfg;
}

inline stb::enc::Vocab full_vocab() {
    return stb::enc::Vocab(stb::sim::instruction_vocab());
}

}  // namespace testutil
