#pragma once

#include <string>

#include "stb/policy.hpp"
#include "stb/sim/scene.hpp"

namespace stb::harness {

// Top-down RGB render (binary PPM): free space white, obstacles dark,
// landmarks blue, trajectory red, start green, goal yellow.
std::string render_trajectory_ppm(const sim::Scene& scene,
                                  const policy::EpisodeRecord& rec,
                                  double res = 0.05);

void write_file(const std::string& path, const std::string& content);

}  // namespace stb::harness
