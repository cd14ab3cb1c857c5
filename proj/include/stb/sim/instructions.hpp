#pragma once

#include <random>
#include <string>
#include <vector>

#include "stb/sim/scene.hpp"

namespace stb::sim {

// Landmark label set shared by the scene generator and the feature
// descriptor (one one-hot slot per label).
const std::vector<std::string>& landmark_labels();

// Full harness vocabulary: labels + template words.
const std::vector<std::string>& instruction_vocab();

// Templated instruction referencing the landmark nearest the goal (and
// sometimes a via landmark or the initial turn direction).
std::vector<std::string> generate_instruction(const Scene& scene, std::mt19937_64& rng);

// Deterministic per-scene instruction (seeded from scene.seed); returns the
// stored one when the scene file carries it.
std::vector<std::string> instruction_for(const Scene& scene);

}  // namespace stb::sim
