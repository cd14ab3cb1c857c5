#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stb/harness/metrics.hpp"
#include "stb/policy.hpp"
#include "stb/sim/scene.hpp"

namespace stb::harness {

struct SuiteConfig {
    std::string scenes_dir;  // directory of scene *.json files
    std::string out_dir;
    std::uint64_t master_seed = 0;
    policy::EpisodeConfig episode;
    bool render = false;
    std::string config_json;  // hashed into the report for provenance
    std::string tag;          // output filename suffix
};

// All *.json scenes in `dir`, sorted by filename.
std::vector<sim::Scene> load_scene_dir(const std::string& dir);

struct SuiteResult {
    MetricsReport report;
    std::uint64_t report_hash = 0;
    std::string report_path;
    std::string records_path;
};

// Evaluates every scene with a per-episode seed derived from the master seed
// and the scene id; writes records JSONL + report JSON (+ optional renders).
SuiteResult run_suite(const enc::Model& model, const SuiteConfig& cfg);

// In-memory evaluation (no file output); used by sweeps and tests.
std::vector<policy::EpisodeRecord> evaluate_scenes(
    const enc::Model& model, const std::vector<sim::Scene>& scenes,
    const policy::EpisodeConfig& episode, std::uint64_t master_seed);

struct SweepRow {
    std::string key;
    MetricsReport report;
};

// mode: "delta" (GAH weight values), "ablate" (map-fusion / heatmap switches
// x expert modes), "disturb" (kind x level grid). Writes a summary JSON.
std::vector<SweepRow> run_sweep(const enc::Model& model, const SuiteConfig& base,
                                const std::string& mode);

std::uint64_t episode_seed(std::uint64_t master_seed, const std::string& scene_id);

}  // namespace stb::harness
