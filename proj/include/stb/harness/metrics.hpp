#pragma once

#include <string>
#include <vector>

#include "stb/policy.hpp"

namespace stb::harness {

constexpr double kSuccessRadius = 3.0;  // meters

struct EpisodeMetrics {
    std::string scene_id;
    double tl = 0.0;        // trajectory length
    double ne = 0.0;        // final distance to goal
    bool stopped = false;   // agent issued the stop action
    double sr = 0.0;        // 1 iff stopped and ne <= 3
    double osr = 0.0;       // 1 iff any pose came within 3 m
    double spl = 0.0;
    bool spl_valid = true;  // geodesic available
};

struct MetricsReport {
    std::vector<EpisodeMetrics> episodes;
    double tl = 0.0, ne = 0.0, osr = 0.0, sr = 0.0, spl = 0.0;  // means
    int count = 0;
    int spl_count = 0;
    std::string config_hash;

    std::string to_json() const;
};

EpisodeMetrics episode_metrics(const policy::EpisodeRecord& rec);
MetricsReport compute_metrics(const std::vector<policy::EpisodeRecord>& records);

}  // namespace stb::harness
