#pragma once

#include <random>
#include <string>
#include <vector>

#include "stb/encoder.hpp"
#include "stb/geometry.hpp"

namespace stb::vgwg {

using nn::Mat;
using Ref = nn::Tape::Ref;

/// Egocentric (mU) x (nV) scalar field, heading-aligned. Distribution-type
/// heatmaps (the waypoint prior P_t) are non-negative and sum to 1.
struct Heatmap {
    Mat values;               // sub_rows x sub_cols
    double sub_res = 0.2;     // meters per sub-cell
    bool clamped = false;     // waypoint fell outside the footprint
    bool fallback = false;    // sampling fell back to the uniform mask

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }

    // Float-grid text dump ("R C 1" header) and 8-bit PGM render.
    std::string dump_text() const;
    std::string render_pgm() const;
};

struct GahConfig {
    double delta = 1e-5;   // fusion weight for H_t
    double rho = 10.0;     // ground-truth peak scale
    double sigma = 2.0;    // gaussian width in sub-cells
    int k_candidates = 5;
    int min_separation = 1;  // sub-cells, index-space pairwise separation
};

// Sub-cell index of an ego position on the upsampled lattice; nullopt when
// outside the footprint.
std::optional<std::pair<int, int>> ego_to_subcell(const Eigen::Vector2d& ego,
                                                  const geom::GridSpec& spec);
Eigen::Vector2d subcell_center(int su, int sv, const geom::GridSpec& spec);

// Ground-truth GAH: rho * exp(-||s - s*||^2 / (2 sigma^2)) over sub-cell
// indices, s* = the next waypoint's sub-cell (clamped to the border and
// flagged when off-grid).
Heatmap ground_truth_gah(const Eigen::Vector2d& next_waypoint_world,
                         const geom::Pose& pose, const geom::GridSpec& spec,
                         const GahConfig& cfg);

// HFFN head on the fused grid: per cell, linear -> relu -> linear emitting
// the cell's m x n sub-values. Returns the (U*V) x (m*n) tape node; use
// assemble_heatmap on its value for the (mU) x (nV) layout.
Ref predict_gah(nn::Tape& t, const enc::Model& model, Ref fused_grid);

Heatmap assemble_heatmap(const Mat& cell_blocks, const geom::GridSpec& spec);
Mat flatten_heatmap(const Heatmap& hm, const geom::GridSpec& spec);  // -> (U*V) x (m*n)

// Algorithm-style weighted fusion: delta * h + p (not renormalized).
Heatmap fuse_heatmaps(const Heatmap& h, const Heatmap& p, double delta);

struct SampledWaypoints {
    std::vector<Eigen::Vector2d> world;       // sub-cell centers in world frame
    std::vector<std::pair<int, int>> cells;   // chosen sub-cells
    bool fallback = false;
};

// Draw k sub-cells without replacement proportional to mass (negatives
// clamped, masked cells zeroed); falls back to uniform-over-mask when all
// mass is masked. nav_mask empty = everything reachable.
SampledWaypoints sample_waypoints(const Heatmap& hm, int k,
                                  const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& nav_mask,
                                  const geom::Pose& pose, const geom::GridSpec& spec,
                                  std::mt19937_64& rng, int min_separation = 1);

}  // namespace stb::vgwg
