#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "stb/geometry.hpp"

namespace stb::map {

using Mat = Eigen::MatrixXd;

/// Egocentric BEV feature raster. Cell (u, v) lives at row u * V + v of
/// `features`; unoccupied cells are all-zero.
struct GridMap {
    geom::GridSpec spec;
    Mat features;            // (U*V) x D
    Eigen::VectorXi counts;  // U*V
    geom::Pose origin_pose;

    int cell_index(int u, int v) const { return u * spec.V + v; }
    int total_count() const { return counts.sum(); }
    std::vector<int> occupied_cells() const;

    // Portable float-grid text dump: header "U V D", then row-major values.
    std::string dump_text() const;
};

/// One panoramic observation reduced to patch granularity. View i holds a
/// (P*P) x D patch-feature matrix (pixel (r, c) at row r*P+c) and a P x P
/// pooled depth patch.
struct PanoramaFeatures {
    int patch = 14;
    std::vector<Mat> view_features;  // 12 x [(P*P) x D]
    std::vector<Mat> pooled_depths;  // 12 x [P x P]
};

// Block-average depth pooling. Invalid entries (<= 0) are ignored within a
// block; all-invalid blocks emit 0 (the invalid sentinel). Images whose sides
// do not divide by `patch` are padded by edge replication first.
Mat pool_depth(const Mat& depth_image, int patch);

// Rasterize a panorama into the BEV grid with mean feature aggregation.
GridMap build_grid_map(const PanoramaFeatures& pano, const geom::Pose& pose,
                       const geom::GridSpec& spec,
                       const geom::HeightBand& band = {},
                       double hfov = 90.0);

}  // namespace stb::map
