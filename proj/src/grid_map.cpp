#include "stb/grid_map.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace stb::map {

std::vector<int> GridMap::occupied_cells() const {
    std::vector<int> out;
    for (int i = 0; i < counts.size(); ++i)
        if (counts[i] > 0) out.push_back(i);
    return out;
}

std::string GridMap::dump_text() const {
    std::ostringstream os;
    os << spec.U << " " << spec.V << " " << features.cols() << "\n";
    char buf[32];
    for (int i = 0; i < features.rows(); ++i) {
        for (int j = 0; j < features.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", features(i, j));
            os << buf << (j + 1 == features.cols() ? "" : " ");
        }
        os << "\n";
    }
    return os.str();
}

Mat pool_depth(const Mat& depth_image, int patch) {
    if (patch < 1) throw std::invalid_argument("pool_depth: patch < 1");
    int H = static_cast<int>(depth_image.rows());
    int W = static_cast<int>(depth_image.cols());
    // pad by replicating the last row/column up to a multiple of patch
    int Hp = ((H + patch - 1) / patch) * patch;
    int Wp = ((W + patch - 1) / patch) * patch;
    Mat img(Hp, Wp);
    for (int i = 0; i < Hp; ++i)
        for (int j = 0; j < Wp; ++j)
            img(i, j) = depth_image(std::min(i, H - 1), std::min(j, W - 1));

    int bh = Hp / patch, bw = Wp / patch;
    Mat out = Mat::Zero(patch, patch);
    for (int u = 0; u < patch; ++u) {
        for (int v = 0; v < patch; ++v) {
            double sum = 0.0;
            int n = 0;
            for (int i = u * bh; i < (u + 1) * bh; ++i)
                for (int j = v * bw; j < (v + 1) * bw; ++j)
                    if (img(i, j) > 0.0) {
                        sum += img(i, j);
                        ++n;
                    }
            out(u, v) = n > 0 ? sum / n : 0.0;
        }
    }
    return out;
}

GridMap build_grid_map(const PanoramaFeatures& pano, const geom::Pose& pose,
                       const geom::GridSpec& spec, const geom::HeightBand& band,
                       double hfov) {
    if (!spec.valid()) throw std::invalid_argument("build_grid_map: bad spec");
    if (pano.view_features.size() != geom::kNumViews ||
        pano.pooled_depths.size() != geom::kNumViews)
        throw std::invalid_argument("build_grid_map: expected 12 views");

    int D = static_cast<int>(pano.view_features[0].cols());
    GridMap gm;
    gm.spec = spec;
    gm.origin_pose = pose;
    gm.features = Mat::Zero(spec.U * spec.V, D);
    gm.counts = Eigen::VectorXi::Zero(spec.U * spec.V);

    int P = pano.patch;
    for (int i = 0; i < geom::kNumViews; ++i) {
        auto ray = geom::ViewRay::for_view(i, hfov);
        auto bp = geom::backproject_view(pano.pooled_depths[i], ray, pose, band);
        const Mat& feats = pano.view_features[i];
        for (std::size_t k = 0; k < bp.points.size(); ++k) {
            auto cell = geom::world_to_cell(bp.points[k], spec);
            if (!cell) continue;
            int idx = gm.cell_index(cell->first, cell->second);
            int pix = bp.pixels[k].first * P + bp.pixels[k].second;
            gm.features.row(idx) += feats.row(pix);
            gm.counts[idx] += 1;
        }
    }
    for (int idx = 0; idx < gm.counts.size(); ++idx)
        if (gm.counts[idx] > 0) gm.features.row(idx) /= gm.counts[idx];
    return gm;
}

}  // namespace stb::map
