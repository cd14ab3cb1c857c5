#include "stb/vgwg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace stb::vgwg {

std::string Heatmap::dump_text() const {
    std::ostringstream os;
    os << rows() << " " << cols() << " 1\n";
    char buf[32];
    for (int i = 0; i < rows(); ++i) {
        for (int j = 0; j < cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", values(i, j));
            os << buf << (j + 1 == cols() ? "" : " ");
        }
        os << "\n";
    }
    return os.str();
}

std::string Heatmap::render_pgm() const {
    double lo = values.minCoeff();
    double hi = values.maxCoeff();
    double span = hi - lo;
    std::ostringstream os;
    os << "P5 " << cols() << " " << rows() << " 255\n";
    for (int i = 0; i < rows(); ++i)
        for (int j = 0; j < cols(); ++j) {
            int px = span > 0 ? static_cast<int>(255.0 * (values(i, j) - lo) / span)
                              : 0;
            os.put(static_cast<char>(px));
        }
    return os.str();
}

std::optional<std::pair<int, int>> ego_to_subcell(const Eigen::Vector2d& ego,
                                                  const geom::GridSpec& spec) {
    double res = spec.sub_res();
    int R = spec.sub_rows(), C = spec.sub_cols();
    int su = static_cast<int>(std::floor(ego.x() / res)) + (R - 1) / 2;
    int sv = static_cast<int>(std::floor(ego.y() / res)) + (C - 1) / 2;
    if (su < 0 || su >= R || sv < 0 || sv >= C) return std::nullopt;
    return std::make_pair(su, sv);
}

Eigen::Vector2d subcell_center(int su, int sv, const geom::GridSpec& spec) {
    double res = spec.sub_res();
    int R = spec.sub_rows(), C = spec.sub_cols();
    return {(su - (R - 1) / 2 + 0.5) * res, (sv - (C - 1) / 2 + 0.5) * res};
}

Heatmap ground_truth_gah(const Eigen::Vector2d& next_waypoint_world,
                         const geom::Pose& pose, const geom::GridSpec& spec,
                         const GahConfig& cfg) {
    Heatmap hm;
    hm.sub_res = spec.sub_res();
    int R = spec.sub_rows(), C = spec.sub_cols();
    Eigen::Vector2d ego = geom::world_to_ego(next_waypoint_world, pose);
    auto sc = ego_to_subcell(ego, spec);
    int su, sv;
    if (sc) {
        su = sc->first;
        sv = sc->second;
    } else {
        double res = spec.sub_res();
        su = std::clamp(static_cast<int>(std::floor(ego.x() / res)) + (R - 1) / 2, 0, R - 1);
        sv = std::clamp(static_cast<int>(std::floor(ego.y() / res)) + (C - 1) / 2, 0, C - 1);
        hm.clamped = true;
    }
    hm.values.resize(R, C);
    double inv = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) {
            double d2 = double(i - su) * (i - su) + double(j - sv) * (j - sv);
            hm.values(i, j) = cfg.rho * std::exp(-d2 * inv);
        }
    return hm;
}

Ref predict_gah(nn::Tape& t, const enc::Model& model, Ref fused_grid) {
    const auto& spec = model.config().grid;
    if (t.value(fused_grid).rows() != spec.U * spec.V)
        throw std::invalid_argument("predict_gah: fused grid shape mismatch");
    nn::ParamStore& ps = model.params();
    Ref h = t.relu(t.add_rowwise(t.matmul(fused_grid, t.param(ps.at("vgwg.hffn.W1"))),
                                 t.param(ps.at("vgwg.hffn.b1"))));
    return t.add_rowwise(t.matmul(h, t.param(ps.at("vgwg.hffn.W2"))),
                         t.param(ps.at("vgwg.hffn.b2")));
}

Heatmap assemble_heatmap(const Mat& cell_blocks, const geom::GridSpec& spec) {
    int m = spec.upsample_m, n = spec.upsample_n;
    if (cell_blocks.rows() != spec.U * spec.V || cell_blocks.cols() != m * n)
        throw std::invalid_argument("assemble_heatmap: shape mismatch");
    Heatmap hm;
    hm.sub_res = spec.sub_res();
    hm.values.resize(spec.sub_rows(), spec.sub_cols());
    for (int u = 0; u < spec.U; ++u)
        for (int v = 0; v < spec.V; ++v)
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < n; ++b)
                    hm.values(u * m + a, v * n + b) =
                        cell_blocks(u * spec.V + v, a * n + b);
    return hm;
}

Mat flatten_heatmap(const Heatmap& hm, const geom::GridSpec& spec) {
    int m = spec.upsample_m, n = spec.upsample_n;
    if (hm.rows() != spec.sub_rows() || hm.cols() != spec.sub_cols())
        throw std::invalid_argument("flatten_heatmap: shape mismatch");
    Mat out(spec.U * spec.V, m * n);
    for (int u = 0; u < spec.U; ++u)
        for (int v = 0; v < spec.V; ++v)
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < n; ++b)
                    out(u * spec.V + v, a * n + b) = hm.values(u * m + a, v * n + b);
    return out;
}

Heatmap fuse_heatmaps(const Heatmap& h, const Heatmap& p, double delta) {
    if (h.values.rows() != p.values.rows() || h.values.cols() != p.values.cols())
        throw std::invalid_argument("fuse_heatmaps: shape mismatch");
    Heatmap out = p;
    out.values = delta * h.values + p.values;
    return out;
}

SampledWaypoints sample_waypoints(
    const Heatmap& hm, int k,
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& nav_mask,
    const geom::Pose& pose, const geom::GridSpec& spec, std::mt19937_64& rng,
    int min_separation) {
    if (k < 1) throw std::invalid_argument("sample_waypoints: k < 1");
    int R = hm.rows(), C = hm.cols();
    bool masked = nav_mask.size() > 0;
    if (masked && (nav_mask.rows() != R || nav_mask.cols() != C))
        throw std::invalid_argument("sample_waypoints: mask shape mismatch");

    Mat mass = hm.values.cwiseMax(0.0);
    if (masked)
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < C; ++j)
                if (!nav_mask(i, j)) mass(i, j) = 0.0;

    SampledWaypoints out;
    double total = mass.sum();
    if (total <= 0.0) {
        // all mass masked: uniform over the reachable set
        out.fallback = true;
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < C; ++j)
                if (!masked || nav_mask(i, j)) mass(i, j) = 1.0;
        total = mass.sum();
        if (total <= 0.0)
            throw std::invalid_argument("sample_waypoints: empty nav mask");
    }

    for (int drawn = 0; drawn < k; ++drawn) {
        if (total <= 0.0) break;  // separation rule exhausted the mass
        std::uniform_real_distribution<double> uni(0.0, total);
        double target = uni(rng);
        double acc = 0.0;
        int si = -1, sj = -1;
        for (int i = 0; i < R && si < 0; ++i)
            for (int j = 0; j < C; ++j) {
                acc += mass(i, j);
                if (acc >= target && mass(i, j) > 0.0) {
                    si = i;
                    sj = j;
                    break;
                }
            }
        if (si < 0) {
            // numeric tail: take the last positive cell
            for (int i = R - 1; i >= 0 && si < 0; --i)
                for (int j = C - 1; j >= 0; --j)
                    if (mass(i, j) > 0.0) {
                        si = i;
                        sj = j;
                        break;
                    }
        }
        if (si < 0) break;
        out.cells.emplace_back(si, sj);
        out.world.push_back(
            geom::ego_to_world(subcell_center(si, sj, spec), pose));
        // enforce pairwise index-space separation around the chosen sub-cell
        for (int i = std::max(0, si - min_separation + 1);
             i <= std::min(R - 1, si + min_separation - 1); ++i)
            for (int j = std::max(0, sj - min_separation + 1);
                 j <= std::min(C - 1, sj + min_separation - 1); ++j)
                mass(i, j) = 0.0;
        total = mass.sum();
    }
    return out;
}

}  // namespace stb::vgwg
