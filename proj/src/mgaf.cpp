#include "stb/mgaf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stb::mgaf {

Cell2NodeResult cell2node(const map::GridMap& grid, const topo::TopoGraph& graph) {
    Cell2NodeResult out;
    out.ids = graph.node_ids();
    int D = static_cast<int>(grid.features.cols());
    out.features = Mat::Zero(static_cast<int>(out.ids.size()), D);

    auto occupied = grid.occupied_cells();
    out.empty_grid = occupied.empty();

    for (std::size_t i = 0; i < out.ids.size(); ++i) {
        const auto& n = graph.node(out.ids[i]);
        if (out.ids[i] == graph.current_visited()) {
            if (!occupied.empty()) {
                for (int c : occupied) out.features.row(i) += grid.features.row(c);
                out.features.row(i) /= static_cast<double>(occupied.size());
            }
        } else if (n.kind == topo::NodeKind::Observed) {
            Eigen::Vector2d ego = geom::world_to_ego(n.position, grid.origin_pose);
            auto cell = geom::world_to_cell(ego, grid.spec);
            if (cell)
                out.features.row(i) =
                    grid.features.row(grid.cell_index(cell->first, cell->second));
        }
        // older visited nodes and the virtual stop keep zero
    }
    return out;
}

Ref graph_fuse(nn::Tape& t, const enc::Model& model, Ref g_prime, Ref g) {
    if (t.value(g_prime).rows() != t.value(g).rows())
        throw std::invalid_argument("graph_fuse: node id mismatch");
    nn::ParamStore& ps = model.params();
    Ref cat = t.concat_cols(g_prime, g);
    return t.add_rowwise(t.matmul(cat, t.param(ps.at("mgaf.GF.W"))),
                         t.param(ps.at("mgaf.GF.b")));
}

Mat discount_matrix(int node_u, int node_v, const geom::GridSpec& spec) {
    if (node_u < 0 || node_u >= spec.U || node_v < 0 || node_v >= spec.V)
        throw std::invalid_argument("discount_matrix: node cell outside grid");
    Mat d(spec.U, spec.V);
    for (int u = 0; u < spec.U; ++u)
        for (int v = 0; v < spec.V; ++v)
            d(u, v) = std::hypot(double(u - node_u), double(v - node_v));
    double dmin = d.minCoeff();
    double dmax = d.maxCoeff();
    if (dmax - dmin < 1e-12) return Mat::Ones(spec.U, spec.V);
    return ((dmax - d.array()) / (dmax - dmin)).matrix();
}

std::vector<ProjectedNode> project_neighborhood(const topo::TopoGraph& graph,
                                                const std::vector<int>& ids,
                                                const std::vector<int>& id_order,
                                                const geom::Pose& pose,
                                                const geom::GridSpec& spec) {
    std::vector<ProjectedNode> out;
    for (int id : ids) {
        auto it = std::find(id_order.begin(), id_order.end(), id);
        if (it == id_order.end()) continue;
        Eigen::Vector2d ego = geom::world_to_ego(graph.node(id).position, pose);
        auto cell = geom::world_to_cell(ego, spec);
        if (!cell) continue;
        out.push_back({static_cast<int>(it - id_order.begin()), cell->first,
                       cell->second});
    }
    return out;
}

Node2CellResult node2cell(nn::Tape& t, const enc::Model& model, Ref aligned_nodes,
                          const std::vector<ProjectedNode>& neighborhood,
                          Ref m_tilde) {
    const geom::GridSpec& spec = model.config().grid;
    int UV = spec.U * spec.V;
    if (t.value(m_tilde).rows() != UV)
        throw std::invalid_argument("node2cell: grid shape mismatch");

    Node2CellResult out;
    Ref B;
    if (neighborhood.empty()) {
        B = t.constant(Mat::Zero(UV, t.value(m_tilde).cols()));
    } else {
        // broadcast weights: column i = flattened discount matrix of node i
        Mat W(UV, static_cast<int>(neighborhood.size()));
        std::vector<int> rows;
        for (std::size_t i = 0; i < neighborhood.size(); ++i) {
            Mat d = discount_matrix(neighborhood[i].u, neighborhood[i].v, spec);
            for (int u = 0; u < spec.U; ++u)
                for (int v = 0; v < spec.V; ++v)
                    W(u * spec.V + v, static_cast<int>(i)) = d(u, v);
            rows.push_back(neighborhood[i].row);
        }
        Ref F = t.gather_rows(aligned_nodes, rows);
        B = t.matmul(t.constant(W), F);
    }
    nn::ParamStore& ps = model.params();
    Ref cat = t.concat_cols(B, m_tilde);
    out.fused = t.add_rowwise(t.matmul(cat, t.param(ps.at("mgaf.MF.W"))),
                              t.param(ps.at("mgaf.MF.b")));
    return out;
}

}  // namespace stb::mgaf
