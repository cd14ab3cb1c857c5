#pragma once

#include <vector>

#include "stb/encoder.hpp"
#include "stb/grid_map.hpp"
#include "stb/topo_graph.hpp"

namespace stb::mgaf {

using nn::Mat;
using Ref = nn::Tape::Ref;

struct Cell2NodeResult {
    Mat features;              // N x D intermediate features, rows follow `ids`
    std::vector<int> ids;      // sorted node ids
    bool empty_grid = false;   // warning flag: no occupied cells
};

// Cell2Node transfer: the current visited node receives the mean over
// occupied grid cells, each in-footprint observed node receives its projected
// cell's feature, everything else stays zero.
Cell2NodeResult cell2node(const map::GridMap& grid, const topo::TopoGraph& graph);

// GF([g'; g]) per node. Both inputs are N x D in the same id order.
Ref graph_fuse(nn::Tape& t, const enc::Model& model, Ref g_prime, Ref g);

// Geometric discount over the U x V grid, measured in cell units from the
// node's projected cell: (d_max - d) / (d_max - d_min); all-ones when the
// grid has a single distinct distance.
Mat discount_matrix(int node_u, int node_v, const geom::GridSpec& spec);

struct ProjectedNode {
    int row = 0;  // row of the node in the aligned feature matrix
    int u = 0;
    int v = 0;
};

struct Node2CellResult {
    Ref fused = -1;      // (U*V) x D
    int excluded = 0;    // neighborhood nodes that projected outside the grid
};

// Node2Cell transfer: broadcast field B = sum_i outer(flatten(D_i), f_i),
// then MF([B; m_tilde]) per cell.
Node2CellResult node2cell(nn::Tape& t, const enc::Model& model, Ref aligned_nodes,
                          const std::vector<ProjectedNode>& neighborhood,
                          Ref m_tilde);

// Projects world-frame neighborhood nodes onto the current grid. Nodes
// falling outside the footprint are dropped (counted by node2cell callers via
// the size difference).
std::vector<ProjectedNode> project_neighborhood(const topo::TopoGraph& graph,
                                                const std::vector<int>& ids,
                                                const std::vector<int>& id_order,
                                                const geom::Pose& pose,
                                                const geom::GridSpec& spec);

}  // namespace stb::mgaf
