#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "stb/mgaf.hpp"

using namespace stb;

namespace {

topo::FeatVec feat(double v, int dim) { return topo::FeatVec::Constant(dim, v); }

topo::Candidate cand(double x, double y, double fv, int dim) {
    topo::Candidate c;
    c.world_pos = {x, y};
    c.view_index = 0;
    c.feature = feat(fv, dim);
    return c;
}

map::GridMap make_grid(const geom::GridSpec& spec, int D) {
    map::GridMap gm;
    gm.spec = spec;
    gm.features = nn::Mat::Zero(spec.U * spec.V, D);
    gm.counts = Eigen::VectorXi::Zero(spec.U * spec.V);
    return gm;
}

// Writes GF/MF so the fused output selects g-prime, g, or their sum.
enum class Select { First, Second, Sum };
void set_head(enc::Model& model, const std::string& head, Select sel) {
    int D = model.config().dim;
    nn::Mat W = nn::Mat::Zero(2 * D, D);
    if (sel != Select::Second) W.topRows(D).setIdentity();
    if (sel != Select::First) W.bottomRows(D).setIdentity();
    model.params().at("mgaf." + head + ".W").value = W;
    model.params().at("mgaf." + head + ".b").value.setZero();
}

}  // namespace

TEST_CASE("cell2node: current node pools occupied cells, observed nodes look up") {
    geom::GridSpec spec;  // 11x11 @ 1 m
    int D = 2;
    auto gm = make_grid(spec, D);
    gm.features.row(gm.cell_index(5, 5)) << 1, 0;
    gm.counts[gm.cell_index(5, 5)] = 1;
    gm.features.row(gm.cell_index(6, 4)) << 0, 1;
    gm.counts[gm.cell_index(6, 4)] = 1;

    topo::TopoGraph g;
    // agent at origin heading 0; observed candidates at ego (1.4, -0.6) and 8 m out
    g.update({0, 0, 0}, {cand(1.4, -0.6, 3.0, D), cand(8.0, 0.0, 4.0, D)},
             feat(0.5, D), 0);
    gm.origin_pose = {0, 0, 0};

    auto r = mgaf::cell2node(gm, g);
    REQUIRE(r.ids.size() == g.node_count());
    CHECK(!r.empty_grid);

    auto row_of = [&](int id) {
        return int(std::find(r.ids.begin(), r.ids.end(), id) - r.ids.begin());
    };
    // current visited: mean of the two occupied cells
    int vis = g.current_visited();
    CHECK(r.features(row_of(vis), 0) == doctest::Approx(0.5));
    CHECK(r.features(row_of(vis), 1) == doctest::Approx(0.5));
    // in-footprint observed node: exact cell (6,4) lookup
    int near_obs = -1, far_obs = -1;
    for (int id : g.observed_ids()) {
        if (g.node(id).position.x() > 5) far_obs = id;
        else near_obs = id;
    }
    CHECK(r.features(row_of(near_obs), 0) == doctest::Approx(0.0));
    CHECK(r.features(row_of(near_obs), 1) == doctest::Approx(1.0));
    // out-of-footprint observed node and the virtual stop stay zero
    CHECK(r.features.row(row_of(far_obs)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.features.row(row_of(topo::kVirtualStopId)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cell2node: empty grid raises the warning flag") {
    geom::GridSpec spec;
    auto gm = make_grid(spec, 2);
    topo::TopoGraph g;
    g.update({0, 0, 0}, {}, feat(0.5, 2), 0);
    auto r = mgaf::cell2node(gm, g);
    CHECK(r.empty_grid);
    CHECK(r.features.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("graph_fuse: identity selections and cancellation") {
    auto cfg = testutil::tiny_config();
    enc::Model model(cfg, testutil::full_vocab(), 1);
    int D = cfg.dim;
    nn::Mat gp = nn::Mat::Random(3, D);
    nn::Mat g = nn::Mat::Random(3, D);

    {
        set_head(model, "GF", Select::First);
        nn::Tape t;
        auto out = mgaf::graph_fuse(t, model, t.constant(gp), t.constant(g));
        CHECK((t.value(out) - gp).cwiseAbs().maxCoeff() == 0.0);
    }
    {
        set_head(model, "GF", Select::Second);
        nn::Tape t;
        auto out = mgaf::graph_fuse(t, model, t.constant(gp), t.constant(g));
        CHECK((t.value(out) - g).cwiseAbs().maxCoeff() == 0.0);
    }
    {
        set_head(model, "GF", Select::Sum);
        nn::Tape t;
        auto out = mgaf::graph_fuse(t, model, t.constant(g), t.constant((-g).eval()));
        CHECK(t.value(out).cwiseAbs().maxCoeff() == 0.0);
    }
    {
        nn::Tape t;
        CHECK_THROWS_AS(
            mgaf::graph_fuse(t, model, t.constant(nn::Mat::Zero(2, D)),
                             t.constant(nn::Mat::Zero(3, D))),
            std::invalid_argument);
    }
}

TEST_CASE("discount_matrix: 3x3 hand values") {
    geom::GridSpec spec;
    spec.U = 3;
    spec.V = 3;
    auto d = mgaf::discount_matrix(1, 1, spec);
    CHECK(d(1, 1) == doctest::Approx(1.0));
    double edge = (std::sqrt(2.0) - 1.0) / std::sqrt(2.0);
    CHECK(d(0, 1) == doctest::Approx(edge).epsilon(1e-12));
    CHECK(d(1, 0) == doctest::Approx(edge).epsilon(1e-12));
    CHECK(d(0, 0) == doctest::Approx(0.0));
    CHECK(d(2, 2) == doctest::Approx(0.0));
}

TEST_CASE("discount_matrix: corner node pins both extremes") {
    geom::GridSpec spec;
    spec.U = 7;
    spec.V = 5;
    auto d = mgaf::discount_matrix(0, 0, spec);
    CHECK(d(0, 0) == doctest::Approx(1.0));
    CHECK(d(6, 4) == doctest::Approx(0.0));
    CHECK(d.minCoeff() >= 0.0);
    CHECK(d.maxCoeff() <= 1.0);
}

TEST_CASE("discount_matrix: degenerate single-cell grid is all ones") {
    geom::GridSpec spec;
    spec.U = 1;
    spec.V = 1;
    auto d = mgaf::discount_matrix(0, 0, spec);
    CHECK(d.rows() == 1);
    CHECK(d(0, 0) == 1.0);
}

TEST_CASE("discount_matrix: rejects node cells outside the grid") {
    geom::GridSpec spec;
    CHECK_THROWS_AS(mgaf::discount_matrix(-1, 0, spec), std::invalid_argument);
    CHECK_THROWS_AS(mgaf::discount_matrix(0, 11, spec), std::invalid_argument);
}

TEST_CASE("node2cell: single centered node broadcasts its discount field") {
    auto cfg = testutil::tiny_config(4, 3);  // D=4 on a 3x3 grid
    enc::Model model(cfg, testutil::full_vocab(), 2);
    set_head(model, "MF", Select::First);  // output = broadcast field B
    int D = cfg.dim, UV = 9;

    nn::Mat aligned = nn::Mat::Zero(2, D);
    aligned.row(1) << 1, 2, 3, 4;  // node feature f
    std::vector<mgaf::ProjectedNode> nb = {{1, 1, 1}};  // row 1 at center cell

    nn::Tape t;
    auto r = mgaf::node2cell(t, model, t.constant(aligned), nb,
                             t.constant(nn::Mat::Zero(UV, D)));
    const nn::Mat& out = t.value(r.fused);
    // center cell: B = f exactly
    CHECK((out.row(1 * 3 + 1) - aligned.row(1)).cwiseAbs().maxCoeff() == 0.0);
    // corner cells: discount 0 -> zero broadcast
    CHECK(out.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.row(8).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("node2cell: empty neighborhood with pass-through head returns the grid") {
    auto cfg = testutil::tiny_config(4, 3);
    enc::Model model(cfg, testutil::full_vocab(), 3);
    set_head(model, "MF", Select::Second);
    nn::Mat m_tilde = nn::Mat::Random(9, cfg.dim);
    nn::Tape t;
    auto r = mgaf::node2cell(t, model, t.constant(nn::Mat::Zero(1, cfg.dim)), {},
                             t.constant(m_tilde));
    CHECK((t.value(r.fused) - m_tilde).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("node2cell: opposite features on one cell cancel") {
    auto cfg = testutil::tiny_config(4, 3);
    enc::Model model(cfg, testutil::full_vocab(), 4);
    set_head(model, "MF", Select::First);
    nn::Mat aligned(2, cfg.dim);
    aligned.row(0) << 1, -2, 0.5, 3;
    aligned.row(1) = -aligned.row(0);
    std::vector<mgaf::ProjectedNode> nb = {{0, 1, 1}, {1, 1, 1}};
    nn::Tape t;
    auto r = mgaf::node2cell(t, model, t.constant(aligned), nb,
                             t.constant(nn::Mat::Zero(9, cfg.dim)));
    CHECK(t.value(r.fused).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("node2cell: broadcast field is linear in the node features") {
    auto cfg = testutil::tiny_config(4, 5);
    enc::Model model(cfg, testutil::full_vocab(), 5);
    set_head(model, "MF", Select::First);
    nn::Mat aligned = nn::Mat::Random(3, cfg.dim);
    std::vector<mgaf::ProjectedNode> nb = {{0, 0, 2}, {1, 2, 2}, {2, 4, 1}};
    int UV = 25;
    double alpha = 3.5;

    nn::Tape t;
    auto a = mgaf::node2cell(t, model, t.constant(aligned), nb,
                             t.constant(nn::Mat::Zero(UV, cfg.dim)));
    auto b = mgaf::node2cell(t, model, t.constant((alpha * aligned).eval()), nb,
                             t.constant(nn::Mat::Zero(UV, cfg.dim)));
    nn::Mat scaled = alpha * t.value(a.fused);
    CHECK((t.value(b.fused) - scaled).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("project_neighborhood: in-grid nodes keep their rows, others drop") {
    geom::GridSpec spec;  // 11 x 11
    int D = 2;
    topo::TopoGraph g;
    g.update({0, 0, 0}, {}, feat(0.1, D), 0);
    g.update({2, 0, 0}, {}, feat(0.2, D), 1);
    g.update({9, 0, 0}, {}, feat(0.3, D), 2);
    auto ids = g.node_ids();
    // viewed from the origin pose, the node at x=9 falls outside the footprint
    std::vector<int> nbr = g.visited_ids();
    auto proj = mgaf::project_neighborhood(g, nbr, ids, {0, 0, 0}, spec);
    CHECK(proj.size() == 2);
    for (const auto& p : proj) {
        CHECK(p.u >= 0);
        CHECK(p.u < spec.U);
        CHECK(ids[p.row] != topo::kVirtualStopId);
    }
}
