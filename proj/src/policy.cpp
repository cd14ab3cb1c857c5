#include "stb/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "stb/hash.hpp"
#include "stb/sim/instructions.hpp"

namespace stb::policy {

ExpertMode parse_expert(const std::string& name) {
    if (name == "topo") return ExpertMode::Topo;
    if (name == "grid") return ExpertMode::Grid;
    if (name == "hybrid") return ExpertMode::Hybrid;
    throw std::invalid_argument("unknown expert mode: " + name);
}

std::string expert_name(ExpertMode m) {
    switch (m) {
        case ExpertMode::Topo: return "topo";
        case ExpertMode::Grid: return "grid";
        default: return "hybrid";
    }
}

namespace {
int row_of(const std::vector<int>& sorted_ids, int id) {
    auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), id);
    if (it == sorted_ids.end() || *it != id)
        throw std::logic_error("node id missing from the aligned feature rows");
    return static_cast<int>(it - sorted_ids.begin());
}
}  // namespace

StepForward encode_step(nn::Tape& t, const enc::Model& model,
                        const topo::TopoGraph& graph, const map::GridMap& grid,
                        const geom::Pose& pose, const std::vector<int>& instr_ids,
                        bool use_mgaf, double neighborhood_radius) {
    StepForward sf;
    auto instr = model.encode_instruction(t, instr_ids);
    sf.instr = instr.vectors;

    auto c2n = mgaf::cell2node(grid, graph);
    sf.empty_grid = c2n.empty_grid;
    sf.node_ids = c2n.ids;
    int N = static_cast<int>(sf.node_ids.size());
    int D = model.config().dim;

    nn::Mat stored(N, D);
    std::vector<int> rel_ids(N), time_ids(N);
    for (int i = 0; i < N; ++i) {
        const topo::TopoNode& n = graph.node(sf.node_ids[i]);
        stored.row(i) = n.feature;
        auto ctx = topo::node_context(n, pose, graph.step());
        rel_ids[i] = ctx.rel_id;
        time_ids[i] = ctx.time_id;
    }
    Ref raw = t.constant(stored);
    Ref node_in =
        use_mgaf ? mgaf::graph_fuse(t, model, t.constant(c2n.features), raw) : raw;

    Eigen::MatrixXi hops = graph.hop_buckets(sf.node_ids);
    auto tc = model.tcmt(t, node_in, rel_ids, time_ids, hops, sf.instr);
    sf.aligned = tc.nodes;
    sf.text = tc.text;

    Ref m_tilde = model.gcmt(t, t.constant(grid.features), sf.instr);
    if (use_mgaf) {
        std::vector<int> nbr = graph.neighborhood(neighborhood_radius);
        auto proj = mgaf::project_neighborhood(graph, nbr, sf.node_ids, pose, grid.spec);
        sf.excluded_nodes = static_cast<int>(nbr.size() - proj.size());
        auto n2c = mgaf::node2cell(t, model, sf.aligned, proj, m_tilde);
        sf.fused_grid = n2c.fused;
        sf.excluded_nodes += n2c.excluded;
    } else {
        sf.fused_grid = m_tilde;
    }
    sf.gah = vgwg::predict_gah(t, model, sf.fused_grid);
    return sf;
}

ActionScores predict_actions(nn::Tape& t, const enc::Model& model,
                             const StepForward& sf, const topo::TopoGraph& graph,
                             const geom::Pose& pose) {
    ActionScores s;
    nn::ParamStore& P = model.params();

    // graph targets: virtual stop + every observed node + any current
    // candidate that already merged into a visited node
    std::vector<int> targets{topo::kVirtualStopId};
    for (int id : graph.observed_ids()) targets.push_back(id);
    for (int id : graph.current_candidates())
        if (std::find(targets.begin(), targets.end(), id) == targets.end())
            targets.push_back(id);
    std::sort(targets.begin(), targets.end());
    s.graph_targets = targets;

    std::vector<int> rows;
    for (int id : targets) rows.push_back(row_of(sf.node_ids, id));
    Ref gathered = t.gather_rows(sf.aligned, rows);
    Ref gcol = t.add_rowwise(t.matmul(gathered, t.param(P.at("policy.graph.W"))),
                             t.param(P.at("policy.graph.b")));
    s.graph_ref = t.transpose(gcol);
    const nn::Mat& gv = t.value(s.graph_ref);
    s.graph_scores.assign(gv.data(), gv.data() + gv.size());

    // grid targets: current candidates whose projected cell is in-footprint
    std::vector<int> cand = graph.current_candidates();
    std::sort(cand.begin(), cand.end());
    std::vector<int> cell_rows;
    for (int id : cand) {
        Eigen::Vector2d ego = geom::world_to_ego(graph.node(id).position, pose);
        auto cell = geom::world_to_cell(ego, model.config().grid);
        if (!cell) continue;
        s.grid_targets.push_back(id);
        cell_rows.push_back(cell->first * model.config().grid.V + cell->second);
    }

    // gamma: stop feature + pooled fused-grid feature
    Ref stop_row = t.gather_rows(sf.aligned, {row_of(sf.node_ids, topo::kVirtualStopId)});
    Ref pooled = t.mean_rows(sf.fused_grid);
    Ref gcat = t.concat_cols(stop_row, pooled);
    Ref gamma = t.sigmoid(t.add_rowwise(t.matmul(gcat, t.param(P.at("policy.gamma.W"))),
                                        t.param(P.at("policy.gamma.b"))));
    s.gamma = t.value(gamma)(0, 0);

    if (!s.grid_targets.empty()) {
        Ref cells = t.gather_rows(sf.fused_grid, cell_rows);
        Ref mcol = t.add_rowwise(t.matmul(cells, t.param(P.at("policy.grid.W"))),
                                 t.param(P.at("policy.grid.b")));
        s.grid_ref = t.transpose(mcol);
        const nn::Mat& mv = t.value(s.grid_ref);
        s.grid_scores.assign(mv.data(), mv.data() + mv.size());

        // mixed logits: graph + mask * (1-gamma) * (grid - graph), leaving
        // non-current targets at their pure graph score
        int N = static_cast<int>(targets.size());
        int C = static_cast<int>(s.grid_targets.size());
        nn::Mat sel = nn::Mat::Zero(C, N);
        nn::Mat mask = nn::Mat::Zero(1, N);
        for (int j = 0; j < C; ++j) {
            int i = static_cast<int>(
                std::lower_bound(targets.begin(), targets.end(), s.grid_targets[j]) -
                targets.begin());
            sel(j, i) = 1.0;
            mask(0, i) = 1.0;
        }
        Ref grid_in_graph = t.matmul(s.grid_ref, t.constant(sel));
        Ref diff = t.cmul(t.sub(grid_in_graph, s.graph_ref), mask);
        Ref one_minus = t.sub(t.constant(nn::Mat::Ones(1, 1)), gamma);
        s.fused_ref = t.add(s.graph_ref, t.scale_by(diff, one_minus));
    } else {
        s.fused_ref = s.graph_ref;
    }
    return s;
}

int fuse_action(const ActionScores& s, ExpertMode mode) {
    auto argmax_graph = [&] {
        int best = s.graph_targets[0];
        double bv = s.graph_scores[0];
        for (std::size_t i = 1; i < s.graph_targets.size(); ++i)
            if (s.graph_scores[i] > bv) {
                bv = s.graph_scores[i];
                best = s.graph_targets[i];
            }
        return best;
    };
    if (mode == ExpertMode::Topo || s.grid_targets.empty()) {
        if (mode == ExpertMode::Grid && s.grid_targets.empty()) return argmax_graph();
        return argmax_graph();
    }
    if (mode == ExpertMode::Grid) {
        // stop competes with its graph score; candidates use grid scores
        int best = topo::kVirtualStopId;
        double bv = s.graph_scores[0];
        for (std::size_t j = 0; j < s.grid_targets.size(); ++j)
            if (s.grid_scores[j] > bv) {
                bv = s.grid_scores[j];
                best = s.grid_targets[j];
            }
        return best;
    }
    int ag = argmax_graph();
    auto it = std::find(s.grid_targets.begin(), s.grid_targets.end(), ag);
    if (it == s.grid_targets.end()) return ag;  // backtracking branch
    int best = -1;
    double bv = 0.0;
    for (std::size_t j = 0; j < s.grid_targets.size(); ++j) {
        int id = s.grid_targets[j];
        std::size_t gi = std::lower_bound(s.graph_targets.begin(),
                                          s.graph_targets.end(), id) -
                         s.graph_targets.begin();
        double v = s.gamma * s.graph_scores[gi] + (1.0 - s.gamma) * s.grid_scores[j];
        if (best < 0 || v > bv) {
            bv = v;
            best = id;
        }
    }
    return best;
}

std::vector<topo::Candidate> make_candidates(
    const sim::Env& env, const geom::Pose& pose,
    const sim::SurrogateObservation& obs,
    const std::vector<Eigen::Vector2d>& waypoints) {
    std::vector<topo::Candidate> out;
    for (const auto& w : waypoints) {
        topo::Candidate c;
        c.world_pos = w;
        c.view_index = env.view_of_bearing(pose, w);
        c.feature = obs.view_features[c.view_index];
        out.push_back(std::move(c));
    }
    return out;
}

geom::Pose navigate_to(const sim::Env& env, geom::Pose pose,
                       const Eigen::Vector2d& target,
                       std::vector<geom::Pose>& traj, int budget) {
    const sim::Scene& scene = env.scene();
    int blocked = 0;
    for (int i = 0; i < budget; ++i) {
        Eigen::Vector2d p{pose.x, pose.y};
        if ((target - p).norm() <= 0.2) break;
        Eigen::Vector2d aim = target;
        if (!scene.line_of_sight(p, target)) {
            auto path = scene.raster.shortest_path(p, target);
            if (!path || path->size() < 2) break;
            aim = (*path)[1];
            for (auto it = path->rbegin(); it != path->rend(); ++it) {
                if ((*it - p).norm() > 1.5 || (*it - p).norm() < 1e-9) continue;
                if (scene.line_of_sight(p, *it)) {
                    aim = *it;
                    break;
                }
            }
        }
        double bearing = std::atan2(aim.y() - p.y(), aim.x() - p.x()) * 180.0 / M_PI;
        double err = std::remainder(bearing - pose.heading, 360.0);
        geom::Action a = geom::Action::Forward;
        if (err > geom::kTurnStep / 2 + 1e-9)
            a = geom::Action::TurnLeft;
        else if (err < -(geom::kTurnStep / 2 + 1e-9))
            a = geom::Action::TurnRight;
        geom::Pose next = env.step(pose, a);
        if (a == geom::Action::Forward && next.x == pose.x && next.y == pose.y) {
            if (++blocked > 3) break;
            next = env.step(pose, geom::Action::TurnLeft);  // sidestep and re-plan
        } else if (a == geom::Action::Forward) {
            blocked = 0;
        }
        pose = next;
        traj.push_back(pose);
    }
    return pose;
}

namespace {
nlohmann::json pose_json(const geom::Pose& p) {
    return nlohmann::json::array({p.x, p.y, p.heading});
}
geom::Pose pose_from(const nlohmann::json& j) {
    return geom::Pose{j.at(0), j.at(1), j.at(2)};
}
nlohmann::json points_json(const std::vector<Eigen::Vector2d>& pts) {
    auto a = nlohmann::json::array();
    for (const auto& p : pts) a.push_back({p.x(), p.y()});
    return a;
}
}  // namespace

std::string EpisodeRecord::to_jsonl() const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["scene_id"] = scene_id;
    j["instruction"] = instruction;
    j["goal"] = {goal.x(), goal.y()};
    j["geodesic"] = geodesic;
    j["stop_reason"] = stop_reason;
    j["partial"] = partial;
    j["final_pose"] = pose_json(final_pose);
    auto traj = nlohmann::json::array();
    for (const auto& p : trajectory) traj.push_back(pose_json(p));
    j["trajectory"] = traj;
    auto steps_j = nlohmann::json::array();
    for (const auto& s : steps) {
        steps_j.push_back({{"pose", pose_json(s.pose)},
                           {"w", points_json(s.w)},
                           {"w_hat", points_json(s.w_hat)},
                           {"p_sum", s.p_sum},
                           {"h_max", s.h_max},
                           {"hhat_max", s.hhat_max},
                           {"chosen", s.chosen},
                           {"gamma", s.gamma},
                           {"stage1_graph_hash", std::to_string(s.stage1_graph_hash)},
                           {"graph_hash", std::to_string(s.graph_hash)},
                           {"grid_hash", std::to_string(s.grid_hash)}});
    }
    j["steps"] = steps_j;
    return j.dump();
}

EpisodeRecord parse_episode(const std::string& json_line) {
    nlohmann::json j = nlohmann::json::parse(json_line);
    EpisodeRecord r;
    r.scene_id = j.at("scene_id");
    r.instruction = j.at("instruction").get<std::vector<std::string>>();
    r.goal = Eigen::Vector2d(j.at("goal").at(0).get<double>(),
                             j.at("goal").at(1).get<double>());
    r.geodesic = j.at("geodesic");
    r.stop_reason = j.at("stop_reason");
    r.partial = j.at("partial");
    r.final_pose = pose_from(j.at("final_pose"));
    for (const auto& p : j.at("trajectory")) r.trajectory.push_back(pose_from(p));
    for (const auto& sj : j.at("steps")) {
        StepRecord s;
        s.pose = pose_from(sj.at("pose"));
        for (const auto& p : sj.at("w"))
            s.w.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        for (const auto& p : sj.at("w_hat"))
            s.w_hat.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        s.p_sum = sj.at("p_sum");
        s.h_max = sj.at("h_max");
        s.hhat_max = sj.at("hhat_max");
        s.chosen = sj.at("chosen");
        s.gamma = sj.at("gamma");
        s.stage1_graph_hash = std::stoull(sj.at("stage1_graph_hash").get<std::string>());
        s.graph_hash = std::stoull(sj.at("graph_hash").get<std::string>());
        s.grid_hash = std::stoull(sj.at("grid_hash").get<std::string>());
        r.steps.push_back(std::move(s));
    }
    return r;
}

EpisodeRecord run_episode(const sim::Env& env, const enc::Model& model,
                          const EpisodeConfig& cfg) {
    const sim::Scene& scene = env.scene();
    EpisodeRecord rec;
    rec.scene_id = scene.id;
    rec.instruction = sim::instruction_for(scene);
    rec.goal = scene.goal;
    rec.geodesic = env.geodesic({scene.start.x, scene.start.y}, scene.goal);
    std::vector<int> instr_ids = model.vocab().encode(rec.instruction);

    geom::Pose pose = scene.start;
    rec.trajectory.push_back(pose);
    rec.stop_reason = "max_steps";
    std::mt19937_64 rng(cfg.seed);
    std::mt19937_64 drng(cfg.disturb.seed ^ (cfg.seed * 0x9e3779b97f4a7c15ULL));

    topo::TopoGraph graph;  // persisted G_{t-1}
    double delta = cfg.use_vgwg ? cfg.gah.delta : 0.0;

    try {
        for (int t = 0; t < cfg.t_m; ++t) {
            StepRecord sr;
            sr.pose = pose;

            auto obs = env.render_panorama(pose);
            if (cfg.disturb.kind == sim::DisturbKind::LocalNoise)
                sim::disturb_observation(obs, cfg.disturb.level, drng);
            auto pano = env.to_panorama(obs);
            auto grid = map::build_grid_map(pano, pose, cfg.grid, env.config().band,
                                            env.config().hfov);
            auto wp = env.surrogate_wp(pose, cfg.grid);
            sr.p_sum = wp.distribution.values.sum();

            auto w = vgwg::sample_waypoints(wp.distribution, cfg.gah.k_candidates,
                                            wp.nav_mask, pose, cfg.grid, rng,
                                            cfg.gah.min_separation);
            auto cands = make_candidates(env, pose, obs, w.world);
            if (cfg.disturb.kind == sim::DisturbKind::FovLoss)
                sim::disturb_candidates(env, pose, obs, cands, cfg.disturb.level, drng);
            for (const auto& c : cands) sr.w.push_back(c.world_pos);

            topo::FeatVec pano_mean =
                topo::FeatVec::Zero(obs.view_features[0].cols());
            for (const auto& f : obs.view_features) pano_mean += f;
            pano_mean /= static_cast<double>(obs.view_features.size());

            // stage 1: speculative map update to predict the heatmap prior
            topo::TopoGraph g1 = graph;
            g1.update(pose, cands, pano_mean, t);
            vgwg::Heatmap H;
            H.values = nn::Mat::Zero(cfg.grid.sub_rows(), cfg.grid.sub_cols());
            H.sub_res = cfg.grid.sub_res();
            if (delta != 0.0) {
                nn::Tape t1;
                auto sf1 = encode_step(t1, model, g1, grid, pose, instr_ids,
                                       cfg.use_mgaf, cfg.neighborhood_radius);
                H = vgwg::assemble_heatmap(t1.value(sf1.gah), cfg.grid);
            }
            sr.h_max = H.values.maxCoeff();
            sr.stage1_graph_hash = fnv1a(g1.dump_json());

            auto hhat = vgwg::fuse_heatmaps(H, wp.distribution, delta);
            sr.hhat_max = hhat.values.maxCoeff();
            // With zero guidance weight the fused map is the prior the original
            // candidates were already drawn from, so they are kept as-is; with
            // nonzero weight the candidates are re-drawn from the fused map,
            // which is what lets the agent recover from corrupted proposals.
            std::vector<topo::Candidate> cands2 = cands;
            if (delta != 0.0) {
                auto what = vgwg::sample_waypoints(hhat, cfg.gah.k_candidates,
                                                   wp.nav_mask, pose, cfg.grid, rng,
                                                   cfg.gah.min_separation);
                cands2 = make_candidates(env, pose, obs, what.world);
            }
            for (const auto& c : cands2) sr.w_hat.push_back(c.world_pos);

            // stage 2: fresh branch from the (t-1) snapshot with the adjusted
            // candidates; this branch is the one that persists
            topo::TopoGraph g2 = graph;
            g2.update(pose, cands2, pano_mean, t);
            if (cfg.disturb.kind == sim::DisturbKind::MemoryDecay)
                sim::disturb_graph(g2, cfg.disturb.level, drng);

            nn::Tape t2;
            auto sf2 = encode_step(t2, model, g2, grid, pose, instr_ids,
                                   cfg.use_mgaf, cfg.neighborhood_radius);
            auto scores = predict_actions(t2, model, sf2, g2, pose);
            sr.gamma = scores.gamma;
            int chosen = fuse_action(scores, cfg.expert);
            sr.chosen = chosen;

            graph = std::move(g2);
            sr.graph_hash = fnv1a(graph.dump_json());
            sr.grid_hash = fnv1a(grid.dump_text());
            rec.steps.push_back(std::move(sr));

            if (chosen == topo::kVirtualStopId) {
                rec.stop_reason = "stop_action";
                break;
            }
            std::vector<Eigen::Vector2d> targets;
            auto path = graph.shortest_path(chosen);
            if (path.size() > 1)
                for (std::size_t i = 1; i < path.size(); ++i)
                    targets.push_back(graph.node(path[i]).position);
            else
                targets.push_back(graph.node(chosen).position);
            for (const auto& tgt : targets)
                pose = navigate_to(env, pose, tgt, rec.trajectory,
                                   cfg.low_level_budget);
        }
    } catch (const std::exception&) {
        rec.partial = true;
        rec.stop_reason = "aborted";
    }
    rec.final_pose = pose;
    return rec;
}

}  // namespace stb::policy
