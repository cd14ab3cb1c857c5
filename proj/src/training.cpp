#include "stb/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "stb/sim/instructions.hpp"

namespace stb::train {

std::pair<std::vector<int>, std::vector<int>> mask_for_mlm(
    const std::vector<int>& token_ids, double prob, std::mt19937_64& rng) {
    std::vector<int> masked = token_ids;
    std::vector<int> positions;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < masked.size(); ++i)
        if (u(rng) < prob) {
            masked[i] = enc::Vocab::kMask;
            positions.push_back(static_cast<int>(i));
        }
    if (positions.empty()) {
        int i = static_cast<int>(
            std::uniform_int_distribution<std::size_t>(0, masked.size() - 1)(rng));
        masked[i] = enc::Vocab::kMask;
        positions.push_back(i);
    }
    return {std::move(masked), std::move(positions)};
}

Ref mlm_loss(nn::Tape& t, const enc::Model& model, Ref text,
             const std::vector<int>& original_ids,
             const std::vector<int>& mask_positions) {
    nn::ParamStore& P = model.params();
    Ref logits = t.add_rowwise(t.matmul(text, t.param(P.at("mlm.W"))),
                               t.param(P.at("mlm.b")));
    std::vector<int> targets(t.value(logits).rows(), -1);
    for (int pos : mask_positions) targets[pos] = original_ids[pos];
    return t.nll_rows(logits, std::move(targets));
}

Ref hsap_loss(nn::Tape& t, const std::vector<std::pair<Ref, int>>& steps) {
    if (steps.empty()) throw std::invalid_argument("hsap_loss: no steps");
    Ref acc = -1;
    for (const auto& [logits, target] : steps) {
        Ref l = t.nll_rows(logits, {target});
        acc = acc < 0 ? l : t.add(acc, l);
    }
    return t.scale(acc, 1.0 / static_cast<double>(steps.size()));
}

Ref gahp_loss(nn::Tape& t, const std::vector<std::pair<Ref, nn::Mat>>& steps) {
    if (steps.empty()) throw std::invalid_argument("gahp_loss: no steps");
    Ref acc = -1;
    for (const auto& [pred, target] : steps) {
        Ref l = t.mse(pred, target);
        acc = acc < 0 ? l : t.add(acc, l);
    }
    return t.scale(acc, 1.0 / static_cast<double>(steps.size()));
}

double forcing_schedule(int iteration, int total) {
    if (total <= 0) return 0.0;
    return 1.0 - static_cast<double>(iteration) / static_cast<double>(total);
}

GradCheckResult grad_check(nn::ParamStore& params,
                           const std::function<double(bool with_grad)>& loss_fn,
                           int samples, std::mt19937_64& rng, double h) {
    params.zero_grads();
    loss_fn(true);

    struct Coord {
        std::string name;
        int idx;
        double analytic;
    };
    std::vector<Coord> coords;
    for (const auto& name : params.names()) {
        const nn::Param& p = params.at(name);
        for (int i = 0; i < p.value.size(); ++i)
            coords.push_back({name, i, p.grad(i)});
    }
    std::shuffle(coords.begin(), coords.end(), rng);
    samples = std::min<int>(samples, static_cast<int>(coords.size()));

    GradCheckResult res;
    for (int s = 0; s < samples; ++s) {
        const Coord& c = coords[s];
        nn::Param& p = params.at(c.name);
        double orig = p.value(c.idx);
        p.value(c.idx) = orig + h;
        double lp = loss_fn(false);
        p.value(c.idx) = orig - h;
        double lm = loss_fn(false);
        p.value(c.idx) = orig;
        double fd = (lp - lm) / (2.0 * h);
        if (!std::isfinite(fd) || !std::isfinite(c.analytic)) {
            res.all_finite = false;
            res.worst_param = c.name;
            res.worst_index = c.idx;
            res.max_rel_error = std::numeric_limits<double>::infinity();
            return res;
        }
        double rel = std::abs(fd - c.analytic) /
                     std::max({1.0, std::abs(fd), std::abs(c.analytic)});
        if (rel > res.max_rel_error) {
            res.max_rel_error = rel;
            res.worst_param = c.name;
            res.worst_index = c.idx;
        }
    }
    return res;
}

namespace {

topo::FeatVec panorama_mean(const sim::SurrogateObservation& obs) {
    topo::FeatVec m = topo::FeatVec::Zero(obs.view_features[0].cols());
    for (const auto& f : obs.view_features) m += f;
    return m / static_cast<double>(obs.view_features.size());
}

int nearest_candidate(const topo::TopoGraph& g, const Eigen::Vector2d& p) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int id : g.current_candidates()) {
        double d = (g.node(id).position - p).norm();
        if (d < bd) {
            bd = d;
            best = id;
        }
    }
    return best;
}

int target_index(const std::vector<int>& graph_targets, int id) {
    auto it = std::lower_bound(graph_targets.begin(), graph_targets.end(), id);
    if (it == graph_targets.end() || *it != id)
        throw std::logic_error("expert target missing from the action targets");
    return static_cast<int>(it - graph_targets.begin());
}

constexpr double kStopGeodesic = 0.5;  // meters: expert calls stop inside this

}  // namespace

TrainBatch build_expert_batch(const sim::Env& env, const enc::Model& model,
                              const policy::EpisodeConfig& cfg,
                              std::mt19937_64& rng) {
    const sim::Scene& scene = env.scene();
    TrainBatch b;
    b.scene_id = scene.id;
    b.instr_ids = model.vocab().encode(sim::instruction_for(scene));

    geom::Pose pose = scene.start;
    topo::TopoGraph graph;
    std::vector<geom::Pose> traj;
    for (int t = 0; t < cfg.t_m; ++t) {
        auto obs = env.render_panorama(pose);
        auto pano = env.to_panorama(obs);
        auto grid = map::build_grid_map(pano, pose, cfg.grid, env.config().band,
                                        env.config().hfov);
        auto wp = env.surrogate_wp(pose, cfg.grid);
        auto w = vgwg::sample_waypoints(wp.distribution, cfg.gah.k_candidates,
                                        wp.nav_mask, pose, cfg.grid, rng,
                                        cfg.gah.min_separation);
        auto cands = policy::make_candidates(env, pose, obs, w.world);
        auto expert = env.expert_action(pose);
        bool stop = expert.geodesic <= kStopGeodesic;
        if (!stop) {
            auto extra = policy::make_candidates(env, pose, obs, {expert.waypoint});
            cands.push_back(extra.front());
        }
        graph.update(pose, cands, panorama_mean(obs), t);

        ExpertStep es;
        es.pose = pose;
        es.grid = grid;
        es.graph = graph;
        es.expert_waypoint = expert.waypoint;
        es.target_id = stop ? topo::kVirtualStopId : nearest_candidate(graph, expert.waypoint);
        es.gah_target = vgwg::flatten_heatmap(
            vgwg::ground_truth_gah(stop ? scene.goal : expert.waypoint, pose,
                                   cfg.grid, cfg.gah),
            cfg.grid);
        b.steps.push_back(std::move(es));
        if (stop) break;

        geom::Pose next =
            policy::navigate_to(env, pose, expert.waypoint, traj, cfg.low_level_budget);
        if (std::abs(next.x - pose.x) < 1e-12 && std::abs(next.y - pose.y) < 1e-12 &&
            std::abs(next.heading - pose.heading) < 1e-12)
            break;  // executor made no progress
        pose = next;
    }
    return b;
}

double batch_loss(enc::Model& model, const TrainBatch& batch,
                  const std::vector<int>& masked_ids,
                  const std::vector<int>& mask_positions, const TrainConfig& cfg,
                  double neighborhood_radius, bool with_grad, LossReport* report,
                  bool use_mgaf) {
    nn::Tape t;
    std::vector<std::pair<Ref, int>> hsap_steps;
    std::vector<std::pair<Ref, nn::Mat>> gahp_steps;
    Ref text0 = -1;
    for (const auto& es : batch.steps) {
        auto sf = policy::encode_step(t, model, es.graph, es.grid, es.pose,
                                      masked_ids, use_mgaf, neighborhood_radius);
        if (text0 < 0) text0 = sf.text;
        auto scores = policy::predict_actions(t, model, sf, es.graph, es.pose);
        hsap_steps.push_back(
            {scores.fused_ref, target_index(scores.graph_targets, es.target_id)});
        gahp_steps.push_back({sf.gah, es.gah_target});
    }
    Ref l_mlm = mlm_loss(t, model, text0, batch.instr_ids, mask_positions);
    Ref l_hsap = hsap_loss(t, hsap_steps);
    Ref l_gahp = gahp_loss(t, gahp_steps);
    Ref total = t.add(t.add(t.scale(l_mlm, cfg.w_mlm), t.scale(l_hsap, cfg.w_hsap)),
                      t.scale(l_gahp, cfg.w_gahp));
    if (with_grad) t.backward(total);
    if (report) {
        report->mlm = t.value(l_mlm)(0, 0);
        report->hsap = t.value(l_hsap)(0, 0);
        report->gahp = t.value(l_gahp)(0, 0);
        report->total = t.value(total)(0, 0);
        if (with_grad) {
            nn::ParamStore& P = model.params();
            report->grad_encoder =
                std::max({P.grad_norm("tcmt"), P.grad_norm("gcmt"), P.grad_norm("instr"),
                          P.grad_norm("node")});
            report->grad_mgaf = P.grad_norm("mgaf");
            report->grad_vgwg = P.grad_norm("vgwg");
            report->grad_policy = P.grad_norm("policy");
            report->grad_mlm_head = P.grad_norm("mlm");
        }
    }
    return t.value(total)(0, 0);
}

LossReport pretrain(enc::Model& model, const std::vector<sim::Scene>& scenes,
                    const policy::EpisodeConfig& episode_cfg, const TrainConfig& cfg) {
    if (scenes.empty()) throw std::invalid_argument("pretrain: no scenes");
    std::mt19937_64 rng(cfg.seed);
    std::vector<TrainBatch> batches;
    for (const auto& s : scenes) {
        sim::Env env(s, sim::EnvConfig{}, sim::landmark_labels());
        batches.push_back(build_expert_batch(env, model, episode_cfg, rng));
    }
    std::ofstream csv;
    if (!cfg.csv_path.empty()) {
        csv.open(cfg.csv_path);
        csv << "iteration,mlm,hsap,gahp,total\n";
    }
    LossReport rep;
    for (int it = 0; it < cfg.iterations; ++it) {
        const TrainBatch& b = batches[it % batches.size()];
        auto [masked, positions] = mask_for_mlm(b.instr_ids, cfg.mlm_prob, rng);
        model.params().zero_grads();
        batch_loss(model, b, masked, positions, cfg,
                   episode_cfg.neighborhood_radius, true, &rep,
                   episode_cfg.use_mgaf);
        model.params().sgd_step(cfg.lr);
        if (csv.is_open())
            csv << it << ',' << rep.mlm << ',' << rep.hsap << ',' << rep.gahp << ','
                << rep.total << '\n';
    }
    return rep;
}

LossReport finetune(enc::Model& model, const std::vector<sim::Scene>& scenes,
                    const policy::EpisodeConfig& episode_cfg, const TrainConfig& cfg) {
    if (scenes.empty()) throw std::invalid_argument("finetune: no scenes");
    std::mt19937_64 rng(cfg.seed ^ 0xf17e7u);
    std::vector<sim::Env> envs;
    envs.reserve(scenes.size());
    for (const auto& s : scenes) envs.emplace_back(s, sim::EnvConfig{}, sim::landmark_labels());

    std::ofstream csv;
    if (!cfg.csv_path.empty()) {
        csv.open(cfg.csv_path);
        csv << "iteration,mlm,hsap,gahp,total\n";
    }
    LossReport rep;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int it = 0; it < cfg.iterations; ++it) {
        const sim::Env& env = envs[it % envs.size()];
        const sim::Scene& scene = env.scene();
        double p_teacher = forcing_schedule(it, cfg.iterations);
        std::vector<int> instr_ids = model.vocab().encode(sim::instruction_for(scene));

        nn::Tape t;
        std::vector<std::pair<Ref, int>> hsap_steps;
        geom::Pose pose = scene.start;
        topo::TopoGraph graph;
        std::vector<geom::Pose> traj;
        for (int step = 0; step < episode_cfg.t_m; ++step) {
            auto obs = env.render_panorama(pose);
            auto pano = env.to_panorama(obs);
            auto grid = map::build_grid_map(pano, pose, episode_cfg.grid,
                                            env.config().band, env.config().hfov);
            auto wp = env.surrogate_wp(pose, episode_cfg.grid);
            auto w = vgwg::sample_waypoints(wp.distribution, episode_cfg.gah.k_candidates,
                                            wp.nav_mask, pose, episode_cfg.grid, rng,
                                            episode_cfg.gah.min_separation);
            auto cands = policy::make_candidates(env, pose, obs, w.world);
            auto expert = env.expert_action(pose);
            bool stop = expert.geodesic <= kStopGeodesic;
            if (!stop) {
                auto extra = policy::make_candidates(env, pose, obs, {expert.waypoint});
                cands.push_back(extra.front());
            }
            graph.update(pose, cands, panorama_mean(obs), step);

            auto sf = policy::encode_step(t, model, graph, grid, pose, instr_ids,
                                          episode_cfg.use_mgaf,
                                          episode_cfg.neighborhood_radius);
            auto scores = policy::predict_actions(t, model, sf, graph, pose);
            int target = stop ? topo::kVirtualStopId
                              : nearest_candidate(graph, expert.waypoint);
            hsap_steps.push_back(
                {scores.fused_ref, target_index(scores.graph_targets, target)});
            if (stop) break;

            Eigen::Vector2d dest = expert.waypoint;
            if (u(rng) >= p_teacher) {  // student forcing
                int chosen = policy::fuse_action(scores, episode_cfg.expert);
                if (chosen == topo::kVirtualStopId) break;
                dest = graph.node(chosen).position;
            }
            geom::Pose next = policy::navigate_to(env, pose, dest, traj,
                                                  episode_cfg.low_level_budget);
            if (std::abs(next.x - pose.x) < 1e-12 &&
                std::abs(next.y - pose.y) < 1e-12 &&
                std::abs(next.heading - pose.heading) < 1e-12)
                break;
            pose = next;
        }
        Ref loss = hsap_loss(t, hsap_steps);
        model.params().zero_grads();
        t.backward(loss);
        model.params().sgd_step(cfg.lr);
        rep = LossReport{};
        rep.hsap = t.value(loss)(0, 0);
        rep.total = rep.hsap;
        rep.grad_policy = model.params().grad_norm("policy");
        if (csv.is_open())
            csv << it << ",0,"<< rep.hsap << ",0," << rep.total << '\n';
    }
    return rep;
}

}  // namespace stb::train
