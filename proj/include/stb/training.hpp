#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "stb/policy.hpp"

namespace stb::train {

using Ref = nn::Tape::Ref;

// Masks each position independently with `prob`; if no position is drawn, one
// is forced uniformly. Returns masked ids (kMask substituted) and positions.
std::pair<std::vector<int>, std::vector<int>> mask_for_mlm(
    const std::vector<int>& token_ids, double prob, std::mt19937_64& rng);

// Mean over masked positions of -log softmax(vocab logits)[original id].
Ref mlm_loss(nn::Tape& t, const enc::Model& model, Ref text,
             const std::vector<int>& original_ids,
             const std::vector<int>& mask_positions);

// Mean over steps of -log softmax(fused logits)[target index].
Ref hsap_loss(nn::Tape& t, const std::vector<std::pair<Ref, int>>& steps);

// Mean over steps of the MSE between predicted and target heatmap blocks.
Ref gahp_loss(nn::Tape& t, const std::vector<std::pair<Ref, nn::Mat>>& steps);

double forcing_schedule(int iteration, int total);  // linear 1 -> 0

struct GradCheckResult {
    double max_rel_error = 0.0;
    bool all_finite = true;
    std::string worst_param;
    int worst_index = -1;
};

// `loss_fn(with_grad)` must rebuild the forward pass from current parameter
// values, returning the scalar loss and (when with_grad) accumulating
// gradients into the store. Central differences with step `h`.
GradCheckResult grad_check(nn::ParamStore& params,
                           const std::function<double(bool with_grad)>& loss_fn,
                           int samples, std::mt19937_64& rng, double h = 1e-4);

// One supervised step of an expert trajectory: the maps after this step's
// update, the ground-truth target node, and the ground-truth heatmap blocks.
struct ExpertStep {
    geom::Pose pose;
    map::GridMap grid;
    topo::TopoGraph graph;
    int target_id = 0;      // 0 = stop
    nn::Mat gah_target;     // (U*V) x (m*n)
    Eigen::Vector2d expert_waypoint{0.0, 0.0};
};

struct TrainBatch {
    std::string scene_id;
    std::vector<int> instr_ids;
    std::vector<ExpertStep> steps;
};

// Rolls the shortest-path expert through the scene, injecting the expert
// waypoint into every step's candidate set so the target is always a member.
TrainBatch build_expert_batch(const sim::Env& env, const enc::Model& model,
                              const policy::EpisodeConfig& cfg,
                              std::mt19937_64& rng);

struct LossReport {
    double mlm = 0.0, hsap = 0.0, gahp = 0.0, total = 0.0;
    double grad_encoder = 0.0, grad_mgaf = 0.0, grad_vgwg = 0.0,
           grad_policy = 0.0, grad_mlm_head = 0.0;
};

struct TrainConfig {
    int iterations = 2000;
    double lr = 1e-2;
    std::uint64_t seed = 0;
    double mlm_prob = 0.15;
    // The heatmap loss is a mean over 55x55 sub-cells, so its per-parameter
    // gradients are ~3 orders of magnitude smaller than the action loss;
    // the larger default weight rebalances the heads.
    double w_mlm = 1.0, w_hsap = 1.0, w_gahp = 20.0;
    std::string csv_path;  // empty = no loss log
};

// Joint masked-token / action / heatmap pretraining over cached expert
// batches. Returns the final iteration's report.
LossReport pretrain(enc::Model& model, const std::vector<sim::Scene>& scenes,
                    const policy::EpisodeConfig& episode_cfg,
                    const TrainConfig& cfg);

// Action-loss-only fine-tuning with a linear teacher-to-student forcing
// anneal on the executed actions.
LossReport finetune(enc::Model& model, const std::vector<sim::Scene>& scenes,
                    const policy::EpisodeConfig& episode_cfg,
                    const TrainConfig& cfg);

// Computes one joint loss (and optionally gradients) over a batch; shared by
// pretrain and the gradient-check harness.
double batch_loss(enc::Model& model, const TrainBatch& batch,
                  const std::vector<int>& masked_ids,
                  const std::vector<int>& mask_positions, const TrainConfig& cfg,
                  double neighborhood_radius, bool with_grad,
                  LossReport* report = nullptr, bool use_mgaf = true);

}  // namespace stb::train
