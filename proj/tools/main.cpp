// Command-line front end: scene generation, training, evaluation, sweeps,
// renders, and metrics recomputation from recorded episodes.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stb/harness/render.hpp"
#include "stb/harness/suite.hpp"
#include "stb/hash.hpp"
#include "stb/sim/instructions.hpp"
#include "stb/sim/scene_gen.hpp"
#include "stb/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    stb::enc::ModelConfig model;
    stb::policy::EpisodeConfig episode;
    stb::train::TrainConfig pretrain;
    stb::train::TrainConfig finetune;
    int scenes_per_family = 50;
    std::string canonical;  // serialized form, hashed into reports
};

json to_json(const RunConfig& c) {
    json j;
    j["model"] = {{"dim", c.model.dim},
                  {"heads", c.model.heads},
                  {"layers", c.model.layers},
                  {"ffn_hidden", c.model.ffn_hidden},
                  {"max_len", c.model.max_len},
                  {"hffn_hidden", c.model.hffn_hidden}};
    j["episode"] = {{"t_m", c.episode.t_m},
                    {"delta", c.episode.gah.delta},
                    {"rho", c.episode.gah.rho},
                    {"sigma", c.episode.gah.sigma},
                    {"k_candidates", c.episode.gah.k_candidates},
                    {"min_separation", c.episode.gah.min_separation},
                    {"neighborhood_radius", c.episode.neighborhood_radius},
                    {"low_level_budget", c.episode.low_level_budget},
                    {"use_mgaf", c.episode.use_mgaf},
                    {"use_vgwg", c.episode.use_vgwg},
                    {"expert", stb::policy::expert_name(c.episode.expert)}};
    j["train"] = {{"pretrain_iterations", c.pretrain.iterations},
                  {"finetune_iterations", c.finetune.iterations},
                  {"lr", c.pretrain.lr},
                  {"finetune_lr", c.finetune.lr},
                  {"mlm_prob", c.pretrain.mlm_prob},
                  {"w_mlm", c.pretrain.w_mlm},
                  {"w_hsap", c.pretrain.w_hsap},
                  {"w_gahp", c.pretrain.w_gahp}};
    j["scenes_per_family"] = c.scenes_per_family;
    return j;
}

RunConfig load_config(const std::string& path) {
    RunConfig c;
    c.pretrain.iterations = 2000;
    c.finetune.iterations = 500;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config " + path);
        json j = json::parse(in);
        if (j.contains("model")) {
            const auto& m = j["model"];
            c.model.dim = m.value("dim", c.model.dim);
            c.model.heads = m.value("heads", c.model.heads);
            c.model.layers = m.value("layers", c.model.layers);
            c.model.ffn_hidden = m.value("ffn_hidden", c.model.ffn_hidden);
            c.model.max_len = m.value("max_len", c.model.max_len);
            c.model.hffn_hidden = m.value("hffn_hidden", c.model.hffn_hidden);
        }
        if (j.contains("episode")) {
            const auto& e = j["episode"];
            c.episode.t_m = e.value("t_m", c.episode.t_m);
            c.episode.gah.delta = e.value("delta", c.episode.gah.delta);
            c.episode.gah.rho = e.value("rho", c.episode.gah.rho);
            c.episode.gah.sigma = e.value("sigma", c.episode.gah.sigma);
            c.episode.gah.k_candidates =
                e.value("k_candidates", c.episode.gah.k_candidates);
            c.episode.gah.min_separation =
                e.value("min_separation", c.episode.gah.min_separation);
            c.episode.neighborhood_radius =
                e.value("neighborhood_radius", c.episode.neighborhood_radius);
            c.episode.low_level_budget =
                e.value("low_level_budget", c.episode.low_level_budget);
            c.episode.use_mgaf = e.value("use_mgaf", c.episode.use_mgaf);
            c.episode.use_vgwg = e.value("use_vgwg", c.episode.use_vgwg);
            if (e.contains("expert"))
                c.episode.expert = stb::policy::parse_expert(e["expert"]);
        }
        if (j.contains("train")) {
            const auto& t = j["train"];
            c.pretrain.iterations =
                t.value("pretrain_iterations", c.pretrain.iterations);
            c.finetune.iterations =
                t.value("finetune_iterations", c.finetune.iterations);
            c.pretrain.lr = t.value("lr", c.pretrain.lr);
            c.finetune.lr = t.value("finetune_lr", t.value("lr", c.finetune.lr));
            c.pretrain.mlm_prob = t.value("mlm_prob", c.pretrain.mlm_prob);
            c.pretrain.w_mlm = t.value("w_mlm", c.pretrain.w_mlm);
            c.pretrain.w_hsap = t.value("w_hsap", c.pretrain.w_hsap);
            c.pretrain.w_gahp = t.value("w_gahp", c.pretrain.w_gahp);
        }
        c.scenes_per_family = j.value("scenes_per_family", c.scenes_per_family);
    }
    c.canonical = to_json(c).dump();
    return c;
}

stb::enc::Model make_model(const RunConfig& c, std::uint64_t seed) {
    stb::enc::Vocab vocab(stb::sim::instruction_vocab());
    return stb::enc::Model(c.model, vocab, seed);
}

void apply_ablations(stb::policy::EpisodeConfig& e,
                     const std::vector<std::string>& ablate) {
    for (const auto& a : ablate) {
        if (a == "mgaf")
            e.use_mgaf = false;
        else if (a == "vgwg")
            e.use_vgwg = false;
        else if (a.rfind("expert=", 0) == 0)
            e.expert = stb::policy::parse_expert(a.substr(7));
        else
            throw std::runtime_error("unknown ablation: " + a);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-map navigation harness"};
    app.require_subcommand(1);

    std::string config_path, scenes_dir, ckpt, out_dir = "out", disturb_spec,
                sweep_mode = "delta", records_path;
    std::uint64_t seed = 0;
    double delta = -1.0;  // <0 = keep config value
    std::vector<std::string> ablate;
    int count = -1;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "JSON config file");
        c->add_option("--seed", seed, "master seed");
        c->add_option("--out", out_dir, "output directory");
    };

    auto* gen = app.add_subcommand("gen-scenes", "generate the scene corpus");
    add_common(gen);
    gen->add_option("--count", count, "scenes per family (default from config)");

    auto* pre = app.add_subcommand("pretrain", "masked-token / action / heatmap pretraining");
    add_common(pre);
    pre->add_option("--scenes", scenes_dir, "training scene dir")->required();
    pre->add_option("--ckpt", ckpt, "initial checkpoint prefix (optional)");

    auto* fin = app.add_subcommand("finetune", "action-loss fine-tuning");
    add_common(fin);
    fin->add_option("--scenes", scenes_dir, "training scene dir")->required();
    fin->add_option("--ckpt", ckpt, "checkpoint prefix")->required();

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a scene set");
    add_common(ev);
    ev->add_option("--scenes", scenes_dir, "scene dir")->required();
    ev->add_option("--ckpt", ckpt, "checkpoint prefix")->required();
    ev->add_option("--delta", delta, "heatmap fusion weight override");
    ev->add_option("--disturb", disturb_spec, "disturbance kind:level");
    ev->add_option("--ablate", ablate, "mgaf | vgwg | expert=<topo|grid|hybrid>");

    auto* sw = app.add_subcommand("sweep", "delta / ablation / disturbance sweeps");
    add_common(sw);
    sw->add_option("--scenes", scenes_dir, "scene dir")->required();
    sw->add_option("--ckpt", ckpt, "checkpoint prefix")->required();
    sw->add_option("--mode", sweep_mode, "delta | ablate | disturb | all");

    auto* rn = app.add_subcommand("render", "trajectory and heatmap renders");
    add_common(rn);
    rn->add_option("--scenes", scenes_dir, "scene dir")->required();
    rn->add_option("--ckpt", ckpt, "checkpoint prefix")->required();
    rn->add_option("--delta", delta, "heatmap fusion weight override");

    auto* me = app.add_subcommand("metrics", "recompute metrics from records");
    add_common(me);
    me->add_option("records", records_path, "episode records JSONL")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        fs::create_directories(out_dir);

        if (gen->parsed()) {
            int per_family = count > 0 ? count : cfg.scenes_per_family;
            auto sum = stb::sim::generate_scene_set(out_dir, per_family, seed);
            std::cout << "wrote " << sum.train << " train / " << sum.eval
                      << " eval scenes to " << out_dir << "\n";
            return 0;
        }

        if (pre->parsed() || fin->parsed()) {
            auto model = make_model(cfg, seed);
            if (!ckpt.empty()) model.load(ckpt);
            auto scenes = stb::harness::load_scene_dir(scenes_dir);
            stb::train::TrainConfig tc = pre->parsed() ? cfg.pretrain : cfg.finetune;
            tc.seed = seed;
            tc.csv_path = (fs::path(out_dir) /
                           (pre->parsed() ? "pretrain_loss.csv" : "finetune_loss.csv"))
                              .string();
            auto rep = pre->parsed()
                           ? stb::train::pretrain(model, scenes, cfg.episode, tc)
                           : stb::train::finetune(model, scenes, cfg.episode, tc);
            std::string prefix = (fs::path(out_dir) / "ckpt").string();
            model.save(prefix);
            std::cout << "final losses: mlm=" << rep.mlm << " hsap=" << rep.hsap
                      << " gahp=" << rep.gahp << " total=" << rep.total << "\n"
                      << "checkpoint: " << prefix << "\n";
            return 0;
        }

        // remaining verbs need a checkpointed model
        if (ev->parsed() || sw->parsed() || rn->parsed()) {
            auto model = make_model(cfg, seed);
            model.load(ckpt);

            stb::harness::SuiteConfig sc;
            sc.scenes_dir = scenes_dir;
            sc.out_dir = out_dir;
            sc.master_seed = seed;
            sc.episode = cfg.episode;
            if (delta >= 0.0) sc.episode.gah.delta = delta;
            if (!disturb_spec.empty())
                sc.episode.disturb = stb::sim::parse_disturbance(disturb_spec);
            sc.episode.disturb.seed = seed;
            apply_ablations(sc.episode, ablate);
            sc.config_json = cfg.canonical + "|delta=" +
                             std::to_string(sc.episode.gah.delta) +
                             "|disturb=" + disturb_spec;

            if (ev->parsed()) {
                auto res = stb::harness::run_suite(model, sc);
                std::cout << "SR=" << res.report.sr << " SPL=" << res.report.spl
                          << " OSR=" << res.report.osr << " NE=" << res.report.ne
                          << " TL=" << res.report.tl << "\n"
                          << "report_hash=" << std::hex << res.report_hash << std::dec
                          << "\nreport: " << res.report_path << "\n";
                for (const auto& m : res.report.episodes)
                    if (!m.spl_valid) return 1;
                return 0;
            }
            if (sw->parsed()) {
                std::vector<std::string> modes =
                    sweep_mode == "all"
                        ? std::vector<std::string>{"delta", "ablate", "disturb"}
                        : std::vector<std::string>{sweep_mode};
                for (const auto& m : modes) {
                    auto rows = stb::harness::run_sweep(model, sc, m);
                    for (const auto& r : rows)
                        std::cout << m << " " << r.key << ": SR=" << r.report.sr
                                  << " SPL=" << r.report.spl << "\n";
                }
                return 0;
            }
            // render
            sc.render = true;
            auto res = stb::harness::run_suite(model, sc);
            auto scenes = stb::harness::load_scene_dir(scenes_dir);
            for (const auto& scene : scenes) {
                stb::sim::Env env(scene, stb::sim::EnvConfig{},
                                  stb::sim::landmark_labels());
                auto expert = env.expert_action(scene.start);
                auto gah = stb::vgwg::ground_truth_gah(expert.waypoint, scene.start,
                                                       sc.episode.grid, sc.episode.gah);
                stb::harness::write_file(
                    (fs::path(out_dir) / (scene.id + "_gah.pgm")).string(),
                    gah.render_pgm());
            }
            std::cout << "renders written to " << out_dir << "\n";
            return 0;
        }

        // metrics: recompute from a records file
        std::ifstream in(records_path);
        if (!in) throw std::runtime_error("cannot open " + records_path);
        std::vector<stb::policy::EpisodeRecord> records;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) records.push_back(stb::policy::parse_episode(line));
        auto report = stb::harness::compute_metrics(records);
        std::cout << report.to_json() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
