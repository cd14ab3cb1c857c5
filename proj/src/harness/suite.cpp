#include "stb/harness/suite.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "stb/harness/render.hpp"
#include "stb/hash.hpp"
#include "stb/sim/disturbance.hpp"
#include "stb/sim/instructions.hpp"

namespace stb::harness {

namespace fs = std::filesystem;

std::vector<sim::Scene> load_scene_dir(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw std::runtime_error("scene directory not found: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no scenes in " + dir);
    std::vector<sim::Scene> scenes;
    for (const auto& f : files) scenes.push_back(sim::load_scene(f));
    return scenes;
}

std::uint64_t episode_seed(std::uint64_t master_seed, const std::string& scene_id) {
    return fnv1a(scene_id + ":" + std::to_string(master_seed));
}

std::vector<policy::EpisodeRecord> evaluate_scenes(
    const enc::Model& model, const std::vector<sim::Scene>& scenes,
    const policy::EpisodeConfig& episode, std::uint64_t master_seed) {
    std::vector<policy::EpisodeRecord> records;
    for (const auto& scene : scenes) {
        sim::Env env(scene, sim::EnvConfig{}, sim::landmark_labels());
        policy::EpisodeConfig cfg = episode;
        cfg.seed = episode_seed(master_seed, scene.id);
        records.push_back(policy::run_episode(env, model, cfg));
    }
    return records;
}

SuiteResult run_suite(const enc::Model& model, const SuiteConfig& cfg) {
    auto scenes = load_scene_dir(cfg.scenes_dir);
    fs::create_directories(cfg.out_dir);
    auto records = evaluate_scenes(model, scenes, cfg.episode, cfg.master_seed);

    SuiteResult res;
    res.records_path = (fs::path(cfg.out_dir) / ("records" + cfg.tag + ".jsonl")).string();
    std::ofstream rf(res.records_path);
    for (const auto& r : records) rf << r.to_jsonl() << "\n";
    rf.close();

    res.report = compute_metrics(records);
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg.config_json)));
    res.report.config_hash = hex;
    std::string report_json = res.report.to_json();
    res.report_hash = fnv1a(report_json);
    res.report_path = (fs::path(cfg.out_dir) / ("report" + cfg.tag + ".json")).string();
    write_file(res.report_path, report_json + "\n");

    if (cfg.render) {
        for (std::size_t i = 0; i < records.size(); ++i) {
            std::string name = records[i].scene_id + cfg.tag + ".ppm";
            write_file((fs::path(cfg.out_dir) / name).string(),
                       render_trajectory_ppm(scenes[i], records[i]));
        }
    }
    return res;
}

namespace {
std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}
}  // namespace

std::vector<SweepRow> run_sweep(const enc::Model& model, const SuiteConfig& base,
                                const std::string& mode) {
    std::vector<std::pair<std::string, policy::EpisodeConfig>> variants;
    if (mode == "delta") {
        for (double d : {0.0, 1e-6, 1e-5, 1e-4}) {
            policy::EpisodeConfig e = base.episode;
            e.gah.delta = d;
            e.use_vgwg = true;
            variants.push_back({"delta=" + fmt_double(d), e});
        }
    } else if (mode == "ablate") {
        for (auto expert : {policy::ExpertMode::Topo, policy::ExpertMode::Grid,
                            policy::ExpertMode::Hybrid})
            for (int mg = 0; mg <= 1; ++mg)
                for (int vg = 0; vg <= 1; ++vg) {
                    policy::EpisodeConfig e = base.episode;
                    e.expert = expert;
                    e.use_mgaf = mg != 0;
                    e.use_vgwg = vg != 0;
                    variants.push_back({"expert=" + policy::expert_name(expert) +
                                            ",mgaf=" + std::to_string(mg) +
                                            ",vgwg=" + std::to_string(vg),
                                        e});
                }
    } else if (mode == "disturb") {
        for (auto kind : {sim::DisturbKind::FovLoss, sim::DisturbKind::LocalNoise,
                          sim::DisturbKind::MemoryDecay})
            for (double level : {0.0, 0.5, 1.0}) {
                policy::EpisodeConfig e = base.episode;
                e.disturb.kind = kind;
                e.disturb.level = level;
                e.disturb.seed = base.master_seed;
                variants.push_back({sim::disturb_kind_name(kind) + ":" +
                                        fmt_double(level),
                                    e});
            }
    } else {
        throw std::invalid_argument("unknown sweep mode: " + mode);
    }

    auto scenes = load_scene_dir(base.scenes_dir);
    fs::create_directories(base.out_dir);
    std::vector<SweepRow> rows;
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& [key, ecfg] : variants) {
        auto records = evaluate_scenes(model, scenes, ecfg, base.master_seed);
        SweepRow row;
        row.key = key;
        row.report = compute_metrics(records);
        summary.push_back({{"key", key},
                           {"TL", row.report.tl},
                           {"NE", row.report.ne},
                           {"OSR", row.report.osr},
                           {"SR", row.report.sr},
                           {"SPL", row.report.spl}});
        rows.push_back(std::move(row));
    }
    write_file((fs::path(base.out_dir) / ("sweep_" + mode + base.tag + ".json")).string(),
               summary.dump(2) + "\n");
    return rows;
}

}  // namespace stb::harness
