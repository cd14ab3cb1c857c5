#include "stb/harness/metrics.hpp"

#include <cmath>

#include <json.hpp>

namespace stb::harness {

EpisodeMetrics episode_metrics(const policy::EpisodeRecord& rec) {
    EpisodeMetrics m;
    m.scene_id = rec.scene_id;
    for (std::size_t i = 1; i < rec.trajectory.size(); ++i)
        m.tl += std::hypot(rec.trajectory[i].x - rec.trajectory[i - 1].x,
                           rec.trajectory[i].y - rec.trajectory[i - 1].y);
    m.ne = std::hypot(rec.final_pose.x - rec.goal.x(),
                      rec.final_pose.y - rec.goal.y());
    m.stopped = rec.stop_reason == "stop_action";
    m.sr = (m.stopped && m.ne <= kSuccessRadius) ? 1.0 : 0.0;
    for (const auto& p : rec.trajectory)
        if (std::hypot(p.x - rec.goal.x(), p.y - rec.goal.y()) <= kSuccessRadius) {
            m.osr = 1.0;
            break;
        }
    double l = rec.geodesic;
    if (!std::isfinite(l) || l <= 0.0) {
        m.spl_valid = false;
        m.spl = 0.0;
    } else {
        m.spl = m.sr * l / std::max(l, m.tl);
    }
    return m;
}

MetricsReport compute_metrics(const std::vector<policy::EpisodeRecord>& records) {
    MetricsReport r;
    for (const auto& rec : records) {
        EpisodeMetrics m = episode_metrics(rec);
        r.tl += m.tl;
        r.ne += m.ne;
        r.sr += m.sr;
        r.osr += m.osr;
        if (m.spl_valid) {
            r.spl += m.spl;
            ++r.spl_count;
        }
        r.episodes.push_back(std::move(m));
    }
    r.count = static_cast<int>(records.size());
    if (r.count > 0) {
        r.tl /= r.count;
        r.ne /= r.count;
        r.sr /= r.count;
        r.osr /= r.count;
    }
    if (r.spl_count > 0) r.spl /= r.spl_count;
    return r;
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["count"] = count;
    j["spl_count"] = spl_count;
    j["config_hash"] = config_hash;
    // TL is informational only: neither higher nor lower is better per se
    j["aggregate"] = {{"TL", tl}, {"NE", ne}, {"OSR", osr}, {"SR", sr}, {"SPL", spl}};
    auto eps = nlohmann::json::array();
    for (const auto& m : episodes)
        eps.push_back({{"scene_id", m.scene_id},
                       {"TL", m.tl},
                       {"NE", m.ne},
                       {"stopped", m.stopped},
                       {"SR", m.sr},
                       {"OSR", m.osr},
                       {"SPL", m.spl},
                       {"spl_valid", m.spl_valid}});
    j["episodes"] = eps;
    return j.dump(2);
}

}  // namespace stb::harness
