#include "stb/harness/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace stb::harness {

namespace {
struct Canvas {
    int W, H;
    std::vector<unsigned char> px;  // RGB, row 0 = top (max y)
    double res;
    double world_h;

    Canvas(double w, double h, double r)
        : W(static_cast<int>(std::ceil(w / r))),
          H(static_cast<int>(std::ceil(h / r))),
          px(static_cast<std::size_t>(W) * H * 3, 255),
          res(r),
          world_h(h) {}

    void set(int cx, int cy, unsigned char r, unsigned char g, unsigned char b) {
        if (cx < 0 || cx >= W || cy < 0 || cy >= H) return;
        std::size_t i = (static_cast<std::size_t>(cy) * W + cx) * 3;
        px[i] = r;
        px[i + 1] = g;
        px[i + 2] = b;
    }
    int col(double x) const { return static_cast<int>(x / res); }
    int row(double y) const { return H - 1 - static_cast<int>(y / res); }

    void dot(double x, double y, int rad, unsigned char r, unsigned char g,
             unsigned char b) {
        int cx = col(x), cy = row(y);
        for (int dy = -rad; dy <= rad; ++dy)
            for (int dx = -rad; dx <= rad; ++dx)
                if (dx * dx + dy * dy <= rad * rad) set(cx + dx, cy + dy, r, g, b);
    }
    void line(double x0, double y0, double x1, double y1, unsigned char r,
              unsigned char g, unsigned char b) {
        double len = std::hypot(x1 - x0, y1 - y0);
        int n = std::max(1, static_cast<int>(len / (res * 0.5)));
        for (int i = 0; i <= n; ++i) {
            double t = static_cast<double>(i) / n;
            set(col(x0 + t * (x1 - x0)), row(y0 + t * (y1 - y0)), r, g, b);
        }
    }
};
}  // namespace

std::string render_trajectory_ppm(const sim::Scene& scene,
                                  const policy::EpisodeRecord& rec, double res) {
    Canvas cv(scene.bounds.x(), scene.bounds.y(), res);
    for (const auto& o : scene.obstacles)
        for (int cy = 0; cy < cv.H; ++cy)
            for (int cx = 0; cx < cv.W; ++cx) {
                double x = (cx + 0.5) * res;
                double y = scene.bounds.y() - (cy + 0.5) * res;
                if (o.contains({x, y})) cv.set(cx, cy, 60, 60, 60);
            }
    for (const auto& lm : scene.landmarks) cv.dot(lm.pos.x(), lm.pos.y(), 3, 60, 90, 220);
    for (std::size_t i = 1; i < rec.trajectory.size(); ++i)
        cv.line(rec.trajectory[i - 1].x, rec.trajectory[i - 1].y,
                rec.trajectory[i].x, rec.trajectory[i].y, 220, 40, 40);
    if (!rec.trajectory.empty())
        cv.dot(rec.trajectory.front().x, rec.trajectory.front().y, 4, 30, 170, 60);
    cv.dot(rec.goal.x(), rec.goal.y(), 4, 230, 190, 30);

    std::string out = "P6\n" + std::to_string(cv.W) + " " + std::to_string(cv.H) +
                      "\n255\n";
    out.append(reinterpret_cast<const char*>(cv.px.data()), cv.px.size());
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace stb::harness
