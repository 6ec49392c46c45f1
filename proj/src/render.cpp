#include <cstdio>
#include <sstream>

#include "diffplan/evaluation.hpp"

namespace diffplan::app {

namespace {

constexpr double kScale = 10.0;  // px per metre

struct Canvas {
  eval::RasterWindow window;
  double px(double x) const { return (x - window.x_min) * kScale; }
  double py(double y) const { return (window.y_max() - y) * kScale; }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string point_list(const Canvas& c, std::span<const Vec2> pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += fmt(c.px(pts[i].x)) + ',' + fmt(c.py(pts[i].y));
  }
  return s;
}

std::string path_data(const Canvas& c, std::span<const Vec2> pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s += (i ? " L " : "M ") + fmt(c.px(pts[i].x)) + ' ' + fmt(c.py(pts[i].y));
  }
  return s;
}

}  // namespace

std::string render_svg(const sim::EpisodeRecord& episode, const std::vector<traj::Trajectory>& candidates,
                       std::size_t selected) {
  const Canvas c;
  const double w = c.window.cell * c.window.nx * kScale;
  const double h = c.window.cell * c.window.ny * kScale;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
     << "\" viewBox=\"0 0 " << fmt(w) << ' ' << fmt(h) << "\">\n"
     << "<style>.corridor{fill:none;stroke:#d9d9d9;stroke-linejoin:round}"
     << ".centerline{fill:none;stroke:#888;stroke-width:1;stroke-dasharray:6 4}"
     << ".obstacle{fill:#c0392b;fill-opacity:0.8}.ego{fill:#2c3e50}.history{fill:#7f8c8d}"
     << ".expert{fill:none;stroke:#27ae60;stroke-width:2;stroke-dasharray:3 3}"
     << ".candidate{fill:none;stroke:#2980b9;stroke-width:1.5;stroke-opacity:0.45}"
     << ".candidate.selected{stroke:#e67e22;stroke-width:3;stroke-opacity:1}</style>\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  // Corridor: the centerline stroked at the corridor width, extended backwards like the drivable test.
  const auto pts = episode.scene.centerline.points();
  std::vector<Vec2> line;
  if (pts.size() >= 2) {
    const Vec2 dir = pts[1] - pts[0];
    line.push_back(pts[0] - (100.0 / norm(dir)) * dir);
  }
  line.insert(line.end(), pts.begin(), pts.end());
  os << "<path class=\"corridor\" stroke-width=\"" << fmt(2.0 * episode.scene.corridor_half_width * kScale)
     << "\" d=\"" << path_data(c, line) << "\"/>\n";
  os << "<path class=\"centerline\" d=\"" << path_data(c, line) << "\"/>\n";

  for (const auto& o : episode.scene.obstacles) {
    const auto corners = o.at(0.0).corners();
    os << "<polygon class=\"obstacle\" points=\"" << point_list(c, corners) << "\"/>\n";
  }
  const auto ego = sim::ego_footprint({{0.0, 0.0}, 0.0}).corners();
  os << "<polygon class=\"ego\" points=\"" << point_list(c, ego) << "\"/>\n";
  for (Vec2 p : episode.history) {
    os << "<circle class=\"history\" cx=\"" << fmt(c.px(p.x)) << "\" cy=\"" << fmt(c.py(p.y)) << "\" r=\"3\"/>\n";
  }
  const auto expert = traj::knots(episode.expert);
  os << "<path class=\"expert\" d=\"" << path_data(c, expert) << "\"/>\n";

  auto draw = [&](std::size_t i) {
    const auto k = traj::knots(candidates[i]);
    os << "<polyline class=\"candidate" << (i == selected ? " selected" : "") << "\" points=\"" << point_list(c, k)
       << "\"/>\n";
  };
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i != selected) draw(i);
  }
  if (selected < candidates.size()) draw(selected);
  os << "</svg>\n";
  return os.str();
}

}  // namespace diffplan::app
