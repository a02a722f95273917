#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "pairpred/errors.hpp"
#include "pairpred/interaction.hpp"

namespace pairpred::interaction {

namespace {

struct Frame {
  double min_x, max_y, ppm;
  double px(double x) const { return (x - min_x) * ppm; }
  double py(double y) const { return (max_y - y) * ppm; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void polyline(std::ostream& out, const Frame& f, const std::vector<std::pair<double, double>>& pts,
              const std::string& style) {
  if (pts.size() < 2) return;
  out << "<polyline fill=\"none\" " << style << " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out << ' ';
    out << num(f.px(pts[i].first)) << ',' << num(f.py(pts[i].second));
  }
  out << "\"/>\n";
}

}  // namespace

double stroke_width(double score, double max_score, const PlotStyle& style) {
  if (!(max_score > 0.0)) return style.min_stroke;
  const double w = style.min_stroke + (style.max_stroke - style.min_stroke) * (score / max_score);
  return std::clamp(w, style.min_stroke, style.max_stroke);
}

void export_scene_plot(const std::filesystem::path& path, const scenedata::SceneSample& sample,
                       const mapformer::PredictionOutput& pred, std::span<const DependencyRecord> records,
                       const scenegraph::RoadGraph* road, const PlotStyle& style) {
  const std::size_t A = sample.n_agents();
  if (pred.n_agents != A) throw DimensionError("prediction and sample agent counts differ");
  const auto index_of = [&](std::int64_t id) {
    const auto it = std::find(sample.agent_ids.begin(), sample.agent_ids.end(), id);
    if (it == sample.agent_ids.end()) throw ValidationError("record references unknown agent " + std::to_string(id));
    return static_cast<std::size_t>(it - sample.agent_ids.begin());
  };

  const std::size_t t_f = std::min(pred.t_f, sample.t_f);
  const std::size_t best =
      metrics::best_sfde_mode(mode_trajectories(pred), metrics::ground_truth(sample, pred.t_f));

  std::vector<std::vector<std::pair<double, double>>> hist(A), gt(A), pr(A);
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x, lo_y = lo_x, hi_y = -lo_x;
  const auto grow = [&](double x, double y) {
    lo_x = std::min(lo_x, x);
    hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y);
    hi_y = std::max(hi_y, y);
  };
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t t = 0; t < sample.t_h; ++t)
      if (sample.valid_at(a, t)) hist[a].emplace_back(sample.hist(a, t, 0), sample.hist(a, t, 1));
    gt[a].emplace_back(sample.current_x(a), sample.current_y(a));
    pr[a].emplace_back(sample.current_x(a), sample.current_y(a));
    for (std::size_t t = 0; t < t_f; ++t) {
      if (sample.future_valid(a, t)) gt[a].emplace_back(sample.future(a, t, 0), sample.future(a, t, 1));
      pr[a].emplace_back(pred.traj_at(best, a, t, 0), pred.traj_at(best, a, t, 1));
    }
    for (const auto* line : {&hist[a], &gt[a], &pr[a]})
      for (const auto& [x, y] : *line) grow(x, y);
  }
  lo_x -= style.margin_m;
  hi_x += style.margin_m;
  lo_y -= style.margin_m;
  hi_y += style.margin_m;
  const Frame f{lo_x, hi_y, style.pixels_per_meter};

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num((hi_x - lo_x) * f.ppm) << "\" height=\""
      << num((hi_y - lo_y) * f.ppm) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (road) {
    out << "<g fill=\"#bbbbbb\">\n";
    for (std::size_t r = 0; r < road->size(); ++r) {
      const double x = road->node_pos[2 * r] - sample.origin_x, y = road->node_pos[2 * r + 1] - sample.origin_y;
      if (x < lo_x || x > hi_x || y < lo_y || y > hi_y) continue;
      out << "<circle cx=\"" << num(f.px(x)) << "\" cy=\"" << num(f.py(y)) << "\" r=\"1.5\"/>\n";
    }
    out << "</g>\n";
  }

  double max_score = 0.0;
  for (const auto& r : records) max_score = std::max(max_score, r.score);
  const std::size_t ego = pred.ego_index;
  out << "<g stroke=\"#d08000\" stroke-opacity=\"0.7\" stroke-linecap=\"round\">\n";
  for (const auto& r : records) {
    const std::size_t a = index_of(r.ego_id), b = index_of(r.other_id);
    out << "<line x1=\"" << num(f.px(sample.current_x(a))) << "\" y1=\"" << num(f.py(sample.current_y(a)))
        << "\" x2=\"" << num(f.px(sample.current_x(b))) << "\" y2=\"" << num(f.py(sample.current_y(b)))
        << "\" stroke-width=\"" << num(stroke_width(r.score, max_score, style)) << "\"/>\n";
  }
  out << "</g>\n";

  for (std::size_t a = 0; a < A; ++a) {
    polyline(out, f, hist[a], "stroke=\"#3060c0\" stroke-width=\"2\"");
    polyline(out, f, gt[a], "stroke=\"#208040\" stroke-width=\"1.5\" stroke-dasharray=\"4,3\"");
    polyline(out, f, pr[a], "stroke=\"#c02020\" stroke-width=\"1.5\"");
    out << "<circle cx=\"" << num(f.px(sample.current_x(a))) << "\" cy=\"" << num(f.py(sample.current_y(a)))
        << "\" r=\"" << (a == ego ? "5" : "3.5") << "\" fill=\"" << (a == ego ? "#000000" : "#3060c0")
        << "\"/>\n";
    out << "<text x=\"" << num(f.px(sample.current_x(a)) + 5) << "\" y=\"" << num(f.py(sample.current_y(a)) - 5)
        << "\" font-size=\"10\" font-family=\"sans-serif\">" << sample.agent_ids[a] << "</text>\n";
  }
  out << "</svg>\n";

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write plot " + path.string());
  file << out.str();
  if (!file) throw IoError("write failed: " + path.string());
}

}  // namespace pairpred::interaction
