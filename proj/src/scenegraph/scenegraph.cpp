#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <string>

#include "pairpred/errors.hpp"
#include "pairpred/scenegraph.hpp"

namespace pairpred::scenegraph {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T number(std::string_view s, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "bad number '" + std::string(s) + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void push_edge_feat(std::vector<double>& out, EdgeType t, double dx, double dy) {
  for (std::size_t k = 0; k < kEdgeTypes; ++k) out.push_back(static_cast<std::size_t>(t) == k ? 1.0 : 0.0);
  out.push_back(dx);
  out.push_back(dy);
}

}  // namespace

MapDescription parse_map(std::istream& in) {
  enum class Section { none, nodes, edges } section = Section::none;
  bool expect_header = false;
  MapDescription map;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "nodes") {
      section = Section::nodes;
      expect_header = true;
      continue;
    }
    if (line == "edges") {
      section = Section::edges;
      expect_header = true;
      continue;
    }
    if (expect_header) {
      const bool ok = section == Section::nodes ? line == "id,x,y,kind" : line == "src,dst,kind";
      if (!ok) throw ParseError(line_no, "unexpected table header '" + std::string(line) + "'");
      expect_header = false;
      continue;
    }
    const auto f = split(line);
    if (section == Section::none) throw ParseError(line_no, "row outside of a nodes/edges table");
    if (f.size() != 4 && section == Section::nodes) throw ParseError(line_no, "node rows need 4 fields");
    if (f.size() != 3 && section == Section::edges) throw ParseError(line_no, "edge rows need 3 fields");
    if (section == Section::nodes) {
      map.nodes.push_back({number<std::int64_t>(f[0], line_no), number<double>(f[1], line_no),
                           number<double>(f[2], line_no), number<int>(f[3], line_no)});
    } else {
      map.edges.push_back(
          {number<std::int64_t>(f[0], line_no), number<std::int64_t>(f[1], line_no), number<int>(f[2], line_no)});
    }
  }
  return map;
}

MapDescription read_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open map " + path.string());
  return parse_map(in);
}

void write_map(const std::filesystem::path& path, const MapDescription& map) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write map " + path.string());
  out << "nodes\nid,x,y,kind\n";
  for (const auto& n : map.nodes) out << n.id << ',' << fmt(n.x) << ',' << fmt(n.y) << ',' << n.kind << '\n';
  out << "edges\nsrc,dst,kind\n";
  for (const auto& e : map.edges) out << e.src << ',' << e.dst << ',' << e.kind << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

MapDescription ring_map(double radius, double spacing) {
  if (!(radius > 0.0) || !(spacing > 0.0)) throw ValidationError("ring radius and spacing must be > 0");
  const double circumference = 2.0 * std::numbers::pi * radius;
  auto n = static_cast<std::int64_t>(std::floor(circumference / spacing)) + 1;
  // The closing node would coincide with node 0 on an exact multiple.
  if ((n - 1) * spacing >= circumference - 1e-9) --n;
  MapDescription map;
  for (std::int64_t i = 0; i < n; ++i) {
    const double angle = static_cast<double>(i) * spacing / radius;
    map.nodes.push_back({i, radius * std::cos(angle), radius * std::sin(angle), 0});
  }
  for (std::int64_t i = 0; i < n; ++i) map.edges.push_back({i, (i + 1) % n, 0});
  return map;
}

MapDescription roundabout_map(const scenedata::RoundaboutGeometry& g, double spacing) {
  MapDescription map = ring_map(g.ring_radius, spacing);
  const auto ring_n = static_cast<std::int64_t>(map.nodes.size());
  const auto nearest_ring = [&](double angle) {
    const double two_pi = 2.0 * std::numbers::pi;
    double a = std::fmod(angle, two_pi);
    if (a < 0) a += two_pi;
    return static_cast<std::int64_t>(std::llround(a * g.ring_radius / spacing)) % ring_n;
  };
  std::int64_t next_id = ring_n;
  for (int arm = 0; arm < g.entry_arms; ++arm) {
    const double arm_angle = g.arm_angle(arm);
    const double ux = std::cos(arm_angle), uy = std::sin(arm_angle);
    const auto lane_steps = static_cast<int>(std::floor(g.approach_length / spacing));
    // Entry lane, far end first, edges along the direction of travel.
    const double merge = g.merge_angle(arm);
    const double mx = g.ring_radius * std::cos(merge), my = g.ring_radius * std::sin(merge);
    std::int64_t prev = -1;
    for (int k = lane_steps; k >= 1; --k) {
      const double d = k * spacing;
      map.nodes.push_back({next_id, mx + d * ux, my + d * uy, 1});
      if (prev >= 0) map.edges.push_back({prev, next_id, 1});
      prev = next_id++;
    }
    if (prev >= 0) map.edges.push_back({prev, nearest_ring(merge), 1});
    // Exit lane, starting at the diverge point.
    const double diverge = g.diverge_angle(arm);
    const double dx = g.ring_radius * std::cos(diverge), dy = g.ring_radius * std::sin(diverge);
    prev = nearest_ring(diverge);
    const auto exit_steps = static_cast<int>(std::floor(g.exit_length / spacing));
    for (int k = 1; k <= exit_steps; ++k) {
      const double d = k * spacing;
      map.nodes.push_back({next_id, dx + d * ux, dy + d * uy, 2});
      map.edges.push_back({prev, next_id, 2});
      prev = next_id++;
    }
  }
  return map;
}

RoadGraph build_road_graph(const MapDescription& map) {
  if (map.nodes.empty()) throw ValidationError("map has no nodes");
  std::vector<MapNode> nodes = map.nodes;
  std::sort(nodes.begin(), nodes.end(), [](const MapNode& a, const MapNode& b) { return a.id < b.id; });
  std::map<std::int64_t, std::size_t> index;
  RoadGraph g;
  double cx = 0.0, cy = 0.0;
  for (const auto& n : nodes) {
    if (!index.emplace(n.id, g.node_ids.size()).second) {
      throw ValidationError("duplicate map node id " + std::to_string(n.id));
    }
    if (n.kind < 0 || n.kind >= static_cast<int>(kRoadKinds)) {
      throw ValidationError("map node " + std::to_string(n.id) + " has unknown kind " + std::to_string(n.kind));
    }
    g.node_ids.push_back(n.id);
    g.node_pos.push_back(n.x);
    g.node_pos.push_back(n.y);
    g.node_kind.push_back(n.kind);
    cx += n.x;
    cy += n.y;
  }
  cx /= static_cast<double>(nodes.size());
  cy /= static_cast<double>(nodes.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node_feat.push_back(g.node_pos[2 * i] - cx);
    g.node_feat.push_back(g.node_pos[2 * i + 1] - cy);
    for (std::size_t k = 0; k < kRoadKinds; ++k) g.node_feat.push_back(g.node_kind[i] == static_cast<int>(k));
  }
  for (const auto& e : map.edges) {
    const auto s = index.find(e.src);
    const auto d = index.find(e.dst);
    if (s == index.end() || d == index.end()) {
      throw ValidationError("map edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                            " references a missing node");
    }
    if (s->second == d->second) throw ValidationError("map edge forms a self-loop at node " + std::to_string(e.src));
    g.edges.emplace_back(s->second, d->second);
    push_edge_feat(g.edge_feat, EdgeType::road_road, g.node_pos[2 * d->second] - g.node_pos[2 * s->second],
                   g.node_pos[2 * d->second + 1] - g.node_pos[2 * s->second + 1]);
  }
  return g;
}

RoadGraph build_road_graph(const std::filesystem::path& map_file) { return build_road_graph(read_map(map_file)); }

std::size_t SceneGraph::count(EdgeType t) const { return static_cast<std::size_t>(std::count(edge_type.begin(), edge_type.end(), t)); }

SceneGraph attach_agents(std::shared_ptr<const RoadGraph> road, const scenedata::SceneSample& sample, double radius) {
  using scenedata::kAgentFeatures;
  SceneGraph g;
  g.road = std::move(road);
  const std::size_t A = sample.n_agents();
  g.n_agents = A;
  const std::size_t last = sample.t_h - 1;
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t f = 0; f < kAgentFeatures; ++f) g.agent_feat.push_back(sample.hist(a, last, f));
    g.agent_pos.push_back(sample.current_x(a));
    g.agent_pos.push_back(sample.current_y(a));
  }
  const std::size_t R = g.n_road();
  for (std::size_t r = 0; r < R; ++r) {
    g.road_feat.push_back(g.road->node_pos[2 * r] - sample.origin_x);
    g.road_feat.push_back(g.road->node_pos[2 * r + 1] - sample.origin_y);
    for (std::size_t k = 0; k < kRoadKinds; ++k) g.road_feat.push_back(g.road->node_feat[r * kRoadFeatures + 2 + k]);
  }
  const auto add_edge = [&](std::size_t s, std::size_t d, EdgeType t, double dx, double dy) {
    g.edge_src.push_back(s);
    g.edge_dst.push_back(d);
    g.edge_type.push_back(t);
    push_edge_feat(g.edge_feat, t, dx, dy);
  };
  for (std::size_t e = 0; e < (g.road ? g.road->edges.size() : 0); ++e) {
    const auto [s, d] = g.road->edges[e];
    add_edge(A + s, A + d, EdgeType::road_road, g.road->edge_feat[e * kEdgeFeatures + kEdgeTypes],
             g.road->edge_feat[e * kEdgeFeatures + kEdgeTypes + 1]);
  }
  for (std::size_t i = 0; i < A; ++i)
    for (std::size_t j = 0; j < A; ++j)
      if (i != j) {
        add_edge(i, j, EdgeType::agent_agent, g.agent_pos[2 * j] - g.agent_pos[2 * i],
                 g.agent_pos[2 * j + 1] - g.agent_pos[2 * i + 1]);
      }
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t r = 0; r < R; ++r) {
      const double dx = g.agent_pos[2 * a] - g.road_feat[r * kRoadFeatures];
      const double dy = g.agent_pos[2 * a + 1] - g.road_feat[r * kRoadFeatures + 1];
      if (std::sqrt(dx * dx + dy * dy) <= radius) add_edge(A + r, a, EdgeType::road_agent, dx, dy);
    }
  return g;
}

}  // namespace pairpred::scenegraph
