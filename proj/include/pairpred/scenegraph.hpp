#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <vector>

#include "pairpred/scenedata.hpp"

namespace pairpred::scenegraph {

inline constexpr double kAgentRoadRadius = 5.0;  // m, measured to the agent centre
inline constexpr std::size_t kRoadKinds = 4;     // 0 lane, 1 entry, 2 exit, 3 other
inline constexpr std::size_t kRoadFeatures = 2 + kRoadKinds;
inline constexpr std::size_t kEdgeTypes = 3;
inline constexpr std::size_t kEdgeFeatures = kEdgeTypes + 2;  // one-hot type + (dx, dy)

enum class EdgeType : std::uint8_t { road_road = 0, agent_agent = 1, road_agent = 2 };

// ---------------------------------------------------------------------------
// Map file
//
//   nodes
//   id,x,y,kind
//   0,12.5,-3.0,0
//   ...
//   edges
//   src,dst,kind
//   0,1,0
//
// Blank lines and lines starting with '#' are ignored. Node kinds index the
// road-kind one-hot and must lie in [0, kRoadKinds).

struct MapNode {
  std::int64_t id = 0;
  double x = 0.0;
  double y = 0.0;
  int kind = 0;
};

struct MapEdge {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  int kind = 0;
};

struct MapDescription {
  std::vector<MapNode> nodes;
  std::vector<MapEdge> edges;
};

MapDescription parse_map(std::istream& in);
MapDescription read_map(const std::filesystem::path& path);
void write_map(const std::filesystem::path& path, const MapDescription& map);

/// Closed ring sampled every `spacing` meters of arc starting at angle 0,
/// with directed counter-clockwise edges between consecutive nodes.
MapDescription ring_map(double radius, double spacing);

/// Ring plus entry and exit lanes matching the synthetic simulator.
MapDescription roundabout_map(const scenedata::RoundaboutGeometry& geometry, double spacing);

// ---------------------------------------------------------------------------

struct RoadGraph {
  std::vector<std::int64_t> node_ids;  // ascending
  std::vector<double> node_pos;        // [n, 2], map frame
  std::vector<int> node_kind;
  std::vector<double> node_feat;       // [n, kRoadFeatures], positions relative to the map centroid
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // node indices
  std::vector<double> edge_feat;       // [n_edges, kEdgeFeatures]

  std::size_t size() const { return node_ids.size(); }
};

/// Throws ValidationError for an empty map, dangling edge endpoints,
/// self-loops, duplicate ids or unknown kinds.
RoadGraph build_road_graph(const MapDescription& map);
RoadGraph build_road_graph(const std::filesystem::path& map_file);

/// Road-agent graph for one scene. Node i < n_agents is agent i; node
/// n_agents + r is road node r. All coordinates are in the scene frame.
struct SceneGraph {
  std::shared_ptr<const RoadGraph> road;
  std::size_t n_agents = 0;
  std::vector<double> agent_feat;  // [A, kAgentFeatures], current frame
  std::vector<double> agent_pos;   // [A, 2]
  std::vector<double> road_feat;   // [n_road, kRoadFeatures]
  std::vector<std::size_t> edge_src;
  std::vector<std::size_t> edge_dst;
  std::vector<EdgeType> edge_type;
  std::vector<double> edge_feat;   // [E, kEdgeFeatures]

  std::size_t n_road() const { return road ? road->size() : 0; }
  std::size_t n_nodes() const { return n_agents + n_road(); }
  std::size_t n_edges() const { return edge_src.size(); }
  std::size_t count(EdgeType t) const;
};

/// Adds the complete directed agent-agent subgraph and a road->agent edge
/// for every road node within `radius` (<=, Euclidean) of an agent.
SceneGraph attach_agents(std::shared_ptr<const RoadGraph> road, const scenedata::SceneSample& sample,
                         double radius = kAgentRoadRadius);

}  // namespace pairpred::scenegraph
