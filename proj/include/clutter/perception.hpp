#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "clutter/features.hpp"
#include "clutter/physics.hpp"

namespace clutter {

struct PerceptionConfig {
  double cell = 0.002;  // raster resolution, meters
  double tau = 0.1;     // visible-fraction detection threshold
};

// Top-down z-buffer over the tray floor. owner holds the object id whose top
// surface is highest at each cell, -1 where only the tray shows.
struct RasterMap {
  int width = 0, height = 0;
  double cell = 0.002;
  double origin_x = 0.0, origin_y = 0.0;
  std::vector<double> top;
  std::vector<int> owner;

  int index(int ix, int iy) const { return iy * width + ix; }
};

inline RasterMap render_topdown(const RealizedScene& s, const Catalog& cat,
                                const PerceptionConfig& pc) {
  RasterMap m;
  Aabb2 tb = bounding_box(cat.tray.floor_polygon());
  m.cell = pc.cell;
  m.origin_x = tb.min_x;
  m.origin_y = tb.min_y;
  m.width = static_cast<int>(tb.width() / pc.cell + 0.5);
  m.height = static_cast<int>(tb.depth() / pc.cell + 0.5);
  m.top.assign(static_cast<std::size_t>(m.width) * m.height, 0.0);
  m.owner.assign(static_cast<std::size_t>(m.width) * m.height, -1);

  for (const Body& b : s.bodies) {
    Polygon foot = body_footprint(cat, b);
    Aabb2 fb = bounding_box(foot);
    double z = body_top(cat, b);
    int ix0 = std::max(0, (int)((fb.min_x - m.origin_x) / pc.cell));
    int ix1 = std::min(m.width - 1, (int)((fb.max_x - m.origin_x) / pc.cell));
    int iy0 = std::max(0, (int)((fb.min_y - m.origin_y) / pc.cell));
    int iy1 = std::min(m.height - 1, (int)((fb.max_y - m.origin_y) / pc.cell));
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix) {
        Vec2 p{m.origin_x + (ix + 0.5) * pc.cell,
               m.origin_y + (iy + 0.5) * pc.cell};
        if (!point_in_polygon(foot, p)) continue;
        int idx = m.index(ix, iy);
        if (z > m.top[idx]) {
          m.top[idx] = z;
          m.owner[idx] = b.id;
        }
      }
  }
  return m;
}

// Objects whose exposed top-down area is at least tau of their footprint.
inline std::set<int> detect(const RealizedScene& s, const Catalog& cat,
                            const PerceptionConfig& pc) {
  RasterMap m = render_topdown(s, cat, pc);
  std::map<int, int> covered, exposed;
  for (const Body& b : s.bodies) {
    Polygon foot = body_footprint(cat, b);
    Aabb2 fb = bounding_box(foot);
    int ix0 = std::max(0, (int)((fb.min_x - m.origin_x) / pc.cell));
    int ix1 = std::min(m.width - 1, (int)((fb.max_x - m.origin_x) / pc.cell));
    int iy0 = std::max(0, (int)((fb.min_y - m.origin_y) / pc.cell));
    int iy1 = std::min(m.height - 1, (int)((fb.max_y - m.origin_y) / pc.cell));
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix) {
        Vec2 p{m.origin_x + (ix + 0.5) * pc.cell,
               m.origin_y + (iy + 0.5) * pc.cell};
        if (!point_in_polygon(foot, p)) continue;
        covered[b.id]++;
        if (m.owner[m.index(ix, iy)] == b.id) exposed[b.id]++;
      }
  }
  std::set<int> visible;
  for (const Body& b : s.bodies) {
    int c = covered.count(b.id) ? covered[b.id] : 0;
    int e = exposed.count(b.id) ? exposed[b.id] : 0;
    if (c > 0 && static_cast<double>(e) / c >= pc.tau) visible.insert(b.id);
  }
  return visible;
}

inline int hidden_count(const RealizedScene& s, const Catalog& cat,
                        const PerceptionConfig& pc) {
  return static_cast<int>(s.bodies.size()) -
         static_cast<int>(detect(s, cat, pc).size());
}

// What the agent has accumulated: every object ever detected, frozen at the
// pose it was last seen in. Fully connected, no tray node.
struct ObservationGraph {
  std::vector<SceneNode> nodes;  // ascending id, all seen

  bool contains(int id) const {
    for (const SceneNode& n : nodes)
      if (n.id == id) return true;
    return false;
  }
};

// Folds the current detections into the memory map (id -> node with
// last-seen pose) and builds the observation. Once known, an object stays
// known even when it gets re-occluded.
inline ObservationGraph build_observation(std::map<int, SceneNode>& memory,
                                          const RealizedScene& s,
                                          const Catalog& cat,
                                          const PerceptionConfig& pc,
                                          std::set<int>* visible_out = nullptr) {
  std::set<int> visible = detect(s, cat, pc);
  if (visible_out) *visible_out = visible;
  for (int id : visible) {
    SceneNode n = s.graph.node(id);
    n.seen = true;
    memory[id] = n;
  }
  ObservationGraph obs;
  for (const auto& [id, n] : memory) obs.nodes.push_back(n);
  return obs;
}

inline FeatureGraph encode_exploration_features(const ObservationGraph& obs,
                                                const Catalog& cat) {
  FeatureGraph f;
  f.node_width = exploration_node_width(cat);
  f.edge_width = kExplorationEdgeWidth;
  for (const SceneNode& n : obs.nodes) {
    f.node_ids.push_back(n.id);
    detail::exploration_row(n, cat, f.nodes);
  }
  for (int i = 0; i < f.rows(); ++i)
    for (int j = 0; j < f.rows(); ++j)
      if (i != j) {
        f.edges.emplace_back(i, j);
        f.edge_feats.push_back(1.0);
      }
  return f;
}

}  // namespace clutter
