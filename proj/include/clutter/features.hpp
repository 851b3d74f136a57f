#pragma once

#include <utility>
#include <vector>

#include "clutter/catalog.hpp"
#include "clutter/scene_graph.hpp"

namespace clutter {

// Raw feature graph fed to the network. Rows are ordered by ascending scene
// node id; every support edge is emitted in both directions so messages flow
// down and up the tree.
struct FeatureGraph {
  int node_width = 0;
  int edge_width = 0;
  std::vector<int> node_ids;                // row -> scene node id
  std::vector<double> nodes;                // rows * node_width
  std::vector<std::pair<int, int>> edges;   // (src row, dst row)
  std::vector<double> edge_feats;           // edges * edge_width

  int rows() const { return static_cast<int>(node_ids.size()); }
  int row_of(int node_id) const {
    for (int i = 0; i < rows(); ++i)
      if (node_ids[i] == node_id) return i;
    return -1;
  }
};

// Generation node layout: one-hot over the node vocabulary
// [Tray, ObjectSlot, End, Object(class 0..C-1), MetaGroup(meta 0..M-1)],
// then is_simulated, then position (zeros while unsimulated).
inline int generation_node_width(const Catalog& cat) {
  return 3 + cat.class_count() + cat.meta_count() + 1 + 3;
}
// Edge layout: one-hot over [Primitive, Orientation 0..9].
inline constexpr int kGenerationEdgeWidth = 1 + kOrientationCount;

inline int generation_vocab_index(const SceneNode& n, const Catalog& cat) {
  switch (n.kind) {
    case NodeKind::Tray: return 0;
    case NodeKind::ObjectSlot: return 1;
    case NodeKind::End: return 2;
    case NodeKind::Object: return 3 + n.subtype;
    case NodeKind::MetaGroup: return 3 + cat.class_count() + n.subtype;
  }
  return 0;
}

inline FeatureGraph encode_generation_features(const SceneGraph& g,
                                               const Catalog& cat) {
  FeatureGraph f;
  f.node_width = generation_node_width(cat);
  f.edge_width = kGenerationEdgeWidth;
  for (const auto& [id, n] : g.nodes) {
    f.node_ids.push_back(id);
    std::vector<double> row(f.node_width, 0.0);
    row[generation_vocab_index(n, cat)] = 1.0;
    const int base = 3 + cat.class_count() + cat.meta_count();
    row[base] = n.simulated ? 1.0 : 0.0;
    if (n.simulated) {
      row[base + 1] = n.pose.pos.x;
      row[base + 2] = n.pose.pos.y;
      row[base + 3] = n.pose.pos.z;
    }
    f.nodes.insert(f.nodes.end(), row.begin(), row.end());
  }
  for (const SceneEdge& e : g.edges) {
    const int pr = f.row_of(e.parent), cr = f.row_of(e.child);
    std::vector<double> lab(f.edge_width, 0.0);
    lab[e.label == kPrimitiveLabel ? 0 : 1 + e.label] = 1.0;
    f.edges.emplace_back(pr, cr);
    f.edge_feats.insert(f.edge_feats.end(), lab.begin(), lab.end());
    f.edges.emplace_back(cr, pr);
    f.edge_feats.insert(f.edge_feats.end(), lab.begin(), lab.end());
  }
  return f;
}

// Exploration node layout: one-hot object class (zeros for a non-object
// node), is_seen, position, orientation quaternion; geometry is zeroed until
// the node has been seen. Edge feature is a single connectivity flag.
inline int exploration_node_width(const Catalog& cat) {
  return cat.class_count() + 1 + 3 + 4;
}
inline constexpr int kExplorationEdgeWidth = 1;

namespace detail {

inline void exploration_row(const SceneNode& n, const Catalog& cat,
                            std::vector<double>& out) {
  const int width = exploration_node_width(cat);
  std::size_t base = out.size();
  out.resize(base + width, 0.0);
  if (n.kind == NodeKind::Object) out[base + n.subtype] = 1.0;
  if (n.seen) {
    out[base + cat.class_count()] = 1.0;
    out[base + cat.class_count() + 1] = n.pose.pos.x;
    out[base + cat.class_count() + 2] = n.pose.pos.y;
    out[base + cat.class_count() + 3] = n.pose.pos.z;
    out[base + cat.class_count() + 4] = n.pose.rot.w;
    out[base + cat.class_count() + 5] = n.pose.rot.x;
    out[base + cat.class_count() + 6] = n.pose.rot.y;
    out[base + cat.class_count() + 7] = n.pose.rot.z;
  }
}

}  // namespace detail

// Privileged view: the object nodes of a realized scene graph with their
// support edges (bidirectional). The tray and any End nodes carry no
// geometry useful to exploration and are skipped; place-on-floor is handled
// by a dedicated head, not a node row.
inline FeatureGraph encode_exploration_features(const SceneGraph& g,
                                                const Catalog& cat) {
  FeatureGraph f;
  f.node_width = exploration_node_width(cat);
  f.edge_width = kExplorationEdgeWidth;
  for (const auto& [id, n] : g.nodes) {
    if (n.kind != NodeKind::Object) continue;
    f.node_ids.push_back(id);
    detail::exploration_row(n, cat, f.nodes);
  }
  for (const SceneEdge& e : g.edges) {
    const int pr = f.row_of(e.parent), cr = f.row_of(e.child);
    if (pr < 0 || cr < 0) continue;  // edge touches tray or a non-object
    f.edges.emplace_back(pr, cr);
    f.edge_feats.push_back(1.0);
    f.edges.emplace_back(cr, pr);
    f.edge_feats.push_back(1.0);
  }
  return f;
}

}  // namespace clutter
