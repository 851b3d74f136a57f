#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "clutter/catalog.hpp"
#include "clutter/geometry.hpp"

namespace clutter {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class NodeKind { Tray, ObjectSlot, Object, MetaGroup, End };

inline const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Tray: return "tray";
    case NodeKind::ObjectSlot: return "slot";
    case NodeKind::Object: return "object";
    case NodeKind::MetaGroup: return "meta";
    case NodeKind::End: return "end";
  }
  return "?";
}

inline NodeKind kind_from_name(const std::string& s) {
  if (s == "tray") return NodeKind::Tray;
  if (s == "slot") return NodeKind::ObjectSlot;
  if (s == "object") return NodeKind::Object;
  if (s == "meta") return NodeKind::MetaGroup;
  if (s == "end") return NodeKind::End;
  throw ParseError("unknown node kind: " + s);
}

struct Pose {
  Vec3 pos;
  Quat rot;
};

struct SceneNode {
  int id = -1;
  NodeKind kind = NodeKind::ObjectSlot;
  int subtype = -1;       // class id for Object, meta id for MetaGroup
  bool simulated = false; // pose fields are meaningful
  bool seen = false;      // detected at least once (exploration)
  Pose pose;
};

// Edge label: kPrimitiveLabel for a bare support edge, 0..9 for an
// orientation-constrained one.
inline constexpr int kPrimitiveLabel = -1;

struct SceneEdge {
  int parent = -1;
  int child = -1;
  int label = kPrimitiveLabel;
};

// Rooted support tree. Node 0 is the tray; every other node hangs below it.
// Ids are stable across rewrites and never reused within a live graph, so
// they may have gaps. (next_id is not serialized; a loaded graph restarts at
// max id + 1, which only matters if a custom rule deletes the max node.)
class SceneGraph {
 public:
  std::map<int, SceneNode> nodes;  // keyed by id, iteration sorted
  std::vector<SceneEdge> edges;    // kept sorted by (parent, child)
  int next_id = 0;

  static SceneGraph tray_only() {
    SceneGraph g;
    SceneNode t;
    t.id = 0;
    t.kind = NodeKind::Tray;
    g.nodes[0] = t;
    g.next_id = 1;
    return g;
  }

  bool has_node(int id) const { return nodes.count(id) != 0; }

  SceneNode& node(int id) {
    auto it = nodes.find(id);
    if (it == nodes.end())
      throw std::out_of_range("no node " + std::to_string(id));
    return it->second;
  }
  const SceneNode& node(int id) const {
    auto it = nodes.find(id);
    if (it == nodes.end())
      throw std::out_of_range("no node " + std::to_string(id));
    return it->second;
  }

  int add_node(NodeKind kind, int subtype = -1) {
    SceneNode n;
    n.id = next_id++;
    n.kind = kind;
    n.subtype = subtype;
    nodes[n.id] = n;
    return n.id;
  }

  void insert_node(const SceneNode& n) {
    nodes[n.id] = n;
    next_id = std::max(next_id, n.id + 1);
  }

  void add_edge(int parent, int child, int label = kPrimitiveLabel) {
    SceneEdge e{parent, child, label};
    auto pos = std::lower_bound(
        edges.begin(), edges.end(), e, [](const SceneEdge& a, const SceneEdge& b) {
          return std::pair(a.parent, a.child) < std::pair(b.parent, b.child);
        });
    edges.insert(pos, e);
  }

  void remove_edge(int parent, int child) {
    std::erase_if(edges, [&](const SceneEdge& e) {
      return e.parent == parent && e.child == child;
    });
  }

  void remove_node(int id) {
    nodes.erase(id);
    std::erase_if(edges,
                  [&](const SceneEdge& e) { return e.parent == id || e.child == id; });
  }

  const SceneEdge* edge_to(int child) const {
    for (const auto& e : edges)
      if (e.child == child) return &e;
    return nullptr;
  }
  SceneEdge* edge_to(int child) {
    for (auto& e : edges)
      if (e.child == child) return &e;
    return nullptr;
  }

  int parent_of(int child) const {
    const SceneEdge* e = edge_to(child);
    return e ? e->parent : -1;
  }

  std::vector<int> children_of(int parent) const {
    std::vector<int> out;
    for (const auto& e : edges)
      if (e.parent == parent) out.push_back(e.child);
    return out;  // sorted because edges are
  }

  // All node ids in the subtree rooted at id, preorder, children in id order.
  std::vector<int> subtree(int id) const {
    std::vector<int> out{id};
    for (size_t i = 0; i < out.size(); ++i)
      for (int c : children_of(out[i])) out.push_back(c);
    return out;
  }

  int count_kind(NodeKind k) const {
    int n = 0;
    for (const auto& [id, nd] : nodes) n += nd.kind == k ? 1 : 0;
    return n;
  }

  bool fully_terminal() const { return count_kind(NodeKind::ObjectSlot) == 0; }

  // Meta-group members are explicit Object nodes, so this is the realized
  // object count too.
  int object_count() const { return count_kind(NodeKind::Object); }

  // Size used for generation targets: every node except the tray root.
  int non_tray_count() const { return static_cast<int>(nodes.size()) - 1; }
};

struct ValidationReport {
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
  std::string to_string() const {
    std::string out;
    for (const auto& p : problems) {
      if (!out.empty()) out += "; ";
      out += p;
    }
    return out;
  }
};

inline ValidationReport validate(const SceneGraph& g, const Catalog& cat) {
  ValidationReport rep;
  auto flag = [&](std::string msg) { rep.problems.push_back(std::move(msg)); };

  if (!g.has_node(0) || g.node(0).kind != NodeKind::Tray)
    flag("node 0 must be the tray root");
  int trays = 0;
  for (const auto& [id, nd] : g.nodes) {
    if (nd.id != id) flag("node id field mismatch at " + std::to_string(id));
    if (nd.kind == NodeKind::Tray) ++trays;
    if (nd.kind == NodeKind::Object &&
        (nd.subtype < 0 || nd.subtype >= cat.class_count()))
      flag("object node " + std::to_string(id) + " has invalid class");
    if (nd.kind == NodeKind::MetaGroup &&
        (nd.subtype < 0 || nd.subtype >= cat.meta_count()))
      flag("meta node " + std::to_string(id) + " has invalid meta id");
    if (nd.simulated && nd.kind == NodeKind::ObjectSlot)
      flag("non-terminal node " + std::to_string(id) + " marked simulated");
    if (nd.simulated && std::abs(nd.pose.rot.norm() - 1.0) > 1e-9)
      flag("node " + std::to_string(id) + " quaternion not unit");
  }
  if (trays > 1) flag("multiple trays");

  std::map<int, int> indegree;
  bool dangling = false;
  for (const auto& e : g.edges) {
    if (!g.has_node(e.parent) || !g.has_node(e.child)) {
      flag("dangling edge " + std::to_string(e.parent) + "->" +
           std::to_string(e.child));
      dangling = true;
      continue;
    }
    if (e.label != kPrimitiveLabel &&
        (e.label < 0 || e.label >= kOrientationCount))
      flag("edge label out of range on " + std::to_string(e.parent) + "->" +
           std::to_string(e.child));
    if (g.node(e.parent).kind == NodeKind::End)
      flag("end node " + std::to_string(e.parent) + " has a child");
    if (g.node(e.child).kind == NodeKind::Tray) flag("tray has a parent");
    indegree[e.child] += 1;
  }
  for (const auto& [id, nd] : g.nodes) {
    if (id == 0) continue;
    if (indegree[id] == 0)
      flag("orphan node " + std::to_string(id));
    else if (indegree[id] > 1)
      flag("node " + std::to_string(id) + " has multiple parents");
  }
  if (rep.ok() && !dangling) {
    // With a unique parentless root and single parents elsewhere, a cycle
    // shows up as nodes unreachable from the tray.
    if (g.subtree(0).size() != g.nodes.size())
      flag("cycle: support structure not reachable from tray");
  }
  return rep;
}

inline void require_valid(const SceneGraph& g, const Catalog& cat) {
  ValidationReport rep = validate(g, cat);
  if (!rep.ok()) throw ParseError("invalid scene graph: " + rep.to_string());
}

// -- serialization ----------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string edge_label_name(int label) {
  if (label == kPrimitiveLabel) return "primitive";
  return "orient" + std::to_string(label);
}

inline int edge_label_from_name(const std::string& s) {
  if (s == "primitive") return kPrimitiveLabel;
  if (s.rfind("orient", 0) == 0) {
    int k = -1;
    try {
      k = std::stoi(s.substr(6));
    } catch (const std::exception&) {
      throw ParseError("bad edge label: " + s);
    }
    if (k < 0 || k >= kOrientationCount)
      throw ParseError("edge orientation out of range: " + s);
    return k;
  }
  throw ParseError("bad edge label: " + s);
}

inline std::string serialize(const SceneGraph& g, const Catalog& cat) {
  std::string out = "scenegraph 1\n";
  for (const auto& [id, n] : g.nodes) {
    out += "node " + std::to_string(id) + " " + kind_name(n.kind) + " ";
    if (n.kind == NodeKind::Object)
      out += std::to_string(n.subtype) + ":" + cat.spec(n.subtype).cls.name;
    else if (n.kind == NodeKind::MetaGroup)
      out += std::to_string(n.subtype) + ":" + cat.meta(n.subtype).name;
    else
      out += "-";
    out += std::string(" ") + (n.simulated ? "1" : "0") + " " +
           (n.seen ? "1" : "0");
    const double f[7] = {n.pose.pos.x, n.pose.pos.y, n.pose.pos.z,
                         n.pose.rot.w, n.pose.rot.x, n.pose.rot.y,
                         n.pose.rot.z};
    for (double v : f) out += " " + format_double(v);
    out += "\n";
  }
  for (const auto& e : g.edges)
    out += "edge " + std::to_string(e.parent) + " " + std::to_string(e.child) +
           " " + edge_label_name(e.label) + "\n";
  out += "end\n";
  return out;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Reads one document starting at *pos; leaves *pos just past its "end" line.
inline SceneGraph deserialize(const std::string& text, const Catalog& cat,
                              size_t* pos = nullptr) {
  size_t cursor = pos ? *pos : 0;
  auto next_line = [&]() -> std::string {
    if (cursor >= text.size()) throw ParseError("scene graph: truncated input");
    size_t nl = text.find('\n', cursor);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(cursor, nl - cursor);
    cursor = nl + 1;
    return line;
  };

  std::string header = next_line();
  if (header != "scenegraph 1")
    throw ParseError("scene graph: bad header: " + header);

  SceneGraph g;
  for (;;) {
    std::string line = next_line();
    if (line == "end") break;
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "node") {
      if (tok.size() != 13)
        throw ParseError("scene graph: bad node line: " + line);
      SceneNode n;
      n.id = std::stoi(tok[1]);
      n.kind = kind_from_name(tok[2]);
      if (tok[3] != "-") {
        size_t colon = tok[3].find(':');
        if (colon == std::string::npos)
          throw ParseError("scene graph: bad subtype: " + tok[3]);
        n.subtype = std::stoi(tok[3].substr(0, colon));
        const std::string name = tok[3].substr(colon + 1);
        const std::string expect =
            n.kind == NodeKind::Object
                ? (n.subtype >= 0 && n.subtype < cat.class_count()
                       ? cat.spec(n.subtype).cls.name
                       : std::string())
                : (n.kind == NodeKind::MetaGroup && n.subtype >= 0 &&
                           n.subtype < cat.meta_count()
                       ? cat.meta(n.subtype).name
                       : std::string());
        if (name != expect)
          throw ParseError("scene graph: subtype " + tok[3] +
                           " does not match catalog");
      }
      n.simulated = tok[4] == "1";
      n.seen = tok[5] == "1";
      double f[7];
      for (int i = 0; i < 7; ++i) {
        try {
          f[i] = std::stod(tok[6 + i]);
        } catch (const std::exception&) {
          throw ParseError("scene graph: bad float in: " + line);
        }
      }
      n.pose.pos = {f[0], f[1], f[2]};
      n.pose.rot = {f[3], f[4], f[5], f[6]};
      if (g.has_node(n.id))
        throw ParseError("scene graph: duplicate node id " +
                         std::to_string(n.id));
      g.insert_node(n);
    } else if (tok[0] == "edge") {
      if (tok.size() != 4)
        throw ParseError("scene graph: bad edge line: " + line);
      g.add_edge(std::stoi(tok[1]), std::stoi(tok[2]),
                 edge_label_from_name(tok[3]));
    } else {
      throw ParseError("scene graph: unexpected line: " + line);
    }
  }
  require_valid(g, cat);
  if (pos) *pos = cursor;
  return g;
}

inline std::string serialize_dataset(const std::vector<SceneGraph>& scenes,
                                     const Catalog& cat) {
  std::string out = "scenegraphs " + std::to_string(scenes.size()) + "\n";
  for (const auto& g : scenes) out += serialize(g, cat);
  return out;
}

inline std::vector<SceneGraph> deserialize_dataset(const std::string& text,
                                                   const Catalog& cat) {
  size_t pos = 0;
  size_t nl = text.find('\n');
  if (nl == std::string::npos) throw ParseError("dataset: missing header");
  auto tok = split_ws(text.substr(0, nl));
  if (tok.size() != 2 || tok[0] != "scenegraphs")
    throw ParseError("dataset: bad header");
  int count = std::stoi(tok[1]);
  pos = nl + 1;
  std::vector<SceneGraph> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(deserialize(text, cat, &pos));
  return out;
}

}  // namespace clutter
