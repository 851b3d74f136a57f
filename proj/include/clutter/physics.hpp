#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "clutter/catalog.hpp"
#include "clutter/geometry.hpp"
#include "clutter/prng.hpp"
#include "clutter/scene_graph.hpp"

namespace clutter {

struct PhysicsConfig {
  double sigma = 0.005;     // support-hull shrink margin, meters
  double delta = 0.01;      // perturbation displacement, meters
  int place_attempts = 64;  // rejection-sampling budget per placement
  double contact_eps = 1e-6;
  double overlap_eps = 1e-10;
};

// Rigid body in a realized scene. xy is the footprint center, z the bottom
// face height; the full pose (center position + rotation) is derived from
// the orientation label.
struct Body {
  int id = 0;  // scene-graph node id of the object node
  int class_id = 0;
  int orientation = 0;
  Vec2 xy{0.0, 0.0};
  double z = 0.0;
};

inline OrientedShape body_shape(const Catalog& cat, const Body& b) {
  return oriented_shape(cat.spec(b.class_id), b.orientation);
}

inline Polygon body_footprint(const Catalog& cat, const Body& b) {
  return translate(body_shape(cat, b).footprint, b.xy);
}

inline double body_height(const Catalog& cat, const Body& b) {
  return body_shape(cat, b).height;
}

inline double body_top(const Catalog& cat, const Body& b) {
  return b.z + body_height(cat, b);
}

inline Pose body_pose(const Catalog& cat, const Body& b) {
  OrientedShape s = body_shape(cat, b);
  return Pose{Vec3{b.xy.x, b.xy.y, b.z + 0.5 * s.height}, s.rotation};
}

// Realized scene: the source graph with poses written back, plus flat
// bodies and the geometric support relation. Support id 0 means the tray
// floor. support_map may record several supporters per body (an object
// resting across both members of a group); the graph keeps one parent.
struct RealizedScene {
  SceneGraph graph;
  std::vector<Body> bodies;  // ascending id
  std::map<int, std::vector<int>> support_map;

  const Body* body(int id) const {
    for (const Body& b : bodies)
      if (b.id == id) return &b;
    return nullptr;
  }
  Body* body(int id) {
    for (Body& b : bodies)
      if (b.id == id) return &b;
    return nullptr;
  }
  int floor_count() const {
    int n = 0;
    for (const auto& [id, sup] : support_map)
      n += (sup.size() == 1 && sup[0] == 0) ? 1 : 0;
    return n;
  }
};

struct RealizeOutcome {
  bool ok = false;
  RealizedScene scene;
  std::string failure;
};

struct StabilityReport {
  bool stable = true;
  int first_violator = -1;  // object id, bottom-up order
  double margin = std::numeric_limits<double>::infinity();
};

struct PerturbOutcome {
  RealizedScene scene;
  bool clamped = false;
};

struct TransitionResult {
  bool placed = false;
  RealizedScene scene;
  StabilityReport stability;
  std::string failure;
};

namespace detail {

inline bool z_overlap(double lo1, double hi1, double lo2, double hi2,
                      double eps) {
  return lo1 < hi2 - eps && lo2 < hi1 - eps;
}

// Height the body would come to rest at when dropped at its xy: the highest
// overlapped top below, or the floor. Bodies listed in `skip` are ignored.
inline double drop_height(const RealizedScene& s, const Catalog& cat,
                          const PhysicsConfig& cfg, const Polygon& foot,
                          const std::set<int>& skip) {
  double z = 0.0;
  for (const Body& b : s.bodies) {
    if (skip.count(b.id)) continue;
    if (intersection_area(foot, body_footprint(cat, b)) > cfg.overlap_eps)
      z = std::max(z, body_top(cat, b));
  }
  return z;
}

// Supporters of a body resting at height z: every body whose top coincides
// with z and whose footprint overlaps; the tray floor when z is zero.
inline std::vector<int> supporters_at(const RealizedScene& s,
                                      const Catalog& cat,
                                      const PhysicsConfig& cfg,
                                      const Polygon& foot, double z,
                                      const std::set<int>& skip) {
  std::vector<int> sup;
  if (z <= cfg.contact_eps) {
    sup.push_back(0);
    return sup;
  }
  for (const Body& b : s.bodies) {
    if (skip.count(b.id)) continue;
    if (std::abs(body_top(cat, b) - z) > cfg.contact_eps) continue;
    if (intersection_area(foot, body_footprint(cat, b)) > cfg.overlap_eps)
      sup.push_back(b.id);
  }
  return sup;
}

inline bool collides(const RealizedScene& s, const Catalog& cat,
                     const PhysicsConfig& cfg, const Polygon& foot, double z,
                     double height, const std::set<int>& skip) {
  for (const Body& b : s.bodies) {
    if (skip.count(b.id)) continue;
    if (!z_overlap(z, z + height, b.z, body_top(cat, b), cfg.contact_eps))
      continue;
    if (intersection_area(foot, body_footprint(cat, b)) > cfg.overlap_eps)
      return true;
  }
  return false;
}

inline bool inside_tray(const TraySpec& tray, const Polygon& foot) {
  Polygon floor = tray.floor_polygon();
  for (const Vec2& v : foot)
    if (signed_distance(floor, v) < 0.0) return false;
  return true;
}

}  // namespace detail

// Re-derives z heights and the support relation from the current xy
// placements. Bodies are processed in ascending (old z, id) order and drop
// straight down onto whatever lies beneath, so removing a supporter lets its
// riders fall and a body pushed over a neighbour comes to rest on top of it.
inline void settle(RealizedScene& s, const Catalog& cat,
                   const PhysicsConfig& cfg) {
  std::vector<int> order(s.bodies.size());
  for (std::size_t i = 0; i < s.bodies.size(); ++i) order[i] = (int)i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (s.bodies[a].z != s.bodies[b].z) return s.bodies[a].z < s.bodies[b].z;
    return s.bodies[a].id < s.bodies[b].id;
  });
  s.support_map.clear();
  std::set<int> unsettled;
  for (const Body& b : s.bodies) unsettled.insert(b.id);
  for (int idx : order) {
    Body& b = s.bodies[idx];
    unsettled.erase(b.id);
    std::set<int> skip = unsettled;
    skip.insert(b.id);
    Polygon foot = body_footprint(cat, b);
    b.z = detail::drop_height(s, cat, cfg, foot, skip);
    s.support_map[b.id] = detail::supporters_at(s, cat, cfg, foot, b.z, skip);
  }
}

namespace detail {

// Writes body poses into the graph nodes and flags them simulated. A meta
// group node takes the centroid of its members so the policy sees where the
// group landed.
inline void write_poses(RealizedScene& s, const Catalog& cat) {
  for (const Body& b : s.bodies) {
    SceneNode& n = s.graph.node(b.id);
    n.simulated = true;
    n.pose = body_pose(cat, b);
  }
  for (auto& [id, n] : s.graph.nodes) {
    if (n.kind != NodeKind::MetaGroup) continue;
    Vec3 acc{0.0, 0.0, 0.0};
    int cnt = 0;
    for (int c : s.graph.children_of(id)) {
      const SceneEdge* e = s.graph.edge_to(c);
      if (!e || e->label == kPrimitiveLabel) continue;  // rider, not member
      if (const Body* mb = s.body(c)) {
        Vec3 p = body_pose(cat, *mb).pos;
        acc.x += p.x;
        acc.y += p.y;
        acc.z += p.z;
        ++cnt;
      }
    }
    if (cnt > 0) {
      n.simulated = true;
      n.pose = Pose{Vec3{acc.x / cnt, acc.y / cnt, acc.z / cnt}, Quat{}};
    }
  }
}

struct PlaceTarget {
  std::vector<int> must_touch;  // supporter bodies the sample must contact
  Polygon region;               // candidate centers sampled in its bbox
  double rest_z = 0.0;          // required drop height
};

inline bool try_place(RealizedScene& s, const Catalog& cat,
                      const PhysicsConfig& cfg, Rng& rng, Body& b,
                      const PlaceTarget& tgt) {
  Aabb2 box = bounding_box(tgt.region);
  Polygon base = body_shape(cat, b).footprint;
  for (int attempt = 0; attempt < cfg.place_attempts; ++attempt) {
    Vec2 c{uniform_real(rng, box.min_x, box.max_x),
           uniform_real(rng, box.min_y, box.max_y)};
    if (signed_distance(tgt.region, c) < cfg.sigma) continue;
    Polygon foot = translate(base, c);
    if (!inside_tray(cat.tray, foot)) continue;
    double z = drop_height(s, cat, cfg, foot, {});
    if (std::abs(z - tgt.rest_z) > cfg.contact_eps) continue;
    double h = body_shape(cat, b).height;
    if (collides(s, cat, cfg, foot, z, h, {})) continue;
    std::vector<int> sup = supporters_at(s, cat, cfg, foot, z, {});
    bool touches_all = true;
    for (int m : tgt.must_touch)
      if (std::find(sup.begin(), sup.end(), m) == sup.end())
        touches_all = false;
    if (!touches_all) continue;
    b.xy = c;
    b.z = z;
    s.bodies.push_back(b);
    std::sort(s.bodies.begin(), s.bodies.end(),
              [](const Body& a, const Body& c2) { return a.id < c2.id; });
    s.support_map[b.id] = sup;
    return true;
  }
  return false;
}

inline int edge_orientation(const SceneGraph& g, const Catalog& cat, int id,
                            std::string* err) {
  const SceneEdge* e = g.edge_to(id);
  const SceneNode& n = g.node(id);
  const ObjectSpec& spec = cat.spec(n.subtype);
  int label =
      (e && e->label != kPrimitiveLabel) ? e->label : spec.default_orientation();
  if (!spec.allows(label)) {
    if (err)
      *err = "orientation " + std::to_string(label) + " not allowed for " +
             spec.cls.name;
    return -1;
  }
  return label;
}

// Member object nodes of a meta group: children reached via an orientation
// edge. Riders attach with primitive edges and are excluded.
inline std::vector<int> meta_members(const SceneGraph& g, int meta_id) {
  std::vector<int> out;
  for (int c : g.children_of(meta_id)) {
    const SceneEdge* e = g.edge_to(c);
    if (e && e->label != kPrimitiveLabel) out.push_back(c);
  }
  return out;
}

// Top region an object dropped on `support_id` should land on: the body's
// own top face, or the hull of the member tops for a meta group.
inline Polygon top_region(const RealizedScene& s, const SceneGraph& g,
                          const Catalog& cat, int support_id,
                          std::vector<int>& must_touch, double& rest_z) {
  if (const Body* b = s.body(support_id)) {
    must_touch = {support_id};
    rest_z = body_top(cat, *b);
    return body_footprint(cat, *b);
  }
  // meta group: union of member tops
  std::vector<Vec2> pts;
  must_touch = meta_members(g, support_id);
  rest_z = 0.0;
  for (int m : must_touch) {
    const Body* mb = s.body(m);
    Polygon f = body_footprint(cat, *mb);
    pts.insert(pts.end(), f.begin(), f.end());
    rest_z = std::max(rest_z, body_top(cat, *mb));
  }
  return convex_hull(pts);
}

}  // namespace detail

// Turns a fully terminal scene graph into a realized scene. Placements are
// sampled with per-node derived seeds: floor objects anywhere inside the
// walls, meta members side by side along x with their declared spacing,
// stacked objects over their supporter's top face. Any placement that cannot
// be satisfied within the attempt budget fails the whole realization.
inline RealizeOutcome realize(const SceneGraph& g, const Catalog& cat,
                              const PhysicsConfig& cfg, std::uint64_t seed) {
  RealizeOutcome out;
  if (!g.fully_terminal()) {
    out.failure = "graph has non-terminal nodes";
    return out;
  }
  out.scene.graph = g;
  RealizedScene& s = out.scene;

  std::vector<int> order = g.subtree(0);  // parents precede children
  std::set<int> placed;
  for (int id : order) {
    const SceneNode& n = g.node(id);
    if (n.kind == NodeKind::MetaGroup) {
      const MetaSpec& meta = cat.meta(n.subtype);
      std::vector<int> members = detail::meta_members(g, id);
      if (members.size() != static_cast<std::size_t>(meta.count)) {
        out.failure = "meta group " + std::to_string(id) + " member mismatch";
        return out;
      }
      std::vector<Body> mb;
      double half_w = 0.0;
      for (int m : members) {
        std::string err;
        int lab = detail::edge_orientation(g, cat, m, &err);
        if (lab < 0) {
          out.failure = err;
          return out;
        }
        Body b;
        b.id = m;
        b.class_id = g.node(m).subtype;
        b.orientation = lab;
        mb.push_back(b);
        Aabb2 fb = bounding_box(body_shape(cat, b).footprint);
        half_w = std::max(half_w, 0.5 * fb.width());
      }
      // members straddle the group center along x
      double step = 2.0 * half_w + meta.spacing;
      Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(id)));
      bool done = false;
      for (int attempt = 0; attempt < cfg.place_attempts && !done; ++attempt) {
        double span = 0.5 * step * (meta.count - 1);
        Aabb2 tray_box = bounding_box(cat.tray.floor_polygon());
        Vec2 c{uniform_real(rng, tray_box.min_x, tray_box.max_x),
               uniform_real(rng, tray_box.min_y, tray_box.max_y)};
        bool all_ok = true;
        std::vector<Body> placed_members;
        RealizedScene trial = s;
        for (std::size_t i = 0; i < mb.size() && all_ok; ++i) {
          Body b = mb[i];
          b.xy = Vec2{c.x - span + step * static_cast<double>(i), c.y};
          Polygon foot = body_footprint(cat, b);
          if (!detail::inside_tray(cat.tray, foot) ||
              detail::drop_height(trial, cat, cfg, foot, {}) > cfg.contact_eps ||
              detail::collides(trial, cat, cfg, foot, 0.0,
                               body_shape(cat, b).height, {})) {
            all_ok = false;
            break;
          }
          b.z = 0.0;
          trial.bodies.push_back(b);
          std::sort(trial.bodies.begin(), trial.bodies.end(),
                    [](const Body& x, const Body& y) { return x.id < y.id; });
          trial.support_map[b.id] = {0};
          placed_members.push_back(b);
        }
        if (all_ok) {
          s = std::move(trial);
          done = true;
        }
      }
      if (!done) {
        out.failure = "no placement for meta group " + std::to_string(id);
        return out;
      }
      for (int m : members) placed.insert(m);
      continue;
    }
    if (n.kind != NodeKind::Object || placed.count(id)) continue;

    std::string err;
    int lab = detail::edge_orientation(g, cat, id, &err);
    if (lab < 0) {
      out.failure = err;
      return out;
    }
    Body b;
    b.id = id;
    b.class_id = n.subtype;
    b.orientation = lab;

    const SceneEdge* e = g.edge_to(id);
    detail::PlaceTarget tgt;
    if (!e || e->parent == 0) {
      tgt.region = cat.tray.floor_polygon();
      tgt.rest_z = 0.0;
    } else {
      tgt.region =
          detail::top_region(s, g, cat, e->parent, tgt.must_touch, tgt.rest_z);
    }
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(id)));
    if (!detail::try_place(s, cat, cfg, rng, b, tgt)) {
      out.failure = "no placement for object " + std::to_string(id);
      return out;
    }
    placed.insert(id);
  }
  detail::write_poses(s, cat);
  out.ok = true;
  return out;
}

// Quasi-static stability: for every body, in ascending (z, id) order, the
// combined center of mass of the body plus everything it transitively
// supports must project inside the convex hull of its contact region with
// its supporters, shrunk by sigma. margin reports the worst signed distance
// after the shrink; an object resting on the floor uses its own footprint.
inline StabilityReport check_stability(const RealizedScene& s,
                                       const Catalog& cat,
                                       const PhysicsConfig& cfg) {
  StabilityReport rep;
  std::map<int, std::vector<int>> riders;
  for (const auto& [id, sup] : s.support_map)
    for (int p : sup)
      if (p != 0) riders[p].push_back(id);

  std::vector<const Body*> order;
  for (const Body& b : s.bodies) order.push_back(&b);
  std::sort(order.begin(), order.end(), [](const Body* a, const Body* b) {
    if (a->z != b->z) return a->z < b->z;
    return a->id < b->id;
  });

  for (const Body* bp : order) {
    const Body& b = *bp;
    // transitive load: the body plus every rider reachable above it
    std::set<int> load;
    std::vector<int> stack{b.id};
    while (!stack.empty()) {
      int id = stack.back();
      stack.pop_back();
      if (!load.insert(id).second) continue;
      auto it = riders.find(id);
      if (it != riders.end())
        for (int r : it->second) stack.push_back(r);
    }
    double mass = 0.0;
    Vec2 com{0.0, 0.0};
    for (int id : load) {
      const Body* lb = s.body(id);
      double m = cat.spec(lb->class_id).mass;
      mass += m;
      com.x += m * lb->xy.x;
      com.y += m * lb->xy.y;
    }
    com.x /= mass;
    com.y /= mass;

    Polygon foot = body_footprint(cat, b);
    std::vector<Vec2> pts;
    auto sit = s.support_map.find(b.id);
    for (int sup : sit->second) {
      if (sup == 0) {
        Polygon contact = convex_intersect(foot, cat.tray.floor_polygon());
        pts.insert(pts.end(), contact.begin(), contact.end());
      } else {
        Polygon contact =
            convex_intersect(foot, body_footprint(cat, *s.body(sup)));
        pts.insert(pts.end(), contact.begin(), contact.end());
      }
    }
    if (pts.size() < 3) {
      rep.stable = false;
      if (rep.first_violator < 0) rep.first_violator = b.id;
      rep.margin = std::min(rep.margin, -cfg.sigma);
      continue;
    }
    Polygon hull = convex_hull(pts);
    double margin = signed_distance(hull, com) - cfg.sigma;
    rep.margin = std::min(rep.margin, margin);
    if (margin < 0.0 && rep.first_violator < 0) {
      rep.stable = false;
      rep.first_violator = b.id;
    }
    if (margin < 0.0) rep.stable = false;
  }
  return rep;
}

// Displaces one object by delta in a sampled direction, clamping the slide
// at the tray walls, then lets the scene settle. clamped records whether the
// walls cut the displacement short.
inline PerturbOutcome perturb(const RealizedScene& s, const Catalog& cat,
                              const PhysicsConfig& cfg, int object_id,
                              std::uint64_t seed) {
  PerturbOutcome out;
  out.scene = s;
  Body* b = out.scene.body(object_id);
  if (!b || cfg.delta == 0.0) return out;
  Rng rng = make_rng(seed);
  double theta = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
  Vec2 d{cfg.delta * std::cos(theta), cfg.delta * std::sin(theta)};

  Aabb2 fb = bounding_box(body_footprint(cat, *b));
  Aabb2 tb = bounding_box(cat.tray.floor_polygon());
  double t = 1.0;
  if (d.x > 0.0) t = std::min(t, (tb.max_x - fb.max_x) / d.x);
  if (d.x < 0.0) t = std::min(t, (tb.min_x - fb.min_x) / d.x);
  if (d.y > 0.0) t = std::min(t, (tb.max_y - fb.max_y) / d.y);
  if (d.y < 0.0) t = std::min(t, (tb.min_y - fb.min_y) / d.y);
  t = std::max(0.0, t);
  if (t < 1.0) out.clamped = true;
  b->xy.x += t * d.x;
  b->xy.y += t * d.y;
  settle(out.scene, cat, cfg);
  detail::write_poses(out.scene, cat);
  return out;
}

// Rebuilds the graph as tray + object nodes with one support edge per body
// (lowest supporter id when several), labelled by the body's orientation.
// Used after manipulation, where meta groups no longer describe structure.
inline SceneGraph canonical_object_graph(const RealizedScene& s,
                                         const Catalog& cat) {
  SceneGraph g = SceneGraph::tray_only();
  for (const Body& b : s.bodies) {
    SceneNode n;
    n.id = b.id;
    n.kind = NodeKind::Object;
    n.subtype = b.class_id;
    n.simulated = true;
    const SceneNode* old = s.graph.has_node(b.id) ? &s.graph.node(b.id) : nullptr;
    n.seen = old ? old->seen : false;
    n.pose = body_pose(cat, b);
    g.insert_node(n);
  }
  for (const Body& b : s.bodies) {
    const auto& sup = s.support_map.at(b.id);
    int parent = *std::min_element(sup.begin(), sup.end());
    g.add_edge(parent, b.id, b.orientation);
  }
  return g;
}

// Pick object x and set it down: on the floor (y == 0, sampled free spot) or
// centered on y's top face. Everything x was holding drops straight down,
// then the moved object is perturbed and stability is checked. The graph is
// rebuilt from the new support relation.
inline TransitionResult pick_and_place(const RealizedScene& s,
                                       const Catalog& cat,
                                       const PhysicsConfig& cfg, int x, int y,
                                       std::uint64_t seed) {
  TransitionResult res;
  res.scene = s;
  Body moved;
  {
    Body* bx = res.scene.body(x);
    if (!bx || x == y) {
      res.failure = "invalid pick";
      return res;
    }
    moved = *bx;
    res.scene.bodies.erase(
        std::remove_if(res.scene.bodies.begin(), res.scene.bodies.end(),
                       [&](const Body& b) { return b.id == x; }),
        res.scene.bodies.end());
    res.scene.support_map.erase(x);
  }
  settle(res.scene, cat, cfg);  // former riders of x drop

  Rng rng = make_rng(derive_seed(seed, 0));
  if (y == 0) {
    detail::PlaceTarget tgt;
    tgt.region = cat.tray.floor_polygon();
    tgt.rest_z = 0.0;
    if (!detail::try_place(res.scene, cat, cfg, rng, moved, tgt)) {
      res.failure = "no free floor placement";
      res.stability.stable = false;
      res.stability.margin = -cfg.sigma;
      return res;
    }
  } else {
    const Body* by = res.scene.body(y);
    if (!by) {
      res.failure = "invalid place target";
      return res;
    }
    Polygon top = body_footprint(cat, *by);
    moved.xy = polygon_centroid(top);
    moved.z = body_top(cat, *by);
    res.scene.bodies.push_back(moved);
    std::sort(res.scene.bodies.begin(), res.scene.bodies.end(),
              [](const Body& a, const Body& b) { return a.id < b.id; });
    settle(res.scene, cat, cfg);
  }

  PerturbOutcome po =
      perturb(res.scene, cat, cfg, x, derive_seed(seed, 1));
  res.scene = std::move(po.scene);
  settle(res.scene, cat, cfg);
  res.scene.graph = canonical_object_graph(res.scene, cat);
  res.stability = check_stability(res.scene, cat, cfg);
  res.placed = true;
  return res;
}

}  // namespace clutter
