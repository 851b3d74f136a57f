#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "clutter/episode.hpp"
#include "clutter/features.hpp"
#include "clutter/grammar.hpp"
#include "clutter/perception.hpp"
#include "clutter/physics.hpp"

namespace clutter {

struct EnvError : std::runtime_error {
  explicit EnvError(const std::string& m) : std::runtime_error(m) {}
};

// ---------------------------------------------------------------------------
// Generation: grow a scene graph rule by rule. Whenever the graph is fully
// terminal the scene is realized (fresh derived seed per event), every object
// is nudged once, and the result is scored: unstable or unrealizable scenes
// end the episode with the penalty, stable ones pay per hidden object.

struct GenConfig {
  int target_nodes = 10;
  int step_limit_factor = 4;
  double w_u = 0.5;   // per hidden object on a stable realization
  double w_s = -1.0;  // unstable or unrealizable
};

struct GenStepResult {
  double reward = 0.0;
  bool done = false;
  bool realized = false;  // this step was a realization event
  bool realize_ok = false;
  bool stable = false;
  int hidden = 0;
};

class GenEnv {
 public:
  GenEnv(const Catalog& cat, const RuleSet& rules, GenConfig cfg = {},
         PhysicsConfig phys = {}, PerceptionConfig perc = {})
      : cat_(cat), rules_(rules), cfg_(cfg), phys_(phys), perc_(perc) {}

  void reset(std::uint64_t seed) {
    seed_ = seed;
    graph_ = rules_.start;
    steps_ = 0;
    events_ = 0;
    done_ = false;
  }

  const SceneGraph& graph() const { return graph_; }
  const Catalog& catalog() const { return cat_; }
  const RuleSet& rules() const { return rules_; }
  bool done() const { return done_; }
  int steps() const { return steps_; }
  int action_count() const { return rules_.size(); }

  std::vector<char> action_mask() const {
    return feasible_mask(graph_, rules_);
  }

  FeatureGraph observe() const {
    return encode_generation_features(graph_, cat_);
  }

  std::uint64_t observation_digest() const {
    return fnv1a64(serialize(graph_, cat_));
  }

  GenStepResult step(int rule_index) {
    if (done_) throw EnvError("generation episode is over");
    if (rule_index < 0 || rule_index >= rules_.size())
      throw EnvError("rule index out of range");
    const Rule& rule = rules_.rules[rule_index];
    graph_ = apply_rule(graph_, rule, first_match(graph_, rule));
    ++steps_;

    GenStepResult res;
    if (graph_.fully_terminal()) {
      res.realized = true;
      std::uint64_t event_seed =
          derive_seed(seed_, static_cast<std::uint64_t>(events_++));
      RealizeOutcome out = realize(graph_, cat_, phys_, event_seed);
      if (!out.ok) {
        res.reward = cfg_.w_s;
        res.done = done_ = true;
        return res;
      }
      res.realize_ok = true;
      RealizedScene scene = out.scene;
      // one nudge per object, ascending id, each with its own stream
      std::vector<int> ids;
      for (const Body& b : scene.bodies) ids.push_back(b.id);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        PerturbOutcome po =
            perturb(scene, cat_, phys_, ids[i],
                    derive_seed(event_seed, 1000 + i));
        scene = std::move(po.scene);
      }
      StabilityReport rep = check_stability(scene, cat_, phys_);
      if (!rep.stable) {
        res.reward = cfg_.w_s;
        res.done = done_ = true;
        return res;
      }
      res.stable = true;
      res.hidden = hidden_count(scene, cat_, perc_);
      res.reward = cfg_.w_u * res.hidden;
      graph_ = scene.graph;  // keep the settled poses for the policy
    }

    if (graph_.non_tray_count() >= cfg_.target_nodes ||
        steps_ >= cfg_.step_limit_factor * cfg_.target_nodes) {
      res.done = done_ = true;
      return res;
    }
    std::vector<char> mask = feasible_mask(graph_, rules_);
    bool any = false;
    for (char m : mask) any = any || m;
    if (!any) res.done = done_ = true;
    return res;
  }

 private:
  Catalog cat_;
  RuleSet rules_;
  GenConfig cfg_;
  PhysicsConfig phys_;
  PerceptionConfig perc_;
  SceneGraph graph_;
  std::uint64_t seed_ = 0;
  int steps_ = 0;
  int events_ = 0;
  bool done_ = true;
};

// ---------------------------------------------------------------------------
// Exploration: start from a realized scene, move one object at a time, get
// paid per newly uncovered object. Knocking the pile over (or an impossible
// placement) ends the episode with the penalty.

struct ExpConfig {
  double r_detect = 1.0;
  double w_s = -1.0;
  int floor_capacity = 8;
  int step_limit_factor = 2;  // times the object count
  int realize_attempts = 100;
};

struct ExpStepResult {
  double reward = 0.0;
  bool done = false;
  bool stable = true;
  int newly_seen = 0;
};

// Mask over (pick, place) pairs expressed in known-object ids. Place targets
// are the known ids plus the tray floor (encoded as id 0).
struct ExpActionMask {
  std::vector<int> ids;         // known object ids, ascending
  std::vector<char> pick;       // |ids|
  std::vector<char> place;      // |ids| x (|ids| + 1), floor column last
  int cols() const { return static_cast<int>(ids.size()) + 1; }
  bool allows(int x, int y) const {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != x) continue;
      if (!pick[i]) return false;
      if (y == 0) return place[i * cols() + ids.size()] != 0;
      for (std::size_t j = 0; j < ids.size(); ++j)
        if (ids[j] == y) return place[i * cols() + j] != 0;
      return false;
    }
    return false;
  }
};

// An object fits on another when its footprint bounding box fits inside the
// target's top-face bounding box.
inline bool footprint_fits(const Catalog& cat, const Body& x, const Body& y) {
  Aabb2 fx = bounding_box(body_shape(cat, x).footprint);
  Aabb2 fy = bounding_box(body_shape(cat, y).footprint);
  return fx.width() <= fy.width() && fx.depth() <= fy.depth();
}

class ExpEnv {
 public:
  ExpEnv(const Catalog& cat, ExpConfig cfg = {}, PhysicsConfig phys = {},
         PerceptionConfig perc = {})
      : cat_(cat), cfg_(cfg), phys_(phys), perc_(perc) {}

  // Realizes the source graph, resampling on placement failure.
  void reset(const SceneGraph& source, std::uint64_t seed) {
    seed_ = seed;
    RealizeOutcome out;
    for (int attempt = 0; attempt < cfg_.realize_attempts; ++attempt) {
      out = realize(source, cat_, phys_,
                    derive_seed(seed, static_cast<std::uint64_t>(attempt)));
      if (out.ok) break;
    }
    if (!out.ok)
      throw EnvError("scene never realized: " + out.failure);
    scene_ = out.scene;
    scene_.graph = canonical_object_graph(scene_, cat_);
    total_objects_ = static_cast<int>(scene_.bodies.size());
    memory_.clear();
    steps_ = 0;
    done_ = false;
    obs_ = build_observation(memory_, scene_, cat_, perc_, &visible_);
    if (all_seen()) done_ = true;
  }

  const RealizedScene& scene() const { return scene_; }
  const ObservationGraph& observation() const { return obs_; }
  const Catalog& catalog() const { return cat_; }
  bool done() const { return done_; }
  int steps() const { return steps_; }
  int total_objects() const { return total_objects_; }
  int seen_count() const { return static_cast<int>(memory_.size()); }
  const std::set<int>& visible_ids() const { return visible_; }
  int step_limit() const { return cfg_.step_limit_factor * total_objects_; }
  bool all_seen() const { return seen_count() == total_objects_; }
  double objects_found_fraction() const {
    return total_objects_ == 0
               ? 1.0
               : static_cast<double>(seen_count()) / total_objects_;
  }

  // Student view: what has been seen, at last-seen poses.
  FeatureGraph observe() const {
    return encode_exploration_features(obs_, cat_);
  }

  // Teacher view: the true scene with every node readable.
  FeatureGraph observe_privileged() const {
    SceneGraph g = scene_.graph;
    for (auto& [id, n] : g.nodes) n.seen = true;
    return encode_exploration_features(g, cat_);
  }

  std::uint64_t observation_digest() const {
    std::string txt;
    for (const SceneNode& n : obs_.nodes) {
      txt += std::to_string(n.id) + " " + std::to_string(n.subtype);
      const double f[7] = {n.pose.pos.x, n.pose.pos.y, n.pose.pos.z,
                           n.pose.rot.w, n.pose.rot.x, n.pose.rot.y,
                           n.pose.rot.z};
      for (double v : f) txt += " " + format_double(v);
      txt += "\n";
    }
    return fnv1a64(txt);
  }

  // Rows cover everything known; only currently visible objects may be
  // picked or serve as placement targets.
  ExpActionMask action_mask() const {
    ExpActionMask m;
    for (const auto& [id, n] : memory_) m.ids.push_back(id);
    const int k = static_cast<int>(m.ids.size());
    m.pick.assign(k, 0);
    m.place.assign(static_cast<std::size_t>(k) * (k + 1), 0);
    bool floor_open = scene_.floor_count() < cfg_.floor_capacity;
    for (int i = 0; i < k; ++i) {
      if (!visible_.count(m.ids[i])) continue;
      m.pick[i] = 1;
      const Body* bx = scene_.body(m.ids[i]);
      for (int j = 0; j < k; ++j) {
        if (i == j || !visible_.count(m.ids[j])) continue;
        const Body* by = scene_.body(m.ids[j]);
        if (footprint_fits(cat_, *bx, *by))
          m.place[static_cast<std::size_t>(i) * (k + 1) + j] = 1;
      }
      if (floor_open)
        m.place[static_cast<std::size_t>(i) * (k + 1) + k] = 1;
    }
    return m;
  }

  ExpStepResult step(int pick_id, int place_id) {
    if (done_) throw EnvError("exploration episode is over");
    if (!action_mask().allows(pick_id, place_id))
      throw EnvError("masked action (" + std::to_string(pick_id) + "," +
                     std::to_string(place_id) + ")");
    ++steps_;
    TransitionResult res =
        pick_and_place(scene_, cat_, phys_, pick_id, place_id,
                       derive_seed(seed_, 10000 + steps_));
    ExpStepResult out;
    if (!res.placed || !res.stability.stable) {
      out.reward = cfg_.w_s;
      out.stable = false;
      out.done = done_ = true;
      if (res.placed) scene_ = res.scene;
      return out;
    }
    // carry the seen flags into the fresh graph before re-detecting
    for (auto& [id, n] : res.scene.graph.nodes)
      if (memory_.count(id)) n.seen = true;
    scene_ = res.scene;
    int before = seen_count();
    obs_ = build_observation(memory_, scene_, cat_, perc_, &visible_);
    out.newly_seen = seen_count() - before;
    out.reward = cfg_.r_detect * out.newly_seen;
    if (all_seen() || steps_ >= step_limit()) out.done = done_ = true;
    return out;
  }

 private:
  Catalog cat_;
  ExpConfig cfg_;
  PhysicsConfig phys_;
  PerceptionConfig perc_;
  RealizedScene scene_;
  ObservationGraph obs_;
  std::map<int, SceneNode> memory_;
  std::set<int> visible_;
  std::uint64_t seed_ = 0;
  int steps_ = 0;
  int total_objects_ = 0;
  bool done_ = true;
};

}  // namespace clutter
