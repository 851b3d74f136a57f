#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "clutter/scene_graph.hpp"

namespace clutter {

struct GrammarError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr unsigned kind_bit(NodeKind k) {
  return 1u << static_cast<unsigned>(k);
}

// LHS pattern node: union of allowed kinds (0 mask = any), optional subtype
// restriction per parameterized kind.
struct PatternNode {
  std::string name;
  unsigned kind_mask = 0;
  std::vector<int> classes;  // Object subtypes allowed; empty = any
  std::vector<int> metas;    // MetaGroup subtypes allowed; empty = any

  bool matches(const SceneNode& n) const {
    if (kind_mask != 0 && (kind_mask & kind_bit(n.kind)) == 0) return false;
    if (n.kind == NodeKind::Object && !classes.empty() &&
        std::find(classes.begin(), classes.end(), n.subtype) == classes.end())
      return false;
    if (n.kind == NodeKind::MetaGroup && !metas.empty() &&
        std::find(metas.begin(), metas.end(), n.subtype) == metas.end())
      return false;
    return true;
  }
};

struct PatternEdge {
  int from = -1, to = -1;   // indices into PatternGraph::nodes
  bool any_label = false;
  int label = kPrimitiveLabel;

  bool label_ok(int host_label) const {
    return any_label || host_label == label;
  }
};

struct PatternGraph {
  std::vector<PatternNode> nodes;
  std::vector<PatternEdge> edges;

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].name == name) return static_cast<int>(i);
    return -1;
  }
};

// RHS namespace entry. Kept LHS nodes appear with iface >= 0; redeclaring one
// in the rhs block (declared = true) re-kinds it. Fresh nodes have iface < 0
// and are allocated in declaration order.
struct RhsNode {
  std::string name;
  int iface = -1;
  bool declared = false;
  NodeKind kind = NodeKind::ObjectSlot;
  int subtype = -1;
};

struct RhsEdge {
  int from = -1, to = -1;  // indices into Rule::rhs_nodes
  int label = kPrimitiveLabel;
};

struct Rule {
  std::string name;
  PatternGraph lhs;
  std::vector<int> keep;  // lhs node indices surviving the rewrite
  std::vector<RhsNode> rhs_nodes;
  std::vector<RhsEdge> rhs_edges;

  bool keeps(int lhs_index) const {
    return std::find(keep.begin(), keep.end(), lhs_index) != keep.end();
  }
};

struct RuleSet {
  std::vector<Rule> rules;
  SceneGraph start = SceneGraph::tray_only();

  int size() const { return static_cast<int>(rules.size()); }
  int index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
      if (rules[i].name == name) return i;
    return -1;
  }
  const Rule& at(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw GrammarError("no rule named " + name);
    return rules[i];
  }
};

struct Match {
  std::vector<int> assignment;  // lhs node index -> host node id
};

namespace detail {

// Pattern search order: BFS over the undirected pattern from node 0, then any
// disconnected remainder. For each ordered node, remember one edge that
// anchors it to an earlier node (if any) to narrow candidates.
struct SearchPlan {
  struct Step {
    int pattern_node;
    int anchor_edge = -1;   // index into lhs.edges, -1 = unanchored
    bool anchor_is_parent = false;  // anchored node is the edge's source
  };
  std::vector<Step> steps;
};

inline SearchPlan plan_search(const PatternGraph& lhs) {
  SearchPlan plan;
  const int n = static_cast<int>(lhs.nodes.size());
  std::vector<bool> placed(n, false);
  std::vector<int> order;
  for (int root = 0; root < n; ++root) {
    if (placed[root]) continue;
    order.push_back(root);
    placed[root] = true;
    for (std::size_t i = order.size() - 1; i < order.size(); ++i) {
      for (std::size_t e = 0; e < lhs.edges.size(); ++e) {
        const PatternEdge& pe = lhs.edges[e];
        int other = -1;
        if (pe.from == order[i] && !placed[pe.to]) other = pe.to;
        if (pe.to == order[i] && !placed[pe.from]) other = pe.from;
        if (other >= 0) {
          order.push_back(other);
          placed[other] = true;
        }
      }
    }
  }
  std::vector<bool> assigned(n, false);
  for (int pn : order) {
    SearchPlan::Step step;
    step.pattern_node = pn;
    for (std::size_t e = 0; e < lhs.edges.size(); ++e) {
      const PatternEdge& pe = lhs.edges[e];
      if (pe.to == pn && assigned[pe.from]) {
        step.anchor_edge = static_cast<int>(e);
        step.anchor_is_parent = true;
        break;
      }
      if (pe.from == pn && assigned[pe.to]) {
        step.anchor_edge = static_cast<int>(e);
        step.anchor_is_parent = false;
        break;
      }
    }
    assigned[pn] = true;
    plan.steps.push_back(step);
  }
  return plan;
}

inline bool edges_consistent(const SceneGraph& g, const PatternGraph& lhs,
                             const std::vector<int>& assign, int just_set) {
  for (const PatternEdge& pe : lhs.edges) {
    if (pe.from != just_set && pe.to != just_set) continue;
    int hf = assign[pe.from], ht = assign[pe.to];
    if (hf < 0 || ht < 0) continue;
    bool found = false;
    for (const SceneEdge& e : g.edges)
      if (e.parent == hf && e.child == ht && pe.label_ok(e.label)) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

}  // namespace detail

// All injective embeddings of rule.lhs into g, lexicographic in BFS search
// order with host candidates ascending by id. limit < 0 means unbounded.
inline std::vector<Match> find_matches(const SceneGraph& g, const Rule& rule,
                                       int limit = -1) {
  const PatternGraph& lhs = rule.lhs;
  std::vector<Match> out;
  if (lhs.nodes.empty()) return out;
  const detail::SearchPlan plan = detail::plan_search(lhs);
  std::vector<int> assign(lhs.nodes.size(), -1);

  auto try_assign = [&](std::size_t depth, int host,
                        const auto& recurse) -> bool {
    const int pn = plan.steps[depth].pattern_node;
    const SceneNode& hn = g.node(host);
    if (!lhs.nodes[pn].matches(hn)) return true;
    for (int a : assign)
      if (a == host) return true;  // injectivity
    assign[pn] = host;
    bool keep_going = true;
    if (detail::edges_consistent(g, lhs, assign, pn))
      keep_going = recurse(depth + 1, recurse);
    assign[pn] = -1;
    return keep_going;
  };

  auto search = [&](std::size_t depth, const auto& recurse) -> bool {
    if (depth == plan.steps.size()) {
      out.push_back(Match{assign});
      return limit < 0 || static_cast<int>(out.size()) < limit;
    }
    const auto& step = plan.steps[depth];
    if (step.anchor_edge >= 0) {
      const PatternEdge& pe = lhs.edges[step.anchor_edge];
      if (step.anchor_is_parent) {
        for (int child : g.children_of(assign[pe.from]))
          if (!try_assign(depth, child, recurse)) return false;
      } else {
        int parent = g.parent_of(assign[pe.to]);
        if (parent >= 0 && !try_assign(depth, parent, recurse)) return false;
      }
    } else {
      for (const auto& [id, node] : g.nodes)
        if (!try_assign(depth, id, recurse)) return false;
    }
    return true;
  };
  search(0, search);
  return out;
}

inline bool has_match(const SceneGraph& g, const Rule& rule) {
  return !find_matches(g, rule, 1).empty();
}

inline std::vector<char> feasible_mask(const SceneGraph& g,
                                       const RuleSet& rules) {
  std::vector<char> mask(rules.size(), 0);
  for (int i = 0; i < rules.size(); ++i)
    mask[i] = has_match(g, rules.rules[i]) ? 1 : 0;
  return mask;
}

// Rewrites g by rule at match: matched LHS edges are removed, non-kept LHS
// images deleted with incident edges, fresh RHS nodes allocated in
// declaration order, kept-and-redeclared nodes re-kinded, RHS edges added.
inline SceneGraph apply_rule(const SceneGraph& g, const Rule& rule,
                             const Match& match) {
  const PatternGraph& lhs = rule.lhs;
  if (match.assignment.size() != lhs.nodes.size())
    throw GrammarError("match arity mismatch for rule " + rule.name);
  for (std::size_t i = 0; i < lhs.nodes.size(); ++i) {
    int host = match.assignment[i];
    if (!g.has_node(host))
      throw GrammarError("stale match for rule " + rule.name + ": node " +
                         std::to_string(host) + " missing");
    if (!lhs.nodes[i].matches(g.node(host)))
      throw GrammarError("stale match for rule " + rule.name + ": node " +
                         std::to_string(host) + " no longer fits pattern");
    for (std::size_t j = 0; j < i; ++j)
      if (match.assignment[j] == host)
        throw GrammarError("match not injective for rule " + rule.name);
  }
  for (const PatternEdge& pe : lhs.edges) {
    const int hf = match.assignment[pe.from], ht = match.assignment[pe.to];
    const SceneEdge* e = g.edge_to(ht);
    if (!e || e->parent != hf || !pe.label_ok(e->label))
      throw GrammarError("stale match for rule " + rule.name +
                         ": edge constraint no longer holds");
  }

  SceneGraph out = g;
  for (const PatternEdge& pe : lhs.edges)
    out.remove_edge(match.assignment[pe.from], match.assignment[pe.to]);
  for (std::size_t i = 0; i < lhs.nodes.size(); ++i)
    if (!rule.keeps(static_cast<int>(i)))
      out.remove_node(match.assignment[i]);

  std::vector<int> rhs_host(rule.rhs_nodes.size(), -1);
  for (std::size_t i = 0; i < rule.rhs_nodes.size(); ++i) {
    const RhsNode& rn = rule.rhs_nodes[i];
    if (rn.iface >= 0) {
      rhs_host[i] = match.assignment[rn.iface];
      if (rn.declared) {
        SceneNode& n = out.node(rhs_host[i]);
        n.kind = rn.kind;
        n.subtype = rn.subtype;
      }
    } else {
      rhs_host[i] = out.add_node(rn.kind, rn.subtype);
    }
  }
  for (const RhsEdge& re : rule.rhs_edges)
    out.add_edge(rhs_host[re.from], rhs_host[re.to], re.label);
  return out;
}

// Environment-facing helper: deterministic first match.
inline Match first_match(const SceneGraph& g, const Rule& rule) {
  auto ms = find_matches(g, rule, 1);
  if (ms.empty())
    throw GrammarError("rule " + rule.name + " has no match");
  return ms.front();
}

}  // namespace clutter
