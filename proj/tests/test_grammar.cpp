#include <catch2/catch_amalgamated.hpp>

#include "clutter/prng.hpp"
#include "clutter/rule_dsl.hpp"

using namespace clutter;

static Catalog cat7() {
  return load_catalog_file(std::string(CLUTTER_DATA_DIR) +
                           "/catalog_ycb7.json");
}
static Catalog cat14() {
  return load_catalog_file(std::string(CLUTTER_DATA_DIR) +
                           "/catalog_ycb14.json");
}

// Fig-style start: soup can and sugar box already on the tray.
static SceneGraph two_object_start(const Catalog& cat) {
  SceneGraph g = SceneGraph::tray_only();
  int soup = g.add_node(NodeKind::Object, *cat.find_class("tomato_soup_can"));
  int sugar = g.add_node(NodeKind::Object, *cat.find_class("sugar_box"));
  g.add_edge(0, soup, 0);
  g.add_edge(0, sugar, 0);
  return g;
}

TEST_CASE("default rule set sizes: 30 and 49") {
  CHECK(default_rule_set(cat7()).size() == 30);
  CHECK(default_rule_set(cat14()).size() == 49);
}

TEST_CASE("shipped rule files match the generator") {
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(std::string(CLUTTER_DATA_DIR) + "/rules_ycb7.rules") ==
        emit_default_rules(cat7()));
  CHECK(slurp(std::string(CLUTTER_DATA_DIR) + "/rules_ycb14.rules") ==
        emit_default_rules(cat14()));
}

TEST_CASE("parser rejects malformed rule text") {
  Catalog cat = cat7();
  CHECK_THROWS_AS(parse_rule_set("", cat), DslError);
  CHECK_THROWS_AS(parse_rule_set("# only a comment\n", cat), DslError);
  CHECK_THROWS_AS(
      parse_rule_set("rule r { lhs { node a: Blob } rhs { } keep a }", cat),
      DslError);
  CHECK_THROWS_AS(
      parse_rule_set("rule r { lhs { node a: Tray } rhs { } keep z }", cat),
      DslError);
  CHECK_THROWS_AS(
      parse_rule_set(
          "rule r { lhs { node a: Tray } rhs { edge a->q: primitive } keep a }",
          cat),
      DslError);
  CHECK_THROWS_AS(
      parse_rule_set("rule r { lhs { } rhs { node a: End } }", cat), DslError);
  CHECK_THROWS_AS(
      parse_rule_set(
          "rule r { lhs { node a: ObjectSlot } rhs { node a: Object(bogus) } "
          "keep a }",
          cat),
      DslError);
  // duplicate names
  std::string two =
      "rule r { lhs { node a: Tray } rhs { } keep a }\n"
      "rule r { lhs { node a: Tray } rhs { } keep a }\n";
  CHECK_THROWS_AS(parse_rule_set(two, cat), DslError);

  try {
    parse_rule_set("rule r {\n  lhs { node a: Wrong }\n", cat);
    FAIL("expected DslError");
  } catch (const DslError& e) {
    CHECK(e.line == 2);
    CHECK(e.col > 0);
    CHECK(std::string(e.what()).find("2:") != std::string::npos);
  }
}

TEST_CASE("drop_object matches exactly the tray") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  const Rule& drop = rs.at("drop_object");
  SceneGraph g = two_object_start(cat);
  auto ms = find_matches(g, drop);
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].assignment == std::vector<int>{0});
}

TEST_CASE("stack_object on the 2-object start graph has 2 matches") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  SceneGraph g = two_object_start(cat);
  auto ms = find_matches(g, rs.at("stack_object"));
  REQUIRE(ms.size() == 2);
  CHECK(ms[0].assignment == std::vector<int>{1});  // lowest host id first
  CHECK(ms[1].assignment == std::vector<int>{2});
}

TEST_CASE("insert rules need a slot") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  SceneGraph g = two_object_start(cat);
  CHECK(find_matches(g, rs.at("insert_cracker_box")).empty());
}

TEST_CASE("tray-only feasibility: drop_object alone") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  auto mask = feasible_mask(rs.start, rs);
  REQUIRE(static_cast<int>(mask.size()) == rs.size());
  for (int i = 0; i < rs.size(); ++i)
    CHECK(static_cast<bool>(mask[i]) == (rs.rules[i].name == "drop_object"));
}

TEST_CASE("figure replay builds the 5-object meta scene") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  SceneGraph g = two_object_start(cat);
  for (const char* name :
       {"drop_object", "stack_object", "insert_meta_pbox_1",
        "insert_cracker_box"}) {
    const Rule& r = rs.at(name);
    g = apply_rule(g, r, first_match(g, r));
    CHECK(validate(g, cat).ok());
  }
  CHECK(g.fully_terminal());
  CHECK(g.object_count() == 5);
  CHECK(g.count_kind(NodeKind::MetaGroup) == 1);
  CHECK(g.count_kind(NodeKind::Tray) == 1);
  // slot dropped on the tray became the meta group; slot stacked on the soup
  // can became the cracker box
  CHECK(g.node(3).kind == NodeKind::MetaGroup);
  CHECK(g.node(3).subtype == *cat.find_meta("meta_pbox_1"));
  CHECK(g.parent_of(3) == 0);
  CHECK(g.node(4).kind == NodeKind::Object);
  CHECK(g.node(4).subtype == *cat.find_class("cracker_box"));
  CHECK(g.parent_of(4) == 1);
  CHECK(g.children_of(3) == std::vector<int>{5, 6});
  for (int m : {5, 6}) {
    CHECK(g.node(m).subtype == *cat.find_class("pudding_box"));
    CHECK(g.edge_to(m)->label == 0);
  }
}

TEST_CASE("end rule caps a slot") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  SceneGraph g = SceneGraph::tray_only();
  const Rule& drop = rs.at("drop_object");
  g = apply_rule(g, drop, first_match(g, drop));
  CHECK_FALSE(g.fully_terminal());
  const Rule& end = rs.at("end");
  g = apply_rule(g, end, first_match(g, end));
  CHECK(g.fully_terminal());
  CHECK(g.node(1).kind == NodeKind::End);
  CHECK(validate(g, cat).ok());
}

TEST_CASE("terminate is feasible only after an end node exists") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  SceneGraph g = SceneGraph::tray_only();
  const Rule& term = rs.at("terminate");
  CHECK_FALSE(has_match(g, term));
  const Rule& drop = rs.at("drop_object");
  g = apply_rule(g, drop, first_match(g, drop));
  const Rule& end = rs.at("end");
  g = apply_rule(g, end, first_match(g, end));
  REQUIRE(has_match(g, term));
  SceneGraph h = apply_rule(g, term, first_match(g, term));
  CHECK(serialize(h, cat) == serialize(g, cat));  // pure no-op
}

TEST_CASE("orientation rules relabel a primitive edge once") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  SceneGraph g = SceneGraph::tray_only();
  const Rule& drop = rs.at("drop_object");
  g = apply_rule(g, drop, first_match(g, drop));
  const Rule& orient = rs.at("orient_side_xp");
  REQUIRE(has_match(g, orient));
  g = apply_rule(g, orient, first_match(g, orient));
  CHECK(g.edge_to(1)->label == 2);
  CHECK(validate(g, cat).ok());
  CHECK_FALSE(has_match(g, orient));  // edge is no longer primitive
}

TEST_CASE("orientation rules never touch meta member or rider edges") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  SceneGraph g = SceneGraph::tray_only();
  auto apply_first = [&](const char* name) {
    const Rule& r = rs.at(name);
    g = apply_rule(g, r, first_match(g, r));
  };
  apply_first("drop_object");
  apply_first("insert_meta_gbox_0");
  apply_first("stack_object");  // rider slot hangs off the meta group
  for (int k = 0; k < rs.size(); ++k) {
    const Rule& r = rs.rules[k];
    if (r.name.rfind("orient_", 0) == 0) CHECK_FALSE(has_match(g, r));
  }
}

TEST_CASE("apply_rule is pure and local") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  SceneGraph g = two_object_start(cat);
  const Rule& drop = rs.at("drop_object");
  std::string before = serialize(g, cat);
  SceneGraph h = apply_rule(g, drop, first_match(g, drop));
  CHECK(serialize(g, cat) == before);  // input untouched
  // nodes outside the match image are bit-identical
  for (int id : {1, 2}) {
    CHECK(h.node(id).kind == g.node(id).kind);
    CHECK(h.node(id).subtype == g.node(id).subtype);
    CHECK(h.node(id).pose.pos == g.node(id).pose.pos);
  }
  CHECK(h.edge_to(1)->label == 0);
  CHECK(h.edge_to(2)->label == 0);
}

TEST_CASE("stale matches are rejected") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  SceneGraph g = SceneGraph::tray_only();
  const Rule& drop = rs.at("drop_object");
  g = apply_rule(g, drop, first_match(g, drop));
  const Rule& insert = rs.at("insert_sugar_box");
  Match m = first_match(g, insert);
  SceneGraph h = apply_rule(g, insert, m);  // slot became sugar box
  CHECK_THROWS_AS(apply_rule(h, insert, m), GrammarError);
  Match missing{{99}};
  CHECK_THROWS_AS(apply_rule(g, insert, missing), GrammarError);
}

TEST_CASE("random rollouts keep graphs valid and masks exact") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  Rng rng = make_rng(31337);
  for (int episode = 0; episode < 30; ++episode) {
    SceneGraph g = rs.start;
    for (int step = 0; step < 25; ++step) {
      auto mask = feasible_mask(g, rs);
      std::vector<int> feasible;
      for (int i = 0; i < rs.size(); ++i)
        if (mask[i]) feasible.push_back(i);
      for (int i = 0; i < rs.size(); ++i)
        CHECK(static_cast<bool>(mask[i]) ==
              !find_matches(g, rs.rules[i]).empty());
      REQUIRE_FALSE(feasible.empty());
      int pick = feasible[uniform_int(rng, 0, (int)feasible.size() - 1)];
      const Rule& r = rs.rules[pick];
      int slots_before = g.count_kind(NodeKind::ObjectSlot);
      int nodes_before = static_cast<int>(g.nodes.size());
      g = apply_rule(g, r, first_match(g, r));
      REQUIRE(validate(g, cat).ok());
      int slots_after = g.count_kind(NodeKind::ObjectSlot);
      int nodes_after = static_cast<int>(g.nodes.size());
      if (r.name.rfind("insert_meta", 0) == 0) {
        CHECK(slots_after == slots_before - 1);
        CHECK(nodes_after == nodes_before + 2);
      } else if (r.name.rfind("insert_", 0) == 0 || r.name == "end") {
        CHECK(slots_after == slots_before - 1);
        CHECK(nodes_after == nodes_before);
      } else if (r.name == "drop_object" || r.name == "stack_object") {
        CHECK(slots_after == slots_before + 1);
        CHECK(nodes_after == nodes_before + 1);
      } else {
        CHECK(nodes_after == nodes_before);
      }
    }
  }
}

TEST_CASE("matcher enumerates two-node patterns in host id order") {
  Catalog cat = cat7();
  RuleSet rs = default_rule_set(cat);
  SceneGraph g = SceneGraph::tray_only();
  const Rule& drop = rs.at("drop_object");
  for (int i = 0; i < 3; ++i) g = apply_rule(g, drop, first_match(g, drop));
  auto ms = find_matches(g, rs.at("insert_meta_pbox_0"));
  REQUIRE(ms.size() == 3);
  CHECK(ms[0].assignment == std::vector<int>{0, 1});
  CHECK(ms[1].assignment == std::vector<int>{0, 2});
  CHECK(ms[2].assignment == std::vector<int>{0, 3});
  CHECK(find_matches(g, rs.at("insert_meta_pbox_0"), 2).size() == 2);
}
