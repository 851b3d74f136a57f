#include <catch2/catch_amalgamated.hpp>

#include "clutter/scene_graph.hpp"

using namespace clutter;

static Catalog test_catalog() {
  return load_catalog_file(std::string(CLUTTER_DATA_DIR) +
                           "/catalog_ycb7.json");
}

static SceneGraph small_scene(const Catalog& cat) {
  SceneGraph g = SceneGraph::tray_only();
  int soup = g.add_node(NodeKind::Object, *cat.find_class("tomato_soup_can"));
  int sugar = g.add_node(NodeKind::Object, *cat.find_class("sugar_box"));
  int slot = g.add_node(NodeKind::ObjectSlot);
  g.add_edge(0, soup, 0);
  g.add_edge(0, sugar, 0);
  g.add_edge(soup, slot);
  return g;
}

TEST_CASE("build, query, validate") {
  Catalog cat = test_catalog();
  SceneGraph g = small_scene(cat);
  CHECK(validate(g, cat).ok());
  CHECK(g.next_id == 4);
  CHECK(g.parent_of(1) == 0);
  CHECK(g.parent_of(3) == 1);
  CHECK(g.parent_of(0) == -1);
  CHECK(g.children_of(0) == std::vector<int>{1, 2});
  CHECK(g.subtree(0) == std::vector<int>{0, 1, 2, 3});
  CHECK(g.subtree(1) == std::vector<int>{1, 3});
  CHECK_FALSE(g.fully_terminal());
  CHECK(g.count_kind(NodeKind::Object) == 2);
  CHECK(g.object_count() == 2);
  CHECK(g.non_tray_count() == 3);
}

TEST_CASE("tray-only graph is valid and fully terminal") {
  Catalog cat = test_catalog();
  SceneGraph g = SceneGraph::tray_only();
  CHECK(validate(g, cat).ok());
  CHECK(g.fully_terminal());
  CHECK(g.object_count() == 0);
  CHECK(g.non_tray_count() == 0);
}

TEST_CASE("validate reports structural violations") {
  Catalog cat = test_catalog();

  SceneGraph no_tray;
  CHECK_FALSE(validate(no_tray, cat).ok());

  SceneGraph two_parents = small_scene(cat);
  two_parents.add_edge(2, 3);
  auto rep = validate(two_parents, cat);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.to_string().find("multiple parents") != std::string::npos);

  SceneGraph orphan = small_scene(cat);
  orphan.add_node(NodeKind::Object, 0);
  rep = validate(orphan, cat);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.to_string().find("orphan") != std::string::npos);

  SceneGraph dangling = small_scene(cat);
  dangling.add_edge(0, 99);
  rep = validate(dangling, cat);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.to_string().find("dangling") != std::string::npos);

  SceneGraph cyc = SceneGraph::tray_only();
  int a = cyc.add_node(NodeKind::Object, 0);
  int b = cyc.add_node(NodeKind::Object, 1);
  cyc.add_edge(a, b);
  cyc.add_edge(b, a);
  CHECK_FALSE(validate(cyc, cat).ok());

  SceneGraph end_child = SceneGraph::tray_only();
  int e = end_child.add_node(NodeKind::End);
  int o = end_child.add_node(NodeKind::Object, 0);
  end_child.add_edge(0, e);
  end_child.add_edge(e, o);
  CHECK_FALSE(validate(end_child, cat).ok());

  SceneGraph bad_class = SceneGraph::tray_only();
  int bc = bad_class.add_node(NodeKind::Object, 99);
  bad_class.add_edge(0, bc);
  CHECK_FALSE(validate(bad_class, cat).ok());

  SceneGraph tray_child = small_scene(cat);
  tray_child.add_edge(1, 0);
  CHECK_FALSE(validate(tray_child, cat).ok());

  SceneGraph sim_slot = small_scene(cat);
  sim_slot.node(3).simulated = true;
  CHECK_FALSE(validate(sim_slot, cat).ok());

  SceneGraph bad_quat = small_scene(cat);
  bad_quat.node(1).simulated = true;
  bad_quat.node(1).pose.rot = {0.5, 0.5, 0.0, 0.0};
  CHECK_FALSE(validate(bad_quat, cat).ok());
}

TEST_CASE("ids are not reused after deletion") {
  Catalog cat = test_catalog();
  SceneGraph g = small_scene(cat);
  g.remove_node(3);
  CHECK(g.add_node(NodeKind::ObjectSlot) == 4);
}

TEST_CASE("remove_node drops incident edges") {
  Catalog cat = test_catalog();
  SceneGraph g = small_scene(cat);
  g.remove_node(1);
  CHECK_FALSE(g.has_node(1));
  CHECK(g.parent_of(3) == -1);
  for (const auto& e : g.edges) {
    CHECK(e.parent != 1);
    CHECK(e.child != 1);
  }
}

TEST_CASE("serialize round trips byte for byte") {
  Catalog cat = test_catalog();
  SceneGraph g = small_scene(cat);
  g.node(1).simulated = true;
  g.node(1).pose.pos = {1.0 / 3.0, -0.123456789012345e-7, 0.05};
  g.node(1).pose.rot = Quat::rot_z(0.3) * Quat::rot_x(-1.2);
  g.node(2).seen = true;

  std::string text = serialize(g, cat);
  SceneGraph back = deserialize(text, cat);
  CHECK(serialize(back, cat) == text);
  CHECK(back.node(1).pose.pos == g.node(1).pose.pos);
  CHECK(back.node(1).pose.rot == g.node(1).pose.rot);
  CHECK(back.node(2).seen);
  CHECK(back.node(1).simulated);
  CHECK(back.edges.size() == g.edges.size());
}

TEST_CASE("serialized text is stable under insertion order") {
  Catalog cat = test_catalog();
  SceneGraph a = SceneGraph::tray_only();
  int x = a.add_node(NodeKind::Object, 0);
  int y = a.add_node(NodeKind::Object, 1);
  a.add_edge(0, y, 3);
  a.add_edge(0, x, 0);

  SceneGraph b = SceneGraph::tray_only();
  int x2 = b.add_node(NodeKind::Object, 0);
  int y2 = b.add_node(NodeKind::Object, 1);
  b.add_edge(0, x2, 0);
  b.add_edge(0, y2, 3);

  CHECK(x == x2);
  CHECK(y == y2);
  CHECK(serialize(a, cat) == serialize(b, cat));
}

TEST_CASE("deserialize rejects malformed documents") {
  Catalog cat = test_catalog();
  CHECK_THROWS_AS(deserialize("bogus\n", cat), ParseError);
  CHECK_THROWS_AS(deserialize("scenegraph 1\n", cat), ParseError);  // truncated
  CHECK_THROWS_AS(
      deserialize("scenegraph 1\nnode 0 tray - 0 0 0 0 0 1 0 0 0\nnode 0 tray "
                  "- 0 0 0 0 0 1 0 0 0\nend\n",
                  cat),
      ParseError);
  CHECK_THROWS_AS(
      deserialize("scenegraph 1\nnode 0 tray - 0 0 0 0 0 1 0 0 0\nedge 0 5 "
                  "primitive\nend\n",
                  cat),
      ParseError);
  // subtype name must match the catalog
  CHECK_THROWS_AS(
      deserialize("scenegraph 1\nnode 0 tray - 0 0 0 0 0 1 0 0 0\nnode 1 "
                  "object 0:sugar_box 0 0 0 0 0 1 0 0 0\nedge 0 1 "
                  "orient0\nend\n",
                  cat),
      ParseError);
}

TEST_CASE("edge labels parse and print") {
  CHECK(edge_label_name(kPrimitiveLabel) == "primitive");
  CHECK(edge_label_name(4) == "orient4");
  CHECK(edge_label_from_name("primitive") == kPrimitiveLabel);
  CHECK(edge_label_from_name("orient9") == 9);
  CHECK_THROWS_AS(edge_label_from_name("orient12"), ParseError);
  CHECK_THROWS_AS(edge_label_from_name("weird"), ParseError);
}

TEST_CASE("dataset serialization round trips") {
  Catalog cat = test_catalog();
  std::vector<SceneGraph> scenes;
  scenes.push_back(small_scene(cat));
  SceneGraph g2 = SceneGraph::tray_only();
  g2.add_edge(0, g2.add_node(NodeKind::Object, 3), 8);
  scenes.push_back(g2);

  std::string text = serialize_dataset(scenes, cat);
  auto back = deserialize_dataset(text, cat);
  REQUIRE(back.size() == 2);
  CHECK(serialize_dataset(back, cat) == text);
}
