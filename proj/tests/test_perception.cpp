#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "clutter/render.hpp"

using namespace clutter;
using Catch::Approx;

static Catalog cat7() {
  return load_catalog_file(std::string(CLUTTER_DATA_DIR) +
                           "/catalog_ycb7.json");
}

static int cls(const Catalog& c, const char* name) {
  return *c.find_class(name);
}

static RealizedScene scene_of(const Catalog& cat, std::vector<Body> bodies) {
  PhysicsConfig cfg;
  RealizedScene s;
  s.graph = SceneGraph::tray_only();
  for (const Body& b : bodies) {
    SceneNode n;
    n.id = b.id;
    n.kind = NodeKind::Object;
    n.subtype = b.class_id;
    s.graph.insert_node(n);
    s.graph.add_edge(0, b.id, b.orientation);
  }
  s.bodies = std::move(bodies);
  settle(s, cat, cfg);
  detail::write_poses(s, cat);
  return s;
}

TEST_CASE("raster covers the tray at the configured cell size") {
  Catalog cat = cat7();
  PerceptionConfig pc;
  RealizedScene s = scene_of(cat, {});
  RasterMap m = render_topdown(s, cat, pc);
  CHECK(m.width == 300);
  CHECK(m.height == 200);
  for (int v : m.owner) CHECK(v == -1);
  for (double z : m.top) CHECK(z == 0.0);
}

TEST_CASE("z-buffer picks the highest surface per cell") {
  Catalog cat = cat7();
  PerceptionConfig pc;
  RealizedScene s = scene_of(
      cat, {Body{1, cls(cat, "pudding_box"), 0, Vec2{0.0, 0.0}, 0.0},
            Body{2, cls(cat, "gelatin_box"), 0, Vec2{0.0, 0.0}, 0.035}});
  RasterMap m = render_topdown(s, cat, pc);
  // center cell: gelatin box on top of pudding box
  int cx = 150, cy = 100;
  CHECK(m.owner[m.index(cx, cy)] == 2);
  CHECK(m.top[m.index(cx, cy)] == Approx(0.035 + 0.028));
  // pudding sticks out around the smaller box
  int px = 150 + (int)(0.05 / pc.cell);
  CHECK(m.owner[m.index(px, cy)] == 1);
  CHECK(m.top[m.index(px, cy)] == Approx(0.035));
  // far corner shows the tray
  CHECK(m.owner[m.index(5, 5)] == -1);
}

TEST_CASE("fully covered object is not detected") {
  Catalog cat = cat7();
  PerceptionConfig pc;
  // cracker box on its side blankets the pudding box
  RealizedScene s = scene_of(
      cat, {Body{1, cls(cat, "pudding_box"), 0, Vec2{0.0, 0.0}, 0.0},
            Body{2, cls(cat, "cracker_box"), 2, Vec2{0.0, 0.0}, 0.035}});
  std::set<int> vis = detect(s, cat, pc);
  CHECK(vis == std::set<int>{2});
  CHECK(hidden_count(s, cat, pc) == 1);
}

TEST_CASE("partially exposed object passes the threshold") {
  Catalog cat = cat7();
  PerceptionConfig pc;
  // shifted cover leaves a 30mm strip of the pudding box showing
  RealizedScene s = scene_of(
      cat, {Body{1, cls(cat, "pudding_box"), 0, Vec2{0.0, 0.0}, 0.0},
            Body{2, cls(cat, "cracker_box"), 2, Vec2{0.08, 0.0}, 0.035}});
  std::set<int> vis = detect(s, cat, pc);
  CHECK(vis == std::set<int>{1, 2});
  CHECK(hidden_count(s, cat, pc) == 0);
}

TEST_CASE("detection threshold separates thin slivers from real exposure") {
  Catalog cat = cat7();
  PerceptionConfig pc;
  // 4mm of the 110mm extent showing is under 10 percent
  RealizedScene sliver = scene_of(
      cat, {Body{1, cls(cat, "pudding_box"), 0, Vec2{0.0, 0.0}, 0.0},
            Body{2, cls(cat, "cracker_box"), 2, Vec2{-0.054, 0.0}, 0.035}});
  CHECK(detect(sliver, cat, pc).count(1) == 0);
  // 16mm showing clears it
  RealizedScene open = scene_of(
      cat, {Body{1, cls(cat, "pudding_box"), 0, Vec2{0.0, 0.0}, 0.0},
            Body{2, cls(cat, "cracker_box"), 2, Vec2{-0.066, 0.0}, 0.035}});
  CHECK(detect(open, cat, pc).count(1) == 1);
}

TEST_CASE("observation memory keeps last-seen poses and never shrinks") {
  Catalog cat = cat7();
  PerceptionConfig pc;
  std::map<int, SceneNode> memory;

  RealizedScene open = scene_of(
      cat, {Body{1, cls(cat, "pudding_box"), 0, Vec2{0.0, 0.0}, 0.0},
            Body{2, cls(cat, "cracker_box"), 2, Vec2{0.15, 0.0}, 0.0}});
  ObservationGraph o1 = build_observation(memory, open, cat, pc);
  REQUIRE(o1.nodes.size() == 2);
  CHECK(o1.contains(1));

  // pudding box slides under the cover: stays known, pose frozen
  RealizedScene covered = scene_of(
      cat, {Body{1, cls(cat, "pudding_box"), 0, Vec2{0.15, 0.0}, 0.0},
            Body{2, cls(cat, "cracker_box"), 2, Vec2{0.15, 0.0}, 0.01}});
  ObservationGraph o2 = build_observation(memory, covered, cat, pc);
  REQUIRE(o2.nodes.size() == 2);
  CHECK(o2.nodes[0].id == 1);
  CHECK(o2.nodes[0].pose.pos.x == Approx(0.0));  // last-seen, not current
  CHECK(o2.nodes[1].pose.pos.x == Approx(0.15));
}

TEST_CASE("observation graph encodes fully connected directed pairs") {
  Catalog cat = cat7();
  ObservationGraph obs;
  for (int i = 0; i < 3; ++i) {
    SceneNode n;
    n.id = i + 1;
    n.kind = NodeKind::Object;
    n.subtype = i;
    n.seen = true;
    obs.nodes.push_back(n);
  }
  FeatureGraph f = encode_exploration_features(obs, cat);
  CHECK(f.rows() == 3);
  CHECK(f.edges.size() == 6);  // k(k-1)
  for (double v : f.edge_feats) CHECK(v == 1.0);
}

TEST_CASE("image writers produce readable files") {
  Catalog cat = cat7();
  PerceptionConfig pc;
  RealizedScene s = scene_of(
      cat, {Body{1, cls(cat, "cracker_box"), 0, Vec2{0.0, 0.0}, 0.0}});
  RasterMap m = render_topdown(s, cat, pc);
  std::vector<unsigned char> rgb = raster_to_rgb(m, s, cat);
  REQUIRE(rgb.size() == 300u * 200u * 3u);

  std::string ppm = "/tmp/clutter_test.ppm";
  write_ppm(ppm, m.width, m.height, rgb);
  std::ifstream pf(ppm, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, depth = 0;
  pf >> magic >> w >> h >> depth;
  CHECK(magic == "P6");
  CHECK(w == 300);
  CHECK(h == 200);
  CHECK(depth == 255);

  std::string png = "/tmp/clutter_test.png";
  write_png(png, m.width, m.height, rgb);
  std::ifstream gf(png, std::ios::binary);
  std::vector<unsigned char> head(24);
  gf.read(reinterpret_cast<char*>(head.data()), 24);
  const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  CHECK(std::equal(sig, sig + 8, head.begin()));
  // IHDR width and height, big-endian, at offsets 16 and 20
  auto be32 = [&](int off) {
    return (head[off] << 24) | (head[off + 1] << 16) | (head[off + 2] << 8) |
           head[off + 3];
  };
  CHECK(be32(16) == 300);
  CHECK(be32(20) == 200);
  std::remove(ppm.c_str());
  std::remove(png.c_str());
}
