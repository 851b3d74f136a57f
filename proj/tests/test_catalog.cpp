#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "clutter/catalog.hpp"

using namespace clutter;
using Catch::Approx;
using nlohmann::json;

static std::string data_path(const char* file) {
  return std::string(CLUTTER_DATA_DIR) + "/" + file;
}

TEST_CASE("ycb7 catalog loads with 7 classes and 9 metas") {
  Catalog cat = load_catalog_file(data_path("catalog_ycb7.json"));
  CHECK(cat.class_count() == 7);
  CHECK(cat.meta_count() == 9);
  REQUIRE(cat.find_class("cracker_box").has_value());
  REQUIRE(cat.find_class("tomato_soup_can").has_value());
  CHECK_FALSE(cat.find_class("banana").has_value());
  CHECK(cat.tray.width == Approx(0.6));
  CHECK(cat.tray.depth == Approx(0.4));
  const ObjectSpec& soup = cat.spec(*cat.find_class("tomato_soup_can"));
  CHECK(soup.shape == ShapeKind::Cylinder);
  CHECK(soup.allows(0));
  CHECK(soup.allows(8));
  CHECK_FALSE(soup.allows(1));
  REQUIRE(cat.find_meta("meta_pbox_1").has_value());
  const MetaSpec& m = cat.meta(*cat.find_meta("meta_pbox_1"));
  CHECK(m.member_class == *cat.find_class("pudding_box"));
  CHECK(m.count == 2);
}

TEST_CASE("ycb14 catalog loads with 14 classes and 21 metas") {
  Catalog cat = load_catalog_file(data_path("catalog_ycb14.json"));
  CHECK(cat.class_count() == 14);
  CHECK(cat.meta_count() == 21);
  CHECK(cat.find_class("banana").has_value());
  CHECK(cat.find_class("wood_block").has_value());
  // first 7 classes keep their ycb7 ids so scenes transfer between catalogs
  Catalog small = load_catalog_file(data_path("catalog_ycb7.json"));
  for (int i = 0; i < 7; ++i)
    CHECK(cat.spec(i).cls.name == small.spec(i).cls.name);
}

TEST_CASE("oriented_shape cuboid labels permute extents") {
  ObjectSpec box;
  box.shape = ShapeKind::Cuboid;
  box.dx = 0.06;
  box.dy = 0.16;
  box.dz = 0.21;
  box.allowed_orientations = {0, 1, 2, 3, 4, 5, 6, 7};

  auto s0 = oriented_shape(box, 0);
  CHECK(polygon_area(s0.footprint) == Approx(0.06 * 0.16));
  CHECK(s0.height == Approx(0.21));
  CHECK(s0.rotation == Quat{});

  auto s1 = oriented_shape(box, 1);
  CHECK(polygon_area(s1.footprint) == Approx(0.06 * 0.16));
  CHECK(s1.height == Approx(0.21));

  auto s2 = oriented_shape(box, 2);
  CHECK(polygon_area(s2.footprint) == Approx(0.21 * 0.16));
  CHECK(s2.height == Approx(0.06));

  auto s4 = oriented_shape(box, 4);
  CHECK(polygon_area(s4.footprint) == Approx(0.06 * 0.21));
  CHECK(s4.height == Approx(0.16));

  // yawed variants keep area but rotate the bbox
  auto s6 = oriented_shape(box, 6);
  CHECK(polygon_area(s6.footprint) == Approx(0.06 * 0.16));
  CHECK(s6.height == Approx(0.21));
  Aabb2 straight = bounding_box(s0.footprint);
  Aabb2 diag = bounding_box(s6.footprint);
  CHECK(diag.width() > straight.width());

  for (int k : box.allowed_orientations)
    CHECK(oriented_shape(box, k).rotation.norm() == Approx(1.0));
  CHECK_THROWS_AS(oriented_shape(box, 8), std::invalid_argument);
}

TEST_CASE("oriented_shape cylinder labels") {
  ObjectSpec can;
  can.shape = ShapeKind::Cylinder;
  can.radius = 0.05;
  can.height = 0.14;
  can.allowed_orientations = {0, 8, 9};

  auto s0 = oriented_shape(can, 0);
  const double n = kCylinderFootprintSides;
  CHECK(polygon_area(s0.footprint) ==
        Approx(0.5 * n * 0.05 * 0.05 * std::sin(2.0 * M_PI / n)));
  CHECK(s0.height == Approx(0.14));

  auto s8 = oriented_shape(can, 8);
  CHECK(polygon_area(s8.footprint) == Approx(0.14 * 0.10));
  CHECK(s8.height == Approx(0.10));

  auto s9 = oriented_shape(can, 9);
  CHECK(polygon_area(s9.footprint) == Approx(0.10 * 0.14));
  CHECK(s9.height == Approx(0.10));

  CHECK_THROWS_AS(oriented_shape(can, 2), std::invalid_argument);
}

TEST_CASE("catalog validation rejects malformed input") {
  json base = {
      {"objects",
       {{{"name", "a"},
         {"shape", "cuboid"},
         {"dx", 0.1},
         {"dy", 0.1},
         {"dz", 0.1},
         {"mass", 0.2},
         {"orientations", {0}}}}},
  };
  CHECK_NOTHROW(load_catalog(base));

  json dup = base;
  dup["objects"].push_back(dup["objects"][0]);
  CHECK_THROWS_AS(load_catalog(dup), ConfigError);

  json bad_orient = base;
  bad_orient["objects"][0]["orientations"] = {8};  // cylinder-only label
  CHECK_THROWS(load_catalog(bad_orient));

  json bad_meta = base;
  bad_meta["metas"] = {{{"name", "m"},
                        {"member", "missing"},
                        {"count", 2},
                        {"spacing", 0.02}}};
  CHECK_THROWS_AS(load_catalog(bad_meta), ConfigError);

  json small_meta = base;
  small_meta["metas"] = {{{"name", "m"},
                          {"member", "a"},
                          {"count", 1},
                          {"spacing", 0.02}}};
  CHECK_THROWS_AS(load_catalog(small_meta), ConfigError);

  json neg = base;
  neg["objects"][0]["dz"] = -1.0;
  CHECK_THROWS_AS(load_catalog(neg), ConfigError);
}

TEST_CASE("missing catalog file raises ConfigError") {
  CHECK_THROWS_AS(load_catalog_file("/nonexistent/cat.json"), ConfigError);
}
