#include <gtest/gtest.h>

#include <random>
#include <set>

#include "collage/errors.hpp"
#include "collage/hierarchy.hpp"
#include "collage/layout.hpp"

using namespace collage;

namespace {

// A library of rectangular elements `id -> (w, h)` with matching scores.
struct Synthetic {
  ElementLibrary lib;
  AssetHierarchy h;

  void add(const std::string& id, int w, int box_h, double height) {
    VisualElement e;
    e.element_id = id;
    e.label = "x";
    e.cutout_box = {0, 0, w, box_h};
    e.bbox = e.cutout_box;
    e.resolution = static_cast<std::int64_t>(w) * box_h;
    lib.elements[id] = e;
    h.scores[id].height = height;
  }
};

Synthetic three_wide_tiles() {
  Synthetic s;
  for (auto id : {"a", "b", "c"}) s.add(id, 300, 100, 100);
  s.h.categories = {{"characters", {}, {}}, {"backgrounds", {}, {}}, {"accessories", {}, {"a", "b", "c"}}};
  return s;
}

Synthetic random_synthetic(std::mt19937& rng, int n_leaves) {
  Synthetic s;
  std::uniform_int_distribution<int> side(5, 400);
  std::uniform_real_distribution<double> height(60, 420);
  int next = 0;
  std::function<Cluster(const std::string&, int)> make = [&](const std::string& name, int depth) {
    Cluster c;
    c.name = name;
    const int leaves = static_cast<int>(rng() % 4);
    for (int i = 0; i < leaves && next < n_leaves; ++i) {
      const std::string id = "e" + std::to_string(1000 + next++);
      s.add(id, side(rng), side(rng), height(rng));
      c.leaves.push_back(id);
    }
    if (depth < 3)
      for (int k = 0, n = static_cast<int>(rng() % 3); k < n; ++k) c.children.push_back(make(name + std::to_string(k), depth + 1));
    return c;
  };
  s.h.categories = {make("characters", 0), make("backgrounds", 0), make("accessories", 0)};
  return s;
}

bool overlap(const Tile& a, const Tile& b) {
  return a.x < b.x + b.w - 1e-9 && b.x < a.x + a.w - 1e-9 && a.y < b.y + b.h - 1e-9 && b.y < a.y + a.h - 1e-9;
}

}  // namespace

TEST(Layout, ThreeTilesFitOneRow) {
  auto s = three_wide_tiles();
  LayoutOptions o;
  o.canvas_width = 1000;
  const auto l = layout_grid(s.h, s.lib, ScoringConfig{}, o);
  ASSERT_EQ(l.tiles.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(l.tiles[i].x, 300.0 * i);
    EXPECT_DOUBLE_EQ(l.tiles[i].y, 0);
    EXPECT_DOUBLE_EQ(l.tiles[i].w, 300);
  }
}

TEST(Layout, OverflowStartsANewRowBelowTheTallest) {
  Synthetic s;
  s.add("a", 300, 100, 100);
  s.add("b", 300, 100, 150);
  s.add("c", 100, 100, 100);
  s.h.categories = {{"characters", {}, {}}, {"backgrounds", {}, {}}, {"accessories", {}, {"a", "b", "c"}}};
  LayoutOptions o;
  o.canvas_width = 700;
  const auto l = layout_grid(s.h, s.lib, ScoringConfig{}, o);
  // a: 300 wide; b: 450 wide (height 150) overflows 700 -> row 2.
  EXPECT_DOUBLE_EQ(l.tiles[1].x, 0);
  EXPECT_DOUBLE_EQ(l.tiles[1].y, 100);
  EXPECT_DOUBLE_EQ(l.tiles[2].x, 450);
  EXPECT_DOUBLE_EQ(l.tiles[2].y, 100);
}

TEST(Layout, EmptyHierarchyGivesEmptyLayout) {
  AssetHierarchy h;
  h.categories = {{"characters", {}, {}}, {"backgrounds", {}, {}}, {"accessories", {}, {}}};
  const auto l = layout_grid(h, ElementLibrary{}, ScoringConfig{});
  EXPECT_TRUE(l.tiles.empty());
  EXPECT_EQ(l.cluster_order, (std::vector<std::string>{"characters", "backgrounds", "accessories"}));
}

TEST(Layout, TileWiderThanCanvasIsScaledDown) {
  Synthetic s;
  s.add("wide", 1000, 100, 100);
  s.h.categories = {{"characters", {}, {}}, {"backgrounds", {}, {"wide"}}, {"accessories", {}, {}}};
  LayoutOptions o;
  o.canvas_width = 500;
  const auto l = layout_grid(s.h, s.lib, ScoringConfig{}, o);
  ASSERT_EQ(l.tiles.size(), 1u);
  EXPECT_DOUBLE_EQ(l.tiles[0].w, 500);
  EXPECT_DOUBLE_EQ(l.tiles[0].h, 50);
  EXPECT_EQ(l.warnings.size(), 1u);
}

TEST(Layout, SuppressedAndHiddenAreSkipped) {
  auto s = three_wide_tiles();
  s.h.suppressed = {"b"};
  LayoutOptions o;
  o.hidden = {"c"};
  const auto l = layout_grid(s.h, s.lib, ScoringConfig{}, o);
  ASSERT_EQ(l.tiles.size(), 1u);
  EXPECT_EQ(l.tiles[0].element_id, "a");
}

TEST(Layout, GapSeparatesTiles) {
  auto s = three_wide_tiles();
  LayoutOptions o;
  o.gap = 10;
  const auto l = layout_grid(s.h, s.lib, ScoringConfig{}, o);
  EXPECT_DOUBLE_EQ(l.tiles[2].x, 620);
}

TEST(Layout, UniformModeUsesBaseHeightAndSeededOrder) {
  std::mt19937 rng(4);
  auto s = random_synthetic(rng, 30);
  LayoutOptions o;
  o.mode = PresentMode::uniform;
  o.shuffle_seed = 99;
  const ScoringConfig cfg;
  const auto l = layout_grid(s.h, s.lib, cfg, o);
  std::vector<ElementId> expected = leaves_in_order(s.h.categories);
  seeded_shuffle(expected, 99);
  std::vector<ElementId> got;
  for (const auto& t : l.tiles) {
    got.push_back(t.element_id);
    if (l.warnings.empty()) {
      EXPECT_EQ(t.h, cfg.h0_other);
    }
  }
  EXPECT_EQ(got, expected);
  EXPECT_EQ(layout_grid(s.h, s.lib, cfg, o), l);
  o.shuffle_seed = 100;
  EXPECT_NE(layout_grid(s.h, s.lib, cfg, o).tiles, l.tiles);
}

TEST(Layout, SeededShuffleIsAPermutation) {
  std::vector<ElementId> ids;
  for (int i = 0; i < 50; ++i) ids.push_back(std::to_string(i));
  auto shuffled = ids;
  seeded_shuffle(shuffled, 7);
  EXPECT_NE(shuffled, ids);
  std::sort(shuffled.begin(), shuffled.end());
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(shuffled, ids);
}

TEST(Layout, RandomizedInvariants) {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    auto s = random_synthetic(rng, 40);
    LayoutOptions o;
    o.canvas_width = 200 + rng() % 1500;
    for (const auto& id : leaves_in_order(s.h.categories))
      if (rng() % 7 == 0) o.hidden.insert(id);
    const auto l = layout_grid(s.h, s.lib, ScoringConfig{}, o);

    std::vector<ElementId> visible;
    for (const auto& id : leaves_in_order(s.h.categories))
      if (!o.hidden.contains(id)) visible.push_back(id);
    std::vector<ElementId> got;
    for (const auto& t : l.tiles) got.push_back(t.element_id);
    ASSERT_EQ(got, visible);

    for (std::size_t i = 0; i < l.tiles.size(); ++i) {
      const auto& t = l.tiles[i];
      ASSERT_LE(t.x + t.w, o.canvas_width + 1e-9);
      if (i > 0) {
        const auto& p = l.tiles[i - 1];
        // Row-major: same row further right, or a later row.
        ASSERT_TRUE((t.y == p.y && t.x >= p.x + p.w - 1e-9) || t.y > p.y);
      }
      for (std::size_t j = 0; j < i; ++j) ASSERT_FALSE(overlap(t, l.tiles[j])) << trial;
    }
  }
}

TEST(Layout, ClusterOrderIsDepthFirst) {
  AssetHierarchy h;
  h.categories = {{"characters", {{"boy", {}, {}}}, {}},
                  {"backgrounds", {}, {}},
                  {"accessories", {{"plant", {{"tree", {}, {}}}, {}}, {"toy", {}, {}}}, {}}};
  const auto l = layout_grid(h, ElementLibrary{}, ScoringConfig{});
  EXPECT_EQ(l.cluster_order, (std::vector<std::string>{"characters", "characters/boy", "backgrounds", "accessories",
                                                       "accessories/plant", "accessories/plant/tree", "accessories/toy"}));
}

TEST(Layout, PresentationJsonCarriesScores) {
  auto s = three_wide_tiles();
  const auto l = layout_grid(s.h, s.lib, ScoringConfig{});
  const Json j = presentation_json(l, s.h);
  EXPECT_EQ(j.at("scores").size(), 3u);
  EXPECT_EQ(decode<PresentationLayout>(j), l);
}

TEST(Layout, RejectsNonPositiveCanvas) {
  auto s = three_wide_tiles();
  LayoutOptions o;
  o.canvas_width = 0;
  EXPECT_THROW(layout_grid(s.h, s.lib, ScoringConfig{}, o), PreconditionError);
}
