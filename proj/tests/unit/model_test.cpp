#include <gtest/gtest.h>

#include <random>

#include "collage/errors.hpp"
#include "collage/image.hpp"
#include "collage/json_io.hpp"
#include "collage/util.hpp"
#include "collage/validate.hpp"
#include "support.hpp"

using namespace collage;
namespace fs = std::filesystem;

namespace {

template <class T>
T round_trip(const T& v) {
  return decode<T>(Json::parse(dump_canonical(encode(v))));
}

Cluster random_cluster(std::mt19937& rng, int depth, int& next_id) {
  Cluster c;
  c.name = "c" + std::to_string(next_id++);
  const int leaves = static_cast<int>(rng() % 4);
  for (int i = 0; i < leaves; ++i) c.leaves.push_back("e" + std::to_string(next_id++));
  if (depth > 0)
    for (int i = 0, n = static_cast<int>(rng() % 3); i < n; ++i) c.children.push_back(random_cluster(rng, depth - 1, next_id));
  return c;
}

ElementLibrary one_element_library(const fs::path& dir) {
  RgbaImage img(4, 3, 0xff0000ffu);
  fs::create_directories(dir / "cutouts");
  write_png(dir / "cutouts" / "cat_e1.png", img);
  VisualElement e;
  e.element_id = "e1";
  e.label = "cat";
  e.aliases = {"cat"};
  e.source_image_id = "img";
  e.bbox = {0, 0, 4, 3};
  e.cutout_box = {0, 0, 4, 3};
  e.cutout_path = "cutouts/cat_e1.png";
  e.resolution = 12;
  e.visual_embedding = {1, 0, 0, 0};
  ElementLibrary lib;
  lib.library_id = "lib-test";
  lib.embedding_dim = 4;
  lib.label_index["cat"] = {"e1"};
  lib.label_category["cat"] = LabelCategory::object;
  lib.elements["e1"] = e;
  return lib;
}

}  // namespace

TEST(Serialization, EmptySceneRoundTrips) {
  SceneDocument s;
  EXPECT_EQ(round_trip(s), s);
}

TEST(Serialization, TwoLevelHierarchyRoundTrips) {
  AssetHierarchy h;
  h.categories = {{"characters", {{"boy", {}, {"e1", "e2"}}}, {}},
                  {"backgrounds", {}, {"e3"}},
                  {"accessories", {{"plant", {{"tree", {}, {"e4"}}}, {}}}, {}}};
  h.scores["e1"] = {0.1, 0.2, 0.3, 0.2, 186};
  h.suppressed = {"e2"};
  EXPECT_EQ(round_trip(h), h);
}

TEST(Serialization, MissingCategoriesNamesTheField) {
  try {
    decode<AssetHierarchy>(Json{{"scores", Json::object()}, {"suppressed", Json::array()}});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "categories");
  }
}

TEST(Serialization, NestedFieldPathIsDotted) {
  Json j = encode(SceneDocument{});
  j["placements"] = Json::array({encode(Placement{"p1", "e1"})});
  j["placements"][0]["scale"] = "big";
  try {
    decode<SceneDocument>(j);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(e.field().find("placements"), std::string::npos);
    EXPECT_NE(e.field().find("scale"), std::string::npos);
  }
}

TEST(Serialization, RandomizedValuesRoundTrip) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    int id = 0;
    AssetHierarchy h;
    for (const char* name : {"characters", "backgrounds", "accessories"}) {
      Cluster c = random_cluster(rng, 2, id);
      c.name = name;
      h.categories.push_back(c);
    }
    std::uniform_real_distribution<double> u(0, 1);
    h.scores["e" + std::to_string(trial)] = {u(rng), u(rng), u(rng), u(rng), 100 + 100 * u(rng)};
    ASSERT_EQ(round_trip(h), h);

    SceneDocument s;
    s.scene_id = "s" + std::to_string(trial);
    s.revision = rng() % 50;
    for (int i = 0, n = static_cast<int>(rng() % 6); i < n; ++i)
      s.placements.push_back({"p" + std::to_string(i), "e" + std::to_string(i), u(rng) * 1000, u(rng) * 700,
                              0.1 + u(rng) * 3, u(rng) * 360, rng() % 2 == 0, rng() % 3 != 0});
    s.next_placement_seq = s.placements.size() + 1;
    ASSERT_EQ(round_trip(s), s);

    VisualElement e;
    e.element_id = hex8(rng());
    e.label = "dog";
    e.aliases = {"dog", "puppy"};
    e.bbox = {1, 2, 30, 40};
    e.cutout_box = {3, 4, 10, 20};
    e.resolution = 200;
    e.visual_embedding = normalized({u(rng), u(rng), u(rng)});
    if (trial % 2) e.keypoints = CharacterRig{{{"head", "rigs/h.png"}}, {{"neck", 1.5, 2.5, JointRole::rotation_center}}};
    ASSERT_EQ(round_trip(e), e);
  }
}

TEST(Serialization, CanonicalFormSortsKeysAndEndsWithNewline) {
  const std::string s = dump_canonical(Json{{"b", 1}, {"a", 2}});
  EXPECT_EQ(s, "{\n  \"a\": 2,\n  \"b\": 1\n}\n");
}

TEST(ValidateLibrary, OneValidElementGivesEmptyReport) {
  support::TempDir dir;
  const auto lib = one_element_library(dir.path());
  EXPECT_TRUE(validate_library(lib, dir.path()).ok());
}

TEST(ValidateLibrary, DanglingIndexEntry) {
  support::TempDir dir;
  auto lib = one_element_library(dir.path());
  lib.label_index["cat"].push_back("ghost");
  const auto r = validate_library(lib, dir.path());
  EXPECT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.count("dangling_id"), 1u);
}

TEST(ValidateLibrary, HalfNormEmbedding) {
  support::TempDir dir;
  auto lib = one_element_library(dir.path());
  lib.elements["e1"].visual_embedding = {0.5, 0, 0, 0};
  const auto r = validate_library(lib, dir.path());
  EXPECT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.count("embedding_norm"), 1u);
}

TEST(ValidateLibrary, NormToleranceBoundary) {
  support::TempDir dir;
  auto lib = one_element_library(dir.path());
  lib.elements["e1"].visual_embedding = {1 + 5e-7, 0, 0, 0};
  EXPECT_TRUE(validate_library(lib, dir.path()).ok());
  lib.elements["e1"].visual_embedding = {1 + 5e-6, 0, 0, 0};
  EXPECT_EQ(validate_library(lib, dir.path()).count("embedding_norm"), 1u);
}

TEST(ValidateLibrary, MissingCutoutFile) {
  support::TempDir dir;
  auto lib = one_element_library(dir.path());
  fs::remove(dir / "cutouts" / "cat_e1.png");
  EXPECT_EQ(validate_library(lib, dir.path()).count("missing_file"), 1u);
}

TEST(ValidateLibrary, IsPure) {
  support::TempDir dir;
  auto lib = one_element_library(dir.path());
  lib.label_index["cat"].push_back("ghost");
  EXPECT_EQ(validate_library(lib, dir.path()), validate_library(lib, dir.path()));
}

TEST(ValidateLibrary, UnreadableIndexNamesThePath) {
  support::TempDir dir;
  try {
    validate_library_dir(dir.path());
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(e.path().find("library.json"), std::string::npos);
  }
}

TEST(ValidateHierarchy, DetectsDuplicateLeafAndSiblingName) {
  AssetHierarchy h;
  h.categories = {{"characters", {{"a", {}, {"e1"}}, {"a", {}, {"e2"}}}, {}},
                  {"backgrounds", {}, {"e1"}},
                  {"accessories", {}, {}}};
  const auto r = validate_hierarchy(h, CategoryVocabulary{});
  EXPECT_EQ(r.count("sibling_name"), 1u);
  EXPECT_EQ(r.count("duplicate_leaf"), 1u);
}

TEST(Image, PngRoundTripIsLossless) {
  support::TempDir dir;
  RgbaImage img(3, 2);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 11);
  write_png(dir / "x.png", img);
  EXPECT_EQ(read_png(dir / "x.png"), img);
  EXPECT_EQ(encode_png(img), encode_png(img));
}

TEST(Util, Base64RoundTrip) {
  const std::vector<std::uint8_t> bytes = {0, 1, 2, 250, 251, 252, 253};
  EXPECT_EQ(base64_encode(bytes), "AAEC+vv8/Q==");
  EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
}
