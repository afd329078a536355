#include <gtest/gtest.h>

#include <random>

#include "collage/errors.hpp"
#include "collage/export.hpp"
#include "collage/hierarchy.hpp"
#include "collage/image.hpp"
#include "collage/json_io.hpp"
#include "collage/pipeline.hpp"
#include "collage/scene.hpp"
#include "support.hpp"

using namespace collage;
namespace fs = std::filesystem;

namespace {

const pipeline::LoadedSession& session() {
  static const auto s = pipeline::load_session(support::fixture_session_dir());
  return s;
}

SceneDocument random_scene(std::mt19937& rng, const pipeline::LoadedSession& s) {
  const auto paths = leaf_paths(s.session.hierarchy.categories);
  const auto leaves = leaves_in_order(s.session.hierarchy.categories);
  std::uniform_real_distribution<double> u(0, 1);
  SceneDocument scene;
  scene.scene_id = "scene-" + std::to_string(rng() % 1000);
  scene.canvas_width = 320;
  scene.canvas_height = 200;
  const int n = static_cast<int>(rng() % 8);
  for (int i = 0; i < n; ++i) {
    scene = place(scene, paths, leaves[rng() % leaves.size()], u(rng) * 300 - 20, u(rng) * 180 - 20);
    const auto id = scene.placements.back().placement_id;
    switch (rng() % 5) {
      case 0: scene = scale(scene, id, 0.2 + u(rng) * 2); break;
      case 1: scene = rotate(scene, id, u(rng) * 720 - 360); break;
      case 2: scene = flip_h(scene, id); break;
      case 3: scene = set_visible(scene, paths, id, false); break;
      default: scene = copy(scene, paths, id); break;
    }
  }
  return scene;
}

}  // namespace

TEST(Export, BundleRoundTripsScene) {
  std::mt19937 rng(17);
  for (int i = 0; i < 20; ++i) {
    support::TempDir out;
    const SceneDocument scene = random_scene(rng, session());
    pipeline::run_export(session(), scene, out / "bundle");
    const auto back = import_bundle(out / "bundle");
    SceneDocument expected = scene;
    expected.revision = 0;
    ASSERT_EQ(back.scene, expected);
    const auto h = decode<AssetHierarchy>(back.assets.at("hierarchy"));
    EXPECT_EQ(h, session().session.hierarchy);
  }
}

TEST(Export, BundleFilesAndElementMetadata) {
  support::TempDir out;
  const auto paths = leaf_paths(session().session.hierarchy.categories);
  const auto leaves = leaves_in_order(session().session.hierarchy.categories);
  SceneDocument scene;
  scene.scene_id = "one";
  scene = place(scene, paths, leaves.front(), 10, 10);
  const auto b = pipeline::run_export(session(), scene, out / "b");
  EXPECT_TRUE(fs::exists(b.assets_json));
  EXPECT_TRUE(fs::exists(b.scene_json));
  EXPECT_TRUE(fs::exists(b.preview_png));
  EXPECT_EQ(b.cutouts, leaves.size());

  const Json assets = read_json_file(b.assets_json);
  EXPECT_EQ(assets.at("format"), kBundleFormat);
  EXPECT_EQ(assets.at("session_id"), session().session.session_id);
  EXPECT_EQ(assets.at("story"), support::kParkStory);
  ASSERT_EQ(assets.at("elements").size(), leaves.size());
  for (const auto& [id, e] : assets.at("elements").items()) {
    const auto& lib_e = session().library.elements.at(id);
    EXPECT_EQ(e.at("label"), lib_e.label);
    EXPECT_EQ(e.at("cluster_path"), path_string(paths.at(id)));
    EXPECT_EQ(read_png(out / "b" / e.at("cutout_path").get<std::string>()),
              read_png(session().library_dir / lib_e.cutout_path));
  }
  const auto png = probe_png(b.preview_png);
  EXPECT_EQ(png.width, scene.canvas_width);
  EXPECT_EQ(png.height, scene.canvas_height);
}

TEST(Export, CharacterRigsCarryMasksAndRotationCentres) {
  support::TempDir out;
  ASSERT_FALSE(session().rigs.empty());
  const auto b = pipeline::run_export(session(), SceneDocument{}, out / "b");
  const Json assets = read_json_file(b.assets_json);
  for (const auto& [id, rig] : session().rigs) {
    const Json& j = assets.at("elements").at(id).at("rig");
    EXPECT_EQ(j.at("parts").size(), 6u);
    bool centre = false;
    for (const auto& joint : j.at("joints")) centre |= joint.at("role") == "rotation_center";
    EXPECT_TRUE(centre) << id;
    for (const auto& part : j.at("parts")) {
      const std::string rel = part.at("mask_path");
      EXPECT_EQ(rel.rfind("rigs/", 0), 0u);
      EXPECT_TRUE(fs::exists(out / "b" / rel));
    }
  }
}

TEST(Export, EmptySceneGivesBlankPreview) {
  support::TempDir out;
  SceneDocument scene;
  scene.canvas_width = 40;
  scene.canvas_height = 30;
  const auto b = pipeline::run_export(session(), scene, out / "b");
  EXPECT_EQ(read_png(b.preview_png), RgbaImage(40, 30, 0xffffffffu));
}

TEST(Export, PlacementOutsideTheSessionIsRejected) {
  support::TempDir out;
  SceneDocument scene;
  scene.placements.push_back({"p1", "deadbeef"});
  try {
    pipeline::run_export(session(), scene, out / "b");
    FAIL() << "expected ExportError";
  } catch (const ExportError& e) {
    EXPECT_NE(std::string(e.what()).find("p1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("deadbeef"), std::string::npos);
  }
}

TEST(Export, ImportRejectsUnknownFormatAndDanglingPlacements) {
  support::TempDir out;
  const auto paths = leaf_paths(session().session.hierarchy.categories);
  SceneDocument scene;
  scene = place(scene, paths, leaves_in_order(session().session.hierarchy.categories).front(), 0, 0);
  const auto b = pipeline::run_export(session(), scene, out / "b");

  Json s = read_json_file(b.scene_json);
  s["placements"][0]["element_id"] = "00000000";
  write_json_file(b.scene_json, s);
  EXPECT_THROW(import_bundle(out / "b"), ExportError);

  Json a = read_json_file(b.assets_json);
  a["format"] = "collage-forge/99";
  write_json_file(b.assets_json, a);
  EXPECT_THROW(import_bundle(out / "b"), ExportError);
  EXPECT_THROW(import_bundle(out / "missing"), Error);
}

TEST(Export, UnwritableDestinationIsAnExportError) {
  support::TempDir out;
  write_text_file(out / "file", "x");
  EXPECT_THROW(pipeline::run_export(session(), SceneDocument{}, out / "file" / "b"), ExportError);
}

TEST(Pipeline, SessionIdIsDeterministicAndInputSensitive) {
  pipeline::CurateRequest a;
  a.story = "x";
  const auto id = pipeline::derive_session_id("lib", a);
  EXPECT_EQ(id, pipeline::derive_session_id("lib", a));
  EXPECT_EQ(id.rfind("s-", 0), 0u);
  EXPECT_EQ(id.size(), 10u);
  EXPECT_NE(id, pipeline::derive_session_id("lib2", a));
  auto b = a;
  b.mode = SelectionMode::keyword_only;
  EXPECT_NE(id, pipeline::derive_session_id("lib", b));
  b = a;
  b.scoring.w_div = 0.5;
  EXPECT_NE(id, pipeline::derive_session_id("lib", b));
  b = a;
  b.story = "y";
  EXPECT_NE(id, pipeline::derive_session_id("lib", b));
}

TEST(Pipeline, SessionPersistsAndReloads) {
  const auto& s = session();
  EXPECT_EQ(s.session.library_id, s.library.library_id);
  EXPECT_EQ(s.backend.kind, BackendKind::mock);
  EXPECT_EQ(s.session.scoring.embedding_dim, 64);
  EXPECT_FALSE(s.session.hierarchy.scores.empty());
  for (const auto& id : leaves_in_order(s.session.hierarchy.categories)) EXPECT_TRUE(s.session.hierarchy.scores.contains(id));
}

TEST(Pipeline, RerunIsByteIdentical) {
  support::TempDir dir;
  MockBackend mock(7);
  BackendDescriptor d;
  d.seed = 7;
  pipeline::CurateRequest req;
  req.story = support::kParkStory;
  pipeline::run_curation(support::fixture_library_dir(), req, d, mock, dir / "s");
  EXPECT_EQ(read_text_file(dir / "s" / "session.json"), read_text_file(support::fixture_session_dir() / "session.json"));
  EXPECT_EQ(read_text_file(dir / "s" / "rigs.json"), read_text_file(support::fixture_session_dir() / "rigs.json"));
}

TEST(Pipeline, LoadRejectsMismatchedLibrary) {
  support::TempDir dir;
  fs::copy(support::fixture_session_dir(), dir / "s", fs::copy_options::recursive);
  Json s = read_json_file(dir / "s" / "session.json");
  s["library_id"] = "other";
  write_json_file(dir / "s" / "session.json", s);
  EXPECT_THROW(pipeline::load_session(dir / "s"), PreconditionError);
}

TEST(Pipeline, PresentationDocumentMatchesLayout) {
  LayoutOptions o;
  const Json doc = pipeline::presentation_document(session(), o);
  EXPECT_EQ(doc.at("session_id"), session().session.session_id);
  EXPECT_EQ(decode<PresentationLayout>(doc), pipeline::run_layout(session(), o));
}

TEST(Pipeline, CompareReportsThreeRuns) {
  MockBackend mock(7);
  const Json r = pipeline::compare(support::fixture_library_dir(), support::kParkStory, mock, ScoringConfig{}, 1280, 7);
  ASSERT_EQ(r.at("runs").size(), 3u);
  EXPECT_EQ(r["runs"][0]["name"], "full/sized");
  EXPECT_EQ(r["runs"][1]["name"], "keyword_only/sized");
  // Keyword-only selection never finds more labels than full selection.
  EXPECT_LE(r["runs"][1]["tiles"].get<int>(), r["runs"][0]["tiles"].get<int>());
  EXPECT_EQ(r["runs"][0]["tiles"], r["runs"][2]["tiles"]);
}
