#include <gtest/gtest.h>

#include "collage/json_io.hpp"
#include "collage/pipeline.hpp"
#include "support.hpp"

using namespace collage;
namespace fs = std::filesystem;

namespace {

support::CommandResult cli(const std::string& args) {
  return support::run_command("'" + support::cli_path().string() + "' " + args);
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Prepared library and curated session made through the CLI, once.
struct CliRun {
  support::TempDir dir;
  support::CommandResult prepare, curate;
  CliRun() {
    prepare = cli("--json prepare --collection " + q(support::fixture_dir()) + " --out " + q(dir / "lib"));
    write_text_file(dir / "story.txt", support::kParkStory + "\n");
    curate = cli("--json curate --library " + q(dir / "lib") + " --story @" + q(dir / "story.txt") + " --out " +
                 q(dir / "s"));
  }
};

const CliRun& run() {
  static CliRun r;
  return r;
}

}  // namespace

TEST(Cli, HelpDocumentsEveryFlag) {
  const std::map<std::string, std::vector<std::string>> flags = {
      {"prepare", {"--collection", "--out", "--backend", "--seed", "--confidence", "--workers"}},
      {"curate",
       {"--library", "--story", "--mode", "--weights", "--out", "--prompt-attempts", "--max-retries", "--max-depth"}},
      {"layout", {"--session", "--present", "--canvas-width", "--shuffle-seed", "--out"}},
      {"export", {"--session", "--scene", "--out"}},
      {"oracle", {"--session", "--tolerance"}},
      {"compare", {"--library", "--story", "--weights", "--canvas-width"}},
      {"serve", {"--data-dir", "--bind"}},
      {"serve-mock", {"--bind", "--seed", "--scratch"}}};
  const auto top = cli("--help");
  EXPECT_EQ(top.exit_code, 0);
  EXPECT_NE(top.out.find("--json"), std::string::npos);
  for (const auto& [cmd, names] : flags) {
    EXPECT_NE(top.out.find(cmd), std::string::npos) << cmd;
    const auto r = cli(cmd + " --help");
    EXPECT_EQ(r.exit_code, 0) << cmd;
    for (const auto& f : names) EXPECT_NE(r.out.find(f), std::string::npos) << cmd << " " << f;
  }
}

TEST(Cli, PrepareAndCurateMatchTheLibraryCalls) {
  ASSERT_EQ(run().prepare.exit_code, 0) << run().prepare.out;
  ASSERT_EQ(run().curate.exit_code, 0) << run().curate.out;
  EXPECT_EQ(read_text_file(run().dir / "lib" / "library.json"),
            read_text_file(support::fixture_library_dir() / "library.json"));
  EXPECT_EQ(read_text_file(run().dir / "s" / "session.json"),
            read_text_file(support::fixture_session_dir() / "session.json"));
  const Json out = Json::parse(run().curate.out);
  EXPECT_EQ(out.at("session_id"), read_json_file(run().dir / "s" / "session.json").at("session_id"));
}

TEST(Cli, OracleFindsNoDifferences) {
  const auto r = cli("--json oracle --session " + q(run().dir / "s"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_TRUE(Json::parse(r.out).at("diffs").empty());
}

TEST(Cli, OracleReportsTamperedScores) {
  support::TempDir d;
  fs::copy(run().dir / "s", d / "s", fs::copy_options::recursive);
  Json s = read_json_file(d / "s" / "session.json");
  auto& scores = s["hierarchy"]["scores"];
  scores.begin().value()["s_total"] = scores.begin().value()["s_total"].get<double>() + 0.01;
  write_json_file(d / "s" / "session.json", s);
  const auto r = cli("--json oracle --session " + q(d / "s"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_FALSE(Json::parse(r.out).at("diffs").empty());
}

TEST(Cli, LayoutMatchesThePresentationDocument) {
  support::TempDir d;
  const auto r = cli("layout --session " + q(run().dir / "s") + " --present uniform --shuffle-seed 5 --canvas-width 800 --out " +
                     q(d / "p.json"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  LayoutOptions o;
  o.mode = PresentMode::uniform;
  o.shuffle_seed = 5;
  o.canvas_width = 800;
  EXPECT_EQ(read_json_file(d / "p.json"), pipeline::presentation_document(pipeline::load_session(run().dir / "s"), o));
}

TEST(Cli, ExportWritesTheBundle) {
  support::TempDir d;
  write_json_file(d / "scene.json", encode(SceneDocument{}));
  const auto r = cli("export --session " + q(run().dir / "s") + " --scene " + q(d / "scene.json") + " --out " + q(d / "b"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_TRUE(fs::exists(d / "b" / "assets.json"));
  EXPECT_TRUE(fs::exists(d / "b" / "preview.png"));
}

TEST(Cli, WeightsAreRecordedInTheSession) {
  support::TempDir d;
  const auto r = cli("curate --library " + q(run().dir / "lib") + " --story 'a dog in the park' --weights 0.5,0.5,0.5 --out " +
                     q(d / "s"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const Json scoring = read_json_file(d / "s" / "session.json").at("scoring");
  EXPECT_EQ(scoring.at("w_div"), 0.5);
  EXPECT_EQ(scoring.at("w_cns"), 0.5);
  EXPECT_EQ(scoring.at("w_res"), 0.5);
}

TEST(Cli, CompareReportsThreeRuns) {
  const auto r = cli("--json compare --library " + q(run().dir / "lib") + " --story @" + q(run().dir / "story.txt"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_EQ(Json::parse(r.out).at("runs").size(), 3u);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("curate --library /nonexistent --story x --out /tmp/never").exit_code, 1);
  EXPECT_EQ(cli("curate --story x").exit_code, 2);
  EXPECT_EQ(cli("nosuchcommand").exit_code, 2);
  EXPECT_EQ(cli("curate --library x --story y --out z --weights 1,2").exit_code, 2);
  EXPECT_EQ(cli("layout --session x --out y --present tiny").exit_code, 2);
}

TEST(Cli, JsonErrorsAreMachineReadable) {
  const auto r = cli("--json curate --library /nonexistent --story x --out /tmp/never");
  EXPECT_EQ(r.exit_code, 1);
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j.at("error"), "io_error");
}
