#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "collage/backend.hpp"
#include "collage/mock_backend.hpp"
#include "collage/preprocess.hpp"

namespace support {

namespace fs = std::filesystem;

inline fs::path fixture_dir() { return COLLAGE_FIXTURE_DIR; }
inline fs::path cli_path() { return COLLAGE_CLI_PATH; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// The park fixture prepared once per process with the seed-7 mock.
const fs::path& fixture_library_dir();
const collage::ElementLibrary& fixture_library();

inline const std::string kParkStory = "A sunny day, a boy and a dog are playing in the park";
// A full-mode session over the fixture library for kParkStory.
const fs::path& fixture_session_dir();

// Mock for every operation except llm_complete, which is answered by
// `script` with the call index (0-based) and the prompts.
class ScriptedLlm final : public collage::Backend {
 public:
  using Script = std::function<std::string(int call, const std::string& system, const std::string& payload)>;

  explicit ScriptedLlm(Script script, std::uint64_t seed = 7) : mock_(seed), script_(std::move(script)) {}

  collage::TagResult tag_image(const collage::SourceImage& i) override { return mock_.tag_image(i); }
  collage::DetectResult detect(const collage::SourceImage& i, const std::string& l) override { return mock_.detect(i, l); }
  collage::SegmentResult segment(const collage::SourceImage& i, const collage::BoundingBox& b,
                                 const fs::path& out) override {
    return mock_.segment(i, b, out);
  }
  collage::EmbedResult embed_image(const fs::path& p) override { return mock_.embed_image(p); }
  collage::EmbedResult embed_text(const std::string& t) override { return mock_.embed_text(t); }
  collage::ParseCharacterResult parse_character(const fs::path& p, const fs::path& out) override {
    return mock_.parse_character(p, out);
  }
  collage::LlmStructuredResult llm_complete(const std::string& system, const std::string& payload) override;

  int embedding_dim() const override { return mock_.embedding_dim(); }
  std::string describe() const override { return "scripted"; }

  int calls() const { return calls_; }
  const std::vector<std::string>& system_prompts() const { return systems_; }

 private:
  collage::MockBackend mock_;
  Script script_;
  std::mutex mu_;
  int calls_ = 0;
  std::vector<std::string> systems_;
};

// Runs a shell command and captures stdout and the exit code.
struct CommandResult {
  int exit_code = -1;
  std::string out;
};
CommandResult run_command(const std::string& command);

}  // namespace support
