#include "support.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <random>

#include "collage/json_io.hpp"
#include "collage/pipeline.hpp"

namespace support {

TempDir::TempDir() {
  static std::mutex mu;
  static std::mt19937_64 rng(std::random_device{}());
  std::lock_guard g(mu);
  for (;;) {
    path_ = fs::temp_directory_path() / ("collage-test-" + std::to_string(rng() % 100000000));
    if (fs::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

struct PreparedFixture {
  TempDir dir;
  collage::ElementLibrary library;
  std::once_flag session_once;

  PreparedFixture() {
    collage::MockBackend mock(7);
    const auto collection = collage::load_collection(fixture_dir());
    library = collage::prepare_collection(collection, mock, dir / "lib").library;
  }
};

PreparedFixture& prepared() {
  static PreparedFixture p;
  return p;
}

}  // namespace

const fs::path& fixture_library_dir() {
  static const fs::path p = prepared().dir / "lib";
  return p;
}

const collage::ElementLibrary& fixture_library() { return prepared().library; }

const fs::path& fixture_session_dir() {
  auto& p = prepared();
  static const fs::path dir = p.dir / "session";
  std::call_once(p.session_once, [&] {
    collage::MockBackend mock(7);
    collage::BackendDescriptor d;
    d.seed = 7;
    collage::pipeline::CurateRequest req;
    req.story = kParkStory;
    collage::pipeline::run_curation(fixture_library_dir(), req, d, mock, dir);
  });
  return dir;
}

collage::LlmStructuredResult ScriptedLlm::llm_complete(const std::string& system, const std::string& payload) {
  int call;
  {
    std::lock_guard g(mu_);
    call = calls_++;
    systems_.push_back(system);
  }
  collage::LlmStructuredResult r;
  r.raw_text = script_(call, system, payload);
  try {
    r.parsed_json = nlohmann::ordered_json::parse(r.raw_text);
  } catch (const nlohmann::json::parse_error&) {
  }
  return r;
}

CommandResult run_command(const std::string& command) {
  CommandResult r;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace support
