// Command-line driver for the collage pipeline.
#include <csignal>
#include <filesystem>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "collage/errors.hpp"
#include "collage/oracle.hpp"
#include "collage/pipeline.hpp"
#include "collage/preprocess.hpp"
#include "collage/remote_backend.hpp"
#include "collage/service.hpp"
#include "collage/util.hpp"

namespace fs = std::filesystem;
using namespace collage;

namespace {

bool g_json = false;

struct BackendFlags {
  std::string spec;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* cmd) {
    cmd->add_option("--backend", spec, "\"mock\" or the base URL of a /v1 backend (default: COLLAGE_BACKEND_URL, else mock)");
    cmd->add_option("--seed", seed, "Mock backend seed (default: COLLAGE_MOCK_SEED, else 7)");
  }

  BackendDescriptor descriptor() const {
    if (!spec.empty()) return descriptor_from_spec(spec, seed);
    BackendDescriptor d = descriptor_from_env();
    if (seed && d.kind == BackendKind::mock) d.seed = seed;
    return d;
  }
};

// File and stdin stories lose trailing line breaks, like $(cat file).
std::string read_story(const std::string& arg) {
  std::string text;
  if (arg == "-") text.assign(std::istreambuf_iterator<char>(std::cin), {});
  else if (!arg.empty() && arg.front() == '@') text = read_text_file(arg.substr(1));
  else return arg;
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

ScoringConfig parse_weights(const std::string& text) {
  ScoringConfig c;
  if (text.empty()) return c;
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw CLI::ValidationError("--weights", "expected three comma-separated numbers");
  try {
    c.w_div = std::stod(parts[0]);
    c.w_cns = std::stod(parts[1]);
    c.w_res = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw CLI::ValidationError("--weights", "expected three comma-separated numbers");
  }
  if (c.w_div < 0 || c.w_cns < 0 || c.w_res < 0) throw CLI::ValidationError("--weights", "weights must be non-negative");
  return c;
}

void report(const Json& j, const std::string& human) {
  if (g_json) std::cout << j.dump() << "\n";
  else std::cout << human << "\n";
}

int fail(const std::exception& ex) {
  Json j = {{"error", "error"}, {"message", ex.what()}};
  if (auto* e = dynamic_cast<const ParseError*>(&ex)) {
    j["error"] = "parse_error";
    j["field"] = e->field();
  } else if (auto* e = dynamic_cast<const IoError*>(&ex)) {
    j["error"] = "io_error";
    j["path"] = e->path();
  } else if (auto* e = dynamic_cast<const CurationError*>(&ex)) {
    j["error"] = "curation_error";
    j["stage"] = e->stage();
    j["raw_text"] = e->raw_text();
  } else if (dynamic_cast<const TransportError*>(&ex) || dynamic_cast<const ProtocolError*>(&ex)) {
    j["error"] = "backend_error";
  } else if (dynamic_cast<const PreconditionError*>(&ex)) {
    j["error"] = "precondition";
  }
  if (g_json) std::cerr << j.dump() << "\n";
  else std::cerr << "error: " << ex.what() << "\n";
  return 1;
}

Service* g_service = nullptr;
void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Story-driven collage asset pipeline"};
  app.require_subcommand(1);
  app.add_flag("--json", g_json, "Machine-readable output and diagnostics");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Build an element library from a photo collection");
  std::string collection_dir, library_out;
  double confidence = 0.35;
  unsigned workers = 0;
  BackendFlags prepare_backend;
  prepare->add_option("--collection", collection_dir, "Directory with PNG photos (and optional collection.json)")->required();
  prepare->add_option("--out", library_out, "Library output directory")->required();
  prepare->add_option("--confidence", confidence, "Minimum detection confidence")->check(CLI::Range(0.0, 1.0));
  prepare->add_option("--workers", workers, "Images processed in parallel (0: one per CPU)");
  prepare_backend.add(prepare);

  // curate
  auto* curate_cmd = app.add_subcommand("curate", "Select, classify and cluster assets for a story, then score them");
  std::string library_dir, story_arg, mode_arg = "full", weights_arg, session_out;
  int prompt_attempts = 1, max_retries = 2, max_depth = 3;
  BackendFlags curate_backend;
  curate_cmd->add_option("--library", library_dir, "Library directory")->required();
  curate_cmd->add_option("--story", story_arg, "Story text, @file, or - for stdin")->required();
  curate_cmd->add_option("--mode", mode_arg, "full or keyword-only")->check(CLI::IsMember({"full", "keyword-only", "keyword_only"}));
  curate_cmd->add_option("--weights", weights_arg, "Score weights w_div,w_cns,w_res (default .333 each)");
  curate_cmd->add_option("--out", session_out, "Session output directory")->required();
  curate_cmd->add_option("--prompt-attempts", prompt_attempts, "Story submission count recorded in the session")->check(CLI::PositiveNumber);
  curate_cmd->add_option("--max-retries", max_retries, "Re-asks per LLM stage")->check(CLI::Range(0, 10));
  curate_cmd->add_option("--max-depth", max_depth, "Cluster levels below a category")->check(CLI::Range(1, 10));
  curate_backend.add(curate_cmd);

  // layout
  auto* layout_cmd = app.add_subcommand("layout", "Pack the session's elements into the presentation grid");
  std::string session_dir, present_arg = "sized", presentation_out;
  double canvas_width = 1280;
  std::uint64_t shuffle_seed = 7;
  layout_cmd->add_option("--session", session_dir, "Session directory")->required();
  layout_cmd->add_option("--present", present_arg, "sized or uniform")->check(CLI::IsMember({"sized", "uniform"}));
  layout_cmd->add_option("--canvas-width", canvas_width, "Canvas width in pixels")->check(CLI::PositiveNumber);
  layout_cmd->add_option("--shuffle-seed", shuffle_seed, "Order seed for uniform presentation");
  layout_cmd->add_option("--out", presentation_out, "Output presentation.json")->required();

  // export
  auto* export_cmd = app.add_subcommand("export", "Write assets.json, scene.json, preview.png and cutouts");
  std::string export_session, scene_path, bundle_out;
  export_cmd->add_option("--session", export_session, "Session directory")->required();
  export_cmd->add_option("--scene", scene_path, "Scene document (scene.json)")->required();
  export_cmd->add_option("--out", bundle_out, "Bundle output directory")->required();

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "Recompute every stored score from the formulas and list differences");
  std::string oracle_session;
  double tolerance = 1e-9;
  BackendFlags oracle_backend;
  oracle_cmd->add_option("--session", oracle_session, "Session directory")->required();
  oracle_cmd->add_option("--tolerance", tolerance, "Absolute tolerance");
  oracle_backend.add(oracle_cmd);

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "Report full vs keyword-only selection and sized vs uniform presentation");
  std::string compare_library, compare_story, compare_weights;
  double compare_width = 1280;
  BackendFlags compare_backend;
  compare_cmd->add_option("--library", compare_library, "Library directory")->required();
  compare_cmd->add_option("--story", compare_story, "Story text, @file, or - for stdin")->required();
  compare_cmd->add_option("--weights", compare_weights, "Score weights w_div,w_cns,w_res");
  compare_cmd->add_option("--canvas-width", compare_width, "Canvas width in pixels")->check(CLI::PositiveNumber);
  compare_backend.add(compare_cmd);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the REST service");
  std::string data_dir, bind;
  serve->add_option("--data-dir", data_dir, "Data directory (default: COLLAGE_DATA_DIR, else ./data)");
  serve->add_option("--bind", bind, "host:port (default: COLLAGE_BIND_ADDR, else 127.0.0.1:8080)");

  // serve-mock
  auto* serve_mock = app.add_subcommand("serve-mock", "Serve the mock backend over the /v1 protocol");
  std::string mock_bind = "127.0.0.1:8090", scratch = "mock-scratch";
  std::uint64_t mock_seed = 7;
  serve_mock->add_option("--bind", mock_bind, "host:port");
  serve_mock->add_option("--seed", mock_seed, "Mock seed");
  serve_mock->add_option("--scratch", scratch, "Directory for inline payload files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*prepare) {
      BackendPtr backend = make_backend(prepare_backend.descriptor());
      PrepareOptions po;
      po.confidence_threshold = confidence;
      po.workers = workers;
      const PhotoCollection c = load_collection(collection_dir);
      const PrepareResult r = prepare_collection(c, *backend, library_out, po);
      report({{"library_id", r.library.library_id}, {"elements", r.library.elements.size()}, {"failed_images", r.report.failed()}},
             "library " + r.library.library_id + ": " + std::to_string(r.library.elements.size()) + " elements, " +
                 std::to_string(r.report.failed()) + " failed images -> " + library_out);
      return 0;
    }
    if (*curate_cmd) {
      pipeline::CurateRequest req;
      try {
        req.scoring = parse_weights(weights_arg);
      } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
      }
      req.story = read_story(story_arg);
      req.mode = mode_arg == "full" ? SelectionMode::full : SelectionMode::keyword_only;
      req.prompt_attempts = prompt_attempts;
      req.max_retries = max_retries;
      req.max_depth = max_depth;
      const BackendDescriptor d = curate_backend.descriptor();
      BackendPtr backend = make_backend(d);
      const CurationSession s = pipeline::run_curation(library_dir, req, d, *backend, session_out);
      report({{"session_id", s.session_id}, {"central", s.selection.central}, {"related", s.selection.related},
              {"insufficient_assets", s.insufficient_assets}, {"warnings", s.warnings}},
             "session " + s.session_id + ": central [" + join(s.selection.central, ", ") + "], related [" +
                 join(s.selection.related, ", ") + "], " + std::to_string(s.hierarchy.scores.size()) + " elements scored" +
                 (s.insufficient_assets ? " (insufficient assets)" : "") + " -> " + session_out);
      for (const auto& w : s.warnings)
        if (!g_json) std::cerr << "warning: " << w << "\n";
      return 0;
    }
    if (*layout_cmd) {
      const auto s = pipeline::load_session(session_dir);
      LayoutOptions lo;
      lo.canvas_width = canvas_width;
      lo.mode = present_mode_from_string(present_arg);
      lo.shuffle_seed = shuffle_seed;
      const Json doc = pipeline::presentation_document(s, lo);
      write_json_file(presentation_out, doc);
      report({{"tiles", doc["tiles"].size()}, {"out", presentation_out}},
             std::to_string(doc["tiles"].size()) + " tiles -> " + presentation_out);
      return 0;
    }
    if (*export_cmd) {
      const auto s = pipeline::load_session(export_session);
      Json scene_json = read_json_file(scene_path);
      scene_json.erase("format");
      const SceneDocument scene = decode<SceneDocument>(scene_json, scene_path);
      const ExportBundle b = pipeline::run_export(s, scene, bundle_out);
      report({{"bundle_dir", b.dir.string()}, {"cutouts", b.cutouts}},
             "bundle with " + std::to_string(b.cutouts) + " cutouts -> " + b.dir.string());
      return 0;
    }
    if (*oracle_cmd) {
      const auto s = pipeline::load_session(oracle_session);
      const BackendDescriptor d = oracle_backend.spec.empty() && !oracle_backend.seed ? s.backend : oracle_backend.descriptor();
      BackendPtr backend = make_backend(d);
      const auto diffs = oracle_check(s.session.hierarchy, s.library, s.session.vocabulary, s.session.scoring, *backend, tolerance);
      Json list = Json::array();
      for (const auto& diff : diffs)
        list.push_back({{"element_id", diff.element_id}, {"field", diff.field}, {"stored", diff.stored}, {"expected", diff.expected}});
      std::string human = std::to_string(diffs.size()) + " diffs over " + std::to_string(s.session.hierarchy.scores.size()) + " elements";
      for (const auto& diff : diffs)
        human += "\n  " + diff.element_id + " " + diff.field + ": stored " + std::to_string(diff.stored) + ", expected " +
                 std::to_string(diff.expected);
      report({{"diffs", list}, {"elements", s.session.hierarchy.scores.size()}}, human);
      return diffs.empty() ? 0 : 1;
    }
    if (*compare_cmd) {
      ScoringConfig scoring;
      try {
        scoring = parse_weights(compare_weights);
      } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
      }
      BackendPtr backend = make_backend(compare_backend.descriptor());
      const Json r = pipeline::compare(compare_library, read_story(compare_story), *backend, scoring, compare_width, 7);
      std::cout << r.dump(2) << "\n";
      return 0;
    }
    if (*serve) {
      ServiceOptions o = service_options_from_env();
      if (!data_dir.empty()) o.data_dir = data_dir;
      auto [host, port] = bind_address_from_env();
      if (!bind.empty()) {
        const auto colon = bind.rfind(':');
        if (colon == std::string::npos) throw PreconditionError("--bind must be host:port");
        host = bind.substr(0, colon);
        port = std::stoi(bind.substr(colon + 1));
      }
      Service service(o);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << fs::absolute(o.data_dir).string() << " on " << host << ":" << port << "\n";
      service.listen_blocking(host, port);
      g_service = nullptr;
      return 0;
    }
    if (*serve_mock) {
      const auto colon = mock_bind.rfind(':');
      if (colon == std::string::npos) throw PreconditionError("--bind must be host:port");
      BackendHttpServer server(make_backend(BackendDescriptor::mock(mock_seed)), scratch);
      std::cerr << "mock backend (seed " << mock_seed << ") on " << mock_bind << "\n";
      server.listen_blocking(mock_bind.substr(0, colon), std::stoi(mock_bind.substr(colon + 1)));
      return 0;
    }
  } catch (const std::exception& ex) {
    return fail(ex);
  }
  return 0;
}
