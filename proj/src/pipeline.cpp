#include "collage/pipeline.hpp"

#include <algorithm>

#include "collage/errors.hpp"
#include "collage/hierarchy.hpp"
#include "collage/preprocess.hpp"
#include "collage/score.hpp"
#include "collage/util.hpp"

namespace collage::pipeline {

namespace fs = std::filesystem;

Json encode_descriptor(const BackendDescriptor& d) {
  Json j = {{"kind", d.kind == BackendKind::mock ? "mock" : "remote"}, {"timeout_s", d.timeout_s}};
  if (d.kind == BackendKind::mock) {
    j["seed"] = d.seed.value_or(7);
    j["noise"] = d.mock_noise;
    j["dim"] = d.mock_dim;
  } else {
    j["url"] = d.base_url;
    j["payload"] = d.payload == PayloadMode::inline_base64 ? "inline" : "path";
  }
  return j;
}

BackendDescriptor decode_descriptor(const Json& j) {
  try {
    BackendDescriptor d;
    d.timeout_s = j.value("timeout_s", 30.0);
    if (j.at("kind") == "mock") {
      d.kind = BackendKind::mock;
      d.seed = j.at("seed").get<std::uint64_t>();
      d.mock_noise = j.value("noise", 0.25);
      d.mock_dim = j.value("dim", 64);
    } else {
      d.kind = BackendKind::remote;
      d.base_url = j.at("url").get<std::string>();
      d.payload = j.value("payload", "path") == "inline" ? PayloadMode::inline_base64 : PayloadMode::local_path;
    }
    return d;
  } catch (const Json::exception& ex) {
    throw ParseError("backend", ex.what());
  }
}

std::string derive_session_id(const std::string& library_id, const CurateRequest& r) {
  const std::string key = library_id + "|" + r.story + "|" + to_string(r.mode) + "|" + encode(r.scoring).dump() + "|" +
                          encode(r.vocabulary).dump() + "|" + std::to_string(r.prompt_attempts) + "|" +
                          std::to_string(r.max_retries) + "|" + std::to_string(r.max_depth);
  return "s-" + hex8(fnv1a64(key));
}

namespace {

Json encode_rigs(const std::map<ElementId, CharacterRig>& rigs) {
  Json j = Json::object();
  for (const auto& [id, rig] : rigs) j[id] = encode(rig);
  return j;
}

}  // namespace

CurationSession run_curation(const fs::path& library_dir, const CurateRequest& original,
                             const BackendDescriptor& descriptor, Backend& backend, const fs::path& session_dir) {
  const fs::path lib_dir = fs::absolute(library_dir).lexically_normal();
  const ElementLibrary library = load_library(lib_dir);
  CurateRequest request = original;
  request.scoring.embedding_dim = library.embedding_dim;

  CurateConfig config;
  config.max_retries = request.max_retries;
  config.max_depth = request.max_depth;
  config.vocabulary = request.vocabulary;
  config.scoring = request.scoring;
  config.prompt_attempts = request.prompt_attempts;

  std::error_code ec;
  fs::create_directories(session_dir, ec);
  if (ec || !fs::is_directory(session_dir)) throw IoError(session_dir.string(), "cannot create session directory");
  fs::remove_all(session_dir / "rigs", ec);

  CurationResult result = curate(request.story, library, lib_dir, request.mode, backend, config, session_dir);
  CurationSession& s = result.session;
  s.session_id = derive_session_id(library.library_id, request);
  score_hierarchy(s.hierarchy, library, s.vocabulary, s.scoring, backend);

  write_json_file(session_dir / "rigs.json", encode_rigs(result.rigs));
  write_json_file(session_dir / "context.json",
                  {{"library_dir", lib_dir.string()}, {"backend", encode_descriptor(descriptor)}});
  write_json_file(session_dir / "session.json", encode(s));
  return s;
}

LoadedSession load_session(const fs::path& session_dir) {
  LoadedSession out;
  out.session_dir = fs::absolute(session_dir).lexically_normal();
  out.session = decode<CurationSession>(read_json_file(session_dir / "session.json"));
  const Json ctx = read_json_file(session_dir / "context.json");
  if (!ctx.contains("library_dir") || !ctx["library_dir"].is_string())
    throw ParseError("context.library_dir", "missing or not a string");
  out.library_dir = ctx["library_dir"].get<std::string>();
  out.backend = decode_descriptor(ctx.value("backend", Json::object()));
  const fs::path rigs = session_dir / "rigs.json";
  if (fs::exists(rigs)) {
    const Json j = read_json_file(rigs);
    for (const auto& [id, rig] : j.items()) out.rigs.emplace(id, decode<CharacterRig>(rig, "rigs." + id));
  }
  out.library = load_library(out.library_dir);
  if (out.library.library_id != out.session.library_id)
    throw PreconditionError("session '" + out.session.session_id + "' was built from library '" + out.session.library_id +
                            "' but '" + out.library_dir.string() + "' holds '" + out.library.library_id + "'");
  return out;
}

PresentationLayout run_layout(const LoadedSession& s, const LayoutOptions& options) {
  return layout_grid(s.session.hierarchy, s.library, s.session.scoring, options);
}

Json presentation_document(const LoadedSession& s, const LayoutOptions& options) {
  Json j = presentation_json(run_layout(s, options), s.session.hierarchy);
  j["session_id"] = s.session.session_id;
  j["hierarchy"] = encode(s.session.hierarchy);
  return j;
}

ExportBundle run_export(const LoadedSession& s, const SceneDocument& scene, const fs::path& out_dir) {
  return export_bundle({s.session, s.rigs, s.library, s.library_dir, s.session_dir}, scene, out_dir);
}

namespace {

Json stats(const std::vector<double>& v) {
  if (v.empty()) return {{"n", 0}};
  double sum = 0;
  for (double x : v) sum += x;
  return {{"n", v.size()},
          {"min", *std::min_element(v.begin(), v.end())},
          {"mean", sum / static_cast<double>(v.size())},
          {"max", *std::max_element(v.begin(), v.end())}};
}

Json describe_run(const std::string& name, const CurationSession& s, const PresentationLayout& layout) {
  Json per_category = Json::object();
  for (const auto& root : s.hierarchy.categories) per_category[root.name] = leaves_in_order(root).size();
  std::vector<double> totals, heights;
  for (const auto& t : layout.tiles) {
    totals.push_back(s.hierarchy.scores.at(t.element_id).s_total);
    heights.push_back(t.h);
  }
  return {{"name", name},
          {"selection", encode(s.selection)},
          {"elements_per_category", per_category},
          {"suppressed", s.hierarchy.suppressed.size()},
          {"tiles", layout.tiles.size()},
          {"s_total", stats(totals)},
          {"tile_height", stats(heights)},
          {"llm_calls", s.llm_calls}};
}

}  // namespace

Json compare(const fs::path& library_dir, const std::string& story, Backend& backend, const ScoringConfig& scoring,
             double canvas_width, std::uint64_t shuffle_seed) {
  const fs::path lib_dir = fs::absolute(library_dir).lexically_normal();
  const ElementLibrary library = load_library(lib_dir);
  CurateConfig config;
  config.scoring = scoring;
  config.parse_characters = false;

  auto run = [&](SelectionMode mode) {
    CurationSession s = curate(story, library, lib_dir, mode, backend, config, fs::temp_directory_path()).session;
    score_hierarchy(s.hierarchy, library, s.vocabulary, s.scoring, backend);
    return s;
  };
  const CurationSession full = run(SelectionMode::full);
  const CurationSession keyword = run(SelectionMode::keyword_only);

  LayoutOptions sized{canvas_width, PresentMode::sized, 0, shuffle_seed, {}};
  LayoutOptions uniform{canvas_width, PresentMode::uniform, 0, shuffle_seed, {}};
  Json runs = Json::array();
  runs.push_back(describe_run("full/sized", full, layout_grid(full.hierarchy, library, scoring, sized)));
  runs.push_back(describe_run("keyword_only/sized", keyword, layout_grid(keyword.hierarchy, library, scoring, sized)));
  runs.push_back(describe_run("full/uniform", full, layout_grid(full.hierarchy, library, scoring, uniform)));
  return {{"story", story}, {"library_id", library.library_id}, {"runs", runs}};
}

}  // namespace collage::pipeline
