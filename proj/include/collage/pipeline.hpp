#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "collage/backend.hpp"
#include "collage/curate.hpp"
#include "collage/export.hpp"
#include "collage/json_io.hpp"
#include "collage/layout.hpp"
#include "collage/model.hpp"

// The operations every entry point (CLI, HTTP service, tests) shares, so
// their artifacts are the same bytes for the same inputs.
namespace collage::pipeline {

Json encode_descriptor(const BackendDescriptor& d);
BackendDescriptor decode_descriptor(const Json& j);

struct CurateRequest {
  std::string story;
  SelectionMode mode = SelectionMode::full;
  ScoringConfig scoring;
  CategoryVocabulary vocabulary;
  int prompt_attempts = 1;
  int max_retries = 2;
  int max_depth = 3;
};

// "s-<8 hex>" over library id, story, mode, scoring config and vocabulary.
std::string derive_session_id(const std::string& library_id, const CurateRequest& request);

// Session directory contents:
//   session.json   CurationSession, scores included
//   rigs.json      element id -> CharacterRig (mask paths relative to the dir)
//   rigs/          part masks
//   context.json   where the library lives and which backend produced the session
struct LoadedSession {
  CurationSession session;
  std::map<ElementId, CharacterRig> rigs;
  ElementLibrary library;
  std::filesystem::path library_dir;
  std::filesystem::path session_dir;
  BackendDescriptor backend;
};

// Stage II plus scoring, persisted into `session_dir`. The scoring dimension
// is taken from the library.
CurationSession run_curation(const std::filesystem::path& library_dir, const CurateRequest& request,
                             const BackendDescriptor& descriptor, Backend& backend,
                             const std::filesystem::path& session_dir);

LoadedSession load_session(const std::filesystem::path& session_dir);

PresentationLayout run_layout(const LoadedSession& s, const LayoutOptions& options);
Json presentation_document(const LoadedSession& s, const LayoutOptions& options);

ExportBundle run_export(const LoadedSession& s, const SceneDocument& scene, const std::filesystem::path& out_dir);

// Side-by-side report of full vs keyword-only selection and sized vs
// uniform presentation for one story.
Json compare(const std::filesystem::path& library_dir, const std::string& story, Backend& backend,
             const ScoringConfig& scoring, double canvas_width, std::uint64_t shuffle_seed);

}  // namespace collage::pipeline
