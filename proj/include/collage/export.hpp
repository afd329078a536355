#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "collage/json_io.hpp"
#include "collage/model.hpp"

namespace collage {

inline constexpr const char* kBundleFormat = "collage-forge/1";

struct ExportInputs {
  const CurationSession& session;
  const std::map<ElementId, CharacterRig>& rigs;  // mask paths relative to session_dir
  const ElementLibrary& library;
  std::filesystem::path library_dir;
  std::filesystem::path session_dir;
};

struct ExportBundle {
  std::filesystem::path dir;
  std::filesystem::path assets_json;
  std::filesystem::path scene_json;
  std::filesystem::path preview_png;
  std::size_t cutouts = 0;
};

// assets.json (hierarchy, element metadata, scores, rigs), scene.json,
// preview.png and cutouts/ (plus rigs/ masks). Throws ExportError for a
// placement that names an element outside the session or an unwritable dir.
ExportBundle export_bundle(const ExportInputs& in, const SceneDocument& scene, const std::filesystem::path& out_dir);

struct ImportedBundle {
  Json assets;
  SceneDocument scene;  // revision reset to 0
};

// Reads a bundle back. Throws ExportError when the format tag is unknown or
// a placement references an element absent from assets.json.
ImportedBundle import_bundle(const std::filesystem::path& dir);

}  // namespace collage
