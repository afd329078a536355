#include "collage/export.hpp"

#include <set>

#include "collage/errors.hpp"
#include "collage/hierarchy.hpp"
#include "collage/image.hpp"
#include "collage/scene.hpp"

namespace collage {

namespace fs = std::filesystem;

namespace {

void copy_into(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::create_directories(to.parent_path(), ec);
  fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  if (ec) throw ExportError("cannot copy '" + from.string() + "' to '" + to.string() + "': " + ec.message());
}

}  // namespace

ExportBundle export_bundle(const ExportInputs& in, const SceneDocument& scene, const fs::path& out_dir) {
  const auto ids = leaves_in_order(in.session.hierarchy.categories);
  const std::set<ElementId> members(ids.begin(), ids.end());
  for (const auto& p : scene.placements)
    if (!members.contains(p.element_id))
      throw ExportError("placement '" + p.placement_id + "' references element '" + p.element_id +
                        "' outside the session");

  std::error_code ec;
  fs::create_directories(out_dir / "cutouts", ec);
  if (ec || !fs::is_directory(out_dir / "cutouts")) throw ExportError("output directory '" + out_dir.string() + "' is not writable");

  ExportBundle b;
  b.dir = out_dir;
  Json elements = Json::object();
  const auto paths = leaf_paths(in.session.hierarchy.categories);
  for (const auto& id : ids) {
    auto it = in.library.elements.find(id);
    if (it == in.library.elements.end()) throw ExportError("element '" + id + "' is not in the library");
    const VisualElement& e = it->second;
    const std::string name = fs::path(e.cutout_path).filename().string();
    copy_into(in.library_dir / e.cutout_path, out_dir / "cutouts" / name);
    ++b.cutouts;
    Json j = {{"label", e.label},
              {"aliases", e.aliases},
              {"source_image_id", e.source_image_id},
              {"bbox", encode(e.bbox)},
              {"cutout_box", encode(e.cutout_box)},
              {"resolution", e.resolution},
              {"cutout_path", "cutouts/" + name},
              {"cluster_path", path_string(paths.at(id))}};
    auto rig = in.rigs.find(id);
    if (rig != in.rigs.end()) {
      CharacterRig copy = rig->second;
      for (auto& part : copy.parts) {
        const fs::path src = fs::path(part.mask_path).is_absolute() ? fs::path(part.mask_path) : in.session_dir / part.mask_path;
        const std::string rel = "rigs/" + src.filename().string();
        copy_into(src, out_dir / rel);
        part.mask_path = rel;
      }
      j["rig"] = encode(copy);
    }
    elements[id] = j;
  }

  Json assets = {{"format", kBundleFormat},
                 {"session_id", in.session.session_id},
                 {"library_id", in.session.library_id},
                 {"story", in.session.story},
                 {"vocabulary", encode(in.session.vocabulary)},
                 {"hierarchy", encode(in.session.hierarchy)},
                 {"elements", elements}};
  Json scene_json = encode(scene);
  scene_json["format"] = kBundleFormat;

  b.assets_json = out_dir / "assets.json";
  b.scene_json = out_dir / "scene.json";
  b.preview_png = out_dir / "preview.png";
  try {
    write_json_file(b.assets_json, assets);
    write_json_file(b.scene_json, scene_json);
    write_png(b.preview_png, render_preview(scene, in.library, in.library_dir));
  } catch (const IoError& ex) {
    throw ExportError(ex.what());
  }
  return b;
}

ImportedBundle import_bundle(const fs::path& dir) {
  ImportedBundle out;
  out.assets = read_json_file(dir / "assets.json");
  Json scene = read_json_file(dir / "scene.json");
  for (const Json* j : {&out.assets, &scene})
    if (!j->contains("format") || (*j)["format"] != kBundleFormat) throw ExportError("unknown bundle format in '" + dir.string() + "'");
  scene.erase("format");
  out.scene = decode<SceneDocument>(scene, "scene");
  out.scene.revision = 0;
  const Json& elements = out.assets.at("elements");
  for (const auto& p : out.scene.placements)
    if (!elements.contains(p.element_id))
      throw ExportError("placement '" + p.placement_id + "' references unknown element '" + p.element_id + "'");
  return out;
}

}  // namespace collage
