#include "collage/validate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "collage/errors.hpp"
#include "collage/hierarchy.hpp"
#include "collage/image.hpp"
#include "collage/json_io.hpp"
#include "collage/util.hpp"

namespace collage {

std::size_t ValidationReport::count(const std::string& kind) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; }));
}

ValidationReport validate_library(const ElementLibrary& lib, const std::filesystem::path& library_dir) {
  ValidationReport r;
  auto add = [&](std::string kind, std::string subject, std::string detail) {
    r.violations.push_back({std::move(kind), std::move(subject), std::move(detail)});
  };

  if (lib.embedding_dim < 1) add("embedding_dim", lib.library_id, "embedding_dim must be >= 1");

  std::set<ElementId> indexed;
  for (const auto& [label, ids] : lib.label_index) {
    if (label.empty() || trim(label) != label) add("label_text", label, "label must be non-empty and trimmed");
    for (const auto& id : ids) {
      if (!lib.elements.contains(id))
        add("dangling_id", label + ":" + id, "label_index entry points to unknown element");
      indexed.insert(id);
    }
  }

  for (const auto& [id, e] : lib.elements) {
    if (e.element_id != id) add("element_id", id, "element keyed under a different id");
    if (!indexed.contains(id)) add("unindexed_element", id, "element not reachable from label_index");
    if (e.bbox.w < 1 || e.bbox.h < 1) add("bbox", id, "bounding box must have positive size");
    if (e.resolution != e.cutout_box.area())
      add("resolution", id, "resolution must equal the tight cutout box area");

    const std::filesystem::path file = library_dir / e.cutout_path;
    std::error_code ec;
    if (!std::filesystem::exists(file, ec)) {
      add("missing_file", id, file.string());
    } else {
      try {
        const PngInfo info = probe_png(file);
        if (!info.has_alpha) add("no_alpha", id, file.string());
        if (e.keypoints) {
          for (const auto& jt : e.keypoints->joints)
            if (jt.x < 0 || jt.y < 0 || jt.x > info.width || jt.y > info.height)
              add("joint_bounds", id, "joint '" + jt.name + "' lies outside the cutout");
        }
      } catch (const Error& ex) {
        add("unreadable_file", id, ex.what());
      }
    }

    if (!e.visual_embedding.empty()) {
      if (static_cast<int>(e.visual_embedding.size()) != lib.embedding_dim)
        add("embedding_dim", id, "embedding length differs from library embedding_dim");
      const double n = l2_norm(e.visual_embedding);
      if (std::abs(n - 1.0) > kUnitNormTolerance) add("embedding_norm", id, "embedding norm " + std::to_string(n));
    }
  }
  return r;
}

ValidationReport validate_library_dir(const std::filesystem::path& library_dir) {
  const auto index = library_dir / "library.json";
  const ElementLibrary lib = decode<ElementLibrary>(read_json_file(index));
  return validate_library(lib, library_dir);
}

ValidationReport validate_hierarchy(const AssetHierarchy& h, const CategoryVocabulary& vocab) {
  ValidationReport r;
  auto add = [&](std::string kind, std::string subject, std::string detail) {
    r.violations.push_back({std::move(kind), std::move(subject), std::move(detail)});
  };
  const auto names = vocab.ordered();
  if (h.categories.size() != names.size()) {
    add("categories", "hierarchy", "expected exactly three category roots");
  } else {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (h.categories[i].name != names[i])
        add("categories", h.categories[i].name, "category root does not match vocabulary '" + names[i] + "'");
  }
  std::set<std::string> seen;
  visit_clusters(h.categories, [&](const Cluster& c, const ClusterPath& p) {
    if (c.name.empty()) add("cluster_name", path_string(p), "empty cluster name");
    std::set<std::string> sibling;
    for (const auto& child : c.children)
      if (!sibling.insert(child.name).second) add("sibling_name", path_string(p) + "/" + child.name, "duplicate sibling");
    for (const auto& leaf : c.leaves)
      if (!seen.insert(leaf).second) add("duplicate_leaf", leaf, "leaf appears under more than one path");
  });
  return r;
}

ValidationReport validate_scene(const SceneDocument& scene, const AssetHierarchy& h) {
  ValidationReport r;
  const auto paths = leaf_paths(h.categories);
  std::set<std::string> ids;
  for (const auto& p : scene.placements) {
    if (!ids.insert(p.placement_id).second)
      r.violations.push_back({"duplicate_placement", p.placement_id, "placement id reused"});
    if (!paths.contains(p.element_id))
      r.violations.push_back({"dangling_element", p.placement_id, "unknown element '" + p.element_id + "'"});
    if (!(p.scale > 0)) r.violations.push_back({"scale", p.placement_id, "scale must be > 0"});
  }
  // Every cluster's placements must form one contiguous z-run.
  std::set<std::string> closed;
  std::vector<std::string> open;
  for (const auto& p : scene.placements) {
    auto it = paths.find(p.element_id);
    if (it == paths.end()) continue;
    std::vector<std::string> prefixes;
    for (std::size_t n = 1; n <= it->second.size(); ++n)
      prefixes.push_back(path_string(ClusterPath(it->second.begin(), it->second.begin() + static_cast<long>(n))));
    // Close every open prefix this placement is not part of.
    std::vector<std::string> still_open;
    for (const auto& o : open) {
      if (std::find(prefixes.begin(), prefixes.end(), o) != prefixes.end()) still_open.push_back(o);
      else closed.insert(o);
    }
    for (const auto& pre : prefixes) {
      if (closed.contains(pre))
        r.violations.push_back({"cluster_contiguity", p.placement_id, "cluster '" + pre + "' is split in z-order"});
      if (std::find(still_open.begin(), still_open.end(), pre) == still_open.end()) still_open.push_back(pre);
    }
    open = std::move(still_open);
  }
  return r;
}

}  // namespace collage
