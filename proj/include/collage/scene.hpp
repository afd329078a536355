#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "collage/hierarchy.hpp"
#include "collage/image.hpp"
#include "collage/model.hpp"

namespace collage {

// Element id -> cluster path, as produced by leaf_paths(hierarchy.categories).
using ElementPaths = std::map<ElementId, ClusterPath>;

struct Rect {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
};

// Every op returns the next version of the scene with revision + 1. Unknown
// ids raise NotFoundError. Placements stay grouped by cluster: a new
// placement goes right after the placements that share most of its path.
SceneDocument place(const SceneDocument& s, const ElementPaths& paths, const ElementId& element_id, double x, double y);
SceneDocument copy(const SceneDocument& s, const ElementPaths& paths, const std::string& placement_id);
SceneDocument remove(const SceneDocument& s, const std::string& placement_id);
SceneDocument move(const SceneDocument& s, const std::string& placement_id, double x, double y);
SceneDocument scale(const SceneDocument& s, const std::string& placement_id, double factor);
SceneDocument flip_h(const SceneDocument& s, const std::string& placement_id);
SceneDocument rotate(const SceneDocument& s, const std::string& placement_id, double degrees);
// `target` is a placement id or a cluster path ("accessories/plant").
SceneDocument set_visible(const SceneDocument& s, const ElementPaths& paths, const std::string& target, bool visible);
// Moves a placement to absolute z index `new_index` (0 = back). Throws
// DomainError when the index leaves the block of its own cluster.
SceneDocument reorder_within_cluster(const SceneDocument& s, const ElementPaths& paths, const std::string& placement_id,
                                     std::size_t new_index);

// Axis-aligned bounds of a placement after scale, flip and rotation.
// `size` is the cutout's pixel size.
Rect placement_bounds(const Placement& p, int width, int height);

// Visible placements whose bounds overlap `rect` with positive area, in z order.
std::vector<std::string> box_select(const SceneDocument& s, const ElementLibrary& library, const Rect& rect);

// White canvas with visible placements composited back to front,
// nearest-neighbour sampling.
RgbaImage render_preview(const SceneDocument& s, const ElementLibrary& library,
                         const std::filesystem::path& library_dir);

}  // namespace collage
