#include "collage/layout.hpp"

#include <algorithm>
#include <set>

#include "collage/errors.hpp"
#include "collage/hierarchy.hpp"
#include "collage/util.hpp"

namespace collage {

void seeded_shuffle(std::vector<ElementId>& ids, std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
}

PresentationLayout layout_grid(const AssetHierarchy& hierarchy, const ElementLibrary& library,
                               const ScoringConfig& config, const LayoutOptions& options) {
  if (!(options.canvas_width > 0)) throw PreconditionError("layout: canvas width must be positive");
  if (options.gap < 0) throw PreconditionError("layout: gap must be non-negative");

  PresentationLayout out;
  out.canvas_width = options.canvas_width;
  out.mode = options.mode;
  visit_clusters(hierarchy.categories, [&](const Cluster&, const ClusterPath& path) { out.cluster_order.push_back(path_string(path)); });

  const std::set<ElementId> suppressed(hierarchy.suppressed.begin(), hierarchy.suppressed.end());
  std::vector<ElementId> order;
  for (const auto& id : leaves_in_order(hierarchy.categories))
    if (!suppressed.contains(id) && !options.hidden.contains(id)) order.push_back(id);
  if (options.mode == PresentMode::uniform) seeded_shuffle(order, options.shuffle_seed);

  double x = 0, y = 0, row_h = 0;
  for (const auto& id : order) {
    auto el = library.elements.find(id);
    if (el == library.elements.end()) throw PreconditionError("layout: element '" + id + "' is not in the library");
    double h = config.h0_other;
    if (options.mode == PresentMode::sized) {
      auto sc = hierarchy.scores.find(id);
      if (sc == hierarchy.scores.end()) throw PreconditionError("layout: element '" + id + "' has no score");
      h = sc->second.height;
    }
    const BoundingBox& box = el->second.cutout_box;
    double w = h * static_cast<double>(box.w) / static_cast<double>(box.h);
    if (w > options.canvas_width) {
      h *= options.canvas_width / w;
      w = options.canvas_width;
      out.warnings.push_back("tile " + id + " wider than the canvas; scaled down to fit");
    }
    if (x > 0 && x + w > options.canvas_width) {
      y += row_h + options.gap;
      x = 0;
      row_h = 0;
    }
    out.tiles.push_back({id, x, y, w, h});
    x += w + options.gap;
    row_h = std::max(row_h, h);
  }
  return out;
}

Json presentation_json(const PresentationLayout& layout, const AssetHierarchy& hierarchy) {
  Json j = encode(layout);
  Json scores = Json::object();
  for (const auto& t : layout.tiles) {
    auto it = hierarchy.scores.find(t.element_id);
    if (it != hierarchy.scores.end()) scores[t.element_id] = encode(it->second);
  }
  j["scores"] = scores;
  return j;
}

}  // namespace collage
