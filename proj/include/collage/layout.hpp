#pragma once

#include <cstdint>
#include <set>

#include "collage/json_io.hpp"
#include "collage/model.hpp"

namespace collage {

struct LayoutOptions {
  double canvas_width = 1280;
  PresentMode mode = PresentMode::sized;
  double gap = 0;
  std::uint64_t shuffle_seed = 7;  // uniform mode only
  std::set<ElementId> hidden;
};

// Row-major grid. Sized mode: cluster DFS order, height from the score
// record. Uniform mode: every tile at the non-character base height, order
// shuffled with `shuffle_seed`. Suppressed and hidden elements are skipped.
// Tile width keeps the cutout's aspect ratio; a tile wider than the canvas is
// scaled down to fit and noted in `warnings`.
PresentationLayout layout_grid(const AssetHierarchy& hierarchy, const ElementLibrary& library,
                               const ScoringConfig& config, const LayoutOptions& options = {});

// Fisher-Yates driven by SplitMix64, so the order is the same on every platform.
void seeded_shuffle(std::vector<ElementId>& ids, std::uint64_t seed);

// presentation.json: the layout plus the score record of every tiled element.
Json presentation_json(const PresentationLayout& layout, const AssetHierarchy& hierarchy);

}  // namespace collage
