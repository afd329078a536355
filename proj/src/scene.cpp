#include "collage/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "collage/errors.hpp"

namespace collage {

namespace fs = std::filesystem;

namespace {

std::vector<Placement>::iterator find_or_throw(SceneDocument& s, const std::string& id) {
  auto it = std::find_if(s.placements.begin(), s.placements.end(), [&](const Placement& p) { return p.placement_id == id; });
  if (it == s.placements.end()) throw NotFoundError("placement '" + id + "' not found");
  return it;
}

const ClusterPath& path_of(const ElementPaths& paths, const ElementId& id) {
  auto it = paths.find(id);
  if (it == paths.end()) throw NotFoundError("element '" + id + "' is not in the session");
  return it->second;
}

SceneDocument next(const SceneDocument& s) {
  SceneDocument n = s;
  ++n.revision;
  return n;
}

SceneDocument insert(const SceneDocument& s, const ElementPaths& paths, Placement p) {
  SceneDocument n = next(s);
  p.placement_id = "p" + std::to_string(n.next_placement_seq++);
  const ClusterPath& path = path_of(paths, p.element_id);
  std::size_t best = 0;
  std::ptrdiff_t after = -1;
  for (std::size_t i = 0; i < n.placements.size(); ++i) {
    const std::size_t c = common_prefix(path, path_of(paths, n.placements[i].element_id));
    if (c > 0 && c >= best) {
      best = c;
      after = static_cast<std::ptrdiff_t>(i);
    }
  }
  // Only the last member of the longest-prefix block counts; the block is contiguous.
  if (after < 0) n.placements.push_back(std::move(p));
  else n.placements.insert(n.placements.begin() + after + 1, std::move(p));
  return n;
}

double wrap_degrees(double d) {
  d = std::fmod(d, 360.0);
  if (d < 0) d += 360.0;
  return d;
}

}  // namespace

SceneDocument place(const SceneDocument& s, const ElementPaths& paths, const ElementId& element_id, double x, double y) {
  Placement p;
  p.element_id = element_id;
  p.x = x;
  p.y = y;
  return insert(s, paths, std::move(p));
}

SceneDocument copy(const SceneDocument& s, const ElementPaths& paths, const std::string& placement_id) {
  const Placement* src = s.find(placement_id);
  if (!src) throw NotFoundError("placement '" + placement_id + "' not found");
  Placement p = *src;
  p.x += 10;
  p.y += 10;
  return insert(s, paths, std::move(p));
}

SceneDocument remove(const SceneDocument& s, const std::string& placement_id) {
  SceneDocument n = next(s);
  n.placements.erase(find_or_throw(n, placement_id));
  return n;
}

SceneDocument move(const SceneDocument& s, const std::string& placement_id, double x, double y) {
  SceneDocument n = next(s);
  auto it = find_or_throw(n, placement_id);
  it->x = x;
  it->y = y;
  return n;
}

SceneDocument scale(const SceneDocument& s, const std::string& placement_id, double factor) {
  if (!(factor > 0) || !std::isfinite(factor)) throw PreconditionError("scale factor must be positive");
  SceneDocument n = next(s);
  find_or_throw(n, placement_id)->scale *= factor;
  return n;
}

SceneDocument flip_h(const SceneDocument& s, const std::string& placement_id) {
  SceneDocument n = next(s);
  auto it = find_or_throw(n, placement_id);
  it->flip_h = !it->flip_h;
  return n;
}

SceneDocument rotate(const SceneDocument& s, const std::string& placement_id, double degrees) {
  if (!std::isfinite(degrees)) throw PreconditionError("rotation must be finite");
  SceneDocument n = next(s);
  auto it = find_or_throw(n, placement_id);
  it->rotation = wrap_degrees(it->rotation + degrees);
  return n;
}

SceneDocument set_visible(const SceneDocument& s, const ElementPaths& paths, const std::string& target, bool visible) {
  SceneDocument n = next(s);
  auto direct = std::find_if(n.placements.begin(), n.placements.end(), [&](const Placement& p) { return p.placement_id == target; });
  if (direct != n.placements.end()) {
    direct->visible = visible;
    return n;
  }
  bool any_cluster = false;
  for (const auto& [id, path] : paths) {
    for (std::size_t k = 1; k <= path.size() && !any_cluster; ++k)
      any_cluster = path_string(ClusterPath(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(k))) == target;
    if (any_cluster) break;
  }
  if (!any_cluster) throw NotFoundError("'" + target + "' is neither a placement nor a cluster");
  for (auto& p : n.placements) {
    const ClusterPath& path = path_of(paths, p.element_id);
    for (std::size_t k = 1; k <= path.size(); ++k)
      if (path_string(ClusterPath(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(k))) == target) {
        p.visible = visible;
        break;
      }
  }
  return n;
}

SceneDocument reorder_within_cluster(const SceneDocument& s, const ElementPaths& paths, const std::string& placement_id,
                                     std::size_t new_index) {
  SceneDocument n = next(s);
  auto it = find_or_throw(n, placement_id);
  const std::size_t from = static_cast<std::size_t>(it - n.placements.begin());
  const ClusterPath& path = path_of(paths, it->element_id);
  std::size_t first = from, last = from;
  while (first > 0 && path_of(paths, n.placements[first - 1].element_id) == path) --first;
  while (last + 1 < n.placements.size() && path_of(paths, n.placements[last + 1].element_id) == path) ++last;
  if (new_index < first || new_index > last)
    throw DomainError("reorder of '" + placement_id + "' to index " + std::to_string(new_index) +
                      " leaves its cluster '" + path_string(path) + "'");
  Placement p = std::move(*it);
  n.placements.erase(it);
  n.placements.insert(n.placements.begin() + static_cast<std::ptrdiff_t>(new_index), std::move(p));
  return n;
}

Rect placement_bounds(const Placement& p, int width, int height) {
  const double w = width * p.scale, h = height * p.scale;
  const double rad = p.rotation * std::numbers::pi / 180.0;
  const double c = std::abs(std::cos(rad)), s = std::abs(std::sin(rad));
  const double hw = (w * c + h * s) / 2, hh = (w * s + h * c) / 2;
  const double cx = p.x + w / 2, cy = p.y + h / 2;
  return {cx - hw, cy - hh, 2 * hw, 2 * hh};
}

std::vector<std::string> box_select(const SceneDocument& s, const ElementLibrary& library, const Rect& r) {
  std::vector<std::string> out;
  for (const auto& p : s.placements) {
    if (!p.visible) continue;
    auto el = library.elements.find(p.element_id);
    if (el == library.elements.end()) throw NotFoundError("element '" + p.element_id + "' is not in the library");
    const Rect b = placement_bounds(p, el->second.cutout_box.w, el->second.cutout_box.h);
    if (b.x < r.x + r.w && r.x < b.x + b.w && b.y < r.y + r.h && r.y < b.y + b.h) out.push_back(p.placement_id);
  }
  return out;
}

RgbaImage render_preview(const SceneDocument& s, const ElementLibrary& library, const fs::path& library_dir) {
  RgbaImage canvas(s.canvas_width, s.canvas_height, 0xffffffffu);
  std::map<ElementId, RgbaImage> cache;
  for (const auto& p : s.placements) {
    if (!p.visible) continue;
    auto el = library.elements.find(p.element_id);
    if (el == library.elements.end()) throw NotFoundError("element '" + p.element_id + "' is not in the library");
    auto img_it = cache.find(p.element_id);
    if (img_it == cache.end()) img_it = cache.emplace(p.element_id, read_png(library_dir / el->second.cutout_path)).first;
    const RgbaImage& src = img_it->second;
    const double w = src.width * p.scale, h = src.height * p.scale;
    const double cx = p.x + w / 2, cy = p.y + h / 2;
    const double rad = p.rotation * std::numbers::pi / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const Rect b = placement_bounds(p, src.width, src.height);
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y)));
    const int x1 = std::min(canvas.width, static_cast<int>(std::ceil(b.x + b.w)));
    const int y1 = std::min(canvas.height, static_cast<int>(std::ceil(b.y + b.h)));
    for (int py = y0; py < y1; ++py) {
      for (int px = x0; px < x1; ++px) {
        // Undo the counterclockwise (on screen) rotation about the centre.
        const double dx = px + 0.5 - cx, dy = py + 0.5 - cy;
        const double lx = cs * dx - sn * dy + w / 2;
        const double ly = sn * dx + cs * dy + h / 2;
        if (lx < 0 || ly < 0 || lx >= w || ly >= h) continue;
        int sx = std::min(src.width - 1, static_cast<int>(lx / p.scale));
        const int sy = std::min(src.height - 1, static_cast<int>(ly / p.scale));
        if (p.flip_h) sx = src.width - 1 - sx;
        const std::uint8_t* sp = src.at(sx, sy);
        if (sp[3] == 0) continue;
        std::uint8_t* dp = canvas.at(px, py);
        const unsigned a = sp[3];
        for (int k = 0; k < 3; ++k) dp[k] = static_cast<std::uint8_t>((sp[k] * a + dp[k] * (255 - a) + 127) / 255);
        dp[3] = 255;
      }
    }
  }
  return canvas;
}

}  // namespace collage
