#include "collage/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "collage/hierarchy.hpp"

namespace collage {

namespace {

double cosine(const Embedding& a, const Embedding& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / std::sqrt(aa * bb);
}

double distance(const Embedding& a, const Embedding& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace

std::vector<OracleDiff> oracle_check(const AssetHierarchy& hierarchy, const ElementLibrary& library,
                                     const CategoryVocabulary& vocabulary, const ScoringConfig& config,
                                     Backend& backend, double tolerance) {
  std::vector<OracleDiff> diffs;
  std::set<ElementId> expected_suppressed;

  for (const auto& root : hierarchy.categories) {
    const bool character = root.name == vocabulary.characters;
    visit_clusters({root}, [&](const Cluster& c, const ClusterPath&) {
      if (c.leaves.empty()) return;
      const Embedding name = backend.embed_text(c.name).vector;
      double rmin = 0, rmax = 0;
      for (std::size_t i = 0; i < c.leaves.size(); ++i) {
        const double r = static_cast<double>(library.elements.at(c.leaves[i]).resolution);
        rmin = i == 0 ? r : std::min(rmin, r);
        rmax = i == 0 ? r : std::max(rmax, r);
      }
      std::vector<double> totals;
      for (const auto& id : c.leaves) {
        const Embedding& e = library.elements.at(id).visual_embedding;
        double div = 0;
        if (c.leaves.size() > 1) {
          for (const auto& other : c.leaves) {
            if (other == id) continue;
            const Embedding& o = library.elements.at(other).visual_embedding;
            div += (1 - (cosine(e, o) + 1) / 2 + distance(e, o)) / 2;
          }
          div /= static_cast<double>(c.leaves.size() - 1);
        }
        const double cns = (cosine(name, e) + 1) / 2;
        const double r = static_cast<double>(library.elements.at(id).resolution);
        const double res = rmax == rmin ? 1.0 : (r - rmin) / (rmax - rmin);
        const double total = config.w_div * div + config.w_cns * cns + config.w_res * res;
        const double height = character ? config.h0_character + total * config.k_character
                                        : config.h0_other + total * config.k_other;
        totals.push_back(total);

        auto stored = hierarchy.scores.find(id);
        if (stored == hierarchy.scores.end()) {
          diffs.push_back({id, "missing", 0, 0});
          continue;
        }
        const ScoreRecord& s = stored->second;
        const std::pair<const char*, std::pair<double, double>> fields[] = {
            {"s_div", {s.s_div, div}}, {"s_cns", {s.s_cns, cns}}, {"s_res", {s.s_res, res}},
            {"s_total", {s.s_total, total}}, {"height", {s.height, height}}};
        for (const auto& [field, values] : fields)
          if (!(std::abs(values.first - values.second) <= tolerance)) diffs.push_back({id, field, values.first, values.second});
      }
      // An element is a duplicate when some smaller id in the cluster has the same total.
      for (std::size_t i = 0; i < c.leaves.size(); ++i)
        for (std::size_t j = 0; j < c.leaves.size(); ++j)
          if (c.leaves[j] < c.leaves[i] && std::abs(totals[i] - totals[j]) <= 1e-12) {
            expected_suppressed.insert(c.leaves[i]);
            break;
          }
    });
  }

  const std::set<ElementId> stored(hierarchy.suppressed.begin(), hierarchy.suppressed.end());
  for (const auto& id : expected_suppressed)
    if (!stored.contains(id)) diffs.push_back({id, "suppressed", 0, 1});
  for (const auto& id : stored)
    if (!expected_suppressed.contains(id)) diffs.push_back({id, "suppressed", 1, 0});
  return diffs;
}

}  // namespace collage
