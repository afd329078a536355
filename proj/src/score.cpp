#include "collage/score.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "collage/errors.hpp"
#include "collage/hierarchy.hpp"
#include "collage/util.hpp"

namespace collage {

double normalized_cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ScoringError("embedding dimensions differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0 || nb == 0) throw ScoringError("zero-length embedding");
  const double cos = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
  return (cos + 1) / 2;
}

double score_diversity(const std::vector<Embedding>& cluster, std::size_t i) {
  if (i >= cluster.size()) throw ScoringError("element index outside its cluster");
  if (cluster.size() == 1) return 0;
  const Embedding& ei = cluster[i];
  double sum = 0;
  for (std::size_t j = 0; j < cluster.size(); ++j) {
    if (j == i) continue;
    const Embedding& ej = cluster[j];
    const double ncos = normalized_cosine(ei, ej);
    double d2 = 0;
    for (std::size_t k = 0; k < ei.size(); ++k) d2 += (ei[k] - ej[k]) * (ei[k] - ej[k]);
    sum += (1 - ncos + std::sqrt(d2)) / 2;
  }
  return sum / static_cast<double>(cluster.size() - 1);
}

double score_consistency(const Embedding& name_embedding, const Embedding& element) {
  return normalized_cosine(name_embedding, element);
}

double score_resolution(std::int64_t resolution, std::int64_t min_resolution, std::int64_t max_resolution) {
  if (max_resolution == min_resolution) return 1;
  return static_cast<double>(resolution - min_resolution) / static_cast<double>(max_resolution - min_resolution);
}

double combine_score(double s_div, double s_cns, double s_res, const ScoringConfig& c) {
  if (c.w_div < 0 || c.w_cns < 0 || c.w_res < 0) throw PreconditionError("scoring weights must be non-negative");
  return c.w_div * s_div + c.w_cns * s_cns + c.w_res * s_res;
}

double compute_height(double s_total, CategoryRole role, const ScoringConfig& c) {
  return role == CategoryRole::characters ? c.h0_character + s_total * c.k_character : c.h0_other + s_total * c.k_other;
}

std::vector<ElementId> dedup_by_score(const std::vector<ElementId>& cluster, const std::map<ElementId, ScoreRecord>& scores) {
  std::vector<ElementId> ids = cluster;
  std::sort(ids.begin(), ids.end());
  std::vector<ElementId> survivors, suppressed;
  for (const auto& id : ids) {
    const double s = scores.at(id).s_total;
    const bool tie = std::any_of(survivors.begin(), survivors.end(), [&](const ElementId& k) {
      return std::abs(scores.at(k).s_total - s) <= kScoreTieTolerance;
    });
    (tie ? suppressed : survivors).push_back(id);
  }
  return suppressed;
}

void score_hierarchy(AssetHierarchy& hierarchy, const ElementLibrary& library, const CategoryVocabulary& vocabulary,
                     const ScoringConfig& config, Backend& backend) {
  hierarchy.scores.clear();
  hierarchy.suppressed.clear();
  std::map<std::string, Embedding> name_cache;

  for (const auto& root : hierarchy.categories) {
    const auto role = vocabulary.role_of(root.name);
    if (!role) throw ScoringError("category '" + root.name + "' is not in the vocabulary");
    visit_clusters({root}, [&](const Cluster& c, const ClusterPath&) {
      if (c.leaves.empty()) return;
      std::vector<Embedding> embeddings;
      std::int64_t rmin = INT64_MAX, rmax = INT64_MIN;
      for (const auto& id : c.leaves) {
        auto it = library.elements.find(id);
        if (it == library.elements.end()) throw ScoringError("element '" + id + "' is not in the library");
        embeddings.push_back(it->second.visual_embedding);
        rmin = std::min(rmin, it->second.resolution);
        rmax = std::max(rmax, it->second.resolution);
      }
      auto cached = name_cache.find(c.name);
      if (cached == name_cache.end()) {
        Embedding e;
        try {
          e = backend.embed_text(c.name).vector;
        } catch (const std::exception& ex) {
          throw ScoringError("text embedding for cluster '" + c.name + "' failed: " + ex.what());
        }
        cached = name_cache.emplace(c.name, std::move(e)).first;
      }
      for (std::size_t i = 0; i < c.leaves.size(); ++i) {
        ScoreRecord r;
        r.s_div = score_diversity(embeddings, i);
        r.s_cns = score_consistency(cached->second, embeddings[i]);
        r.s_res = score_resolution(library.elements.at(c.leaves[i]).resolution, rmin, rmax);
        r.s_total = combine_score(r.s_div, r.s_cns, r.s_res, config);
        r.height = compute_height(r.s_total, *role, config);
        hierarchy.scores[c.leaves[i]] = r;
      }
      for (auto& id : dedup_by_score(c.leaves, hierarchy.scores)) hierarchy.suppressed.push_back(id);
    });
  }
  std::sort(hierarchy.suppressed.begin(), hierarchy.suppressed.end());
}

}  // namespace collage
