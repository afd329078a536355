#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "collage/backend.hpp"
#include "collage/model.hpp"

namespace collage {

// Cosine similarity mapped from [-1, 1] onto [0, 1] by (cos + 1) / 2.
double normalized_cosine(std::span<const double> a, std::span<const double> b);

// Diversity of cluster[i] against the rest of its cluster. Singleton -> 0.
// Range [0, 1.5] for unit vectors. Throws ScoringError on dimension mismatch.
double score_diversity(const std::vector<Embedding>& cluster, std::size_t i);

// Consistency of an element with its cluster name's text embedding, in [0, 1].
double score_consistency(const Embedding& name_embedding, const Embedding& element);

// Min-max normalised resolution; 1 when every resolution in the cluster is equal.
double score_resolution(std::int64_t resolution, std::int64_t min_resolution, std::int64_t max_resolution);

double combine_score(double s_div, double s_cns, double s_res, const ScoringConfig& config);

double compute_height(double s_total, CategoryRole role, const ScoringConfig& config);

// Ids whose s_total ties (within 1e-12) with a smaller id of the same
// cluster; the smallest id of each tie group survives. Sorted.
std::vector<ElementId> dedup_by_score(const std::vector<ElementId>& cluster,
                                      const std::map<ElementId, ScoreRecord>& scores);

inline constexpr double kScoreTieTolerance = 1e-12;

// Scores every element of every cluster that holds leaves, fills
// `hierarchy.scores` (heights included) and `hierarchy.suppressed`.
// Consistency uses the backend's text embedding of each cluster's name.
void score_hierarchy(AssetHierarchy& hierarchy, const ElementLibrary& library, const CategoryVocabulary& vocabulary,
                     const ScoringConfig& config, Backend& backend);

}  // namespace collage
