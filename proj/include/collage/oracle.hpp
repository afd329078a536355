#pragma once

#include <string>
#include <vector>

#include "collage/backend.hpp"
#include "collage/model.hpp"

namespace collage {

struct OracleDiff {
  ElementId element_id;
  std::string field;  // s_div, s_cns, s_res, s_total, height, suppressed, missing
  double stored = 0;
  double expected = 0;
};

// Recomputes every stored score of a hierarchy straight from the formulas,
// one element at a time, and lists the fields that differ by more than
// `tolerance`. Dedup membership is checked too.
std::vector<OracleDiff> oracle_check(const AssetHierarchy& hierarchy, const ElementLibrary& library,
                                     const CategoryVocabulary& vocabulary, const ScoringConfig& config,
                                     Backend& backend, double tolerance = 1e-9);

}  // namespace collage
