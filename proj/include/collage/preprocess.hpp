#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "collage/backend.hpp"
#include "collage/json_io.hpp"
#include "collage/model.hpp"

namespace collage {

// Keeps object and scene tags; attributes and actions cannot stand for a cutout.
std::vector<SemanticLabel> filter_tags(const std::vector<SemanticLabel>& tags);

// Detections of one image that share an identical box, collapsed into one
// element-to-be carrying the union of labels (sorted).
struct MergedDetection {
  BoundingBox bbox;
  std::vector<std::string> labels;
  double confidence = 0;  // max over merged detections

  bool operator==(const MergedDetection&) const = default;
};

// Exact (x, y, w, h) equality only; output ordered by (y, x, w, h).
std::vector<MergedDetection> merge_duplicate_detections(const std::vector<Detection>& boxes);

std::string make_element_id(const std::string& image_id, const BoundingBox& bbox);
std::string cutout_file_name(const std::string& label, const std::string& element_id);

struct PrepareOptions {
  double confidence_threshold = 0.35;
  unsigned workers = 0;  // 0: hardware concurrency
  std::string library_id;  // empty: derived from collection and backend
};

struct ImageReport {
  std::string image_id;
  std::string status = "ok";  // ok | failed
  std::string error;
  std::vector<std::string> steps;
  int tags = 0;
  int retained_tags = 0;
  int detections = 0;
  int elements = 0;
  double elapsed_ms = 0;
};

struct RunReport {
  std::string library_id;
  std::string backend;
  std::vector<ImageReport> images;
  double elapsed_ms = 0;

  int failed() const;
};

struct PrepareResult {
  ElementLibrary library;
  RunReport report;
};

// Reads `collection.json` from `dir` when present, otherwise lists the PNG
// files in name order (image_id = file stem). Image paths are resolved
// against `dir`.
PhotoCollection load_collection(const std::filesystem::path& dir);

// "lib-<8 hex>" keyed on the collection id, the backend description and the
// confidence threshold, so every entry point names the same library alike.
std::string derive_library_id(const PhotoCollection& collection, const std::string& backend_description,
                              double confidence_threshold);

// Stage I. Writes `library.json`, `run_report.json` and `cutouts/` under
// `out_dir` via a staging directory renamed into place on success. A failing
// image is reported and skipped; an unwritable `out_dir` is fatal (IoError).
PrepareResult prepare_collection(const PhotoCollection& collection, Backend& backend,
                                 const std::filesystem::path& out_dir, const PrepareOptions& options = {});

Json encode(const RunReport& report);

ElementLibrary load_library(const std::filesystem::path& library_dir);

}  // namespace collage
