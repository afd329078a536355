#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "collage/backend.hpp"

namespace collage {

// Ground truth the mock reads for a source image, from the sidecar file
// `<image stem>.mock.json` next to the image:
//   {"tags": [{"text", "category"}...], "regions": [{"label", "x", "y", "w", "h"}...]}
// Region labels missing from "tags" are tagged as objects. Without a sidecar
// the mock derives a pseudo-random set from (seed, image_id).
struct MockRegion {
  std::string label;
  BoundingBox bbox;
};

struct MockGroundTruth {
  std::vector<SemanticLabel> tags;
  std::vector<MockRegion> regions;
};

std::filesystem::path mock_sidecar_path(const std::filesystem::path& image_path);

// Deterministic, stateless stand-in for every model operation.
//
// Embeddings: embed_text(s) is a unit vector drawn from a generator keyed on
// (seed, s). embed_image(cutout) takes the label from the cutout file name
// (`<label>_<id>.png`), adds `noise` times a unit vector keyed on the file's
// bytes, and renormalises. The cosine between an image and its label's text
// embedding is therefore at least sqrt(1 - noise^2) for noise < 1.
//
// LLM: a rule engine over the bundled knowledge tables that recognises the
// selection, keyword, classification and clustering prompts by their role line.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::uint64_t seed, double noise = 0.25, int dim = 64);

  TagResult tag_image(const SourceImage& image) override;
  DetectResult detect(const SourceImage& image, const std::string& label) override;
  SegmentResult segment(const SourceImage& image, const BoundingBox& bbox,
                        const std::filesystem::path& out_path) override;
  EmbedResult embed_image(const std::filesystem::path& cutout_path) override;
  EmbedResult embed_text(const std::string& text) override;
  ParseCharacterResult parse_character(const std::filesystem::path& cutout_path,
                                       const std::filesystem::path& out_dir) override;
  LlmStructuredResult llm_complete(const std::string& system_prompt, const std::string& user_payload) override;

  int embedding_dim() const override { return dim_; }
  std::string describe() const override;

  MockGroundTruth ground_truth(const SourceImage& image) const;

 private:
  Embedding unit_vector(std::uint64_t key) const;

  std::uint64_t seed_;
  double noise_;
  int dim_;
};

// The mock LLM's answer for a prompt pair, exposed for tests.
std::string mock_llm_answer(const std::string& system_prompt, const std::string& user_payload);

}  // namespace collage
