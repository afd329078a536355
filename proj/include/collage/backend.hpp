#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "collage/model.hpp"

namespace collage {

struct TagResult {
  std::vector<SemanticLabel> tags;
};

struct Detection {
  std::string label;
  BoundingBox bbox;
  double confidence = 0;
};

struct DetectResult {
  std::vector<Detection> boxes;
};

// The cutout written to `mask_path` is the source pixels inside the mask,
// cropped to `tight_bbox` (source-image coordinates).
struct SegmentResult {
  std::string mask_path;
  BoundingBox tight_bbox;
};

struct EmbedResult {
  Embedding vector;
};

struct ParseCharacterResult {
  CharacterRig rig;  // mask paths as written by the backend
};

struct LlmStructuredResult {
  std::string raw_text;
  std::optional<nlohmann::ordered_json> parsed_json;
};

// Model operations the pipeline needs. Implementations must be safe for
// concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual TagResult tag_image(const SourceImage& image) = 0;
  virtual DetectResult detect(const SourceImage& image, const std::string& label) = 0;
  virtual SegmentResult segment(const SourceImage& image, const BoundingBox& bbox,
                                const std::filesystem::path& out_path) = 0;
  virtual EmbedResult embed_image(const std::filesystem::path& cutout_path) = 0;
  virtual EmbedResult embed_text(const std::string& text) = 0;
  // Throws NoCharacterDetected for non-humanoid content.
  virtual ParseCharacterResult parse_character(const std::filesystem::path& cutout_path,
                                               const std::filesystem::path& out_dir) = 0;
  virtual LlmStructuredResult llm_complete(const std::string& system_prompt, const std::string& user_payload) = 0;

  virtual int embedding_dim() const = 0;
  virtual std::string describe() const = 0;
};

using BackendPtr = std::shared_ptr<Backend>;

enum class BackendKind { mock, remote };
enum class PayloadMode { local_path, inline_base64 };

struct BackendDescriptor {
  BackendKind kind = BackendKind::mock;
  std::string base_url;  // remote only
  std::optional<std::uint64_t> seed;  // mock only
  double timeout_s = 30;
  PayloadMode payload = PayloadMode::local_path;
  double mock_noise = 0.25;
  int mock_dim = 64;

  static BackendDescriptor mock(std::uint64_t seed) {
    BackendDescriptor d;
    d.seed = seed;
    return d;
  }
  static BackendDescriptor remote(std::string url) {
    BackendDescriptor d;
    d.kind = BackendKind::remote;
    d.base_url = std::move(url);
    return d;
  }
};

// Throws PreconditionError when the descriptor breaks its invariants.
void check_descriptor(const BackendDescriptor& d);

// Reads COLLAGE_BACKEND_URL, COLLAGE_BACKEND_TIMEOUT_S, COLLAGE_MOCK_SEED.
// A URL selects the remote kind; otherwise the mock with the given seed (default 7).
BackendDescriptor descriptor_from_env();

// Parses "mock" or a URL as given on the command line / in API requests.
BackendDescriptor descriptor_from_spec(const std::string& spec, std::optional<std::uint64_t> seed);
std::string describe(const BackendDescriptor& d);

// Builds the backend for a descriptor, wrapped in the contract checker.
BackendPtr make_backend(const BackendDescriptor& d);

// Decorator that enforces the wire contract on every response: in-bounds
// boxes, confidence range, unit-norm embeddings of the advertised dimension,
// non-empty segmentation, joints inside the cutout. Violations raise
// ProtocolError; bad inputs raise PreconditionError.
BackendPtr with_contract_checks(BackendPtr inner);

}  // namespace collage
