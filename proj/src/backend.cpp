#include "collage/backend.hpp"

#include <cmath>
#include <cstdlib>

#include "collage/errors.hpp"
#include "collage/image.hpp"
#include "collage/mock_backend.hpp"
#include "collage/remote_backend.hpp"
#include "collage/util.hpp"

namespace collage {

void check_descriptor(const BackendDescriptor& d) {
  if (d.kind == BackendKind::mock && !d.seed) throw PreconditionError("mock backend requires a seed");
  if (d.kind == BackendKind::remote && d.base_url.empty()) throw PreconditionError("remote backend requires base_url");
  if (!(d.timeout_s > 0)) throw PreconditionError("backend timeout must be > 0");
}

BackendDescriptor descriptor_from_env() {
  BackendDescriptor d;
  const char* url = std::getenv("COLLAGE_BACKEND_URL");
  const char* timeout = std::getenv("COLLAGE_BACKEND_TIMEOUT_S");
  const char* seed = std::getenv("COLLAGE_MOCK_SEED");
  if (url && *url) {
    d.kind = BackendKind::remote;
    d.base_url = url;
  } else {
    d.seed = seed && *seed ? std::strtoull(seed, nullptr, 10) : 7;
  }
  if (timeout && *timeout) d.timeout_s = std::strtod(timeout, nullptr);
  return d;
}

BackendDescriptor descriptor_from_spec(const std::string& spec, std::optional<std::uint64_t> seed) {
  BackendDescriptor d = descriptor_from_env();
  if (spec.empty() || spec == "mock") {
    d.kind = BackendKind::mock;
    d.base_url.clear();
    if (seed) d.seed = seed;
    if (!d.seed) d.seed = 7;
  } else {
    d.kind = BackendKind::remote;
    d.base_url = spec;
    d.seed.reset();
  }
  return d;
}

std::string describe(const BackendDescriptor& d) {
  if (d.kind == BackendKind::mock) return "mock(seed=" + std::to_string(d.seed.value_or(0)) + ")";
  return "remote(" + d.base_url + ")";
}

BackendPtr make_backend(const BackendDescriptor& d) {
  check_descriptor(d);
  if (d.kind == BackendKind::mock)
    return with_contract_checks(std::make_shared<MockBackend>(*d.seed, d.mock_noise, d.mock_dim));
  return with_contract_checks(std::make_shared<RemoteBackend>(d));
}

namespace {

class ContractChecked final : public Backend {
 public:
  explicit ContractChecked(BackendPtr inner) : inner_(std::move(inner)) {}

  TagResult tag_image(const SourceImage& image) override {
    TagResult r = inner_->tag_image(image);
    for (const auto& t : r.tags)
      if (trim(t.text).empty()) throw ProtocolError("tag: empty tag text");
    return r;
  }

  DetectResult detect(const SourceImage& image, const std::string& label) override {
    if (label.empty()) throw PreconditionError("detect: label must be non-empty");
    DetectResult r = inner_->detect(image, label);
    for (const auto& b : r.boxes) {
      if (!b.bbox.inside(image.width, image.height))
        throw ProtocolError("detect: box for '" + b.label + "' exceeds image bounds");
      if (!(b.confidence >= 0 && b.confidence <= 1)) throw ProtocolError("detect: confidence outside [0,1]");
    }
    return r;
  }

  SegmentResult segment(const SourceImage& image, const BoundingBox& bbox,
                        const std::filesystem::path& out_path) override {
    if (!bbox.inside(image.width, image.height)) throw PreconditionError("segment: bbox outside image");
    SegmentResult r = inner_->segment(image, bbox, out_path);
    if (!bbox.contains(r.tight_bbox)) throw ProtocolError("segment: tight box not inside the prompt box");
    std::error_code ec;
    if (r.mask_path.empty() || !std::filesystem::exists(r.mask_path, ec))
      throw ProtocolError("segment: mask file missing");
    const PngInfo info = probe_png(r.mask_path);
    if (!info.has_alpha) throw ProtocolError("segment: cutout has no alpha channel");
    if (info.width != r.tight_bbox.w || info.height != r.tight_bbox.h)
      throw ProtocolError("segment: cutout size differs from tight box");
    return r;
  }

  EmbedResult embed_image(const std::filesystem::path& cutout_path) override {
    if (cutout_path.empty()) throw PreconditionError("embed_image: path must be non-empty");
    return check_unit(inner_->embed_image(cutout_path), "embed_image");
  }

  EmbedResult embed_text(const std::string& text) override {
    if (text.empty()) throw PreconditionError("embed_text: text must be non-empty");
    return check_unit(inner_->embed_text(text), "embed_text");
  }

  ParseCharacterResult parse_character(const std::filesystem::path& cutout_path,
                                       const std::filesystem::path& out_dir) override {
    ParseCharacterResult r = inner_->parse_character(cutout_path, out_dir);
    const PngInfo info = probe_png(cutout_path);
    if (r.rig.parts.empty()) throw ProtocolError("parse_character: rig without parts");
    bool has_center = false;
    for (const auto& jt : r.rig.joints) {
      if (jt.x < 0 || jt.y < 0 || jt.x > info.width || jt.y > info.height)
        throw ProtocolError("parse_character: joint '" + jt.name + "' outside cutout bounds");
      has_center = has_center || jt.role == JointRole::rotation_center;
    }
    if (!has_center) throw ProtocolError("parse_character: rig without rotation center");
    return r;
  }

  LlmStructuredResult llm_complete(const std::string& system_prompt, const std::string& user_payload) override {
    if (system_prompt.empty() || user_payload.empty()) throw PreconditionError("llm_complete: prompts must be non-empty");
    return inner_->llm_complete(system_prompt, user_payload);
  }

  int embedding_dim() const override { return inner_->embedding_dim(); }
  std::string describe() const override { return inner_->describe(); }

 private:
  EmbedResult check_unit(EmbedResult r, const char* op) const {
    if (static_cast<int>(r.vector.size()) != inner_->embedding_dim())
      throw ProtocolError(std::string(op) + ": embedding dimension mismatch");
    const double n = l2_norm(r.vector);
    if (!(std::abs(n - 1.0) <= 1e-6)) throw ProtocolError(std::string(op) + ": embedding is not unit norm");
    return r;
  }

  BackendPtr inner_;
};

}  // namespace

BackendPtr with_contract_checks(BackendPtr inner) { return std::make_shared<ContractChecked>(std::move(inner)); }

}  // namespace collage
