#include "collage/mock_backend.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "collage/errors.hpp"
#include "collage/image.hpp"
#include "collage/json_io.hpp"
#include "collage/knowledge.hpp"
#include "collage/util.hpp"

namespace collage {

namespace {

constexpr std::uint64_t kTextDomain = 0x7465787400000000ULL;   // "text"
constexpr std::uint64_t kNoiseDomain = 0x6e6f697365000000ULL;  // "noise"

std::string label_from_cutout_name(const std::filesystem::path& p) {
  const std::string stem = p.stem().string();
  const auto pos = stem.rfind('_');
  return pos == std::string::npos ? stem : stem.substr(0, pos);
}

int frac(int extent, double f) { return static_cast<int>(std::floor(extent * f)); }

// Sub-rectangle [x0,x1) x [y0,y1) given as fractions, clamped to at least 1px.
BoundingBox part_box(int w, int h, double fx0, double fy0, double fx1, double fy1) {
  BoundingBox b;
  b.x = std::min(frac(w, fx0), w - 1);
  b.y = std::min(frac(h, fy0), h - 1);
  b.w = std::max(1, std::min(frac(w, fx1), w) - b.x);
  b.h = std::max(1, std::min(frac(h, fy1), h) - b.y);
  return b;
}

}  // namespace

std::filesystem::path mock_sidecar_path(const std::filesystem::path& image_path) {
  auto p = image_path;
  p.replace_extension(".mock.json");
  return p;
}

MockBackend::MockBackend(std::uint64_t seed, double noise, int dim) : seed_(seed), noise_(noise), dim_(dim) {
  if (dim_ < 1) throw PreconditionError("mock embedding dimension must be >= 1");
  if (noise_ < 0 || noise_ >= 1) throw PreconditionError("mock noise must lie in [0, 1)");
}

std::string MockBackend::describe() const { return "mock(seed=" + std::to_string(seed_) + ")"; }

Embedding MockBackend::unit_vector(std::uint64_t key) const {
  SplitMix64 rng(key ^ (seed_ * 0x9e3779b97f4a7c15ULL));
  Embedding v(static_cast<std::size_t>(dim_));
  for (auto& x : v) x = rng.normal();
  return normalized(std::move(v));
}

MockGroundTruth MockBackend::ground_truth(const SourceImage& image) const {
  MockGroundTruth gt;
  const auto sidecar = mock_sidecar_path(image.path);
  std::error_code ec;
  if (std::filesystem::exists(sidecar, ec)) {
    const Json j = read_json_file(sidecar);
    if (j.contains("tags"))
      for (const auto& t : j.at("tags")) gt.tags.push_back(decode<SemanticLabel>(t, sidecar.filename().string()));
    if (j.contains("regions")) {
      for (const auto& r : j.at("regions")) {
        MockRegion region;
        region.label = r.at("label").get<std::string>();
        region.bbox = decode<BoundingBox>(r, sidecar.filename().string());
        gt.regions.push_back(std::move(region));
      }
    }
    for (const auto& r : gt.regions) {
      const bool tagged = std::any_of(gt.tags.begin(), gt.tags.end(), [&](const SemanticLabel& t) { return t.text == r.label; });
      if (!tagged) gt.tags.push_back({r.label, LabelCategory::object});
    }
    return gt;
  }

  SplitMix64 rng(fnv1a64(image.image_id) ^ seed_);
  const auto& vocab = knowledge::fallback_vocabulary();
  std::vector<std::size_t> order(vocab.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::size_t n = 3 + rng.below(3);
  for (std::size_t k = 0; k < n && k < order.size(); ++k) {
    const SemanticLabel& tag = vocab[order[k]];
    gt.tags.push_back(tag);
    if (tag.category == LabelCategory::scene) {
      gt.regions.push_back({tag.text, {0, 0, image.width, image.height}});
    } else if (tag.category == LabelCategory::object) {
      const std::uint64_t count = 1 + rng.below(2);
      for (std::uint64_t c = 0; c < count; ++c) {
        BoundingBox b;
        b.w = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, image.width / 2))));
        b.h = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, image.height / 2))));
        b.x = static_cast<int>(rng.below(static_cast<std::uint64_t>(image.width - b.w + 1)));
        b.y = static_cast<int>(rng.below(static_cast<std::uint64_t>(image.height - b.h + 1)));
        gt.regions.push_back({tag.text, b});
      }
    }
  }
  return gt;
}

TagResult MockBackend::tag_image(const SourceImage& image) { return {ground_truth(image).tags}; }

DetectResult MockBackend::detect(const SourceImage& image, const std::string& label) {
  if (label.empty()) throw PreconditionError("detect: label must be non-empty");
  DetectResult out;
  for (const auto& r : ground_truth(image).regions) {
    if (r.label != label) continue;
    const std::uint64_t h = fnv1a64(image.image_id + "|" + label + "|" + std::to_string(r.bbox.x) + "," +
                                    std::to_string(r.bbox.y), seed_);
    out.boxes.push_back({label, r.bbox, 0.5 + 0.49 * static_cast<double>(h % 1000) / 999.0});
  }
  std::sort(out.boxes.begin(), out.boxes.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.bbox.y, a.bbox.x, a.bbox.w, a.bbox.h) < std::tie(b.bbox.y, b.bbox.x, b.bbox.w, b.bbox.h);
  });
  return out;
}

SegmentResult MockBackend::segment(const SourceImage& image, const BoundingBox& bbox,
                                   const std::filesystem::path& out_path) {
  if (!bbox.inside(image.width, image.height)) throw PreconditionError("segment: bbox outside image");
  const RgbaImage src = read_png(image.path);
  if (!bbox.inside(src.width, src.height)) throw PreconditionError("segment: bbox outside decoded image");
  RgbaImage cut = src.crop(bbox.x, bbox.y, bbox.w, bbox.h);
  for (std::size_t i = 3; i < cut.pixels.size(); i += 4) cut.pixels[i] = 255;
  write_png(out_path, cut);
  return {out_path.string(), bbox};
}

EmbedResult MockBackend::embed_image(const std::filesystem::path& cutout_path) {
  const auto bytes = read_binary_file(cutout_path);
  if (bytes.empty()) throw PreconditionError("embed_image: empty cutout");
  const std::string label = label_from_cutout_name(cutout_path);
  Embedding base = embed_text(label).vector;
  if (noise_ == 0) return {base};
  const std::string_view content(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const Embedding n = unit_vector(fnv1a64(content) ^ kNoiseDomain);
  for (std::size_t i = 0; i < base.size(); ++i) base[i] += noise_ * n[i];
  return {normalized(std::move(base))};
}

EmbedResult MockBackend::embed_text(const std::string& text) {
  if (text.empty()) throw PreconditionError("embed_text: text must be non-empty");
  return {unit_vector(fnv1a64(text) ^ kTextDomain)};
}

ParseCharacterResult MockBackend::parse_character(const std::filesystem::path& cutout_path,
                                                  const std::filesystem::path& out_dir) {
  const RgbaImage cut = read_png(cutout_path);
  const int w = cut.width, h = cut.height;
  struct PartSpec {
    const char* name;
    double x0, y0, x1, y1;
  };
  static constexpr PartSpec kParts[] = {
      {"head", 0.30, 0.00, 0.70, 0.25},     {"torso", 0.25, 0.20, 0.75, 0.60},
      {"left_arm", 0.00, 0.20, 0.30, 0.60}, {"right_arm", 0.70, 0.20, 1.00, 0.60},
      {"left_leg", 0.25, 0.55, 0.50, 1.00}, {"right_leg", 0.50, 0.55, 0.75, 1.00}};
  ParseCharacterResult out;
  const std::string stem = cutout_path.stem().string();
  for (const auto& spec : kParts) {
    const BoundingBox b = part_box(w, h, spec.x0, spec.y0, spec.x1, spec.y1);
    // Part masks keep the cutout's canvas so they stack in place.
    RgbaImage mask(w, h, 0x00000000);
    for (int y = b.y; y < b.y + b.h; ++y)
      for (int x = b.x; x < b.x + b.w; ++x) std::copy_n(cut.at(x, y), 4, mask.at(x, y));
    const auto path = out_dir / (stem + "_" + spec.name + ".png");
    write_png(path, mask);
    out.rig.parts.push_back({spec.name, path.string()});
  }
  struct JointSpec {
    const char* name;
    double fx, fy;
    JointRole role;
  };
  static constexpr JointSpec kJoints[] = {
      {"neck", 0.50, 0.22, JointRole::rotation_center},
      {"left_shoulder", 0.30, 0.25, JointRole::rotation_center},
      {"right_shoulder", 0.70, 0.25, JointRole::rotation_center},
      {"left_hip", 0.40, 0.58, JointRole::rotation_center},
      {"right_hip", 0.60, 0.58, JointRole::rotation_center},
      {"nose", 0.50, 0.10, JointRole::auxiliary}};
  for (const auto& js : kJoints) out.rig.joints.push_back({js.name, w * js.fx, h * js.fy, js.role});
  return out;
}

LlmStructuredResult MockBackend::llm_complete(const std::string& system_prompt, const std::string& user_payload) {
  if (system_prompt.empty() || user_payload.empty()) throw PreconditionError("llm_complete: prompts must be non-empty");
  LlmStructuredResult r;
  r.raw_text = mock_llm_answer(system_prompt, user_payload);
  try {
    r.parsed_json = nlohmann::ordered_json::parse(r.raw_text);
  } catch (const nlohmann::ordered_json::parse_error&) {
    r.parsed_json.reset();
  }
  return r;
}

}  // namespace collage
