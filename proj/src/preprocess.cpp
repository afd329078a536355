#include "collage/preprocess.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <set>
#include <thread>
#include <tuple>
#include <unistd.h>

#include "collage/errors.hpp"
#include "collage/image.hpp"
#include "collage/util.hpp"

namespace collage {

namespace fs = std::filesystem;

std::vector<SemanticLabel> filter_tags(const std::vector<SemanticLabel>& tags) {
  std::vector<SemanticLabel> out;
  for (const auto& t : tags)
    if (t.category == LabelCategory::object || t.category == LabelCategory::scene) out.push_back(t);
  return out;
}

std::vector<MergedDetection> merge_duplicate_detections(const std::vector<Detection>& boxes) {
  std::vector<MergedDetection> out;
  for (const auto& d : boxes) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MergedDetection& m) { return m.bbox == d.bbox; });
    if (it == out.end()) {
      out.push_back({d.bbox, {d.label}, d.confidence});
    } else {
      if (std::find(it->labels.begin(), it->labels.end(), d.label) == it->labels.end()) it->labels.push_back(d.label);
      it->confidence = std::max(it->confidence, d.confidence);
    }
  }
  for (auto& m : out) std::sort(m.labels.begin(), m.labels.end());
  std::sort(out.begin(), out.end(), [](const MergedDetection& a, const MergedDetection& b) {
    return std::tie(a.bbox.y, a.bbox.x, a.bbox.w, a.bbox.h) < std::tie(b.bbox.y, b.bbox.x, b.bbox.w, b.bbox.h);
  });
  return out;
}

std::string make_element_id(const std::string& image_id, const BoundingBox& b) {
  return hex8(fnv1a64(image_id + "|" + std::to_string(b.x) + "," + std::to_string(b.y) + "," + std::to_string(b.w) +
                      "," + std::to_string(b.h)));
}

std::string cutout_file_name(const std::string& label, const std::string& element_id) {
  std::string safe = label;
  for (char& c : safe)
    if (c == '/' || c == '\\' || c == ':') c = '-';
  return safe + "_" + element_id + ".png";
}

int RunReport::failed() const {
  return static_cast<int>(std::count_if(images.begin(), images.end(), [](const ImageReport& r) { return r.status != "ok"; }));
}

PhotoCollection load_collection(const fs::path& dir) {
  PhotoCollection c;
  const fs::path manifest = dir / "collection.json";
  std::error_code ec;
  if (fs::exists(manifest, ec)) {
    c = decode<PhotoCollection>(read_json_file(manifest));
  } else {
    if (!fs::is_directory(dir, ec)) throw IoError(dir.string(), "collection directory not found");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && to_lower(entry.path().extension().string()) == ".png") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    c.collection_id = dir.filename().string();
    for (const auto& f : files) {
      const PngInfo info = probe_png(f);
      c.images.push_back({f.stem().string(), f.filename().string(), info.width, info.height});
    }
  }
  std::set<std::string> ids;
  for (auto& img : c.images) {
    if (!ids.insert(img.image_id).second) throw ParseError("images", "duplicate image_id '" + img.image_id + "'");
    if (fs::path(img.path).is_relative()) img.path = (dir / img.path).lexically_normal().string();
  }
  return c;
}

std::string derive_library_id(const PhotoCollection& collection, const std::string& backend_description,
                              double confidence_threshold) {
  return "lib-" + hex8(fnv1a64(collection.collection_id + "|" + backend_description + "|" +
                               std::to_string(confidence_threshold)));
}

ElementLibrary load_library(const fs::path& library_dir) {
  return decode<ElementLibrary>(read_json_file(library_dir / "library.json"));
}

Json encode(const RunReport& report) {
  Json images = Json::array();
  for (const auto& r : report.images)
    images.push_back({{"image_id", r.image_id},
                      {"status", r.status},
                      {"error", r.error},
                      {"steps", r.steps},
                      {"tags", r.tags},
                      {"retained_tags", r.retained_tags},
                      {"detections", r.detections},
                      {"elements", r.elements},
                      {"elapsed_ms", r.elapsed_ms}});
  return {{"library_id", report.library_id},
          {"backend", report.backend},
          {"images", images},
          {"failed", report.failed()},
          {"elapsed_ms", report.elapsed_ms}};
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct ImageOutcome {
  ImageReport report;
  std::vector<VisualElement> elements;
  std::vector<SemanticLabel> retained;
};

ImageOutcome process_image(const SourceImage& image, Backend& backend, const fs::path& cutout_dir,
                           double threshold) {
  ImageOutcome out;
  out.report.image_id = image.image_id;
  const auto t0 = Clock::now();
  try {
    const TagResult tags = backend.tag_image(image);
    out.report.tags = static_cast<int>(tags.tags.size());
    out.retained = filter_tags(tags.tags);
    std::sort(out.retained.begin(), out.retained.end(),
              [](const SemanticLabel& a, const SemanticLabel& b) { return a.text < b.text; });
    out.retained.erase(std::unique(out.retained.begin(), out.retained.end(),
                                   [](const SemanticLabel& a, const SemanticLabel& b) { return a.text == b.text; }),
                       out.retained.end());
    out.report.retained_tags = static_cast<int>(out.retained.size());
    out.report.steps.push_back("tag: " + std::to_string(out.report.tags) + " tags, " +
                               std::to_string(out.report.retained_tags) + " retained");

    std::vector<Detection> detections;
    for (const auto& tag : out.retained) {
      for (const auto& d : backend.detect(image, tag.text).boxes) {
        if (d.confidence < threshold) continue;
        Detection kept = d;
        kept.label = tag.text;
        detections.push_back(kept);
      }
    }
    out.report.detections = static_cast<int>(detections.size());
    out.report.steps.push_back("detect: " + std::to_string(detections.size()) + " boxes");

    for (const auto& m : merge_duplicate_detections(detections)) {
      VisualElement e;
      e.element_id = make_element_id(image.image_id, m.bbox);
      e.label = m.labels.front();
      e.aliases = m.labels;
      e.source_image_id = image.image_id;
      e.bbox = m.bbox;
      const std::string name = cutout_file_name(e.label, e.element_id);
      const SegmentResult seg = backend.segment(image, m.bbox, cutout_dir / name);
      if (fs::path(seg.mask_path) != cutout_dir / name) fs::copy_file(seg.mask_path, cutout_dir / name, fs::copy_options::overwrite_existing);
      e.cutout_box = seg.tight_bbox;
      e.cutout_path = "cutouts/" + name;
      e.resolution = seg.tight_bbox.area();
      e.visual_embedding = backend.embed_image(cutout_dir / name).vector;
      out.elements.push_back(std::move(e));
    }
    out.report.elements = static_cast<int>(out.elements.size());
    out.report.steps.push_back("segment+embed: " + std::to_string(out.elements.size()) + " elements");
  } catch (const std::exception& ex) {
    out.report.status = "failed";
    out.report.error = ex.what();
    out.report.steps.push_back(std::string("failed: ") + ex.what());
    for (const auto& e : out.elements) {
      std::error_code ec;
      fs::remove(cutout_dir / fs::path(e.cutout_path).filename(), ec);
    }
    out.elements.clear();
    out.retained.clear();
  }
  out.report.elapsed_ms = ms_since(t0);
  return out;
}

fs::path staging_path(const fs::path& out_dir) {
  fs::path parent = out_dir.parent_path();
  if (parent.empty()) parent = ".";
  return parent / ("." + out_dir.filename().string() + ".partial-" + std::to_string(::getpid()));
}

}  // namespace

PrepareResult prepare_collection(const PhotoCollection& collection, Backend& backend, const fs::path& requested_out,
                                 const PrepareOptions& options) {
  if (collection.images.empty()) throw PreconditionError("prepare: collection is empty");
  fs::path out_dir = fs::absolute(requested_out).lexically_normal();
  if (out_dir.filename().empty()) out_dir = out_dir.parent_path();
  const auto t0 = Clock::now();

  const fs::path staging = staging_path(out_dir);
  std::error_code ec;
  fs::remove_all(staging, ec);
  fs::create_directories(staging / "cutouts", ec);
  if (ec || !fs::is_directory(staging / "cutouts")) throw IoError(out_dir.string(), "output directory is not writable");

  std::vector<ImageOutcome> outcomes(collection.images.size());
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(options.workers ? options.workers : hw,
                                              static_cast<unsigned>(collection.images.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < outcomes.size(); i = next.fetch_add(1))
      outcomes[i] = process_image(collection.images[i], backend, staging / "cutouts", options.confidence_threshold);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  PrepareResult result;
  ElementLibrary& lib = result.library;
  lib.library_id = options.library_id.empty()
                       ? derive_library_id(collection, backend.describe(), options.confidence_threshold)
                       : options.library_id;
  lib.embedding_dim = backend.embedding_dim();
  result.report.library_id = lib.library_id;
  result.report.backend = backend.describe();

  // Single writer, collection order.
  for (auto& o : outcomes) {
    for (const auto& t : o.retained) lib.label_category.emplace(t.text, t.category);
    for (auto& e : o.elements) {
      if (lib.elements.contains(e.element_id)) {
        const std::string old_name = fs::path(e.cutout_path).filename().string();
        std::string id = e.element_id;
        for (int salt = 1; lib.elements.contains(id); ++salt)
          id = hex8(fnv1a64(e.source_image_id + "|" + e.element_id + "|" + std::to_string(salt)));
        e.element_id = id;
        const std::string name = cutout_file_name(e.label, id);
        fs::rename(staging / "cutouts" / old_name, staging / "cutouts" / name);
        e.cutout_path = "cutouts/" + name;
      }
      for (const auto& alias : e.aliases) lib.label_index[alias].push_back(e.element_id);
      lib.elements.emplace(e.element_id, std::move(e));
    }
    result.report.images.push_back(std::move(o.report));
  }
  for (auto& [label, ids] : lib.label_index) std::sort(ids.begin(), ids.end());
  result.report.elapsed_ms = ms_since(t0);

  write_json_file(staging / "library.json", encode(lib));
  write_json_file(staging / "run_report.json", encode(result.report));

  if (fs::exists(out_dir, ec)) {
    const bool replaceable = fs::is_directory(out_dir, ec) &&
                             (fs::is_empty(out_dir, ec) || fs::exists(out_dir / "library.json", ec));
    if (!replaceable) {
      fs::remove_all(staging, ec);
      throw IoError(out_dir.string(), "exists and is not a library directory");
    }
    fs::remove_all(out_dir, ec);
  }
  if (out_dir.has_parent_path()) fs::create_directories(out_dir.parent_path(), ec);
  fs::rename(staging, out_dir, ec);
  if (ec) throw IoError(out_dir.string(), "cannot move library into place: " + ec.message());
  return result;
}

}  // namespace collage
