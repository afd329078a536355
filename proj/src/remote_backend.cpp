#include "collage/remote_backend.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "httplib.h"

#include "collage/errors.hpp"
#include "collage/image.hpp"
#include "collage/json_io.hpp"
#include "collage/util.hpp"

namespace collage {

namespace {

struct UrlParts {
  std::string origin;  // scheme://host:port
  std::string prefix;  // path prefix without trailing slash
};

UrlParts split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  UrlParts p;
  p.origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  p.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!p.prefix.empty() && p.prefix.back() == '/') p.prefix.pop_back();
  return p;
}

std::string bytes_b64(const std::filesystem::path& p) { return base64_encode(read_binary_file(p)); }

}  // namespace

RemoteBackend::RemoteBackend(BackendDescriptor descriptor) : descriptor_(std::move(descriptor)) {
  check_descriptor(descriptor_);
}

std::string RemoteBackend::describe() const { return "remote(" + descriptor_.base_url + ")"; }

Json RemoteBackend::post(const std::string& route, const Json& body) const {
  const UrlParts url = split_url(descriptor_.base_url);
  httplib::Client cli(url.origin);
  const auto secs = static_cast<time_t>(descriptor_.timeout_s);
  const auto usecs = static_cast<time_t>((descriptor_.timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  auto res = route == "/v1/info" ? cli.Get(url.prefix + route)
                                 : cli.Post(url.prefix + route, body.dump(), "application/json");
  if (!res)
    throw TransportError("backend " + descriptor_.base_url + route + " unreachable: " + httplib::to_string(res.error()));
  Json reply;
  try {
    reply = Json::parse(res->body);
  } catch (const Json::parse_error&) {
    throw ProtocolError(route + ": response is not JSON (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status == 422 && reply.value("error", "") == "no_character") throw NoCharacterDetected();
  if (res->status < 200 || res->status >= 300)
    throw ProtocolError(route + ": HTTP " + std::to_string(res->status) + ": " + reply.value("error", std::string("unknown")));
  if (!reply.is_object()) throw ProtocolError(route + ": response is not a JSON object");
  return reply;
}

Json RemoteBackend::image_ref(const SourceImage& image) const {
  Json j = encode(image);
  if (descriptor_.payload == PayloadMode::inline_base64) j["data_b64"] = bytes_b64(image.path);
  return j;
}

Json RemoteBackend::file_ref(const std::filesystem::path& path) const {
  Json j = {{"path", path.string()}, {"filename", path.filename().string()}};
  if (descriptor_.payload == PayloadMode::inline_base64) j["data_b64"] = bytes_b64(path);
  return j;
}

int RemoteBackend::embedding_dim() const {
  if (dim_ == 0) {
    const Json info = post("/v1/info", Json::object());
    if (!info.contains("embedding_dim") || !info["embedding_dim"].is_number_integer())
      throw ProtocolError("/v1/info: missing embedding_dim");
    dim_ = info["embedding_dim"].get<int>();
  }
  return dim_;
}

TagResult RemoteBackend::tag_image(const SourceImage& image) {
  const Json r = post("/v1/tag", {{"image", image_ref(image)}});
  TagResult out;
  try {
    for (const auto& t : r.at("tags")) out.tags.push_back(decode<SemanticLabel>(t, "tags"));
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("/v1/tag: ") + e.what());
  } catch (const ParseError& e) {
    throw ProtocolError(std::string("/v1/tag: ") + e.what());
  }
  return out;
}

DetectResult RemoteBackend::detect(const SourceImage& image, const std::string& label) {
  const Json r = post("/v1/detect", {{"image", image_ref(image)}, {"label", label}});
  DetectResult out;
  try {
    for (const auto& b : r.at("boxes")) {
      // Bounds are the contract checker's business; keep the raw box here.
      const Json& bb = b.at("bbox");
      Detection d;
      d.label = b.at("label").get<std::string>();
      d.bbox = {bb.at("x").get<int>(), bb.at("y").get<int>(), bb.at("w").get<int>(), bb.at("h").get<int>()};
      d.confidence = b.at("confidence").get<double>();
      out.boxes.push_back(std::move(d));
    }
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("/v1/detect: ") + e.what());
  }
  return out;
}

SegmentResult RemoteBackend::segment(const SourceImage& image, const BoundingBox& bbox,
                                     const std::filesystem::path& out_path) {
  Json req = {{"image", image_ref(image)}, {"bbox", encode(bbox)}};
  if (descriptor_.payload == PayloadMode::local_path) req["out_path"] = out_path.string();
  const Json r = post("/v1/segment", req);
  if (r.contains("error")) throw ProtocolError("/v1/segment: " + r["error"].get<std::string>());
  SegmentResult out;
  try {
    const Json& tb = r.at("tight_bbox");
    out.tight_bbox = {tb.at("x").get<int>(), tb.at("y").get<int>(), tb.at("w").get<int>(), tb.at("h").get<int>()};
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("/v1/segment: ") + e.what());
  }
  if (out.tight_bbox.w < 1 || out.tight_bbox.h < 1) throw ProtocolError("empty segmentation");
  if (r.contains("cutout_png_b64")) {
    write_binary_file(out_path, base64_decode(r["cutout_png_b64"].get<std::string>()));
    out.mask_path = out_path.string();
  } else if (r.contains("mask_path")) {
    out.mask_path = r["mask_path"].get<std::string>();
  } else {
    throw ProtocolError("empty segmentation");
  }
  return out;
}

namespace {

EmbedResult parse_vector(const Json& r, const std::string& route) {
  EmbedResult out;
  try {
    for (const auto& x : r.at("vector")) out.vector.push_back(x.get<double>());
  } catch (const Json::exception& e) {
    throw ProtocolError(route + ": " + e.what());
  }
  return out;
}

}  // namespace

EmbedResult RemoteBackend::embed_image(const std::filesystem::path& cutout_path) {
  return parse_vector(post("/v1/embed/image", {{"cutout", file_ref(cutout_path)}}), "/v1/embed/image");
}

EmbedResult RemoteBackend::embed_text(const std::string& text) {
  return parse_vector(post("/v1/embed/text", {{"text", text}}), "/v1/embed/text");
}

ParseCharacterResult RemoteBackend::parse_character(const std::filesystem::path& cutout_path,
                                                    const std::filesystem::path& out_dir) {
  Json req = {{"cutout", file_ref(cutout_path)}};
  if (descriptor_.payload == PayloadMode::local_path) req["out_dir"] = out_dir.string();
  const Json r = post("/v1/parse-character", req);
  ParseCharacterResult out;
  try {
    Json rig = r.at("rig");
    for (auto& part : rig.at("parts")) {
      if (part.contains("mask_png_b64")) {
        const auto path = out_dir / (cutout_path.stem().string() + "_" + part.at("part_name").get<std::string>() + ".png");
        write_binary_file(path, base64_decode(part["mask_png_b64"].get<std::string>()));
        part.erase("mask_png_b64");
        part["mask_path"] = path.string();
      }
    }
    out.rig = decode<CharacterRig>(rig, "rig");
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("/v1/parse-character: ") + e.what());
  } catch (const ParseError& e) {
    throw ProtocolError(std::string("/v1/parse-character: ") + e.what());
  }
  return out;
}

LlmStructuredResult RemoteBackend::llm_complete(const std::string& system_prompt, const std::string& user_payload) {
  const Json r = post("/v1/llm/complete", {{"system_prompt", system_prompt}, {"user_payload", user_payload}});
  LlmStructuredResult out;
  if (!r.contains("raw_text") || !r["raw_text"].is_string()) throw ProtocolError("/v1/llm/complete: missing raw_text");
  out.raw_text = r["raw_text"].get<std::string>();
  try {
    out.parsed_json = nlohmann::ordered_json::parse(out.raw_text);
  } catch (const nlohmann::ordered_json::parse_error&) {
    out.parsed_json.reset();
  }
  return out;
}

// ---------------------------------------------------------------- server

struct BackendHttpServer::Impl {
  BackendPtr backend;
  std::filesystem::path scratch;
  httplib::Server server;
  std::thread thread;
  std::atomic<std::uint64_t> counter{0};

  // Returns a filesystem path for a file reference, materialising inline data.
  std::filesystem::path materialise(const Json& ref, const std::string& fallback_name) {
    const std::string path = ref.value("path", "");
    std::error_code ec;
    if (!ref.contains("data_b64")) {
      if (path.empty()) throw PreconditionError("file reference without path or data");
      return path;
    }
    const std::string name = ref.value("filename", std::filesystem::path(path).filename().string());
    const auto dir = scratch / ("in-" + std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir, ec);
    const auto out = dir / (name.empty() ? fallback_name : name);
    write_binary_file(out, base64_decode(ref["data_b64"].get<std::string>()));
    return out;
  }

  SourceImage image_from(const Json& ref) {
    SourceImage img = decode<SourceImage>(ref, "image");
    std::error_code ec;
    if (ref.contains("data_b64") && !std::filesystem::exists(img.path, ec)) img.path = materialise(ref, "image.png").string();
    return img;
  }

  std::filesystem::path fresh_dir() {
    std::error_code ec;
    const auto dir = scratch / ("out-" + std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir, ec);
    return dir;
  }

  void route(const std::string& path, std::function<Json(const Json&)> fn) {
    server.Post(path, [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      Json out;
      try {
        out = fn(Json::parse(req.body));
        res.status = 200;
      } catch (const NoCharacterDetected&) {
        out = {{"error", "no_character"}};
        res.status = 422;
      } catch (const PreconditionError& e) {
        out = {{"error", e.what()}};
        res.status = 400;
      } catch (const ParseError& e) {
        out = {{"error", e.what()}};
        res.status = 400;
      } catch (const Json::exception& e) {
        out = {{"error", e.what()}};
        res.status = 400;
      } catch (const std::exception& e) {
        out = {{"error", e.what()}};
        res.status = 500;
      }
      res.set_content(out.dump(), "application/json");
    });
  }

  void install() {
    server.Get("/v1/info", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(Json{{"embedding_dim", backend->embedding_dim()}, {"backend", backend->describe()}}.dump(),
                      "application/json");
    });
    route("/v1/tag", [this](const Json& j) {
      Json tags = Json::array();
      for (const auto& t : backend->tag_image(image_from(j.at("image"))).tags) tags.push_back(encode(t));
      return Json{{"tags", tags}};
    });
    route("/v1/detect", [this](const Json& j) {
      Json boxes = Json::array();
      for (const auto& b : backend->detect(image_from(j.at("image")), j.at("label").get<std::string>()).boxes)
        boxes.push_back({{"label", b.label}, {"bbox", encode(b.bbox)}, {"confidence", b.confidence}});
      return Json{{"boxes", boxes}};
    });
    route("/v1/segment", [this](const Json& j) {
      const SourceImage img = image_from(j.at("image"));
      const BoundingBox bbox = decode<BoundingBox>(j.at("bbox"), "bbox");
      const bool inline_out = !j.contains("out_path");
      const std::filesystem::path out =
          inline_out ? fresh_dir() / "cutout.png" : std::filesystem::path(j["out_path"].get<std::string>());
      const SegmentResult r = backend->segment(img, bbox, out);
      Json reply = {{"tight_bbox", encode(r.tight_bbox)}};
      if (inline_out) reply["cutout_png_b64"] = bytes_b64(r.mask_path);
      else reply["mask_path"] = r.mask_path;
      return reply;
    });
    route("/v1/embed/image", [this](const Json& j) {
      return Json{{"vector", backend->embed_image(materialise(j.at("cutout"), "cutout.png")).vector}};
    });
    route("/v1/embed/text", [this](const Json& j) {
      return Json{{"vector", backend->embed_text(j.at("text").get<std::string>()).vector}};
    });
    route("/v1/parse-character", [this](const Json& j) {
      const auto cutout = materialise(j.at("cutout"), "cutout.png");
      const bool inline_out = !j.contains("out_dir");
      const std::filesystem::path dir = inline_out ? fresh_dir() : std::filesystem::path(j["out_dir"].get<std::string>());
      ParseCharacterResult r = backend->parse_character(cutout, dir);
      Json rig = encode(r.rig);
      if (inline_out)
        for (auto& part : rig["parts"]) {
          part["mask_png_b64"] = bytes_b64(part["mask_path"].get<std::string>());
          part.erase("mask_path");
        }
      return Json{{"rig", rig}};
    });
    route("/v1/llm/complete", [this](const Json& j) {
      const auto r = backend->llm_complete(j.at("system_prompt").get<std::string>(), j.at("user_payload").get<std::string>());
      return Json{{"raw_text", r.raw_text}};
    });
  }
};

BackendHttpServer::BackendHttpServer(BackendPtr backend, std::filesystem::path scratch_dir)
    : impl_(std::make_unique<Impl>()) {
  impl_->backend = std::move(backend);
  impl_->scratch = std::move(scratch_dir);
  std::error_code ec;
  std::filesystem::create_directories(impl_->scratch, ec);
  impl_->install();
}

BackendHttpServer::~BackendHttpServer() { stop(); }

int BackendHttpServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw TransportError("cannot bind backend server to " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void BackendHttpServer::listen_blocking(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw TransportError("cannot listen on " + host + ":" + std::to_string(port));
}

void BackendHttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace collage
