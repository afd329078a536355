#pragma once

#include <memory>
#include <string>

#include "collage/backend.hpp"

namespace collage {

// HTTP/JSON client for the `/v1/*` backend protocol. Images travel as shared
// filesystem paths (PayloadMode::local_path) or inline base64
// (PayloadMode::inline_base64). Connection failures and timeouts raise
// TransportError; non-2xx answers and malformed bodies raise ProtocolError.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(BackendDescriptor descriptor);

  TagResult tag_image(const SourceImage& image) override;
  DetectResult detect(const SourceImage& image, const std::string& label) override;
  SegmentResult segment(const SourceImage& image, const BoundingBox& bbox,
                        const std::filesystem::path& out_path) override;
  EmbedResult embed_image(const std::filesystem::path& cutout_path) override;
  EmbedResult embed_text(const std::string& text) override;
  ParseCharacterResult parse_character(const std::filesystem::path& cutout_path,
                                       const std::filesystem::path& out_dir) override;
  LlmStructuredResult llm_complete(const std::string& system_prompt, const std::string& user_payload) override;

  // Fetched lazily from GET /v1/info and cached.
  int embedding_dim() const override;
  std::string describe() const override;

 private:
  nlohmann::json post(const std::string& route, const nlohmann::json& body) const;
  nlohmann::json image_ref(const SourceImage& image) const;
  nlohmann::json file_ref(const std::filesystem::path& path) const;

  BackendDescriptor descriptor_;
  mutable int dim_ = 0;
};

// Serves any Backend over the `/v1/*` protocol. Used to expose the mock to
// out-of-process clients and to run the conformance suite over HTTP.
class BackendHttpServer {
 public:
  explicit BackendHttpServer(BackendPtr backend, std::filesystem::path scratch_dir);
  ~BackendHttpServer();
  BackendHttpServer(const BackendHttpServer&) = delete;
  BackendHttpServer& operator=(const BackendHttpServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks serving on the calling thread.
  void listen_blocking(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace collage
