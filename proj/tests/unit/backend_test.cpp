#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "httplib.h"

#include "collage/errors.hpp"
#include "collage/image.hpp"
#include "collage/json_io.hpp"
#include "collage/mock_backend.hpp"
#include "collage/preprocess.hpp"
#include "collage/prompts.hpp"
#include "collage/remote_backend.hpp"
#include "collage/util.hpp"
#include "support.hpp"

using namespace collage;
namespace fs = std::filesystem;

namespace {

SourceImage fixture_image(const std::string& id) {
  const auto c = load_collection(support::fixture_dir());
  for (const auto& img : c.images)
    if (img.image_id == id) return img;
  throw std::runtime_error("no fixture image " + id);
}

enum class Kind { mock, remote_path, remote_inline };

std::string kind_name(const testing::TestParamInfo<Kind>& info) {
  switch (info.param) {
    case Kind::mock: return "Mock";
    case Kind::remote_path: return "RemoteLocalPath";
    case Kind::remote_inline: return "RemoteInline";
  }
  return "?";
}

// The same black-box checks run against the in-process mock and against the
// mock served over HTTP, in both payload modes.
class Conformance : public testing::TestWithParam<Kind> {
 protected:
  void SetUp() override {
    if (GetParam() == Kind::mock) {
      backend_ = make_backend(BackendDescriptor::mock(7));
      return;
    }
    server_ = std::make_unique<BackendHttpServer>(std::make_shared<MockBackend>(7), scratch_.path());
    const int port = server_->start();
    auto d = BackendDescriptor::remote("http://127.0.0.1:" + std::to_string(port));
    d.payload = GetParam() == Kind::remote_inline ? PayloadMode::inline_base64 : PayloadMode::local_path;
    backend_ = make_backend(d);
  }
  void TearDown() override {
    if (server_) server_->stop();
  }

  support::TempDir scratch_;
  support::TempDir out_;
  std::unique_ptr<BackendHttpServer> server_;
  BackendPtr backend_;
};

}  // namespace

TEST_P(Conformance, TagsCarryCategoriesAndAreDeterministic) {
  const auto img = fixture_image("park_morning");
  const auto a = backend_->tag_image(img);
  const auto b = backend_->tag_image(img);
  ASSERT_FALSE(a.tags.empty());
  EXPECT_EQ(a.tags, b.tags);
  bool has_park = false, has_boy = false;
  for (const auto& t : a.tags) {
    if (t.text == "park") has_park = t.category == LabelCategory::scene;
    if (t.text == "boy") has_boy = t.category == LabelCategory::object;
  }
  EXPECT_TRUE(has_park);
  EXPECT_TRUE(has_boy);
}

TEST_P(Conformance, DetectionsAreInBoundsWithValidConfidence) {
  const auto img = fixture_image("park_picnic");
  const auto clouds = backend_->detect(img, "cloud");
  ASSERT_EQ(clouds.boxes.size(), 2u);
  for (const auto& d : clouds.boxes) {
    EXPECT_TRUE(d.bbox.inside(img.width, img.height));
    EXPECT_GE(d.confidence, 0.0);
    EXPECT_LE(d.confidence, 1.0);
  }
  EXPECT_TRUE(backend_->detect(img, "helicopter").boxes.empty());
}

TEST_P(Conformance, SegmentStaysInsideThePromptBox) {
  const auto img = fixture_image("park_morning");
  const BoundingBox box{60, 100, 48, 110};
  const auto r = backend_->segment(img, box, out_ / "boy_x.png");
  EXPECT_TRUE(box.contains(r.tight_bbox));
  ASSERT_TRUE(fs::exists(r.mask_path));
  const auto info = probe_png(r.mask_path);
  EXPECT_TRUE(info.has_alpha);
  EXPECT_EQ(info.width, r.tight_bbox.w);
  EXPECT_EQ(info.height, r.tight_bbox.h);
}

TEST_P(Conformance, OnePixelBoxGivesOnePixelMask) {
  const auto img = fixture_image("park_morning");
  const auto r = backend_->segment(img, {5, 5, 1, 1}, out_ / "dot_x.png");
  EXPECT_EQ(r.tight_bbox, (BoundingBox{5, 5, 1, 1}));
  EXPECT_EQ(read_png(r.mask_path).width, 1);
}

TEST_P(Conformance, EmbeddingsAreUnitNormOfAdvertisedDimension) {
  const int dim = backend_->embedding_dim();
  EXPECT_EQ(dim, 64);
  const auto t1 = backend_->embed_text("dog");
  const auto t2 = backend_->embed_text("dog");
  EXPECT_EQ(t1.vector, t2.vector);
  ASSERT_EQ(static_cast<int>(t1.vector.size()), dim);
  EXPECT_NEAR(l2_norm(t1.vector), 1.0, 1e-9);

  const auto img = fixture_image("park_morning");
  const auto seg = backend_->segment(img, {130, 170, 72, 44}, out_ / "dog_abc.png");
  const auto e = backend_->embed_image(seg.mask_path);
  ASSERT_EQ(static_cast<int>(e.vector.size()), dim);
  EXPECT_NEAR(l2_norm(e.vector), 1.0, 1e-9);
}

TEST_P(Conformance, EmptyTextIsAPreconditionError) {
  EXPECT_THROW(backend_->embed_text(""), PreconditionError);
}

TEST_P(Conformance, CharacterRigHasPartsAndRotationCenter) {
  const auto img = fixture_image("park_morning");
  const auto seg = backend_->segment(img, {60, 100, 48, 110}, out_ / "boy_abc.png");
  fs::create_directories(out_ / "rigs");
  const auto r = backend_->parse_character(seg.mask_path, out_ / "rigs");
  EXPECT_EQ(r.rig.parts.size(), 6u);
  bool center = false;
  for (const auto& j : r.rig.joints) {
    center |= j.role == JointRole::rotation_center;
    EXPECT_GE(j.x, 0);
    EXPECT_LE(j.x, 48);
    EXPECT_GE(j.y, 0);
    EXPECT_LE(j.y, 110);
  }
  EXPECT_TRUE(center);
}

TEST_P(Conformance, SelectorPromptYieldsParsedJson) {
  const auto r = backend_->llm_complete(prompts::system_prompt(prompts::Stage::select_full, {"boy", "dog", "park"}),
                                        "boy and dog in park");
  ASSERT_TRUE(r.parsed_json.has_value());
  EXPECT_TRUE(r.parsed_json->contains("direct_labels"));
}

INSTANTIATE_TEST_SUITE_P(Backends, Conformance,
                         testing::Values(Kind::mock, Kind::remote_path, Kind::remote_inline), kind_name);

// ---- mock specifics

TEST(MockBackend, ImageEmbeddingStaysCloseToItsLabel) {
  MockBackend mock(7);
  for (const auto& [id, el] : support::fixture_library().elements) {
    const auto img = mock.embed_image(support::fixture_library_dir() / el.cutout_path).vector;
    const auto text = mock.embed_text(el.label).vector;
    EXPECT_GE(dot(img, text), 0.9) << id;
  }
}

TEST(MockBackend, ZeroNoiseImageEqualsTextEmbedding) {
  MockBackend mock(7, 0.0);
  const auto& [id, el] = *support::fixture_library().elements.begin();
  EXPECT_EQ(mock.embed_image(support::fixture_library_dir() / el.cutout_path).vector, mock.embed_text(el.label).vector);
}

TEST(MockBackend, SeedChangesTextEmbeddings) {
  EXPECT_NE(MockBackend(1).embed_text("dog").vector, MockBackend(2).embed_text("dog").vector);
}

TEST(MockBackend, AttributeTagIsDroppedByFilter) {
  MockBackend mock(7);
  const auto tags = mock.tag_image(fixture_image("park_morning")).tags;
  const bool sunny_tagged = std::any_of(tags.begin(), tags.end(), [](auto& t) { return t.text == "sunny"; });
  ASSERT_TRUE(sunny_tagged);
  for (const auto& t : filter_tags(tags)) EXPECT_NE(t.text, "sunny");
}

TEST(MockBackend, ClassifierReproducesWorkedExample) {
  const Json answer = Json::parse(mock_llm_answer(
      std::string(prompts::system_prompt(prompts::Stage::classify)),
      "labels_list: \n    - Direct labels: boy, dog, park\n    - Related labels: sky, sun, cloud, grass, tree, flower, "
      "frisbee, ball, sunglasses"));
  auto as_set = [](const Json& a) { return std::set<std::string>(a.begin(), a.end()); };
  EXPECT_EQ(as_set(answer.at("Character")), (std::set<std::string>{"boy", "dog"}));
  EXPECT_EQ(as_set(answer.at("Background")), (std::set<std::string>{"park", "sky"}));
  EXPECT_EQ(as_set(answer.at("Accessories")),
            (std::set<std::string>{"frisbee", "ball", "sunglasses", "sun", "cloud", "grass", "tree", "flower"}));
}

TEST(MockBackend, SidecarFreeImagesAreDeterministic) {
  support::TempDir dir;
  write_png(dir / "plain.png", RgbaImage(50, 40, 0xffffffffu));
  const SourceImage img{"plain", (dir / "plain.png").string(), 50, 40};
  MockBackend a(3), b(3);
  EXPECT_EQ(a.tag_image(img).tags, b.tag_image(img).tags);
  EXPECT_FALSE(a.tag_image(img).tags.empty());
}

// ---- descriptor and transport

TEST(Descriptor, InvariantsAreChecked) {
  BackendDescriptor mock;
  EXPECT_THROW(check_descriptor(mock), PreconditionError);
  EXPECT_NO_THROW(check_descriptor(BackendDescriptor::mock(1)));
  EXPECT_THROW(check_descriptor(BackendDescriptor::remote("")), PreconditionError);
  EXPECT_EQ(descriptor_from_spec("mock", 9).seed, std::optional<std::uint64_t>(9));
  EXPECT_EQ(descriptor_from_spec("http://h:1", std::nullopt).kind, BackendKind::remote);
}

TEST(Remote, UnreachableBackendIsATransportError) {
  auto d = BackendDescriptor::remote("http://127.0.0.1:9");
  d.timeout_s = 2;
  auto backend = make_backend(d);
  EXPECT_THROW(backend->embed_text("dog"), TransportError);
}

// Hand-written answers from a misbehaving backend.
class FaultyServer {
 public:
  FaultyServer() {
    server_.Get("/v1/info", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"embedding_dim": 4})", "application/json");
    });
    server_.Post("/v1/detect", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"boxes": [{"label": "dog", "bbox": {"x": 300, "y": 10, "w": 50, "h": 10}, "confidence": 0.9}]})",
                      "application/json");
    });
    server_.Post("/v1/segment", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"tight_bbox": {"x": 0, "y": 0, "w": 0, "h": 0}})", "application/json");
    });
    server_.Post("/v1/embed/text", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"vector": [0.5, 0, 0, 0]})", "application/json");
    });
    server_.Post("/v1/parse-character", [](const httplib::Request& req, httplib::Response& res) {
      if (req.body.find("statue") != std::string::npos) {
        res.status = 422;
        res.set_content(R"({"error": "no_character"})", "application/json");
        return;
      }
      res.set_content(R"({"rig": {"parts": [{"name": "head", "mask_path": "/tmp/h.png"}],
                                   "joints": [{"name": "neck", "x": 999, "y": 1, "role": "rotation_center"}]}})",
                      "application/json");
    });
    server_.Post("/v1/llm/complete", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"raw_text": "{not json"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FaultyServer() {
    server_.stop();
    thread_.join();
  }
  BackendPtr client() { return make_backend(BackendDescriptor::remote("http://127.0.0.1:" + std::to_string(port_))); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST(Remote, OutOfBoundsBoxIsAProtocolError) {
  FaultyServer s;
  EXPECT_THROW(s.client()->detect(fixture_image("park_morning"), "dog"), ProtocolError);
}

TEST(Remote, EmptySegmentationIsAProtocolError) {
  FaultyServer s;
  support::TempDir dir;
  try {
    s.client()->segment(fixture_image("park_morning"), {0, 0, 10, 10}, dir / "x.png");
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("empty segmentation"), std::string::npos);
  }
}

TEST(Remote, NonUnitEmbeddingIsAProtocolError) {
  FaultyServer s;
  EXPECT_THROW(s.client()->embed_text("dog"), ProtocolError);
}

TEST(Remote, JointOutsideCutoutIsAProtocolError) {
  FaultyServer s;
  const auto boy = support::fixture_library().label_index.at("boy").front();
  const auto path = support::fixture_library_dir() / support::fixture_library().elements.at(boy).cutout_path;
  support::TempDir dir;
  EXPECT_THROW(s.client()->parse_character(path, dir.path()), ProtocolError);
}

TEST(Remote, NoCharacterSignalPassesThrough) {
  FaultyServer s;
  support::TempDir dir;
  write_png(dir / "statue_1.png", RgbaImage(4, 4, 0xff));
  EXPECT_THROW(s.client()->parse_character(dir / "statue_1.png", dir.path()), NoCharacterDetected);
}

TEST(Remote, MalformedLlmJsonLeavesParsedJsonEmpty) {
  FaultyServer s;
  const auto r = s.client()->llm_complete("system", "payload");
  EXPECT_EQ(r.raw_text, "{not json");
  EXPECT_FALSE(r.parsed_json.has_value());
}
