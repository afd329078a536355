// Regenerates the five-photo park collection used by the tests:
//   make_fixture <out_dir>
// Each image gets a `.mock.json` sidecar naming its tags and regions. Two
// "ball" regions are drawn pixel-identical on purpose.
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "collage/image.hpp"
#include "collage/json_io.hpp"
#include "collage/util.hpp"

namespace fs = std::filesystem;
using namespace collage;

namespace {

constexpr int kW = 320;
constexpr int kH = 240;

struct Region {
  std::string label;
  BoundingBox box;
  std::uint32_t rgb;
  bool round = false;
};

struct Scene {
  std::string id;
  std::uint32_t top, bottom;  // background colours above and below the horizon
  int horizon;
  std::vector<SemanticLabel> scene_tags;
  std::vector<Region> regions;
  std::vector<std::vector<std::string>> aliases;  // extra labels sharing a region's box
};

void put(RgbaImage& img, int x, int y, std::uint32_t rgb) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  std::uint8_t* p = img.at(x, y);
  p[0] = static_cast<std::uint8_t>(rgb >> 16);
  p[1] = static_cast<std::uint8_t>(rgb >> 8);
  p[2] = static_cast<std::uint8_t>(rgb);
  p[3] = 255;
}

// A shape with a little texture keyed on the label, so crops differ by content.
void draw(RgbaImage& img, const Region& r) {
  SplitMix64 rng(fnv1a64(r.label));
  const int stripe = 3 + static_cast<int>(rng.below(5));
  const double cx = r.box.x + r.box.w / 2.0, cy = r.box.y + r.box.h / 2.0;
  for (int y = r.box.y; y < r.box.y + r.box.h; ++y) {
    for (int x = r.box.x; x < r.box.x + r.box.w; ++x) {
      if (r.round) {
        const double dx = (x + 0.5 - cx) / (r.box.w / 2.0), dy = (y + 0.5 - cy) / (r.box.h / 2.0);
        if (dx * dx + dy * dy > 1) continue;
      }
      const int lx = x - r.box.x, ly = y - r.box.y;
      const std::uint32_t shade = ((lx + ly) / stripe) % 2 ? 0x101010u : 0u;
      put(img, x, y, r.rgb - (r.rgb & 0x0f0f0f) + shade);
    }
  }
}

RgbaImage render(const Scene& s) {
  RgbaImage img(kW, kH);
  for (int y = 0; y < kH; ++y)
    for (int x = 0; x < kW; ++x) put(img, x, y, y < s.horizon ? s.top : s.bottom);
  for (const auto& r : s.regions)
    if (r.rgb != 0) draw(img, r);  // rgb 0 marks a region that is just background
  return img;
}

std::vector<Scene> scenes() {
  const std::uint32_t sky = 0x87ceeb, grass = 0x4caf50, street = 0x9e9e9e, sea = 0x1e88e5;
  return {
      {"park_morning", sky, grass, 140,
       {{"park", LabelCategory::scene}, {"sky", LabelCategory::scene}, {"sunny", LabelCategory::attribute}},
       {{"park", {0, 0, kW, kH}, 0},
        {"sky", {0, 0, kW, 140}, 0},
        {"sun", {250, 12, 44, 44}, 0xffd54f, true},
        {"boy", {60, 100, 48, 110}, 0x8d6e63},
        {"dog", {130, 170, 72, 44}, 0x795548},
        {"frisbee", {214, 128, 30, 12}, 0xe53935, true},
        {"grass", {0, 212, kW, 28}, 0x388e3c}},
       {}},
      {"park_picnic", sky, grass, 130,
       {{"park", LabelCategory::scene}, {"running", LabelCategory::action}},
       {{"park", {0, 0, kW, kH}, 0},
        {"cloud", {20, 20, 80, 30}, 0xfafafa, true},
        {"cloud", {160, 34, 110, 36}, 0xf5f5f5, true},
        {"tree", {250, 60, 56, 150}, 0x2e7d32},
        {"flower", {30, 200, 18, 18}, 0xec407a, true},
        {"ball", {120, 190, 24, 24}, 0x1565c0, true},
        {"boy", {170, 120, 40, 96}, 0xa1887f},
        {"sunglasses", {178, 128, 24, 8}, 0x212121}},
       {}},
      {"city_street", 0xb0bec5, street, 120,
       {{"street", LabelCategory::scene}, {"road", LabelCategory::scene}},
       {{"street", {0, 0, kW, kH}, 0},
        {"building", {10, 10, 120, 110}, 0x6d4c41},
        {"car", {150, 150, 110, 50}, 0xc62828},
        {"bench", {20, 170, 80, 30}, 0x5d4037},
        {"cat", {270, 190, 36, 28}, 0x424242},
        {"umbrella", {110, 90, 40, 40}, 0x6a1b9a, true}},
       {}},
      {"park_games", sky, grass, 120,
       {{"park", LabelCategory::scene}, {"sky", LabelCategory::scene}},
       {{"park", {0, 0, kW, kH}, 0},
        {"sky", {0, 0, kW, 120}, 0},
        {"kite", {200, 20, 40, 40}, 0xff7043},
        {"tree", {10, 40, 70, 170}, 0x1b5e20},
        {"flower", {100, 196, 26, 26}, 0xab47bc, true},
        {"ball", {140, 190, 24, 24}, 0x1565c0, true},
        {"dog", {200, 150, 96, 60}, 0x6d4c41},
        {"frisbee", {172, 140, 22, 10}, 0xfdd835, true}},
       {}},
      {"beach_day", sky, 0xffe0b2, 110,
       {{"beach", LabelCategory::scene}, {"ocean", LabelCategory::scene}},
       {{"beach", {0, 0, kW, kH}, 0},
        {"ocean", {0, 80, kW, 40}, sea},
        {"sun", {20, 10, 36, 36}, 0xffca28, true},
        {"cloud", {200, 16, 90, 28}, 0xffffff, true},
        {"boat", {150, 84, 60, 28}, 0x8d6e63},
        {"girl", {90, 120, 44, 100}, 0xf48fb1},
        {"hat", {98, 120, 28, 14}, 0xfbc02d}},
       {{"girl", "woman"}}},
  };
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture <out_dir>\n";
    return 2;
  }
  const fs::path out = argv[1];
  fs::create_directories(out);
  Json images = Json::array();
  for (const auto& s : scenes()) {
    write_png(out / (s.id + ".png"), render(s));
    Json tags = Json::array();
    for (const auto& t : s.scene_tags) tags.push_back(encode(t));
    Json regions = Json::array();
    for (const auto& r : s.regions) {
      regions.push_back({{"label", r.label}, {"x", r.box.x}, {"y", r.box.y}, {"w", r.box.w}, {"h", r.box.h}});
      for (const auto& group : s.aliases)
        if (group.front() == r.label)
          for (std::size_t k = 1; k < group.size(); ++k)
            regions.push_back({{"label", group[k]}, {"x", r.box.x}, {"y", r.box.y}, {"w", r.box.w}, {"h", r.box.h}});
    }
    write_json_file(out / (s.id + ".mock.json"), {{"tags", tags}, {"regions", regions}});
    images.push_back({{"image_id", s.id}, {"path", s.id + ".png"}, {"width", kW}, {"height", kH}});
  }
  write_json_file(out / "collection.json", {{"collection_id", "park-fixture"}, {"images", images}});
  std::cout << "wrote " << images.size() << " images to " << out.string() << "\n";
  return 0;
}
