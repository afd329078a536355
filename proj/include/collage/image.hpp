#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace collage {

// 8-bit RGBA raster, row-major, no padding.
struct RgbaImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbaImage() = default;
  RgbaImage(int w, int h, std::uint32_t fill_rgba = 0);

  std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 4]; }
  const std::uint8_t* at(int x, int y) const { return &pixels[(static_cast<std::size_t>(y) * width + x) * 4]; }
  RgbaImage crop(int x, int y, int w, int h) const;
  bool operator==(const RgbaImage&) const = default;
};

struct PngInfo {
  int width = 0;
  int height = 0;
  bool has_alpha = false;
};

// Decodes any PNG into RGBA. Throws IoError on unreadable or invalid data.
RgbaImage read_png(const std::filesystem::path& path);
RgbaImage decode_png(std::span<const std::uint8_t> bytes);
PngInfo probe_png(const std::filesystem::path& path);

// Output bytes depend only on the raster (no timestamps or text chunks).
std::vector<std::uint8_t> encode_png(const RgbaImage& img);
void write_png(const std::filesystem::path& path, const RgbaImage& img);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace collage
