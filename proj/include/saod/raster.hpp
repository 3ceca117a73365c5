#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "saod/datamodel.hpp"

namespace saod {

enum class PixelType : std::uint32_t { U8 = 0, F32 = 1 };

std::size_t pixel_bytes(PixelType type);

/// Row-major H x W x C image with raw little-endian storage.
///
/// On disk: the 4-byte magic "SRAW", then H, W, C and the pixel type as
/// little-endian uint32, then the H*W*C samples.
class Raster {
 public:
  Raster() = default;
  Raster(std::uint32_t height, std::uint32_t width, std::uint32_t channels, PixelType type);

  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }
  std::uint32_t channels() const { return channels_; }
  PixelType type() const { return type_; }

  std::span<std::uint8_t> bytes() { return data_; }
  std::span<const std::uint8_t> bytes() const { return data_; }

  /// Byte range covering every channel of pixel (row, col).
  std::span<std::uint8_t> pixel(std::uint32_t row, std::uint32_t col);
  std::span<const std::uint8_t> pixel(std::uint32_t row, std::uint32_t col) const;

  /// True when every byte of the pixel is zero.
  bool is_zero(std::uint32_t row, std::uint32_t col) const;

  static Raster load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::uint32_t channels_ = 0;
  PixelType type_ = PixelType::U8;
  std::vector<std::uint8_t> data_;
};

/// Zeroes every pixel inside the boxes. Box extents are rounded outward
/// (floor of the minimum, ceil of the maximum) and clipped to the raster;
/// pixels outside the union are left bit-identical.
Raster mask_boxes(const Raster& raster, std::span<const BoundingBox> boxes);

}  // namespace saod
