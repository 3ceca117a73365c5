#include "saod/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace saod {
namespace {

constexpr std::array<char, 4> kMagic{'S', 'R', 'A', 'W'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw Error(ErrorCode::MalformedFile, "truncated raster header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t clip(double v, std::uint32_t limit) {
  if (!(v > 0.0)) return 0;
  if (v >= static_cast<double>(limit)) return limit;
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::size_t pixel_bytes(PixelType type) { return type == PixelType::U8 ? 1 : 4; }

Raster::Raster(std::uint32_t height, std::uint32_t width, std::uint32_t channels, PixelType type)
    : height_(height), width_(width), channels_(channels), type_(type) {
  if (channels == 0) throw Error(ErrorCode::InvalidArgument, "raster needs at least one channel");
  data_.assign(static_cast<std::size_t>(height) * width * channels * pixel_bytes(type), 0);
}

std::span<std::uint8_t> Raster::pixel(std::uint32_t row, std::uint32_t col) {
  const std::size_t stride = channels_ * pixel_bytes(type_);
  return std::span<std::uint8_t>(data_).subspan((static_cast<std::size_t>(row) * width_ + col) * stride,
                                                stride);
}

std::span<const std::uint8_t> Raster::pixel(std::uint32_t row, std::uint32_t col) const {
  const std::size_t stride = channels_ * pixel_bytes(type_);
  return std::span<const std::uint8_t>(data_).subspan(
      (static_cast<std::size_t>(row) * width_ + col) * stride, stride);
}

bool Raster::is_zero(std::uint32_t row, std::uint32_t col) const {
  const auto p = pixel(row, col);
  return std::all_of(p.begin(), p.end(), [](std::uint8_t b) { return b == 0; });
}

Raster Raster::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || magic != kMagic) throw Error(ErrorCode::MalformedFile, "not a raw raster file");
  const std::uint32_t h = get_u32(in);
  const std::uint32_t w = get_u32(in);
  const std::uint32_t c = get_u32(in);
  const std::uint32_t t = get_u32(in);
  if (t > 1 || c == 0) throw Error(ErrorCode::MalformedFile, "bad raster pixel type or channels");
  Raster r(h, w, c, static_cast<PixelType>(t));
  in.read(reinterpret_cast<char*>(r.data_.data()), static_cast<std::streamsize>(r.data_.size()));
  if (!in) throw Error(ErrorCode::MalformedFile, "truncated raster payload");
  return r;
}

void Raster::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  out.write(kMagic.data(), 4);
  put_u32(out, height_);
  put_u32(out, width_);
  put_u32(out, channels_);
  put_u32(out, static_cast<std::uint32_t>(type_));
  out.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size()));
}

Raster mask_boxes(const Raster& raster, std::span<const BoundingBox> boxes) {
  Raster out = raster;
  for (const auto& box : boxes) {
    const std::uint32_t x0 = clip(std::floor(box.x_min), raster.width());
    const std::uint32_t x1 = clip(std::ceil(box.x_max), raster.width());
    const std::uint32_t y0 = clip(std::floor(box.y_min), raster.height());
    const std::uint32_t y1 = clip(std::ceil(box.y_max), raster.height());
    for (std::uint32_t row = y0; row < y1; ++row) {
      for (std::uint32_t col = x0; col < x1; ++col) {
        auto p = out.pixel(row, col);
        std::fill(p.begin(), p.end(), std::uint8_t{0});
      }
    }
  }
  return out;
}

}  // namespace saod
