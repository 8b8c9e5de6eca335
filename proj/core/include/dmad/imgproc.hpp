#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dmad/plane.hpp"

namespace dmad {

/// Side length of the face crops fed to the scattering network.
inline constexpr int kFaceCropSize = 250;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Decoded 8-bit RGB raster, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});
  RgbImage(int width, int height, std::vector<Rgb> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  Rgb& at(int x, int y) noexcept { return pixels_[index(x, y)]; }
  const Rgb& at(int x, int y) const noexcept { return pixels_[index(x, y)]; }

  std::span<const Rgb> pixels() const noexcept { return pixels_; }
  std::span<Rgb> pixels() noexcept { return pixels_; }

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

/// A square face crop. The side is kFaceCropSize unless a smaller network
/// input size is configured (tests use small crops).
class FaceCrop {
 public:
  /// Throws kDimensionMismatch when the image is not square.
  explicit FaceCrop(RgbImage image);

  int size() const noexcept { return image_.width(); }
  const RgbImage& image() const noexcept { return image_; }

  bool operator==(const FaceCrop&) const = default;

 private:
  RgbImage image_;
};

struct CropRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct ChannelSet {
  Plane y;
  Plane cb;
  Plane cr;
};

struct FilteredChannelSet {
  Plane ly;
  Plane lcb;
  Plane lcr;
};

enum class LaplacianStencil { kFourNeighbor, kEightNeighbor };

/// Decodes a PNG or JPEG file. Alpha is dropped, grayscale is replicated
/// into three channels.
RgbImage load_image(const std::filesystem::path& path);
RgbImage decode_image(std::span<const std::uint8_t> bytes);

/// Writes an 8-bit RGB PNG. Output bytes depend only on the pixels.
void save_png(const std::filesystem::path& path, const RgbImage& image);

/// Bilinear resample of `crop` (or the centred square of side
/// min(width, height)) to out_size x out_size. Sample positions use pixel
/// centres, so an equal-size resample is an exact copy.
FaceCrop crop_resize_face(const RgbImage& image, std::optional<CropRect> crop = std::nullopt,
                          int out_size = kFaceCropSize);

/// Full-range BT.601 (JFIF) conversion, unclipped.
ChannelSet rgb_to_ycbcr(const FaceCrop& crop);
std::array<double, 3> rgb_to_ycbcr(double r, double g, double b);

/// 3x3 Laplacian with replicate (edge-clamp) borders.
Plane laplacian_filter(const Plane& plane,
                       LaplacianStencil stencil = LaplacianStencil::kFourNeighbor);

FilteredChannelSet filter_channels(const ChannelSet& channels,
                                   LaplacianStencil stencil = LaplacianStencil::kFourNeighbor);

}  // namespace dmad
