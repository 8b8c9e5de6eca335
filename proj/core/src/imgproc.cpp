#include "dmad/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmad/error.hpp"

namespace dmad {

RgbImage::RgbImage(int width, int height, Rgb fill) {
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::kDimensionMismatch,
                "image dimensions must be positive, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
  width_ = width;
  height_ = height;
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

RgbImage::RgbImage(int width, int height, std::vector<Rgb> pixels) {
  if (width < 1 || height < 1 ||
      pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::kDimensionMismatch, "pixel count does not match image dimensions");
  }
  width_ = width;
  height_ = height;
  pixels_ = std::move(pixels);
}

FaceCrop::FaceCrop(RgbImage image) : image_(std::move(image)) {
  if (image_.width() != image_.height() || image_.width() < 1) {
    throw Error(ErrorKind::kDimensionMismatch,
                "face crop must be square, got " + std::to_string(image_.width()) + "x" +
                    std::to_string(image_.height()));
  }
}

FaceCrop crop_resize_face(const RgbImage& image, std::optional<CropRect> crop, int out_size) {
  if (out_size < 1) {
    throw Error(ErrorKind::kInvalidConfig, "output crop size must be positive");
  }
  CropRect rect;
  if (crop) {
    rect = *crop;
    const bool inside = rect.width >= 1 && rect.height >= 1 && rect.x >= 0 && rect.y >= 0 &&
                        rect.x + rect.width <= image.width() &&
                        rect.y + rect.height <= image.height();
    if (!inside) {
      throw Error(ErrorKind::kCropOutOfBounds,
                  "crop (" + std::to_string(rect.x) + "," + std::to_string(rect.y) + "," +
                      std::to_string(rect.width) + "," + std::to_string(rect.height) +
                      ") exceeds image " + std::to_string(image.width()) + "x" +
                      std::to_string(image.height()));
    }
  } else {
    const int side = std::min(image.width(), image.height());
    rect = {(image.width() - side) / 2, (image.height() - side) / 2, side, side};
  }

  const double sx = static_cast<double>(rect.width) / out_size;
  const double sy = static_cast<double>(rect.height) / out_size;
  RgbImage out(out_size, out_size);
  for (int oy = 0; oy < out_size; ++oy) {
    const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, rect.height - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, rect.height - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < out_size; ++ox) {
      const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, rect.width - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, rect.width - 1);
      const double wx = fx - x0;
      const Rgb& p00 = image.at(rect.x + x0, rect.y + y0);
      const Rgb& p01 = image.at(rect.x + x1, rect.y + y0);
      const Rgb& p10 = image.at(rect.x + x0, rect.y + y1);
      const Rgb& p11 = image.at(rect.x + x1, rect.y + y1);
      auto blend = [&](auto channel) {
        const double top = (1.0 - wx) * channel(p00) + wx * channel(p01);
        const double bottom = (1.0 - wx) * channel(p10) + wx * channel(p11);
        const double v = (1.0 - wy) * top + wy * bottom;
        return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      };
      out.at(ox, oy) = {blend([](const Rgb& p) { return p.r; }),
                        blend([](const Rgb& p) { return p.g; }),
                        blend([](const Rgb& p) { return p.b; })};
    }
  }
  return FaceCrop(std::move(out));
}

std::array<double, 3> rgb_to_ycbcr(double r, double g, double b) {
  return {0.299 * r + 0.587 * g + 0.114 * b,
          128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b,
          128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b};
}

ChannelSet rgb_to_ycbcr(const FaceCrop& crop) {
  const RgbImage& img = crop.image();
  ChannelSet out{Plane(img.height(), img.width()), Plane(img.height(), img.width()),
                 Plane(img.height(), img.width())};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgb& p = img.at(x, y);
      const auto [luma, cb, cr] = rgb_to_ycbcr(p.r, p.g, p.b);
      out.y(y, x) = luma;
      out.cb(y, x) = cb;
      out.cr(y, x) = cr;
    }
  }
  return out;
}

Plane laplacian_filter(const Plane& plane, LaplacianStencil stencil) {
  const int rows = plane.rows();
  const int cols = plane.cols();
  if (rows < 3 || cols < 3) {
    throw Error(ErrorKind::kPlaneTooSmall, "Laplacian needs at least a 3x3 plane, got " +
                                               std::to_string(rows) + "x" +
                                               std::to_string(cols));
  }
  auto px = [&](int r, int c) {
    return plane(std::clamp(r, 0, rows - 1), std::clamp(c, 0, cols - 1));
  };
  Plane out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double centre = px(r, c);
      double v = px(r - 1, c) + px(r + 1, c) + px(r, c - 1) + px(r, c + 1) - 4.0 * centre;
      if (stencil == LaplacianStencil::kEightNeighbor) {
        v += px(r - 1, c - 1) + px(r - 1, c + 1) + px(r + 1, c - 1) + px(r + 1, c + 1) -
             4.0 * centre;
      }
      out(r, c) = v;
    }
  }
  return out;
}

FilteredChannelSet filter_channels(const ChannelSet& channels, LaplacianStencil stencil) {
  return {laplacian_filter(channels.y, stencil), laplacian_filter(channels.cb, stencil),
          laplacian_filter(channels.cr, stencil)};
}

}  // namespace dmad
