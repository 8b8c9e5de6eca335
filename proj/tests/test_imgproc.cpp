#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "color_oracle.hpp"
#include "dmad/error.hpp"
#include "dmad/imgproc.hpp"
#include "test_support.hpp"

namespace dmad {
namespace {

RgbImage solid(int w, int h, Rgb c) { return RgbImage(w, h, c); }

TEST(LoadImage, DecodesSinglePixelBlackPng) {
  test::TempDir dir;
  save_png(dir.path() / "black.png", solid(1, 1, {0, 0, 0}));
  const RgbImage img = load_image(dir.path() / "black.png");
  ASSERT_EQ(img.width(), 1);
  ASSERT_EQ(img.height(), 1);
  EXPECT_EQ(img.at(0, 0), (Rgb{0, 0, 0}));
}

TEST(LoadImage, DecodesWhitePng) {
  test::TempDir dir;
  save_png(dir.path() / "white.png", solid(2, 2, {255, 255, 255}));
  const RgbImage img = load_image(dir.path() / "white.png");
  ASSERT_EQ(img.pixels().size(), 4u);
  for (const Rgb& p : img.pixels()) EXPECT_EQ(p, (Rgb{255, 255, 255}));
}

TEST(LoadImage, PngRoundTripIsLossless) {
  test::TempDir dir;
  std::mt19937 rng(3);
  RgbImage img(7, 5);
  for (Rgb& p : img.pixels()) {
    p = {static_cast<std::uint8_t>(rng() & 255), static_cast<std::uint8_t>(rng() & 255),
         static_cast<std::uint8_t>(rng() & 255)};
  }
  save_png(dir.path() / "noise.png", img);
  EXPECT_EQ(load_image(dir.path() / "noise.png"), img);
}

TEST(LoadImage, TruncatedPngIsDecodeError) {
  test::TempDir dir;
  save_png(dir.path() / "full.png", solid(16, 16, {10, 20, 30}));
  auto bytes = test::read_bytes(dir.path() / "full.png");
  bytes.resize(bytes.size() / 2);
  test::write_bytes(dir.path() / "cut.png", bytes);
  test::expect_error(ErrorKind::kDecodeError, [&] { load_image(dir.path() / "cut.png"); });
}

TEST(LoadImage, UnknownFormatIsDecodeError) {
  test::TempDir dir;
  test::write_bytes(dir.path() / "x.bmp", {'B', 'M', 0, 0, 0, 0, 0, 0});
  test::expect_error(ErrorKind::kDecodeError, [&] { load_image(dir.path() / "x.bmp"); });
}

TEST(LoadImage, MissingFileIsIoError) {
  test::expect_error(ErrorKind::kIoError, [] { load_image("/nonexistent/dir/face.png"); });
}

TEST(LoadImage, DecodesJpeg) {
  const RgbImage img = load_image(test::data_dir() / "grey8.jpg");
  ASSERT_EQ(img.width(), 8);
  ASSERT_EQ(img.height(), 8);
  for (const Rgb& p : img.pixels()) {
    EXPECT_NEAR(p.r, 128, 2);
    EXPECT_NEAR(p.g, 128, 2);
    EXPECT_NEAR(p.b, 128, 2);
  }
}

TEST(LoadImage, GrayscaleJpegIsReplicated) {
  const RgbImage img = load_image(test::data_dir() / "gray4.jpg");
  ASSERT_EQ(img.width(), 4);
  for (const Rgb& p : img.pixels()) {
    EXPECT_EQ(p.r, p.g);
    EXPECT_EQ(p.g, p.b);
    EXPECT_NEAR(p.r, 77, 2);
  }
}

TEST(LoadImage, GrayscalePngIsReplicated) {
  const RgbImage img = load_image(test::data_dir() / "gray3x2.png");
  ASSERT_EQ(img.width(), 3);
  ASSERT_EQ(img.height(), 2);
  EXPECT_EQ(img.at(1, 0), (Rgb{50, 50, 50}));
  EXPECT_EQ(img.at(2, 1), (Rgb{250, 250, 250}));
}

TEST(LoadImage, AlphaIsDiscarded) {
  const RgbImage img = load_image(test::data_dir() / "rgba2x1.png");
  EXPECT_EQ(img.at(1, 0), (Rgb{40, 50, 60}));
  EXPECT_EQ(img.at(0, 0), (Rgb{10, 20, 30}));
}

TEST(CropResize, SameSizeIsBitwisePassThrough) {
  std::mt19937 rng(11);
  RgbImage img(250, 250);
  for (Rgb& p : img.pixels()) {
    p = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
         static_cast<std::uint8_t>(rng())};
  }
  EXPECT_EQ(crop_resize_face(img).image(), img);
}

TEST(CropResize, ConstantImageStaysConstant) {
  const FaceCrop crop = crop_resize_face(solid(500, 500, {100, 100, 100}));
  ASSERT_EQ(crop.size(), 250);
  for (const Rgb& p : crop.image().pixels()) EXPECT_EQ(p, (Rgb{100, 100, 100}));
}

TEST(CropResize, NonSquareUsesCentredSquare) {
  RgbImage img(30, 10, {0, 0, 0});
  for (int y = 0; y < 10; ++y) {
    for (int x = 10; x < 20; ++x) img.at(x, y) = {200, 200, 200};
  }
  const FaceCrop crop = crop_resize_face(img, std::nullopt, 10);
  for (const Rgb& p : crop.image().pixels()) EXPECT_EQ(p, (Rgb{200, 200, 200}));
}

TEST(CropResize, ExplicitRectangleSelectsRegion) {
  RgbImage img(40, 40, {0, 0, 0});
  img.at(5, 7) = {255, 0, 0};
  const FaceCrop crop = crop_resize_face(img, CropRect{5, 7, 4, 4}, 4);
  EXPECT_EQ(crop.image().at(0, 0), (Rgb{255, 0, 0}));
  EXPECT_EQ(crop.image().at(1, 0), (Rgb{0, 0, 0}));
}

TEST(CropResize, RectangleOutsideImageIsRejected) {
  const RgbImage img = solid(100, 100, {1, 2, 3});
  test::expect_error(ErrorKind::kCropOutOfBounds, [&] { crop_resize_face(img, CropRect{60, 60, 50, 50}); });
  test::expect_error(ErrorKind::kCropOutOfBounds, [&] { crop_resize_face(img, CropRect{-1, 0, 10, 10}); });
  test::expect_error(ErrorKind::kCropOutOfBounds, [&] { crop_resize_face(img, CropRect{0, 0, 0, 10}); });
}

TEST(CropResize, IsDeterministic) {
  std::mt19937 rng(5);
  RgbImage img(333, 301);
  for (Rgb& p : img.pixels()) {
    p = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
         static_cast<std::uint8_t>(rng())};
  }
  EXPECT_EQ(crop_resize_face(img), crop_resize_face(img));
}

TEST(FaceCropType, RejectsNonSquareImages) {
  test::expect_error(ErrorKind::kDimensionMismatch, [] { FaceCrop(RgbImage(4, 5)); });
}

TEST(YCbCr, BlackAndWhiteHaveNeutralChroma) {
  const auto black = rgb_to_ycbcr(0, 0, 0);
  EXPECT_DOUBLE_EQ(black[0], 0.0);
  EXPECT_DOUBLE_EQ(black[1], 128.0);
  EXPECT_DOUBLE_EQ(black[2], 128.0);
  const auto white = rgb_to_ycbcr(255, 255, 255);
  EXPECT_NEAR(white[0], 255.0, 1e-12);
  EXPECT_NEAR(white[1], 128.0, 1e-12);
  EXPECT_NEAR(white[2], 128.0, 1e-12);
}

TEST(YCbCr, PureRedMatchesScalarReference) {
  const auto got = rgb_to_ycbcr(255, 0, 0);
  const auto want = oracle::ycbcr(255, 0, 0);
  EXPECT_NEAR(got[0], 76.245, 1e-9);
  EXPECT_NEAR(got[1], 84.97232, 1e-9);
  EXPECT_NEAR(got[2], 255.5, 1e-9);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(got[i], want[i], 1e-4);
}

TEST(YCbCr, AgreesWithReferenceOverRgbCube) {
  for (int r = 0; r < 256; r += 17) {
    for (int g = 0; g < 256; g += 15) {
      for (int b = 0; b < 256; b += 51) {
        const auto got = rgb_to_ycbcr(r, g, b);
        const auto want = oracle::ycbcr(r, g, b);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(got[i], want[i], 2e-4) << r << ',' << g << ',' << b;
      }
    }
  }
}

TEST(YCbCr, ExactInverseRecoversRgb) {
  // The inverse of the rounded coefficient matrix, solved numerically.
  const double m[3][3] = {{0.299, 0.587, 0.114}, {-0.168736, -0.331264, 0.5}, {0.5, -0.418688, -0.081312}};
  double inv[3][3];
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int a = (j + 1) % 3, b = (j + 2) % 3, c = (i + 1) % 3, d = (i + 2) % 3;
      inv[i][j] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
    }
  }
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  for (int k = 0; k < 1000; ++k) {
    const double rgb[3] = {u(rng), u(rng), u(rng)};
    const auto ycc = rgb_to_ycbcr(rgb[0], rgb[1], rgb[2]);
    const double centred[3] = {ycc[0], ycc[1] - 128.0, ycc[2] - 128.0};
    for (int i = 0; i < 3; ++i) {
      const double back = inv[i][0] * centred[0] + inv[i][1] * centred[1] + inv[i][2] * centred[2];
      EXPECT_NEAR(back, rgb[i], 1e-9);
    }
  }
}

TEST(YCbCr, ReferenceInverseRoundTrips) {
  const auto ycc = oracle::ycbcr(12, 200, 77);
  const auto back = oracle::rgb(ycc[0], ycc[1], ycc[2]);
  EXPECT_NEAR(back[0], 12, 1e-9);
  EXPECT_NEAR(back[1], 200, 1e-9);
  EXPECT_NEAR(back[2], 77, 1e-9);
}

TEST(YCbCr, PlanesMatchPerPixelConversion) {
  RgbImage img(3, 3);
  img.at(1, 2) = {255, 0, 0};
  img.at(0, 0) = {10, 20, 30};
  const ChannelSet cs = rgb_to_ycbcr(FaceCrop(img));
  ASSERT_EQ(cs.y.rows(), 3);
  ASSERT_EQ(cs.cb.cols(), 3);
  const auto red = rgb_to_ycbcr(255, 0, 0);
  EXPECT_DOUBLE_EQ(cs.y(2, 1), red[0]);
  EXPECT_DOUBLE_EQ(cs.cb(2, 1), red[1]);
  EXPECT_DOUBLE_EQ(cs.cr(2, 1), red[2]);
  const auto other = rgb_to_ycbcr(10, 20, 30);
  EXPECT_DOUBLE_EQ(cs.cr(0, 0), other[2]);
}

TEST(Laplacian, ConstantPlaneGivesZeros) {
  const Plane out = laplacian_filter(Plane(6, 9, 42.5));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Laplacian, ImpulseResponseIsTheKernel) {
  Plane p(5, 5);
  p(2, 2) = 1.0;
  const Plane out = laplacian_filter(p);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      double want = 0.0;
      if (r == 2 && c == 2) want = -4.0;
      else if (std::abs(r - 2) + std::abs(c - 2) == 1) want = 1.0;
      EXPECT_EQ(out(r, c), want) << r << ',' << c;
    }
  }
}

TEST(Laplacian, EightNeighbourImpulseResponse) {
  Plane p(5, 5);
  p(2, 2) = 1.0;
  const Plane out = laplacian_filter(p, LaplacianStencil::kEightNeighbor);
  EXPECT_EQ(out(2, 2), -8.0);
  EXPECT_EQ(out(1, 1), 1.0);
  EXPECT_EQ(out(2, 3), 1.0);
  EXPECT_EQ(out(0, 0), 0.0);
}

TEST(Laplacian, RampIsZeroInInterior) {
  Plane p(7, 8);
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 8; ++c) p(r, c) = c;
  }
  const Plane out = laplacian_filter(p);
  for (int r = 1; r < 6; ++r) {
    for (int c = 1; c < 7; ++c) EXPECT_EQ(out(r, c), 0.0);
  }
}

TEST(Laplacian, ReplicateBorderAtCorner) {
  Plane p(3, 3);
  p(0, 0) = 1.0;
  const Plane out = laplacian_filter(p);
  // Clamped neighbours above and left repeat the pixel itself.
  EXPECT_EQ(out(0, 0), -2.0);
  EXPECT_EQ(out(0, 1), 1.0);
  EXPECT_EQ(out(1, 0), 1.0);
}

TEST(Laplacian, TooSmallPlaneIsRejected) {
  test::expect_error(ErrorKind::kPlaneTooSmall, [] { laplacian_filter(Plane(2, 5)); });
  test::expect_error(ErrorKind::kPlaneTooSmall, [] { laplacian_filter(Plane(5, 2)); });
}

TEST(LaplacianProperty, IsLinear) {
  std::mt19937 rng(23);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    Plane p(13, 17), q(13, 17);
    for (double& v : p.values()) v = n(rng);
    for (double& v : q.values()) v = n(rng);
    const double a = n(rng), b = n(rng);
    Plane mix(13, 17);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.values()[i] = a * p.values()[i] + b * q.values()[i];
    const Plane lp = laplacian_filter(p), lq = laplacian_filter(q), lm = laplacian_filter(mix);
    double scale = 0.0;
    for (std::size_t i = 0; i < lm.size(); ++i) scale = std::max(scale, std::abs(lm.values()[i]));
    for (std::size_t i = 0; i < lm.size(); ++i) {
      EXPECT_NEAR(lm.values()[i], a * lp.values()[i] + b * lq.values()[i], 1e-9 * std::max(scale, 1.0));
    }
  }
}

TEST(LaplacianProperty, ConstantInteriorSumIsExactlyZero) {
  for (double c : {0.0, 1.0, -3.25, 1e6}) {
    const Plane out = laplacian_filter(Plane(9, 9, c));
    double sum = 0.0;
    for (int r = 1; r < 8; ++r) {
      for (int k = 1; k < 8; ++k) sum += out(r, k);
    }
    EXPECT_EQ(sum, 0.0);
  }
}

TEST(FilterChannels, ConstantColourGivesZeroPlanes) {
  const FilteredChannelSet f = filter_channels(rgb_to_ycbcr(FaceCrop(solid(8, 8, {30, 140, 220}))));
  for (const Plane* p : {&f.ly, &f.lcb, &f.lcr}) {
    ASSERT_EQ(p->rows(), 8);
    for (double v : p->values()) EXPECT_NEAR(v, 0.0, 1e-12);
  }
}

TEST(FilterChannels, SingleRedPixelRespondsInAllPlanes) {
  RgbImage img = solid(5, 5, {0, 0, 0});
  img.at(2, 2) = {255, 0, 0};
  const FilteredChannelSet f = filter_channels(rgb_to_ycbcr(FaceCrop(img)));
  const auto red = oracle::ycbcr(255, 0, 0);
  const auto black = oracle::ycbcr(0, 0, 0);
  EXPECT_NEAR(f.ly(2, 2), -4.0 * (red[0] - black[0]), 1e-3);
  EXPECT_NEAR(f.lcb(2, 2), -4.0 * (red[1] - black[1]), 1e-3);
  EXPECT_NEAR(f.lcr(2, 2), -4.0 * (red[2] - black[2]), 1e-3);
  EXPECT_NEAR(f.lcr(1, 2), red[2] - black[2], 1e-3);
}

TEST(FilterChannels, IsDeterministic) {
  std::mt19937 rng(1);
  RgbImage img(16, 16);
  for (Rgb& p : img.pixels()) {
    p = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
         static_cast<std::uint8_t>(rng())};
  }
  const auto a = filter_channels(rgb_to_ycbcr(FaceCrop(img)));
  const auto b = filter_channels(rgb_to_ycbcr(FaceCrop(img)));
  EXPECT_EQ(a.ly, b.ly);
  EXPECT_EQ(a.lcb, b.lcb);
  EXPECT_EQ(a.lcr, b.lcr);
}

}  // namespace
}  // namespace dmad
