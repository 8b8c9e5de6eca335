#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dmad/plane.hpp"

namespace dmad {

/// Parameters of the two-layer Morlet scattering network.
struct ScatteringConfig {
  int rows = 250;
  int cols = 250;
  /// Number of octaves; the averaging window is 2^J pixels.
  int num_octaves = 3;
  /// Wavelets per octave in layer 1 and layer 2.
  std::array<int, 2> quality = {2, 1};
  /// Orientations per layer, spread over [0, pi).
  std::array<int, 2> rotations = {6, 6};
  /// Envelope eccentricity across the wave direction.
  double slant = 0.5;
  /// Subsampling is relaxed by this many octaves.
  int oversampling = 0;
  /// Spatial envelope width of the finest wavelet; scale j uses sigma0 * 2^j.
  double sigma0 = 0.4;

  bool operator==(const ScatteringConfig&) const = default;
};

/// Throws kInvalidConfig on any violated invariant.
void validate(const ScatteringConfig& config);

/// Canonical "key=value" text used for hashing and provenance.
std::string canonical_text(const ScatteringConfig& config);

/// Reads a config from JSON ({"image_size":[r,c],"J":3,"Q":[2,1],"L":[6,6],
/// "slant":0.5,"oversampling":0,"sigma0":0.4}) or from key=value lines in the
/// canonical_text() form. Missing keys keep their defaults.
ScatteringConfig parse_scattering_config(std::string_view text);
ScatteringConfig load_scattering_config(const std::filesystem::path& path);

/// SHA-256 of canonical_text().
std::array<std::uint8_t, 32> config_hash(const ScatteringConfig& config);

/// A wavelet scale j = index / quality (in octaves) plus an orientation.
struct WaveletIndex {
  int scale_index = 0;
  int quality = 1;
  int rotation = 0;

  double scale() const noexcept { return static_cast<double>(scale_index) / quality; }
  bool operator==(const WaveletIndex&) const = default;
};

struct ScatteringPath {
  int order = 0;
  WaveletIndex lambda1;  // valid for order >= 1
  WaveletIndex lambda2;  // valid for order == 2
  bool operator==(const ScatteringPath&) const = default;
};

/// True when the layer-2 scale lies strictly above the layer-1 scale.
bool is_frequency_decreasing(const WaveletIndex& first, const WaveletIndex& second);

/// Order 0, then order 1 by (j1, t1), then order 2 by (j1, t1, j2, t2).
std::vector<ScatteringPath> enumerate_paths(const ScatteringConfig& config);

/// Closed-form path count; equals enumerate_paths(config).size().
std::size_t path_count(const ScatteringConfig& config);

/// Stride applied to every averaged map: 2^max(J - oversampling, 0).
int output_stride(const ScatteringConfig& config);
int output_rows(const ScatteringConfig& config);
int output_cols(const ScatteringConfig& config);

class FourierTransform;

/// One Fourier-domain filter sampled on the rows x cols DFT grid (natural
/// FFT ordering, row-major). Morlet and Gaussian spectra are real.
struct Filter {
  WaveletIndex index;
  std::vector<double> spectrum;
  int stride = 1;
};

/// Littlewood-Paley sum of one layer: |phi|^2 + 1/2 sum |psi(w)|^2 + |psi(-w)|^2.
struct FrameBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Immutable after construction; share it freely across threads.
class FilterBank {
 public:
  const ScatteringConfig& config() const noexcept { return config_; }
  const Filter& lowpass() const noexcept { return lowpass_; }
  const std::vector<Filter>& layer1() const noexcept { return layer1_; }
  const std::vector<Filter>& layer2() const noexcept { return layer2_; }
  const std::array<FrameBounds, 2>& frame_bounds() const noexcept { return frame_; }

  /// Littlewood-Paley deficit: LP sum lies in [1 - eps, 1] on the grid for
  /// both layers.
  double frame_epsilon() const noexcept;

  const FourierTransform& fft() const noexcept { return *fft_; }

 private:
  friend FilterBank build_filter_bank(const ScatteringConfig& config);

  ScatteringConfig config_;
  Filter lowpass_;
  std::vector<Filter> layer1_;
  std::vector<Filter> layer2_;
  std::array<FrameBounds, 2> frame_{};
  std::shared_ptr<const FourierTransform> fft_;
};

FilterBank build_filter_bank(const ScatteringConfig& config);

/// Littlewood-Paley sum evaluated on the grid for the lowpass plus the given
/// wavelets, in natural FFT ordering.
std::vector<double> littlewood_paley_sum(const Filter& lowpass, const std::vector<Filter>& wavelets,
                                         int rows, int cols);

struct ScatteringFeatures {
  ScatteringConfig config;
  std::vector<ScatteringPath> paths;
  std::vector<Plane> maps;  // one per path, same order
};

/// Two-layer cascade computed with circular FFT convolutions.
ScatteringFeatures scattering_transform(const Plane& plane, const FilterBank& bank);

struct FeatureLayout {
  std::size_t path_count = 0;
  int map_rows = 0;
  int map_cols = 0;
  bool operator==(const FeatureLayout&) const = default;
};

/// Path-major, then row-major within each coefficient map.
struct FeatureVector {
  FeatureLayout layout;
  std::vector<double> values;
};

FeatureVector feature_vector(const ScatteringFeatures& features);

}  // namespace dmad
