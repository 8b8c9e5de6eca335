#include "dmad/scattering.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dmad/digest.hpp"
#include "dmad/error.hpp"
#include "fourier.hpp"

namespace dmad {
namespace {

constexpr double kPi = std::numbers::pi;

// Envelope terms below exp(-40) are dropped from the periodisation sum.
constexpr double kPeriodisationReach = 9.0;

double grid_frequency(int k, int n) {
  const int folded = k < (n + 1) / 2 ? k : k - n;
  return 2.0 * kPi * folded / n;
}

int mirror_index(int k, int n) { return k == 0 ? 0 : n - k; }

int periodisation_terms(double min_spatial_sigma) {
  return std::max(1, static_cast<int>(std::ceil((kPeriodisationReach / min_spatial_sigma + kPi) /
                                                (2.0 * kPi))));
}

// Anisotropic Gaussian exp(-|S^(1/2) (w - centre)|^2 / 2) on the torus, with
// spatial widths sigma along e_theta and sigma / slant across it.
std::vector<double> periodised_gaussian(int rows, int cols, double centre_x, double centre_y,
                                        double theta, double sigma, double slant) {
  const double along = sigma;
  const double across = sigma / slant;
  const double min_sigma = std::min(along, across);
  const int reach = periodisation_terms(min_sigma);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  std::vector<double> wx(static_cast<std::size_t>(cols));
  std::vector<double> wy(static_cast<std::size_t>(rows));
  for (int c = 0; c < cols; ++c) wx[static_cast<std::size_t>(c)] = grid_frequency(c, cols);
  for (int r = 0; r < rows; ++r) wy[static_cast<std::size_t>(r)] = grid_frequency(r, rows);

  std::vector<double> out(static_cast<std::size_t>(rows) * cols, 0.0);
  for (int a = -reach; a <= reach; ++a) {
    for (int b = -reach; b <= reach; ++b) {
      const double sy = 2.0 * kPi * a - centre_y;
      const double sx = 2.0 * kPi * b - centre_x;
      // Skip periodic copies whose whole cell lies beyond the cut-off.
      const double gap_x = std::max(0.0, std::abs(sx) - kPi);
      const double gap_y = std::max(0.0, std::abs(sy) - kPi);
      if (std::hypot(gap_x, gap_y) * min_sigma > kPeriodisationReach) continue;
      for (int r = 0; r < rows; ++r) {
        const double dy = wy[static_cast<std::size_t>(r)] + sy;
        double* row = out.data() + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
          const double dx = wx[static_cast<std::size_t>(c)] + sx;
          const double u = dx * ct + dy * st;
          const double v = -dx * st + dy * ct;
          row[c] += std::exp(-0.5 * (along * along * u * u + across * across * v * v));
        }
      }
    }
  }
  return out;
}

Filter make_morlet(const ScatteringConfig& config, WaveletIndex index, int num_rotations) {
  const double j = index.scale();
  const double sigma = config.sigma0 * std::exp2(j);
  const double xi = 0.75 * kPi * std::exp2(-j);
  const double theta = index.rotation * kPi / num_rotations;
  std::vector<double> wave = periodised_gaussian(config.rows, config.cols, xi * std::cos(theta),
                                                 xi * std::sin(theta), theta, sigma, config.slant);
  const std::vector<double> envelope =
      periodised_gaussian(config.rows, config.cols, 0.0, 0.0, theta, sigma, config.slant);
  const double beta = wave[0] / envelope[0];
  for (std::size_t i = 0; i < wave.size(); ++i) wave[i] -= beta * envelope[i];
  wave[0] = 0.0;
  return Filter{index, std::move(wave), 1};
}

Filter make_lowpass(const ScatteringConfig& config) {
  const double sigma = 0.8 * std::exp2(config.num_octaves);
  std::vector<double> phi =
      periodised_gaussian(config.rows, config.cols, 0.0, 0.0, 0.0, sigma, 1.0);
  const double dc = phi[0];
  for (double& v : phi) v /= dc;
  return Filter{{}, std::move(phi), output_stride(config)};
}

std::vector<Filter> make_layer(const ScatteringConfig& config, int layer) {
  const int q = config.quality[layer];
  const int l = config.rotations[layer];
  std::vector<Filter> filters;
  filters.reserve(static_cast<std::size_t>(q) * config.num_octaves * l);
  for (int m = 0; m < q * config.num_octaves; ++m) {
    for (int t = 0; t < l; ++t) {
      filters.push_back(make_morlet(config, WaveletIndex{m, q, t}, l));
    }
  }
  return filters;
}

// Scales the layer so its Littlewood-Paley sum peaks at exactly 1 and
// returns the achieved bounds.
FrameBounds normalise_layer(const Filter& lowpass, std::vector<Filter>& wavelets, int rows,
                            int cols) {
  Filter unit_lowpass{{}, std::vector<double>(lowpass.spectrum.size(), 0.0), 1};
  const std::vector<double> energy = littlewood_paley_sum(unit_lowpass, wavelets, rows, cols);
  double scale2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < energy.size(); ++i) {
    if (energy[i] <= 0.0) continue;
    const double phi2 = lowpass.spectrum[i] * lowpass.spectrum[i];
    scale2 = std::min(scale2, (1.0 - phi2) / energy[i]);
  }
  const double scale = std::sqrt(scale2);
  for (Filter& f : wavelets) {
    for (double& v : f.spectrum) v *= scale;
  }
  const std::vector<double> lp = littlewood_paley_sum(lowpass, wavelets, rows, cols);
  const auto [lo, hi] = std::minmax_element(lp.begin(), lp.end());
  return {*lo, *hi};
}

std::size_t index_of(int r, int c, int cols) { return static_cast<std::size_t>(r) * cols + c; }

}  // namespace

void validate(const ScatteringConfig& config) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidConfig, what); };
  if (config.rows < 1 || config.cols < 1) fail("image size must be positive");
  if (config.num_octaves < 1) fail("J must be at least 1");
  if (config.num_octaves > 30 ||
      (1LL << config.num_octaves) > std::min(config.rows, config.cols)) {
    fail("invariance scale 2^" + std::to_string(config.num_octaves) + " exceeds image size " +
         std::to_string(config.rows) + "x" + std::to_string(config.cols));
  }
  for (int layer = 0; layer < 2; ++layer) {
    if (config.quality[layer] < 1) fail("quality factors must be >= 1");
    if (config.rotations[layer] < 1) fail("rotation counts must be >= 1");
  }
  if (!(config.slant > 0.0) || !std::isfinite(config.slant)) fail("slant must be positive");
  if (!(config.sigma0 > 0.0) || !std::isfinite(config.sigma0)) fail("sigma0 must be positive");
  if (config.oversampling < 0) fail("oversampling must be non-negative");
}

std::string canonical_text(const ScatteringConfig& config) {
  const auto real = [](double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
  };
  std::ostringstream out;
  out << "rows=" << config.rows << "\ncols=" << config.cols << "\nJ=" << config.num_octaves
      << "\nQ=" << config.quality[0] << "," << config.quality[1]
      << "\nL=" << config.rotations[0] << "," << config.rotations[1]
      << "\nslant=" << real(config.slant) << "\noversampling=" << config.oversampling
      << "\nsigma0=" << real(config.sigma0) << "\n";
  return out.str();
}

std::array<std::uint8_t, 32> config_hash(const ScatteringConfig& config) {
  return sha256(canonical_text(config));
}

bool is_frequency_decreasing(const WaveletIndex& first, const WaveletIndex& second) {
  // second.scale() > first.scale() in exact integer arithmetic.
  return static_cast<long long>(second.scale_index) * first.quality >
         static_cast<long long>(first.scale_index) * second.quality;
}

std::vector<ScatteringPath> enumerate_paths(const ScatteringConfig& config) {
  validate(config);
  const int q1 = config.quality[0];
  const int q2 = config.quality[1];
  const int l1 = config.rotations[0];
  const int l2 = config.rotations[1];
  const int jn = config.num_octaves;
  std::vector<ScatteringPath> paths;
  paths.push_back({0, {}, {}});
  for (int m1 = 0; m1 < q1 * jn; ++m1) {
    for (int t1 = 0; t1 < l1; ++t1) paths.push_back({1, {m1, q1, t1}, {}});
  }
  for (int m1 = 0; m1 < q1 * jn; ++m1) {
    for (int t1 = 0; t1 < l1; ++t1) {
      const WaveletIndex first{m1, q1, t1};
      for (int m2 = 0; m2 < q2 * jn; ++m2) {
        if (!is_frequency_decreasing(first, {m2, q2, 0})) continue;
        for (int t2 = 0; t2 < l2; ++t2) paths.push_back({2, first, {m2, q2, t2}});
      }
    }
  }
  return paths;
}

std::size_t path_count(const ScatteringConfig& config) {
  validate(config);
  const long long q1 = config.quality[0];
  const long long q2 = config.quality[1];
  const long long jn = config.num_octaves;
  // For each layer-2 scale m2/q2, the layer-1 scales m1/q1 below it number
  // ceil(m2*q1/q2), capped at q1*J.
  long long pairs = 0;
  for (long long m2 = 0; m2 < q2 * jn; ++m2) {
    pairs += std::min((m2 * q1 + q2 - 1) / q2, q1 * jn);
  }
  const long long l1 = config.rotations[0];
  const long long l2 = config.rotations[1];
  return static_cast<std::size_t>(1 + l1 * q1 * jn + l1 * l2 * pairs);
}

int output_stride(const ScatteringConfig& config) {
  return 1 << std::max(config.num_octaves - config.oversampling, 0);
}

int output_rows(const ScatteringConfig& config) {
  const int s = output_stride(config);
  return (config.rows + s - 1) / s;
}

int output_cols(const ScatteringConfig& config) {
  const int s = output_stride(config);
  return (config.cols + s - 1) / s;
}

double FilterBank::frame_epsilon() const noexcept {
  return std::max(1.0 - frame_[0].lower, 1.0 - frame_[1].lower);
}

std::vector<double> littlewood_paley_sum(const Filter& lowpass, const std::vector<Filter>& wavelets,
                                         int rows, int cols) {
  std::vector<double> sum(static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = lowpass.spectrum[i] * lowpass.spectrum[i];
  for (const Filter& f : wavelets) {
    for (int r = 0; r < rows; ++r) {
      const int mr = mirror_index(r, rows);
      for (int c = 0; c < cols; ++c) {
        const double a = f.spectrum[index_of(r, c, cols)];
        const double b = f.spectrum[index_of(mr, mirror_index(c, cols), cols)];
        sum[index_of(r, c, cols)] += 0.5 * (a * a + b * b);
      }
    }
  }
  return sum;
}

FilterBank build_filter_bank(const ScatteringConfig& config) {
  validate(config);
  FilterBank bank;
  bank.config_ = config;
  bank.lowpass_ = make_lowpass(config);
  bank.layer1_ = make_layer(config, 0);
  bank.layer2_ = make_layer(config, 1);
  bank.frame_[0] = normalise_layer(bank.lowpass_, bank.layer1_, config.rows, config.cols);
  bank.frame_[1] = normalise_layer(bank.lowpass_, bank.layer2_, config.rows, config.cols);
  bank.fft_ = std::make_shared<const FourierTransform>(config.rows, config.cols);
  return bank;
}

namespace {

// Scratch space and the lowpass/subsample step shared by every path.
class Cascade {
 public:
  explicit Cascade(const FilterBank& bank)
      : bank_(bank),
        fft_(bank.fft()),
        rows_(bank.config().rows),
        cols_(bank.config().cols),
        half_cols_(cols_ / 2 + 1),
        n_(fft_.size()),
        work_(make_complex_buffer(n_)),
        half_(make_complex_buffer(fft_.half_size())),
        real_(make_real_buffer(n_)) {}

  // Writes subsample(IFFT(spectrum * phi)) for a full spectrum of a real
  // signal.
  Plane average_full(const Complex* spectrum) {
    const std::vector<double>& phi = bank_.lowpass().spectrum;
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < half_cols_; ++c) {
        const std::size_t i = index_of(r, c, cols_);
        half_[static_cast<std::size_t>(r) * half_cols_ + c] = spectrum[i] * phi[i];
      }
    }
    return invert_half();
  }

  // Same for a real signal held in real_.
  Plane average_real() {
    fft_.forward_real(real_.get(), half_.get());
    const std::vector<double>& phi = bank_.lowpass().spectrum;
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < half_cols_; ++c) {
        half_[static_cast<std::size_t>(r) * half_cols_ + c] *= phi[index_of(r, c, cols_)];
      }
    }
    return invert_half();
  }

  // real_ = |IFFT(spectrum * psi)|
  void modulus(const Complex* spectrum, const Filter& psi) {
    for (std::size_t i = 0; i < n_; ++i) work_[i] = spectrum[i] * psi.spectrum[i];
    fft_.inverse(work_.get());
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double re = work_[i].real();
      const double im = work_[i].imag();
      real_[i] = std::sqrt(re * re + im * im) * scale;
    }
  }

  // Full spectrum of real_, written to `out`; the upper half is filled from
  // Hermitian symmetry.
  void spectrum_of_real(Complex* out) {
    fft_.forward_real(real_.get(), half_.get());
    for (int r = 0; r < rows_; ++r) {
      const Complex* src = half_.get() + static_cast<std::size_t>(r) * half_cols_;
      Complex* dst = out + static_cast<std::size_t>(r) * cols_;
      std::copy(src, src + half_cols_, dst);
      const int mr = mirror_index(r, rows_);
      const Complex* mirror = half_.get() + static_cast<std::size_t>(mr) * half_cols_;
      for (int c = half_cols_; c < cols_; ++c) dst[c] = std::conj(mirror[cols_ - c]);
    }
  }

 private:
  Plane invert_half() {
    fft_.inverse_real(half_.get(), real_.get());
    const int stride = bank_.lowpass().stride;
    const int out_rows = (rows_ + stride - 1) / stride;
    const int out_cols = (cols_ + stride - 1) / stride;
    const double scale = 1.0 / static_cast<double>(n_);
    Plane out(out_rows, out_cols);
    for (int r = 0; r < out_rows; ++r) {
      for (int c = 0; c < out_cols; ++c) {
        out(r, c) = real_[index_of(r * stride, c * stride, cols_)] * scale;
      }
    }
    return out;
  }

  const FilterBank& bank_;
  const FourierTransform& fft_;
  int rows_;
  int cols_;
  int half_cols_;
  std::size_t n_;
  ComplexBuffer work_;
  ComplexBuffer half_;
  RealBuffer real_;
};

}  // namespace

ScatteringFeatures scattering_transform(const Plane& plane, const FilterBank& bank) {
  const ScatteringConfig& config = bank.config();
  if (plane.rows() != config.rows || plane.cols() != config.cols) {
    throw Error(ErrorKind::kDimensionMismatch,
                "plane is " + std::to_string(plane.rows()) + "x" + std::to_string(plane.cols()) +
                    ", network expects " + std::to_string(config.rows) + "x" +
                    std::to_string(config.cols));
  }
  ScatteringFeatures out;
  out.config = config;
  out.paths = enumerate_paths(config);
  out.maps.resize(out.paths.size());

  const std::size_t n = bank.fft().size();
  Cascade cascade(bank);
  ComplexBuffer x_hat = make_complex_buffer(n);
  ComplexBuffer u1_hat = make_complex_buffer(n);

  const std::span<const double> x = plane.values();
  for (std::size_t i = 0; i < n; ++i) x_hat[i] = Complex(x[i], 0.0);
  bank.fft().forward(x_hat.get());

  out.maps[0] = cascade.average_full(x_hat.get());

  const std::vector<Filter>& layer1 = bank.layer1();
  const std::vector<Filter>& layer2 = bank.layer2();
  std::size_t second_order = 1 + layer1.size();
  for (std::size_t i = 0; i < layer1.size(); ++i) {
    cascade.modulus(x_hat.get(), layer1[i]);
    cascade.spectrum_of_real(u1_hat.get());
    out.maps[1 + i] = cascade.average_full(u1_hat.get());
    for (const Filter& psi2 : layer2) {
      if (!is_frequency_decreasing(layer1[i].index, psi2.index)) continue;
      cascade.modulus(u1_hat.get(), psi2);
      out.maps[second_order++] = cascade.average_real();
    }
  }
  return out;
}

FeatureVector feature_vector(const ScatteringFeatures& features) {
  FeatureVector out;
  out.layout.path_count = features.maps.size();
  out.layout.map_rows = features.maps.empty() ? 0 : features.maps.front().rows();
  out.layout.map_cols = features.maps.empty() ? 0 : features.maps.front().cols();
  out.values.reserve(out.layout.path_count * static_cast<std::size_t>(out.layout.map_rows) *
                     static_cast<std::size_t>(out.layout.map_cols));
  for (const Plane& map : features.maps) {
    out.values.insert(out.values.end(), map.values().begin(), map.values().end());
  }
  return out;
}

}  // namespace dmad
