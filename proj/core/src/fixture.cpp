#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <system_error>

#include "dmad/dataio.hpp"
#include "dmad/error.hpp"

namespace dmad {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// mt19937_64 with hand-rolled distributions: the std:: ones are not
/// reproducible across standard libraries.
class Random {
 public:
  Random(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream * 1000003ULL + substream))) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Wave {
  double kx, ky, phase, amplitude;
};

struct Face {
  double cx, cy, rx, ry;
  std::array<double, 3> skin;
  std::array<double, 3> gain;
  double eye_dx, eye_dy, eye_rx, eye_ry, eye_dark;
  double mouth_dy, mouth_rx, mouth_ry;
  double nose_len;
  std::vector<Wave> texture;
};

constexpr std::uint64_t kSubjectStream = 1;
constexpr std::uint64_t kSessionStream = 2;

Face make_face(std::uint64_t seed, int subject, double scale) {
  Random rng(seed, kSubjectStream, static_cast<std::uint64_t>(subject));
  Face f;
  f.cx = 125.0 * scale + rng.uniform(-6, 6) * scale;
  f.cy = 130.0 * scale + rng.uniform(-6, 6) * scale;
  f.rx = rng.uniform(62, 80) * scale;
  f.ry = rng.uniform(82, 102) * scale;
  const double tone = rng.uniform(120, 210);
  f.skin = {tone + rng.uniform(10, 30), tone * rng.uniform(0.78, 0.9), tone * rng.uniform(0.62, 0.78)};
  f.gain = {1.0, rng.uniform(0.8, 1.0), rng.uniform(0.6, 0.9)};
  f.eye_dx = rng.uniform(0.28, 0.42);
  f.eye_dy = rng.uniform(0.18, 0.32);
  f.eye_rx = rng.uniform(0.12, 0.2);
  f.eye_ry = rng.uniform(0.05, 0.09);
  f.eye_dark = rng.uniform(0.5, 0.8);
  f.mouth_dy = rng.uniform(0.4, 0.55);
  f.mouth_rx = rng.uniform(0.22, 0.38);
  f.mouth_ry = rng.uniform(0.04, 0.08);
  f.nose_len = rng.uniform(0.15, 0.3);
  const int waves = 8;
  for (int i = 0; i < waves; ++i) {
    const double period = rng.uniform(5.0, 18.0) * scale;
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double k = 2.0 * std::numbers::pi / std::max(period, 2.5);
    f.texture.push_back({k * std::cos(angle), k * std::sin(angle),
                         rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(3.0, 9.0)});
  }
  return f;
}

/// 1 inside the normalised ellipse, 0 outside, smooth over ~`soft` of the radius.
double ellipse_mask(double x, double y, double cx, double cy, double rx, double ry, double soft) {
  const double dx = (x - cx) / rx;
  const double dy = (y - cy) / ry;
  const double r = std::sqrt(dx * dx + dy * dy);
  return 1.0 / (1.0 + std::exp((r - 1.0) / soft));
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::rint(v), 0.0, 255.0)); }

std::string subject_id(int subject) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "S%02d", subject);
  return buf;
}

std::filesystem::path subject_image(int subject, int session) {
  return std::filesystem::path("images") / (subject_id(subject) + "_s" + std::to_string(session) + ".png");
}

}  // namespace

RgbImage render_subject(std::uint64_t seed, int subject, int session, int size) {
  const double scale = size / 250.0;
  const Face f = make_face(seed, subject, scale);
  Random rng(seed, kSessionStream, static_cast<std::uint64_t>(subject) * 64 + static_cast<std::uint64_t>(session));
  const double shift_x = rng.integer(-2, 2) * scale;
  const double shift_y = rng.integer(-2, 2) * scale;
  const double brightness = rng.uniform(-6.0, 6.0);
  const double noise_sigma = 2.5;
  const double cx = f.cx + shift_x;
  const double cy = f.cy + shift_y;

  RgbImage image(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      const double face = ellipse_mask(px, py, cx, cy, f.rx, f.ry, 0.04);
      double texture = 0.0;
      for (const Wave& w : f.texture) texture += w.amplitude * std::sin(w.kx * (px - cx) + w.ky * (py - cy) + w.phase);
      const double eyes =
          std::max(ellipse_mask(px, py, cx - f.eye_dx * f.rx, cy - f.eye_dy * f.ry, f.eye_rx * f.rx,
                                f.eye_ry * f.ry, 0.08),
                   ellipse_mask(px, py, cx + f.eye_dx * f.rx, cy - f.eye_dy * f.ry, f.eye_rx * f.rx,
                                f.eye_ry * f.ry, 0.08));
      const double mouth = ellipse_mask(px, py, cx, cy + f.mouth_dy * f.ry, f.mouth_rx * f.rx,
                                        f.mouth_ry * f.ry, 0.1);
      const double nose = ellipse_mask(px, py, cx, cy + 0.1 * f.ry, 0.06 * f.rx, f.nose_len * f.ry, 0.15);
      const double background = 70.0 + 40.0 * py / size;
      std::array<double, 3> rgb{};
      for (int c = 0; c < 3; ++c) {
        double skin = f.skin[static_cast<std::size_t>(c)] + f.gain[static_cast<std::size_t>(c)] * texture;
        skin *= 1.0 - f.eye_dark * eyes;
        skin *= 1.0 - 0.12 * nose;
        if (c == 0) skin += 25.0 * mouth;
        else skin *= 1.0 - 0.35 * mouth;
        rgb[static_cast<std::size_t>(c)] = background * (1.0 - face) + skin * face + brightness + noise_sigma * rng.normal();
      }
      image.at(x, y) = {to_byte(rgb[0]), to_byte(rgb[1]), to_byte(rgb[2])};
    }
  }
  return image;
}

RgbImage alpha_blend(const RgbImage& a, const RgbImage& b, double alpha) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::kDimensionMismatch, "blend inputs differ in size");
  }
  RgbImage out(a.width(), a.height());
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  auto po = out.pixels();
  const auto mix = [alpha](std::uint8_t u, std::uint8_t v) {
    return to_byte(alpha * u + (1.0 - alpha) * v);
  };
  for (std::size_t i = 0; i < pa.size(); ++i) {
    po[i] = {mix(pa[i].r, pb[i].r), mix(pa[i].g, pb[i].g), mix(pa[i].b, pb[i].b)};
  }
  return out;
}

FixtureResult generate_fixture(const FixtureOptions& options, const std::filesystem::path& out_dir) {
  if (options.n_subjects < 4) {
    throw Error(ErrorKind::kUsageError,
                "fixture needs at least 4 subjects (got " + std::to_string(options.n_subjects) + ")");
  }
  if (options.sessions < 2 || options.image_size < 8) {
    throw Error(ErrorKind::kUsageError, "fixture needs at least 2 sessions and 8-pixel images");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw Error(ErrorKind::kIoError, "cannot create " + (out_dir / "images").string() + ": " + ec.message());

  for (int s = 0; s < options.n_subjects; ++s) {
    for (int session = 0; session < options.sessions; ++session) {
      save_png(out_dir / subject_image(s, session),
               render_subject(options.seed, s, session, options.image_size));
    }
  }

  std::vector<PairRecord> records;
  FixtureResult result;
  for (int s = 0; s < options.n_subjects; ++s) {
    for (int session = 1; session < options.sessions; ++session) {
      PairRecord r;
      r.pair_id = "bf_" + subject_id(s) + "_" + std::to_string(session);
      r.suspicious_path = out_dir / subject_image(s, session);
      r.trusted_path = out_dir / subject_image(s, 0);
      r.label = Label::kBonaFide;
      r.subject_ids = {subject_id(s)};
      records.push_back(std::move(r));
      ++result.bonafide_pairs;
    }
  }

  // Morphs pair each subject with its cyclic neighbour inside its own half,
  // so the first-half / second-half split is leak free.
  const int half = options.n_subjects / 2;
  const std::array<std::pair<int, int>, 2> groups = {std::pair{0, half}, std::pair{half, options.n_subjects}};
  SplitSpec split_spec;
  for (const auto& [begin, end] : groups) {
    const int count = end - begin;
    for (int i = 0; i < count; ++i) {
      const int a = begin + i;
      const int b = begin + (i + 1) % count;
      (begin == 0 ? split_spec.train_subjects : split_spec.test_subjects).insert(subject_id(a));
      const RgbImage image_a = render_subject(options.seed, a, 1, options.image_size);
      const RgbImage image_b = render_subject(options.seed, b, 1, options.image_size);
      for (double factor : kMorphFactors) {
        const std::string id = "mo_" + subject_id(a) + "_" + subject_id(b) + "_" + factor_key(factor);
        const std::filesystem::path image = std::filesystem::path("images") / (id + ".png");
        save_png(out_dir / image, alpha_blend(image_a, image_b, factor));
        PairRecord r;
        r.pair_id = id;
        r.suspicious_path = out_dir / image;
        r.trusted_path = out_dir / subject_image(a, 0);
        r.label = Label::kMorph;
        r.morph_factor = factor;
        r.subject_ids = {subject_id(a), subject_id(b)};
        records.push_back(std::move(r));
        ++result.morph_pairs;
      }
    }
  }

  result.manifest = out_dir / "manifest.csv";
  result.split = out_dir / "split.csv";
  write_file(result.manifest, format_manifest(records, out_dir));
  write_file(result.split, format_split(split_spec));
  return result;
}

}  // namespace dmad
