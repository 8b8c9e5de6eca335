#include <algorithm>
#include <nlohmann/json.hpp>

#include "bytes.hpp"
#include "dmad/dataio.hpp"
#include "dmad/error.hpp"

namespace dmad {
namespace {

using nlohmann::json;

constexpr std::array<std::uint8_t, 4> kMagic = {'D', 'M', 'A', 'D'};

std::string kernel_name(KernelKind kind) { return kind == KernelKind::kLinear ? "linear" : "gaussian"; }

KernelKind parse_kernel_name(const std::string& name) {
  if (name == "gaussian") return KernelKind::kGaussian;
  if (name == "linear") return KernelKind::kLinear;
  throw Error(ErrorKind::kChecksumError, "model header: unknown kernel '" + name + "'");
}

Sha256 parse_hash(const std::string& hex) {
  Sha256 out{};
  if (hex.size() != 64) throw Error(ErrorKind::kChecksumError, "model header: bad config hash");
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::stoul(hex.substr(2 * i, 2), nullptr, 16));
  }
  return out;
}

json header_of(const DmadModel& m) {
  json channels = json::array();
  for (Channel c : kChannels) {
    const SrkdaModel& s = m[c];
    channels.push_back({{"name", std::string(to_string(c))},
                        {"kernel", kernel_name(s.kernel)},
                        {"bandwidth", s.bandwidth},
                        {"delta", s.delta},
                        {"polarity", s.polarity},
                        {"morph_mean", s.morph_mean},
                        {"bonafide_mean", s.bonafide_mean},
                        {"solver_residual", s.solver_residual}});
  }
  json h = {
      {"scattering",
       {{"image_size", {m.config.rows, m.config.cols}},
        {"J", m.config.num_octaves},
        {"Q", {m.config.quality[0], m.config.quality[1]}},
        {"L", {m.config.rotations[0], m.config.rotations[1]}},
        {"slant", m.config.slant},
        {"oversampling", m.config.oversampling},
        {"sigma0", m.config.sigma0}}},
      {"config_hash", to_hex(m.config_hash)},
      {"laplacian", m.stencil == LaplacianStencil::kEightNeighbor ? "8-neighbour" : "4-neighbour"},
      {"kernel",
       {{"kind", kernel_name(m.kernel.kind)},
        {"bandwidth", m.kernel.bandwidth ? json(*m.kernel.bandwidth) : json("median-heuristic")}}},
      {"channels", channels},
      {"threshold_policy", to_string(m.policy)},
      {"tau", m.tau},
      {"metadata",
       {{"manifest_digest", m.metadata.manifest_digest},
        {"seed", m.metadata.seed},
        {"n_morph", m.metadata.n_morph},
        {"n_bonafide", m.metadata.n_bonafide}}},
  };
  h["normalization"] = m.normalization
                           ? json{{"min", m.normalization->min}, {"max", m.normalization->max}}
                           : json(nullptr);
  return h;
}

DmadModel model_from_header(const json& h) {
  DmadModel m;
  const json& s = h.at("scattering");
  m.config.rows = s.at("image_size").at(0).get<int>();
  m.config.cols = s.at("image_size").at(1).get<int>();
  m.config.num_octaves = s.at("J").get<int>();
  m.config.quality = {s.at("Q").at(0).get<int>(), s.at("Q").at(1).get<int>()};
  m.config.rotations = {s.at("L").at(0).get<int>(), s.at("L").at(1).get<int>()};
  m.config.slant = s.at("slant").get<double>();
  m.config.oversampling = s.at("oversampling").get<int>();
  m.config.sigma0 = s.at("sigma0").get<double>();
  m.config_hash = parse_hash(h.at("config_hash").get<std::string>());
  m.stencil = h.at("laplacian").get<std::string>() == "8-neighbour" ? LaplacianStencil::kEightNeighbor
                                                                    : LaplacianStencil::kFourNeighbor;
  m.kernel.kind = parse_kernel_name(h.at("kernel").at("kind").get<std::string>());
  const json& bw = h.at("kernel").at("bandwidth");
  if (bw.is_number()) m.kernel.bandwidth = bw.get<double>();
  const json& channels = h.at("channels");
  if (channels.size() != 3) throw Error(ErrorKind::kChecksumError, "model header: expected 3 channels");
  for (std::size_t c = 0; c < 3; ++c) {
    const json& j = channels.at(c);
    SrkdaModel& sm = m.channels[c];
    sm.kernel = parse_kernel_name(j.at("kernel").get<std::string>());
    sm.bandwidth = j.at("bandwidth").get<double>();
    sm.delta = j.at("delta").get<double>();
    sm.polarity = j.at("polarity").get<int>();
    sm.morph_mean = j.at("morph_mean").get<double>();
    sm.bonafide_mean = j.at("bonafide_mean").get<double>();
    sm.solver_residual = j.at("solver_residual").get<double>();
  }
  m.policy = parse_threshold_policy(h.at("threshold_policy").get<std::string>());
  m.tau = h.at("tau").get<double>();
  const json& meta = h.at("metadata");
  m.metadata.manifest_digest = meta.at("manifest_digest").get<std::string>();
  m.metadata.seed = meta.at("seed").get<std::uint64_t>();
  m.metadata.n_morph = meta.at("n_morph").get<std::size_t>();
  m.metadata.n_bonafide = meta.at("n_bonafide").get<std::size_t>();
  const json& norm = h.at("normalization");
  if (!norm.is_null()) {
    ScoreNormalization n;
    n.min = norm.at("min").get<std::array<double, 3>>();
    n.max = norm.at("max").get<std::array<double, 3>>();
    m.normalization = n;
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const DmadModel& model) {
  detail::ByteWriter w;
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kModelVersion);
  w.string(header_of(model).dump());
  for (Channel c : kChannels) {
    const SrkdaModel& s = model[c];
    const std::size_t dim = s.dimension();
    if (s.alpha.size() != s.training_features.size()) {
      throw Error(ErrorKind::kDimensionMismatch, "alpha and training set sizes differ");
    }
    w.u32(detail::ByteWriter::checked_u32(s.alpha.size()));
    w.u32(detail::ByteWriter::checked_u32(dim));
    w.f64s(s.alpha);
    for (const auto& f : s.training_features) {
      if (f.size() != dim) throw Error(ErrorKind::kDimensionMismatch, "ragged training features");
      w.f64s(f);
    }
  }
  w.u32(crc32(w.bytes()));
  return std::move(w.bytes());
}

DmadModel decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= kMagic.size() && !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorKind::kVersionError, "not a model file (bad magic)");
  }
  if (bytes.size() >= 8) {
    detail::ByteReader header(bytes.subspan(4, 4), ErrorKind::kChecksumError);
    const std::uint32_t version = header.u32();
    if (version != kModelVersion) {
      throw Error(ErrorKind::kVersionError, "unsupported model version " + std::to_string(version));
    }
  }
  if (bytes.size() < 16) throw Error(ErrorKind::kChecksumError, "model file is truncated");
  const auto payload = bytes.first(bytes.size() - 4);
  detail::ByteReader trailer(bytes.last(4), ErrorKind::kChecksumError);
  if (trailer.u32() != crc32(payload)) {
    throw Error(ErrorKind::kChecksumError, "model file CRC mismatch (truncated or corrupted)");
  }

  detail::ByteReader r(payload.subspan(8), ErrorKind::kChecksumError);
  DmadModel model;
  try {
    model = model_from_header(json::parse(r.string()));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kChecksumError, std::string("model header: ") + e.what());
  }
  for (auto& s : model.channels) {
    const std::uint32_t n = r.u32();
    const std::uint32_t dim = r.u32();
    s.alpha = r.f64s(n);
    s.training_features.resize(n);
    for (auto& f : s.training_features) f = r.f64s(dim);
  }
  if (r.remaining() != 0) throw Error(ErrorKind::kChecksumError, "trailing bytes in model file");
  return model;
}

void save_model(const std::filesystem::path& path, const DmadModel& model) {
  write_file(path, encode_model(model));
}

DmadModel load_model(const std::filesystem::path& path) {
  try {
    return decode_model(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIoError) throw;
    throw Error(e.kind(), path.filename().string() + ": " + e.what());
  }
}

}  // namespace dmad
