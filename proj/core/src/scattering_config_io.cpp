#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "dmad/error.hpp"
#include "dmad/scattering.hpp"

namespace dmad {
namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

int to_int(const std::string& key, const std::string& value) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorKind::kInvalidConfig, "config key '" + key + "': not an integer: " + value);
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used == value.size()) return out;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::kInvalidConfig, "config key '" + key + "': not a number: " + value);
}

std::array<int, 2> to_pair(const std::string& key, const std::string& value) {
  const auto comma = value.find(',');
  if (comma == std::string::npos) {
    const int v = to_int(key, trim(value));
    return {v, v};
  }
  return {to_int(key, trim(value.substr(0, comma))), to_int(key, trim(value.substr(comma + 1)))};
}

ScatteringConfig parse_key_values(std::string_view text) {
  ScatteringConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kInvalidConfig,
                  "config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key == "rows") config.rows = to_int(key, value);
    else if (key == "cols") config.cols = to_int(key, value);
    else if (key == "image_size") {
      const auto size = to_pair(key, value);
      config.rows = size[0];
      config.cols = size[1];
    } else if (key == "J") config.num_octaves = to_int(key, value);
    else if (key == "Q") config.quality = to_pair(key, value);
    else if (key == "L") config.rotations = to_pair(key, value);
    else if (key == "slant") config.slant = to_double(key, value);
    else if (key == "oversampling") config.oversampling = to_int(key, value);
    else if (key == "sigma0") config.sigma0 = to_double(key, value);
    else throw Error(ErrorKind::kInvalidConfig, "unknown config key '" + key + "'");
  }
  return config;
}

ScatteringConfig parse_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("config JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::kInvalidConfig, "config JSON must be an object");
  ScatteringConfig config;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "image_size") {
        config.rows = value.at(0).get<int>();
        config.cols = value.at(1).get<int>();
      } else if (key == "J") config.num_octaves = value.get<int>();
      else if (key == "Q") config.quality = {value.at(0).get<int>(), value.at(1).get<int>()};
      else if (key == "L") config.rotations = {value.at(0).get<int>(), value.at(1).get<int>()};
      else if (key == "slant") config.slant = value.get<double>();
      else if (key == "oversampling") config.oversampling = value.get<int>();
      else if (key == "sigma0") config.sigma0 = value.get<double>();
      else throw Error(ErrorKind::kInvalidConfig, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("config JSON: ") + e.what());
  }
  return config;
}

}  // namespace

ScatteringConfig parse_scattering_config(std::string_view text) {
  const std::string stripped = trim(text);
  ScatteringConfig config =
      !stripped.empty() && stripped.front() == '{' ? parse_json(stripped) : parse_key_values(text);
  validate(config);
  return config;
}

ScatteringConfig load_scattering_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scattering_config(buffer.str());
}

}  // namespace dmad
