#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmad/error.hpp"

namespace dmad::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteWriter {
 public:
  void raw(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
  }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void f64s(std::span<const double> v) { raw(v.data(), v.size_bytes()); }
  void string(std::string_view s) {
    u32(checked_u32(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

  static std::uint32_t checked_u32(std::size_t n) {
    if (n > 0xFFFFFFFFu) throw Error(ErrorKind::kIoError, "length exceeds 32-bit field");
    return static_cast<std::uint32_t>(n);
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Every read past the end throws `truncation_kind`.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, ErrorKind truncation_kind)
      : bytes_(bytes), kind_(truncation_kind) {}

  void raw(void* out, std::size_t size) {
    need(size);
    std::memcpy(out, bytes_.data() + pos_, size);
    pos_ += size;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v = 0;
    raw(&v, sizeof v);
    return v;
  }
  std::vector<double> f64s(std::size_t count) {
    if (count > remaining() / sizeof(double)) need(count * sizeof(double));
    std::vector<double> v(count);
    raw(v.data(), count * sizeof(double));
    return v;
  }
  std::string string() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw Error(kind_, "unexpected end of data");
  }

  std::span<const std::uint8_t> bytes_;
  ErrorKind kind_;
  std::size_t pos_ = 0;
};

}  // namespace dmad::detail
