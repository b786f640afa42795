#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>

#include "lha/error.hpp"

namespace lha::io {

template <typename T>
T to_little(T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    std::reverse(p, p + sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw Error("write failed");
  }

  template <typename T>
  void scalar(T v) {
    v = to_little(v);
    bytes(&v, sizeof v);
  }

  void string(const std::string& s) {
    scalar<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  void floats(std::span<const float> v) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(v.data(), v.size_bytes());
    } else {
      for (float f : v) scalar(f);
    }
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    offset_ += got;
    if (got != n) {
      throw FormatError("truncated " + what_ + ": expected " + std::to_string(n) +
                        " bytes at offset " + std::to_string(offset_ - got) + ", got " +
                        std::to_string(got));
    }
  }

  template <typename T>
  T scalar() {
    T v;
    bytes(&v, sizeof v);
    return to_little(v);
  }

  std::string string(std::size_t max_len = 1u << 20) {
    const auto n = scalar<std::uint32_t>();
    if (n > max_len) throw FormatError("corrupt " + what_ + ": string length " + std::to_string(n));
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  void floats(std::span<float> v) {
    bytes(v.data(), v.size_bytes());
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& f : v) f = to_little(f);
    }
  }

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::istream& in_;
  std::string what_;
  std::size_t offset_ = 0;
};

}  // namespace lha::io
