#pragma once
// Little-endian primitives shared by the on-disk formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "whitebench/errors.hpp"

namespace wb::bin {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <typename T>
void write(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

inline void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  write(out, bits);
}

template <typename T>
T read(std::istream& in, const std::string& what) {
  const auto offset = static_cast<long long>(in.tellg());
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw ParseError("truncated input reading " + what + " at byte offset " +
                     std::to_string(offset));
  }
  return to_little(v);
}

inline double read_f64(std::istream& in, const std::string& what) {
  const std::uint64_t bits = read<std::uint64_t>(in, what);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& path) {
  char got[4] = {};
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw ParseError(path + ": bad magic at byte offset 0 (expected \"" + std::string(magic) +
                     "\")");
  }
}

}  // namespace wb::bin
