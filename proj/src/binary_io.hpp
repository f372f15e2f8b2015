#pragma once

// Little-endian binary records shared by the grid and hierarchy files.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "nfbt/types.hpp"

namespace nfbt::io {

static_assert(std::endian::native == std::endian::little, "binary files assume little-endian hosts");

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("unexpected end of file");
  return value;
}

inline void put_tag(std::ostream& out, const char (&tag)[9]) { out.write(tag, 8); }

inline void expect_tag(std::istream& in, const char (&tag)[9]) {
  char buf[8];
  in.read(buf, 8);
  if (!in || std::memcmp(buf, tag, 8) != 0) {
    throw FormatError(std::string("bad file tag, expected ") + tag);
  }
}

inline void put_cvector(std::ostream& out, const CVector& v) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(Complex)));
}

inline CVector get_cvector(std::istream& in, std::uint64_t max_size = 1ULL << 32) {
  const auto n = get<std::uint64_t>(in);
  if (n > max_size) throw FormatError("vector length out of range");
  CVector v(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(Complex)));
  if (!in) throw FormatError("unexpected end of file");
  return v;
}

inline void put_doubles(std::ostream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::vector<double> get_doubles(std::istream& in, std::uint64_t max_size = 1ULL << 32) {
  const auto n = get<std::uint64_t>(in);
  if (n > max_size) throw FormatError("vector length out of range");
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw FormatError("unexpected end of file");
  return v;
}

}  // namespace nfbt::io
