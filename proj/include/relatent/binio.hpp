#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "relatent/errors.hpp"

namespace relatent {

// Little-endian IEEE-754 file primitives shared by checkpoints and datasets.

inline std::uint64_t byteswap64(std::uint64_t v) {
  v = ((v & 0x00000000FFFFFFFFULL) << 32) | (v >> 32);
  v = ((v & 0x0000FFFF0000FFFFULL) << 16) | ((v >> 16) & 0x0000FFFF0000FFFFULL);
  v = ((v & 0x00FF00FF00FF00FFULL) << 8) | ((v >> 8) & 0x00FF00FF00FF00FFULL);
  return v;
}

inline std::uint32_t byteswap32(std::uint32_t v) {
  v = (v << 16) | (v >> 16);
  v = ((v & 0x00FF00FFu) << 8) | ((v >> 8) & 0x00FF00FFu);
  return v;
}

inline void write_f64_le(std::ostream& out, const double* values, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values),
              static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &values[i], 8);
      bits = byteswap64(bits);
      out.write(reinterpret_cast<const char*>(&bits), 8);
    }
  }
}

inline void read_f64_le(std::istream& in, double* values, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(values),
            static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      in.read(reinterpret_cast<char*>(&bits), 8);
      bits = byteswap64(bits);
      std::memcpy(&values[i], &bits, 8);
    }
  }
  if (!in) throw IoError("read_f64_le: short read");
}

inline void write_f32_le(std::ostream& out, const float* values, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values),
              static_cast<std::streamsize>(n * sizeof(float)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, &values[i], 4);
      bits = byteswap32(bits);
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
}

inline void read_f32_le(std::istream& in, float* values, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(values),
            static_cast<std::streamsize>(n * sizeof(float)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits;
      in.read(reinterpret_cast<char*>(&bits), 4);
      bits = byteswap32(bits);
      std::memcpy(&values[i], &bits, 4);
    }
  }
  if (!in) throw IoError("read_f32_le: short read");
}

inline std::ofstream open_out(const std::string& path, bool binary = true) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path, bool binary = true) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

}  // namespace relatent
