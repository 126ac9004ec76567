#pragma once

#include <cstring>
#include <istream>
#include <ostream>

#include "ltc/nn/mlp.hpp"

namespace ltc::nn {

// Explicit little-endian scalar IO so checkpoints are portable and
// round-trip bit-exactly.
namespace io {

inline void write_u8(std::ostream& os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(os, bits);
}

inline std::uint8_t read_u8(std::istream& is) {
  int c = is.get();
  check(c != std::istream::traits_type::eof(), "read_u8: truncated stream");
  return static_cast<std::uint8_t>(c);
}

inline std::uint32_t read_u32(std::istream& is) {
  char b[4];
  is.read(b, 4);
  check(is.gcount() == 4, "read_u32: truncated stream");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& is) {
  char b[8];
  is.read(b, 8);
  check(is.gcount() == 8, "read_u64: truncated stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline double read_f64(std::istream& is) {
  std::uint64_t bits = read_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void write_vec(std::ostream& os, const Vec& v) {
  write_u64(os, v.size());
  for (double x : v) write_f64(os, x);
}

inline Vec read_vec(std::istream& is) {
  std::uint64_t n = read_u64(is);
  Vec v(n);
  for (std::uint64_t i = 0; i < n; ++i) v[i] = read_f64(is);
  return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  std::uint64_t n = read_u64(is);
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  check(static_cast<std::uint64_t>(is.gcount()) == n, "read_string: truncated stream");
  return s;
}

}  // namespace io

// Network blob: "LTC1" magic, u32 layer count, then per-layer dims/flags with
// row-major f64 weights and biases, then the normalization state (penultimate
// flag, batch-norm eps/momentum, and per-layer scale/shift/running stats).
void write_mlp(std::ostream& os, const MlpParams& params);
MlpParams read_mlp(std::istream& is);

}  // namespace ltc::nn
