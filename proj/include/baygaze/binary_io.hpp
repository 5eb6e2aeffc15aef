#ifndef BAYGAZE_BINARY_IO_HPP_
#define BAYGAZE_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "baygaze/error.hpp"

namespace baygaze::binio {

// Explicit little-endian encoding, independent of the host byte order.
inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_i32(std::ostream& out, std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline bool get_bytes(std::istream& in, unsigned char* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

inline bool get_u64(std::istream& in, std::uint64_t& v) {
  unsigned char b[8];
  if (!get_bytes(in, b, 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

inline bool get_f64(std::istream& in, double& v) {
  std::uint64_t u = 0;
  if (!get_u64(in, u)) return false;
  v = std::bit_cast<double>(u);
  return true;
}

inline bool get_i32(std::istream& in, std::int32_t& v) {
  unsigned char b[4];
  if (!get_bytes(in, b, 4)) return false;
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  v = static_cast<std::int32_t>(u);
  return true;
}

// Reads one '\n'-terminated header line; FormatError at end of stream.
inline std::string header_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kFormatError, std::string("unexpected end of header, expected ") + what);
  }
  return line;
}

// "%.17g" always round-trips a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace baygaze::binio

#endif  // BAYGAZE_BINARY_IO_HPP_
