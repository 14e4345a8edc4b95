#pragma once

// Binary tensor container shared with the embedding extractor.
//
// Layout (little-endian):
//   magic   "AALN"  4 bytes
//   version u32     = 1
//   rows    u32
//   cols    u32
//   dtype   u8      0 = float32
//   payload rows*cols float32, row-major

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "actalign/error.hpp"
#include "actalign/matrix.hpp"

namespace actalign {

inline constexpr std::array<char, 4> kTensorMagic{'A', 'A', 'L', 'N'};
inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;
inline constexpr std::size_t kTensorHeaderBytes = 4 + 4 + 4 + 4 + 1;

struct TensorHeader {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
};

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

inline std::uint32_t byteswap32(std::uint32_t v) noexcept {
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

inline std::uint32_t to_le32(std::uint32_t v) noexcept {
  if constexpr (std::endian::native == std::endian::big) return byteswap32(v);
  return v;
}

inline void put_u32(std::string& buf, std::uint32_t v) {
  v = to_le32(v);
  char bytes[4];
  std::memcpy(bytes, &v, 4);
  buf.append(bytes, 4);
}

inline std::uint32_t get_u32(const char* p) noexcept {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return to_le32(v);
}

}  // namespace detail

/// Serializes `m` as float32. Values are narrowed with a plain cast, so a
/// matrix holding float-representable doubles round-trips bit-exactly.
inline std::string encode_tensor(const MatrixD& m) {
  std::string buf;
  buf.reserve(kTensorHeaderBytes + m.rows() * m.cols() * 4);
  buf.append(kTensorMagic.data(), kTensorMagic.size());
  detail::put_u32(buf, kTensorVersion);
  detail::put_u32(buf, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(buf, static_cast<std::uint32_t>(m.cols()));
  buf.push_back(static_cast<char>(kDtypeFloat32));
  for (const double x : m.data()) {
    const float f = static_cast<float>(x);
    detail::put_u32(buf, std::bit_cast<std::uint32_t>(f));
  }
  return buf;
}

inline MatrixD decode_tensor(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < kTensorHeaderBytes) {
    throw ValidationError(origin, "header", "file too short for tensor header");
  }
  if (std::memcmp(bytes.data(), kTensorMagic.data(), 4) != 0) {
    throw ValidationError(origin, "magic", "expected \"AALN\"");
  }
  const auto version = detail::get_u32(bytes.data() + 4);
  if (version != kTensorVersion) {
    throw ValidationError(origin, "version", "unsupported version " + std::to_string(version));
  }
  const TensorHeader h{detail::get_u32(bytes.data() + 8), detail::get_u32(bytes.data() + 12)};
  const auto dtype = static_cast<std::uint8_t>(bytes[16]);
  if (dtype != kDtypeFloat32) {
    throw ValidationError(origin, "dtype", "unsupported dtype " + std::to_string(dtype));
  }
  const std::size_t count = std::size_t{h.rows} * h.cols;
  if (bytes.size() != kTensorHeaderBytes + count * 4) {
    throw ValidationError(origin, "payload",
                          "expected " + std::to_string(count * 4) + " payload bytes for shape " +
                              std::to_string(h.rows) + "x" + std::to_string(h.cols) + ", found " +
                              std::to_string(bytes.size() - kTensorHeaderBytes));
  }
  std::vector<double> data(count);
  const char* p = bytes.data() + kTensorHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += 4) {
    data[i] = static_cast<double>(std::bit_cast<float>(detail::get_u32(p)));
  }
  return MatrixD(h.rows, h.cols, std::move(data));
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string(), "", "cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Reads a tensor file verbatim (no normalization).
inline MatrixD read_tensor(const std::filesystem::path& path) {
  return decode_tensor(read_file_bytes(path), path.string());
}

inline void write_tensor(const std::filesystem::path& path, const MatrixD& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write tensor file " + path.string());
  const auto buf = encode_tensor(m);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("short write on tensor file " + path.string());
}

}  // namespace actalign
