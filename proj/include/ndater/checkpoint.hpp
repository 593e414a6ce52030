// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container (all integers and floats little-endian):
//
//   bytes 0..7   magic "NDCKPT\0\1"
//   u32          format version (1)
//   u32          scalar width in bytes (4 = binary32, 8 = binary64)
//   u64          metadata length L, then L bytes of UTF-8 JSON
//   u32          tensor count N, then N records of
//                  u32 name length, name bytes,
//                  u32 rank, rank x u64 dims,
//                  numel x scalar (IEEE-754, row-major)
//
// Records are written in parameter-name order. Values round-trip bit-exactly
// in the stored precision.
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "ndater/parameters.hpp"

namespace ndater {

inline constexpr char kCheckpointMagic[8] = {'N', 'D', 'C', 'K', 'P', 'T', '\0', '\1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw CheckpointError("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline std::string read_bytes(std::istream& in, std::uint64_t n) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw CheckpointError("checkpoint truncated");
  return s;
}

}  // namespace detail

template <typename Real>
void save_checkpoint(const std::string& path, const ParameterStore<Real>& params, const std::string& metadata) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_le<std::uint32_t>(out, kCheckpointVersion);
  detail::write_le<std::uint32_t>(out, sizeof(Real));
  detail::write_le<std::uint64_t>(out, metadata.size());
  out.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, p] : params) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.shape().size()));
    for (auto d : p.value.shape()) detail::write_le<std::uint64_t>(out, d);
    for (auto v : p.value.values()) detail::write_le<Real>(out, v);
  }
  if (!out) throw CheckpointError("write to '" + path + "' failed");
}

struct CheckpointHeader {
  std::uint32_t version = 0;
  std::uint32_t scalar_bytes = 0;
  std::string metadata;
};

inline CheckpointHeader read_checkpoint_header(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  CheckpointHeader h;
  h.version = detail::read_le<std::uint32_t>(in);
  if (h.version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(h.version));
  }
  h.scalar_bytes = detail::read_le<std::uint32_t>(in);
  if (h.scalar_bytes != 4 && h.scalar_bytes != 8) {
    throw CheckpointError("unsupported scalar width " + std::to_string(h.scalar_bytes));
  }
  h.metadata = detail::read_bytes(in, detail::read_le<std::uint64_t>(in));
  return h;
}

inline CheckpointHeader peek_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  return read_checkpoint_header(in);
}

// Reads every tensor into `params` (replacing values of existing entries,
// adding missing ones). The stored precision must match Real.
template <typename Real>
CheckpointHeader load_checkpoint(const std::string& path, ParameterStore<Real>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  CheckpointHeader h = read_checkpoint_header(in);
  if (h.scalar_bytes != sizeof(Real)) {
    throw CheckpointError("checkpoint stores " + std::to_string(8 * h.scalar_bytes) + "-bit values, expected " +
                          std::to_string(8 * sizeof(Real)));
  }
  const auto count = detail::read_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = detail::read_bytes(in, detail::read_le<std::uint32_t>(in));
    const auto rank = detail::read_le<std::uint32_t>(in);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(detail::read_le<std::uint64_t>(in));
    std::vector<Real> data(shape_numel(shape));
    for (auto& v : data) v = detail::read_le<Real>(in);
    Tensor<Real> value(shape, std::move(data));
    if (params.contains(name)) {
      auto& p = params.at(name);
      if (p.value.shape() != value.shape()) {
        throw CheckpointError("parameter '" + name + "' has shape " + shape_string(value.shape()) +
                              " in checkpoint but " + shape_string(p.value.shape()) + " in model");
      }
      p.value = std::move(value);
    } else {
      params.add(name, std::move(value));
    }
  }
  return h;
}

}  // namespace ndater
