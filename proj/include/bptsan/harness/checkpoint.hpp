#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/crc.hpp>

#include "bptsan/errors.hpp"

namespace bptsan::harness {

inline constexpr char kCheckpointMagic[4] = {'B', 'P', 'T', 'S'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  std::vector<double> values;
};

/// Decoded checkpoint. Layout on disk (all integers little-endian):
///   "BPTS" | u32 version | u32 len, config text | u32 len, state text |
///   u32 array count | per array: u32 name len, name, u64 count, f64 x count |
///   u32 CRC-32 of every preceding byte
struct CheckpointData {
  std::string config_text;
  std::string state_text;  // counters, RNG states, mask seeds as key=value lines
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  }
};

namespace detail {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  std::uint64_t bits;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

inline void put_text(std::vector<std::uint8_t>& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <class T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string text() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const {
    if (n > size_ - pos_) throw CheckpointError("checkpoint is truncated");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t n) {
  boost::crc_32_type crc;
  crc.process_bytes(data, n);
  return crc.checksum();
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& c) {
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_text(out, c.config_text);
  detail::put_text(out, c.state_text);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.arrays.size()));
  for (const auto& a : c.arrays) {
    detail::put_text(out, a.name);
    detail::put_le<std::uint64_t>(out, a.values.size());
    for (double v : a.values) detail::put_le<double>(out, v);
  }
  detail::put_le<std::uint32_t>(out, detail::crc32(out.data(), out.size()));
  return out;
}

/// Verifies magic, checksum and version before decoding anything.
inline CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw CheckpointError("not a checkpoint file (bad magic bytes)");
  const std::size_t body = bytes.size() - 4;
  detail::Reader tail(bytes.data() + body, 4);
  if (tail.get<std::uint32_t>() != detail::crc32(bytes.data(), body))
    throw CheckpointError("checkpoint checksum mismatch (file is corrupted)");
  detail::Reader r(bytes.data() + 4, body - 4);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  CheckpointData c;
  c.config_text = r.text();
  c.state_text = r.text();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedArray a;
    a.name = r.text();
    const auto n = r.get<std::uint64_t>();
    if (n > body / 8) throw CheckpointError("checkpoint array length is implausible");
    a.values.resize(n);
    for (auto& v : a.values) v = r.get<double>();
    c.arrays.push_back(std::move(a));
  }
  if (!r.done()) throw CheckpointError("checkpoint has trailing bytes");
  return c;
}

inline void write_checkpoint(const std::filesystem::path& path, const CheckpointData& c) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(c);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace bptsan::harness
