#pragma once

// LFR1 tensor files.
//
//   offset 0   "LFR1"
//   offset 4   u32 rows
//   offset 8   u32 cols
//   offset 12  u32 sample count
//   offset 16  u8  label code
//   offset 17  count * rows * cols float32, row-major, one sample after another
//
// All integers and floats are little-endian. One file holds one label.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "lofar/core.hpp"

namespace lofar::io {

inline constexpr char kLfr1Magic[4] = {'L', 'F', 'R', '1'};
inline constexpr std::size_t kLfr1HeaderBytes = 17;

struct Lfr1File {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint8_t label_code = 0;
  std::vector<std::vector<float>> samples;
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::vector<unsigned char> encode_lfr1(const Lfr1File& file) {
  const std::size_t cells = static_cast<std::size_t>(file.rows) * file.cols;
  std::vector<unsigned char> out;
  out.reserve(kLfr1HeaderBytes + file.samples.size() * cells * 4);
  out.insert(out.end(), kLfr1Magic, kLfr1Magic + 4);
  detail::put_u32(out, file.rows);
  detail::put_u32(out, file.cols);
  detail::put_u32(out, static_cast<std::uint32_t>(file.samples.size()));
  out.push_back(file.label_code);
  for (const auto& s : file.samples) {
    if (s.size() != cells) throw Error("LFR1: sample has " + std::to_string(s.size()) + " values, expected " + std::to_string(cells));
    for (float f : s) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      detail::put_u32(out, u);
    }
  }
  return out;
}

inline Lfr1File decode_lfr1(const std::vector<unsigned char>& bytes, const std::string& name = "<memory>") {
  if (bytes.size() < kLfr1HeaderBytes) throw Error("LFR1: " + name + ": truncated header");
  if (std::memcmp(bytes.data(), kLfr1Magic, 4) != 0) throw Error("LFR1: " + name + ": bad magic");
  Lfr1File f;
  f.rows = detail::get_u32(bytes.data() + 4);
  f.cols = detail::get_u32(bytes.data() + 8);
  const std::uint32_t count = detail::get_u32(bytes.data() + 12);
  f.label_code = bytes[16];
  const std::size_t cells = static_cast<std::size_t>(f.rows) * f.cols;
  if (bytes.size() != kLfr1HeaderBytes + static_cast<std::size_t>(count) * cells * 4) {
    throw Error("LFR1: " + name + ": payload size does not match header");
  }
  f.samples.assign(count, std::vector<float>(cells));
  const unsigned char* p = bytes.data() + kLfr1HeaderBytes;
  for (auto& s : f.samples) {
    for (float& v : s) {
      const std::uint32_t u = detail::get_u32(p);
      std::memcpy(&v, &u, 4);
      p += 4;
    }
  }
  return f;
}

inline void write_lfr1(const std::filesystem::path& path, const Lfr1File& file) {
  const auto bytes = encode_lfr1(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline Lfr1File read_lfr1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_lfr1(bytes, path.string());
}

}  // namespace lofar::io
