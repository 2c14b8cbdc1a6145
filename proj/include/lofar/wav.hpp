#pragma once

// RIFF/WAVE reader and writer. Reads integer PCM (8/16/24/32-bit) and IEEE
// float (32/64-bit), including WAVE_FORMAT_EXTENSIBLE; only the first
// channel is kept. Integer samples are scaled by 1 / 2^(bits-1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "lofar/core.hpp"
#include "lofar/signal.hpp"

namespace lofar::wav {

enum class SampleFormat { Pcm16, Float32 };

namespace detail {

inline std::uint32_t u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

[[noreturn]] inline void fail(const std::string& path, std::size_t offset, const std::string& what) {
  throw Error("wav: " + path + " @ byte " + std::to_string(offset) + ": " + what);
}

}  // namespace detail

struct WavInfo {
  std::uint16_t format_tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
  std::size_t frames = 0;
};

/// Parses an in-memory WAV image. `name` only labels diagnostics.
inline SampleBuffer parse(std::span<const unsigned char> bytes, const std::string& name = "<memory>",
                          WavInfo* info_out = nullptr) {
  using detail::fail;
  if (bytes.size() < 12) fail(name, 0, "file too short for a RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) fail(name, 0, "missing RIFF tag");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) fail(name, 8, "missing WAVE tag");

  WavInfo info;
  bool have_fmt = false;
  std::size_t data_offset = 0, data_size = 0;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto* chunk = bytes.data() + pos;
    const std::uint32_t size = detail::u32le(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) fail(name, pos, "truncated fmt chunk");
      const auto* f = bytes.data() + body;
      info.format_tag = detail::u16le(f);
      info.channels = detail::u16le(f + 2);
      info.sample_rate = detail::u32le(f + 4);
      info.bits_per_sample = detail::u16le(f + 14);
      if (info.format_tag == 0xFFFE) {
        if (size < 40) fail(name, body, "truncated WAVE_FORMAT_EXTENSIBLE fmt chunk");
        info.format_tag = detail::u16le(f + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data_offset = body;
      data_size = size;
      if (body + data_size > bytes.size()) data_size = bytes.size() - body;  // tolerate streamed writers
      have_data = true;
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) fail(name, 12, "no fmt chunk");
  if (!have_data) fail(name, pos, "no data chunk");
  if (info.channels == 0) fail(name, 22, "zero channels");
  if (info.sample_rate == 0) fail(name, 24, "zero sample rate");

  const bool is_pcm = info.format_tag == 1;
  const bool is_float = info.format_tag == 3;
  const unsigned bits = info.bits_per_sample;
  if (is_pcm && !(bits == 8 || bits == 16 || bits == 24 || bits == 32)) {
    fail(name, 34, "unsupported PCM bit depth " + std::to_string(bits));
  }
  if (is_float && !(bits == 32 || bits == 64)) fail(name, 34, "unsupported float bit depth " + std::to_string(bits));
  if (!is_pcm && !is_float) fail(name, 20, "unsupported codec (format tag " + std::to_string(info.format_tag) + ")");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * info.channels;
  info.frames = data_size / frame_bytes;
  if (info.frames == 0) fail(name, data_offset, "no sample frames");

  RealVector samples(info.frames);
  const double scale = 1.0 / static_cast<double>(1ull << (bits - 1));
  for (std::size_t i = 0; i < info.frames; ++i) {
    const auto* p = bytes.data() + data_offset + i * frame_bytes;  // first channel
    double v = 0.0;
    if (is_float) {
      if (bits == 32) {
        float f;
        std::memcpy(&f, p, 4);
        v = f;
      } else {
        std::memcpy(&v, p, 8);
      }
    } else {
      switch (bits) {
        case 8: v = (static_cast<int>(p[0]) - 128) * scale; break;
        case 16: v = static_cast<std::int16_t>(detail::u16le(p)) * scale; break;
        case 24: {
          std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
          if (s & 0x800000) s |= ~0xFFFFFF;
          v = s * scale;
          break;
        }
        default: v = static_cast<std::int32_t>(detail::u32le(p)) * scale; break;
      }
    }
    if (!std::isfinite(v)) fail(name, data_offset + i * frame_bytes, "non-finite sample");
    samples[i] = v;
  }
  if (info_out != nullptr) *info_out = info;
  return SampleBuffer(std::move(samples), static_cast<double>(info.sample_rate));
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline SampleBuffer ingest_wav(const std::filesystem::path& path, WavInfo* info = nullptr) {
  const auto bytes = read_bytes(path);
  return parse(bytes, path.string(), info);
}

/// Encodes interleaved channels (all the same length) as a WAV image.
inline std::vector<unsigned char> encode(const std::vector<RealVector>& channels, std::uint32_t sample_rate,
                                         SampleFormat format = SampleFormat::Pcm16) {
  if (channels.empty()) throw Error("wav::encode: no channels");
  const std::size_t frames = channels.front().size();
  for (const auto& c : channels) {
    if (c.size() != frames) throw Error("wav::encode: channel lengths differ");
  }
  const auto nch = static_cast<std::uint16_t>(channels.size());
  const std::uint16_t bits = format == SampleFormat::Pcm16 ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * nch * (bits / 8));
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put_u32(out, 16);
  detail::put_u16(out, format == SampleFormat::Pcm16 ? 1 : 3);
  detail::put_u16(out, nch);
  detail::put_u32(out, sample_rate);
  detail::put_u32(out, sample_rate * nch * (bits / 8));
  detail::put_u16(out, static_cast<std::uint16_t>(nch * (bits / 8)));
  detail::put_u16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put_u32(out, data_bytes);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& c : channels) {
      if (format == SampleFormat::Pcm16) {
        const double clipped = std::clamp(c[i], -1.0, 32767.0 / 32768.0);
        detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clipped * 32768.0))));
      } else {
        const float f = static_cast<float>(c[i]);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        detail::put_u32(out, u);
      }
    }
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const std::vector<RealVector>& channels,
                      std::uint32_t sample_rate, SampleFormat format = SampleFormat::Pcm16) {
  const auto bytes = encode(channels, sample_rate, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline void write_wav(const std::filesystem::path& path, const SampleBuffer& buf,
                      SampleFormat format = SampleFormat::Pcm16) {
  write_wav(path, {buf.vector()}, static_cast<std::uint32_t>(std::lround(buf.sample_rate_hz())), format);
}

}  // namespace lofar::wav
