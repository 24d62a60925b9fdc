#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "voxkit/errors.hpp"
#include "voxkit/signal.hpp"

namespace voxkit {

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace detail

// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float data and
// returns one MonoSignal per channel. 16-bit samples are scaled by 1/32768
// into [-1, 1); float samples are taken as stored.
inline std::vector<MonoSignal> load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("load_wav: cannot open '" + path + "'");
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};

  auto malformed = [&](const char* what) {
    throw MalformedWavError("load_wav: " + std::string(what) + " in '" + path + "'");
  };

  if (bytes.size() < 12) malformed("file too short for RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    malformed("missing RIFF/WAVE signature");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::uint32_t chunk_size = detail::read_u32le(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) malformed("truncated chunk");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) malformed("fmt chunk too short");
      format = detail::read_u16le(bytes.data() + body);
      channels = detail::read_u16le(bytes.data() + body + 2);
      sample_rate = detail::read_u32le(bytes.data() + body + 4);
      bits = detail::read_u16le(bytes.data() + body + 14);
      // WAVE_FORMAT_EXTENSIBLE carries the real format in the extension.
      if (format == 0xFFFE && chunk_size >= 40)
        format = detail::read_u16le(bytes.data() + body + 24);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = chunk_size;
      have_data = true;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt) malformed("missing fmt chunk");
  if (!have_data) malformed("missing data chunk");
  if (channels == 0 || sample_rate == 0) malformed("bad fmt fields");

  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32)
    throw UnsupportedWavEncodingError(
        "load_wav: only 16-bit PCM and 32-bit float supported, got format " +
        std::to_string(format) + "/" + std::to_string(bits) + " bits");

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data_size / frame_bytes;

  std::vector<MonoSignal> out(channels);
  for (auto& ch : out) {
    ch.sample_rate = static_cast<int>(sample_rate);
    ch.samples.resize(n_frames);
  }
  for (std::size_t i = 0; i < n_frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        const std::int16_t v = static_cast<std::int16_t>(detail::read_u16le(p));
        out[c].samples[i] = static_cast<double>(v) / 32768.0;
      } else {
        float f;
        std::memcpy(&f, p, 4);
        out[c].samples[i] = static_cast<double>(f);
      }
    }
  }
  return out;
}

// Writes a 16-bit PCM mono WAV. Samples are clamped to
// [-1, 1 - 1/32768] before quantization.
inline void write_wav(const MonoSignal& signal, const std::string& path) {
  validate(signal);
  std::string payload;
  payload.reserve(44 + 2 * signal.samples.size());

  const std::uint32_t data_size =
      static_cast<std::uint32_t>(2 * signal.samples.size());
  payload += "RIFF";
  detail::put_u32le(payload, 36 + data_size);
  payload += "WAVE";
  payload += "fmt ";
  detail::put_u32le(payload, 16);
  detail::put_u16le(payload, 1);  // PCM
  detail::put_u16le(payload, 1);  // mono
  detail::put_u32le(payload, static_cast<std::uint32_t>(signal.sample_rate));
  detail::put_u32le(payload, static_cast<std::uint32_t>(signal.sample_rate) * 2);
  detail::put_u16le(payload, 2);   // block align
  detail::put_u16le(payload, 16);  // bits per sample
  payload += "data";
  detail::put_u32le(payload, data_size);
  for (double s : signal.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0 - 1.0 / 32768.0);
    const auto q = static_cast<std::int16_t>(std::llround(clamped * 32768.0));
    detail::put_u16le(payload, static_cast<std::uint16_t>(q));
  }

  // Write through a temp file so readers never observe a partial WAV.
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream outf(tmp, std::ios::binary | std::ios::trunc);
    if (!outf) throw FileWriteError("write_wav: cannot open '" + path + "'");
    outf.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!outf) throw FileWriteError("write_wav: short write to '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw FileWriteError("write_wav: cannot move temp file onto '" + path + "'");
}

}  // namespace voxkit
