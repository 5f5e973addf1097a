// Copyright 2026 The Dynamark Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dynamark/audio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dynamark/audio/resample.hpp"
#include "dynamark/common/error.hpp"

namespace dynamark::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}
void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

PcmAudio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = " in '" + path.string() + "'";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DecodeError("not a RIFF/WAVE file" + where);
  }

  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > available) throw DecodeError("malformed fmt chunk" + where);
      const unsigned char* f = bytes.data() + body;
      format = le16(f);
      channels = le16(f + 2);
      rate = le32(f + 4);
      block_align = le16(f + 12);
      bits = le16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw DecodeError("malformed extensible fmt chunk" + where);
        format = le16(f + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // 0 and 0xFFFFFFFF are written by streaming encoders that never patched the size.
      if (size == 0xFFFFFFFFu || (size == 0 && available > 0)) {
        data_size = available;
      } else if (size > available) {
        throw DecodeError("truncated data chunk (" + std::to_string(available) + " of " +
                          std::to_string(size) + " bytes)" + where);
      } else {
        data_size = size;
      }
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw DecodeError("missing fmt chunk" + where);
  if (data == nullptr) throw DecodeError("missing data chunk" + where);
  if (channels == 0 || rate == 0) throw DecodeError("invalid channel count or sample rate" + where);

  const bool is_float = format == kFormatFloat;
  if (!(format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32)) &&
      !(is_float && (bits == 32 || bits == 64))) {
    throw DecodeError("unsupported sample format (tag " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits)" + where);
  }
  const std::size_t width = bits / 8;
  if (block_align != width * channels) throw DecodeError("inconsistent block alignment" + where);

  PcmAudio out;
  out.channels = channels;
  out.sample_rate = static_cast<int>(rate);
  const std::size_t count = data_size / width;
  out.interleaved.resize(count - count % channels);
  for (std::size_t i = 0; i < out.interleaved.size(); ++i) {
    const unsigned char* p = data + i * width;
    float v = 0.0f;
    if (is_float && bits == 32) {
      std::uint32_t u = le32(p);
      std::memcpy(&v, &u, 4);
    } else if (is_float) {
      std::uint64_t u = le32(p) | (static_cast<std::uint64_t>(le32(p + 4)) << 32);
      double d;
      std::memcpy(&d, &u, 8);
      v = static_cast<float>(d);
    } else if (bits == 8) {
      v = (static_cast<int>(p[0]) - 128) / 128.0f;
    } else if (bits == 16) {
      v = static_cast<std::int16_t>(le16(p)) / 32768.0f;
    } else if (bits == 24) {
      std::int32_t s = static_cast<std::int32_t>((p[0] << 8) | (p[1] << 16) | (static_cast<std::uint32_t>(p[2]) << 24)) >> 8;
      v = static_cast<float>(s / 8388608.0);
    } else {
      v = static_cast<float>(static_cast<std::int32_t>(le32(p)) / 2147483648.0);
    }
    if (!std::isfinite(v)) throw DecodeError("non-finite sample" + where);
    out.interleaved[i] = v;
  }
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const float> interleaved, int channels,
               int sample_rate, SampleFormat format) {
  const std::uint16_t bits = format == SampleFormat::kInt16 ? 16 : format == SampleFormat::kInt24 ? 24 : 32;
  const std::uint16_t width = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(interleaved.size() * width);
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put32(out, 36 + data_size);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, format == SampleFormat::kFloat32 ? kFormatFloat : kFormatPcm);
  put16(out, static_cast<std::uint16_t>(channels));
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate) * channels * width);
  put16(out, static_cast<std::uint16_t>(channels * width));
  put16(out, bits);
  out += "data";
  put32(out, data_size);
  for (float v : interleaved) {
    if (format == SampleFormat::kFloat32) {
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      put32(out, u);
      continue;
    }
    const double c = std::clamp(static_cast<double>(v), -1.0, 1.0);
    if (format == SampleFormat::kInt16) {
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(std::min(c * 32768.0, 32767.0)))));
    } else {
      const auto s = static_cast<std::int32_t>(std::lround(std::min(c * 8388608.0, 8388607.0)));
      const auto u = static_cast<std::uint32_t>(s);
      out.push_back(static_cast<char>(u & 0xFF));
      out.push_back(static_cast<char>((u >> 8) & 0xFF));
      out.push_back(static_cast<char>((u >> 16) & 0xFF));
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Waveform downmix(const PcmAudio& audio) {
  Waveform wav;
  wav.sample_rate = audio.sample_rate;
  const std::size_t frames = audio.frames();
  const auto ch = static_cast<std::size_t>(audio.channels);
  wav.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < ch; ++c) acc += audio.interleaved[i * ch + c];
    wav.samples[i] = static_cast<float>(acc / static_cast<double>(ch));
  }
  return wav;
}

void peak_normalize(Waveform& wav) {
  float peak = 0.0f;
  for (float v : wav.samples) peak = std::max(peak, std::abs(v));
  if (peak == 0.0f) return;
  const double gain = kTargetPeak / peak;
  for (auto& v : wav.samples) v = static_cast<float>(v * gain);
}

Waveform prepare(const PcmAudio& audio) {
  if (audio.frames() == 0) throw EmptyInputError("audio contains no samples");
  Waveform wav = downmix(audio);
  peak_normalize(wav);
  if (wav.sample_rate != kTargetSampleRate) {
    wav.samples = resample(wav.samples, wav.sample_rate, kTargetSampleRate);
    wav.sample_rate = kTargetSampleRate;
    // The interpolated signal can overshoot the normalized peak slightly.
    peak_normalize(wav);
  }
  return wav;
}

Waveform decode_and_prepare(const std::filesystem::path& path) {
  const PcmAudio audio = read_wav(path);
  if (audio.frames() == 0) throw EmptyInputError("'" + path.string() + "' contains no samples");
  return prepare(audio);
}

}  // namespace dynamark::audio
