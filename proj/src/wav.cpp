// src/wav.cpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "aac/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "aac/binary_io.h"
#include "aac/error.h"

namespace aac {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::string read_tag(std::istream& in) {
  char tag[4];
  in.read(tag, 4);
  if (!in) return {};
  return std::string(tag, 4);
}

}  // namespace

void validate_clip(const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw InputError("audio sample rate must be positive");
  if (clip.samples.empty()) throw InputError("audio clip has no samples");
  for (double s : clip.samples)
    if (!std::isfinite(s)) throw InputError("audio clip contains non-finite samples");
}

AudioClip read_wav(std::istream& in) {
  if (read_tag(in) != "RIFF") throw FormatError("not a RIFF file");
  binio::get<std::uint32_t>(in, "RIFF size");
  if (read_tag(in) != "WAVE") throw FormatError("RIFF file is not WAVE");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  for (;;) {
    const std::string tag = read_tag(in);
    if (tag.empty()) throw FormatError("WAVE file has no data chunk");
    const auto size = binio::get<std::uint32_t>(in, "chunk size");
    if (tag == "fmt ") {
      if (size < 16) throw FormatError("fmt chunk too small");
      format = binio::get<std::uint16_t>(in, "format");
      channels = binio::get<std::uint16_t>(in, "channels");
      rate = binio::get<std::uint32_t>(in, "sample rate");
      binio::get<std::uint32_t>(in, "byte rate");
      binio::get<std::uint16_t>(in, "block align");
      bits = binio::get<std::uint16_t>(in, "bits per sample");
      std::uint32_t consumed = 16;
      if (format == kFormatExtensible && size >= 40) {
        binio::get<std::uint16_t>(in, "cb size");
        binio::get<std::uint16_t>(in, "valid bits");
        binio::get<std::uint32_t>(in, "channel mask");
        format = binio::get<std::uint16_t>(in, "sub format");
        consumed += 10;
      }
      in.ignore(size - consumed + (size & 1));
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw FormatError("data chunk precedes fmt chunk");
      if (channels == 0) throw FormatError("WAVE file declares zero channels");
      const bool pcm16 = format == kFormatPcm && bits == 16;
      const bool f32 = format == kFormatFloat && bits == 32;
      if (!pcm16 && !f32)
        throw FormatError("unsupported WAVE encoding (format " + std::to_string(format) + ", " +
                          std::to_string(bits) + " bits)");
      const std::size_t bytes_per = bits / 8;
      const std::size_t frames = size / (bytes_per * channels);
      std::vector<char> raw(frames * bytes_per * channels);
      in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
      if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw FormatError("WAVE data chunk is truncated");
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      clip.samples.resize(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          const char* p = raw.data() + (f * channels + c) * bytes_per;
          if (pcm16) {
            std::int16_t v;
            std::memcpy(&v, p, 2);
            acc += v / 32768.0;
          } else {
            float v;
            std::memcpy(&v, p, 4);
            acc += v;
          }
        }
        clip.samples[f] = acc / channels;
      }
      validate_clip(clip);
      return clip;
    } else {
      in.ignore(size + (size & 1));
      if (!in) throw FormatError("truncated chunk " + tag);
    }
  }
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open audio file " + path.string());
  try {
    return read_wav(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_wav_pcm16(std::ostream& out, const AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  out.write("RIFF", 4);
  binio::put<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  binio::put<std::uint32_t>(out, 16);
  binio::put<std::uint16_t>(out, kFormatPcm);
  binio::put<std::uint16_t>(out, 1);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  binio::put<std::uint16_t>(out, 2);
  binio::put<std::uint16_t>(out, 16);
  out.write("data", 4);
  binio::put<std::uint32_t>(out, data_bytes);
  for (double s : clip.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    binio::put<std::int16_t>(out, static_cast<std::int16_t>(std::lround(c * 32767.0)));
  }
}

void write_wav_pcm16(const std::filesystem::path& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_wav_pcm16(out, clip);
}

}  // namespace aac
