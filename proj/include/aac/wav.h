// include/aac/wav.h
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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace aac {

struct AudioClip {
  std::vector<double> samples;  // mono, nominal range [-1, 1]
  int sample_rate = 0;
};

// Throws InputError if the clip violates its invariants (empty, bad rate, non-finite).
void validate_clip(const AudioClip& clip);

// RIFF/WAVE reader for 16-bit integer PCM and 32-bit float, any channel
// count; multi-channel input is mixed down by averaging the channels.
AudioClip read_wav(std::istream& in);
AudioClip read_wav(const std::filesystem::path& path);

// Writes 16-bit PCM mono with clipping to [-1, 1].
void write_wav_pcm16(std::ostream& out, const AudioClip& clip);
void write_wav_pcm16(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace aac
