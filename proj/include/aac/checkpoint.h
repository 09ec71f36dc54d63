// include/aac/checkpoint.h
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

#include "aac/tensor.h"

namespace aac {

// Named-tensor container, little-endian:
//   "TENS" | version u32 | count u32 |
//   per tensor: name_len u32 | name bytes (UTF-8) | rank u32 | dims u32[rank] | f32[numel]
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const NamedTensors<float>& tensors);
NamedTensors<float> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const NamedTensors<float>& tensors);
NamedTensors<float> load_checkpoint(const std::filesystem::path& path);

// Copies values by name into `into`; every destination must be present with a matching shape.
void assign_by_name(const NamedTensors<float>& from, NamedTensors<float>& into);

}  // namespace aac
