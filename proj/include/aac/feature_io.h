// include/aac/feature_io.h
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
#include <string>

#include "aac/gammatone.h"

namespace aac {

// GTFM container, little-endian:
//   "GTFM" | version u32 | bands u32 | frames u32 | hop_s f64 | f32[bands*frames] row-major
// Band center frequencies travel in a JSON sidecar next to the binary file.
inline constexpr std::uint32_t kFeatureMapVersion = 1;

void write_gtfm(std::ostream& out, const FeatureMap& fm);
// band_center_freqs is left empty; read the sidecar for it.
FeatureMap read_gtfm(std::istream& in);

// Writes <stem>.gtfm and <stem>.json. `source_hash` is recorded in the sidecar
// so unchanged inputs can be skipped on re-runs.
void save_feature_map(const std::filesystem::path& stem, const FeatureMap& fm,
                      const std::string& source_hash = {});
FeatureMap load_feature_map(const std::filesystem::path& stem);
// Empty string when the sidecar is missing or has no hash.
std::string stored_source_hash(const std::filesystem::path& stem);

// Compact JSON object with every GammatoneConfig field.
std::string gammatone_config_json(const GammatoneConfig& cfg);
// Fields present in `text` override `base`; unknown keys and type errors
// raise JsonError.
GammatoneConfig gammatone_config_from_json(const std::string& text, GammatoneConfig base = {});

}  // namespace aac
