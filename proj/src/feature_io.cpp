// src/feature_io.cpp
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

#include "aac/feature_io.h"

#include <fstream>

#include "aac/binary_io.h"
#include "aac/error.h"
#include "json.hpp"

namespace aac {

void write_gtfm(std::ostream& out, const FeatureMap& fm) {
  out.write("GTFM", 4);
  binio::put<std::uint32_t>(out, kFeatureMapVersion);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(fm.num_bands));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(fm.num_frames));
  binio::put<double>(out, fm.frame_hop_s);
  for (double v : fm.values) binio::put<float>(out, static_cast<float>(v));
  if (!out) throw FormatError("failed writing GTFM data");
}

FeatureMap read_gtfm(std::istream& in) {
  binio::expect_magic(in, "GTFM");
  const auto version = binio::get<std::uint32_t>(in, "GTFM version");
  if (version != kFeatureMapVersion)
    throw FormatError("unsupported GTFM version " + std::to_string(version));
  FeatureMap fm;
  fm.num_bands = binio::get<std::uint32_t>(in, "band count");
  fm.num_frames = binio::get<std::uint32_t>(in, "frame count");
  fm.frame_hop_s = binio::get<double>(in, "hop");
  if (fm.num_bands == 0 || fm.num_frames == 0) throw FormatError("empty GTFM feature map");
  fm.values.resize(fm.num_bands * fm.num_frames);
  for (double& v : fm.values) v = binio::get<float>(in, "feature values");
  return fm;
}

void save_feature_map(const std::filesystem::path& stem, const FeatureMap& fm,
                      const std::string& source_hash) {
  auto bin = stem;
  bin += ".gtfm";
  {
    std::ofstream out(bin, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open " + bin.string() + " for writing");
    write_gtfm(out, fm);
  }
  nlohmann::json side;
  side["band_center_freqs"] = fm.band_center_freqs;
  side["num_bands"] = fm.num_bands;
  side["num_frames"] = fm.num_frames;
  side["frame_hop_s"] = fm.frame_hop_s;
  if (!source_hash.empty()) side["source_hash"] = source_hash;
  auto js = stem;
  js += ".json";
  std::ofstream out(js, std::ios::trunc);
  if (!out) throw InputError("cannot open " + js.string() + " for writing");
  out << side.dump(2) << '\n';
}

FeatureMap load_feature_map(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".gtfm";
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw InputError("missing feature file " + bin.string());
  FeatureMap fm = read_gtfm(in);
  auto js = stem;
  js += ".json";
  std::ifstream side_in(js);
  if (side_in) {
    try {
      auto side = nlohmann::json::parse(side_in);
      fm.band_center_freqs = side.at("band_center_freqs").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw JsonError(js.string() + ": " + e.what());
    }
  }
  return fm;
}

std::string stored_source_hash(const std::filesystem::path& stem) {
  auto js = stem;
  js += ".json";
  std::ifstream in(js);
  if (!in) return {};
  auto side = nlohmann::json::parse(in, nullptr, false);
  if (side.is_discarded() || !side.contains("source_hash")) return {};
  return side["source_hash"].get<std::string>();
}

std::string gammatone_config_json(const GammatoneConfig& cfg) {
  nlohmann::ordered_json j;
  j["num_bands"] = cfg.num_bands;
  j["f_min"] = cfg.f_min;
  j["f_max"] = cfg.f_max;
  j["filter_order"] = cfg.filter_order;
  j["window_ms"] = cfg.window_ms;
  j["hop_fraction"] = cfg.hop_fraction;
  j["log_floor"] = cfg.log_floor;
  j["sample_rate"] = cfg.sample_rate;
  return j.dump();
}

GammatoneConfig gammatone_config_from_json(const std::string& text, GammatoneConfig base) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw JsonError("feature config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "num_bands") base.num_bands = value.get<int>();
      else if (key == "f_min") base.f_min = value.get<double>();
      else if (key == "f_max") base.f_max = value.get<double>();
      else if (key == "filter_order") base.filter_order = value.get<int>();
      else if (key == "window_ms") base.window_ms = value.get<double>();
      else if (key == "hop_fraction") base.hop_fraction = value.get<double>();
      else if (key == "log_floor") base.log_floor = value.get<double>();
      else if (key == "sample_rate") base.sample_rate = value.get<int>();
      else throw JsonError("unknown feature config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw JsonError(std::string("feature config: ") + e.what());
  }
  return base;
}

}  // namespace aac
