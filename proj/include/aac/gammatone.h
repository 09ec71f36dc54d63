// include/aac/gammatone.h
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

#include <cstddef>
#include <vector>

#include "aac/wav.h"

namespace aac {

struct GammatoneConfig {
  int num_bands = 64;
  double f_min = 50.0;
  double f_max = 0.0;  // 0 selects sample_rate / 2
  int filter_order = 4;
  double window_ms = 46.0;
  double hop_fraction = 0.5;
  double log_floor = 1e-10;
  int sample_rate = 0;  // expected clip rate; 0 accepts whatever the clip has
};

// Gammatone log-energy spectrogram, bands x frames, row-major.
struct FeatureMap {
  std::size_t num_bands = 0;
  std::size_t num_frames = 0;
  std::vector<double> values;
  std::vector<double> band_center_freqs;
  double frame_hop_s = 0.0;

  double at(std::size_t band, std::size_t frame) const { return values[band * num_frames + frame]; }
};

// ERB-rate scale (Glasberg & Moore): E(f) = 21.4 log10(1 + 0.00437 f).
double erb_rate(double hz);
double erb_rate_inverse(double erb);
// Equivalent rectangular bandwidth: 24.7 (1 + 0.00437 f).
double erb_bandwidth(double hz);

// num_bands frequencies equally spaced in ERB-rate between f_min and f_max
// inclusive (a single band sits at the ERB midpoint).
std::vector<double> erb_center_frequencies(int num_bands, double f_min, double f_max);

// Truncated, gain-normalized impulse response t^(n-1) exp(-2 pi b t) cos(2 pi fc t).
// Truncation happens once the envelope has decayed below 1e-5 of its peak;
// the response is scaled so that |H(fc)| = 1.
std::vector<double> gammatone_impulse_response(double center_freq, int order, double bandwidth,
                                               int sample_rate);

// Causal filtering of the clip; output length equals input length.
std::vector<double> gammatone_filter_response(const AudioClip& clip, double center_freq, int order,
                                              double bandwidth);

struct FrameLayout {
  std::size_t window = 0;
  std::size_t hop = 0;
};
FrameLayout frame_layout(const GammatoneConfig& cfg, int sample_rate);
std::size_t frame_count(std::size_t num_samples, std::size_t window, std::size_t hop);

// Checks the config against a clip rate and returns it with f_max resolved.
GammatoneConfig resolve_config(const GammatoneConfig& cfg, int sample_rate);

FeatureMap extract_features(const AudioClip& clip, const GammatoneConfig& cfg);

}  // namespace aac
