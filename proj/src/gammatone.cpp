// src/gammatone.cpp
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

#include "aac/gammatone.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "aac/error.h"

namespace aac {

double erb_rate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }

double erb_rate_inverse(double erb) { return (std::pow(10.0, erb / 21.4) - 1.0) / 0.00437; }

double erb_bandwidth(double hz) { return 24.7 * (1.0 + 0.00437 * hz); }

std::vector<double> erb_center_frequencies(int num_bands, double f_min, double f_max) {
  if (num_bands < 1) throw ConfigError("num_bands must be >= 1");
  if (!(f_min > 0.0) || !(f_min < f_max))
    throw ConfigError("invalid frequency range: need 0 < f_min < f_max, got f_min=" +
                      std::to_string(f_min) + " f_max=" + std::to_string(f_max));
  const double lo = erb_rate(f_min), hi = erb_rate(f_max);
  if (num_bands == 1) return {erb_rate_inverse(0.5 * (lo + hi))};
  std::vector<double> freqs(static_cast<std::size_t>(num_bands));
  const double step = (hi - lo) / (num_bands - 1);
  for (int i = 0; i < num_bands; ++i) freqs[i] = erb_rate_inverse(lo + step * i);
  freqs.front() = f_min;
  freqs.back() = f_max;
  return freqs;
}

std::vector<double> gammatone_impulse_response(double center_freq, int order, double bandwidth,
                                               int sample_rate) {
  if (order < 1) throw ConfigError("gammatone order must be >= 1");
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  if (!(center_freq > 0.0) || center_freq > 0.5 * sample_rate)
    throw ConfigError("gammatone center frequency " + std::to_string(center_freq) +
                      " Hz is outside (0, Nyquist]");
  if (!(bandwidth > 0.0)) throw ConfigError("gammatone bandwidth must be positive");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double decay = kTwoPi * bandwidth;
  const double fs = sample_rate;
  auto envelope = [&](double t) { return std::pow(t, order - 1) * std::exp(-decay * t); };
  const double t_peak = (order - 1) / decay;
  const double threshold = 1e-5 * envelope(t_peak);

  std::vector<double> ir;
  for (std::size_t k = 0;; ++k) {
    const double t = k / fs;
    const double env = envelope(t);
    if (t > t_peak && env < threshold) break;
    ir.push_back(env * std::cos(kTwoPi * center_freq * t));
  }
  std::complex<double> response(0.0, 0.0);
  const double omega = kTwoPi * center_freq / fs;
  for (std::size_t k = 0; k < ir.size(); ++k)
    response += ir[k] * std::polar(1.0, -omega * static_cast<double>(k));
  const double gain = std::abs(response);
  if (!(gain > 0.0)) throw ConfigError("degenerate gammatone response");
  for (double& v : ir) v /= gain;
  return ir;
}

std::vector<double> gammatone_filter_response(const AudioClip& clip, double center_freq, int order,
                                              double bandwidth) {
  validate_clip(clip);
  const std::vector<double> ir =
      gammatone_impulse_response(center_freq, order, bandwidth, clip.sample_rate);
  const std::size_t n = clip.samples.size(), taps = ir.size();
  // Reversed taps over a zero-prefixed signal turn the convolution into a
  // contiguous dot product per output sample.
  std::vector<double> rev(ir.rbegin(), ir.rend());
  std::vector<double> padded(taps - 1 + n, 0.0);
  std::copy(clip.samples.begin(), clip.samples.end(), padded.begin() + (taps - 1));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = padded.data() + i;
    double acc = 0.0;
    for (std::size_t j = 0; j < taps; ++j) acc += rev[j] * x[j];
    out[i] = acc;
  }
  return out;
}

FrameLayout frame_layout(const GammatoneConfig& cfg, int sample_rate) {
  if (!(cfg.window_ms > 0.0)) throw ConfigError("window_ms must be positive");
  if (!(cfg.hop_fraction > 0.0) || cfg.hop_fraction > 1.0)
    throw ConfigError("hop_fraction must lie in (0, 1]");
  FrameLayout layout;
  layout.window = static_cast<std::size_t>(std::floor(cfg.window_ms * sample_rate / 1000.0 + 1e-9));
  if (layout.window < 1) throw ConfigError("window shorter than one sample");
  layout.hop = static_cast<std::size_t>(std::lround(cfg.hop_fraction * layout.window));
  if (layout.hop < 1) layout.hop = 1;
  return layout;
}

std::size_t frame_count(std::size_t num_samples, std::size_t window, std::size_t hop) {
  if (num_samples < window) return 0;
  return (num_samples - window) / hop + 1;
}

GammatoneConfig resolve_config(const GammatoneConfig& cfg, int sample_rate) {
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  if (cfg.sample_rate != 0 && cfg.sample_rate != sample_rate)
    throw InputError("clip sample rate " + std::to_string(sample_rate) +
                     " Hz differs from the configured " + std::to_string(cfg.sample_rate) +
                     " Hz (resampling is not supported)");
  GammatoneConfig r = cfg;
  r.sample_rate = sample_rate;
  const double nyquist = 0.5 * sample_rate;
  if (r.f_max == 0.0) r.f_max = nyquist;
  if (r.num_bands < 1) throw ConfigError("num_bands must be >= 1");
  if (r.filter_order < 1) throw ConfigError("filter_order must be >= 1");
  if (!(r.log_floor > 0.0)) throw ConfigError("log_floor must be positive");
  if (!(r.f_min > 0.0) || !(r.f_min < r.f_max) || r.f_max > nyquist)
    throw ConfigError("need 0 < f_min < f_max <= sample_rate/2");
  frame_layout(r, sample_rate);
  return r;
}

FeatureMap extract_features(const AudioClip& clip, const GammatoneConfig& cfg) {
  validate_clip(clip);
  const GammatoneConfig rc = resolve_config(cfg, clip.sample_rate);
  const FrameLayout layout = frame_layout(rc, clip.sample_rate);
  const std::size_t n = clip.samples.size();
  if (n < layout.window)
    throw InputError("clip has " + std::to_string(n) + " samples; at least " +
                     std::to_string(layout.window) + " (one analysis window) are required");

  FeatureMap fm;
  fm.num_bands = static_cast<std::size_t>(rc.num_bands);
  fm.num_frames = frame_count(n, layout.window, layout.hop);
  fm.band_center_freqs = erb_center_frequencies(rc.num_bands, rc.f_min, rc.f_max);
  fm.frame_hop_s = static_cast<double>(layout.hop) / clip.sample_rate;
  fm.values.resize(fm.num_bands * fm.num_frames);

  for (std::size_t b = 0; b < fm.num_bands; ++b) {
    const double fc = fm.band_center_freqs[b];
    const auto y = gammatone_filter_response(clip, fc, rc.filter_order, 1.019 * erb_bandwidth(fc));
    for (std::size_t f = 0; f < fm.num_frames; ++f) {
      const double* p = y.data() + f * layout.hop;
      double energy = 0.0;
      for (std::size_t i = 0; i < layout.window; ++i) energy += p[i] * p[i];
      fm.values[b * fm.num_frames + f] =
          std::log(energy / static_cast<double>(layout.window) + rc.log_floor);
    }
  }
  return fm;
}

}  // namespace aac
