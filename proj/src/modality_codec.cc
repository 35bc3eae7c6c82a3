// Copyright 2026 The Cooper Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cooper/modality_codec.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>

namespace cooper {

std::string task_name(AuxTask task) { return task == AuxTask::kDepth ? "depth" : "seg"; }

std::string control_token(AuxTask task) {
  return task == AuxTask::kDepth ? "<depth-estimation>" : "<segmentation>";
}

AuxTask parse_task(const std::string& name) {
  if (name == "depth") return AuxTask::kDepth;
  if (name == "seg") return AuxTask::kSegmentation;
  throw std::invalid_argument("unknown control '" + name + "' (expected depth or seg)");
}

void DepthMap::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("depth map has no pixels");
  if (depth.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("depth map size does not match width*height");
  }
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!(depth[i] >= 0.0 && depth[i] <= far_plane)) {
      throw std::invalid_argument("depth at pixel " + std::to_string(i) +
                                  " outside [0, far_plane]");
    }
  }
}

PseudoImage PseudoImage::zeros(int width, int height) {
  PseudoImage img;
  img.width = width;
  img.height = height;
  img.data.assign(static_cast<std::size_t>(width) * height * 3, 0.0);
  return img;
}

void PseudoImage::validate() const {
  if (data.size() != pixel_count() * 3) {
    throw std::invalid_argument("pseudo-image data does not hold 3 channels per pixel");
  }
  for (double v : data) {
    if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("pseudo-image value outside [-1, 1]");
  }
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

DepthStats DepthStats::from_values(double x2, double x98) {
  return DepthStats{x2, x98, x2, 0.0, x98 - x2};
}

DepthStats compute_percentiles(const DepthMap& depth) {
  if (depth.depth.empty()) throw std::invalid_argument("compute_percentiles: empty depth map");
  std::vector<double> sorted = depth.depth;
  std::sort(sorted.begin(), sorted.end());
  const double last = static_cast<double>(sorted.size() - 1);
  const auto split = [&](double p) {
    const double rank = p / 100.0 * last;
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return std::tuple{lo, hi, rank - static_cast<double>(lo)};
  };
  const auto [lo2, hi2, f2] = split(2.0);
  const auto [lo98, hi98, f98] = split(98.0);
  DepthStats s;
  s.anchor = sorted[lo2];
  s.x2_offset = f2 == 0.0 ? 0.0 : f2 * (sorted[hi2] - sorted[lo2]);
  s.x98_offset = (sorted[lo98] - s.anchor) + (f98 == 0.0 ? 0.0 : f98 * (sorted[hi98] - sorted[lo98]));
  s.x2 = percentile(sorted, 2.0);
  s.x98 = percentile(sorted, 98.0);
  return s;
}

double normalize_depth_value(double x, const DepthStats& stats) {
  const double v =
      (((x - stats.anchor) - stats.x2_offset) / (stats.x98_offset - stats.x2_offset) - 0.5) * 2.0;
  return std::clamp(v, -1.0, 1.0);
}

DepthEncoding depth_to_pseudo(const DepthMap& depth, const DepthStats& stats) {
  if (stats.x2_offset > stats.x98_offset) throw std::invalid_argument("depth stats have x2 > x98");
  DepthEncoding out{PseudoImage::zeros(depth.width, depth.height), false};
  if (depth.depth.size() != out.image.pixel_count()) {
    throw std::invalid_argument("depth map size does not match width*height");
  }
  if (stats.x2_offset == stats.x98_offset) {
    out.flat = true;
    return out;
  }
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    const double v = normalize_depth_value(depth.depth[i], stats);
    for (int c = 0; c < 3; ++c) out.image.at(i, c) = v;
  }
  return out;
}

NormalizedDepth pseudo_to_depth(const PseudoImage& image) {
  NormalizedDepth out{image.width, image.height, std::vector<double>(image.pixel_count())};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    // Offsets from channel 0 keep replicated channels exact.
    const double base = image.at(i, 0);
    out.values[i] = base + ((image.at(i, 1) - base) + (image.at(i, 2) - base)) / 3.0;
  }
  return out;
}

Rgb hsv_to_rgb(double hue_degrees, double saturation, double value) {
  const double c = value * saturation;
  const double h = std::fmod(hue_degrees, 360.0) / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  const double m = value - c;
  auto to_byte = [](double u) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(u, 0.0, 1.0) * 255.0));
  };
  return Rgb{to_byte(r + m), to_byte(g + m), to_byte(b + m)};
}

Palette make_palette(int n) {
  if (n < 1 || n > 1024) throw std::invalid_argument("palette size must be in [1, 1024]");
  Palette pal;
  pal.colors.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double scaled = static_cast<double>(k) * 0.6180339887;
    const double hue = (scaled - std::floor(scaled)) * 360.0;
    pal.colors.push_back(hsv_to_rgb(hue, 1.0, 1.0));
  }
  return pal;
}

double channel_to_unit(std::uint8_t c) { return static_cast<double>(c) / 127.5 - 1.0; }

PseudoImage seg_to_pseudo(const SegMask& mask, const Palette& palette) {
  PseudoImage out = PseudoImage::zeros(mask.width, mask.height);
  if (mask.labels.size() != out.pixel_count()) {
    throw std::invalid_argument("mask size does not match width*height");
  }
  for (std::size_t i = 0; i < mask.labels.size(); ++i) {
    const std::uint32_t label = mask.labels[i];
    if (label >= palette.size()) {
      throw std::invalid_argument("label " + std::to_string(label) + " at pixel " +
                                  std::to_string(i) + " exceeds palette size " +
                                  std::to_string(palette.size()));
    }
    for (int c = 0; c < 3; ++c) out.at(i, c) = channel_to_unit(palette.colors[label][c]);
  }
  return out;
}

SegMask pseudo_to_seg(const PseudoImage& image, const Palette& palette) {
  if (palette.size() == 0) throw std::invalid_argument("pseudo_to_seg: empty palette");
  std::vector<std::array<double, 3>> unit(palette.size());
  for (std::size_t k = 0; k < palette.size(); ++k) {
    for (int c = 0; c < 3; ++c) unit[k][c] = channel_to_unit(palette.colors[k][c]);
  }
  SegMask mask{image.width, image.height, std::vector<std::uint32_t>(image.pixel_count())};
  for (std::size_t i = 0; i < mask.labels.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_label = 0;
    for (std::size_t k = 0; k < unit.size(); ++k) {
      double d = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double diff = image.at(i, c) - unit[k][c];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        best_label = static_cast<std::uint32_t>(k);
      }
    }
    mask.labels[i] = best_label;
  }
  return mask;
}

double min_palette_distance(const Palette& palette) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < palette.size(); ++a) {
    for (std::size_t b = a + 1; b < palette.size(); ++b) {
      double d = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double diff = channel_to_unit(palette.colors[a][c]) -
                            channel_to_unit(palette.colors[b][c]);
        d += diff * diff;
      }
      best = std::min(best, d);
    }
  }
  return std::sqrt(best);
}

}  // namespace cooper
