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

#ifndef COOPER_MODALITY_CODEC_H_
#define COOPER_MODALITY_CODEC_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cooper {

// Auxiliary modality selected by the control token.
enum class AuxTask { kDepth = 0, kSegmentation = 1 };

std::string task_name(AuxTask task);         // "depth" / "seg"
std::string control_token(AuxTask task);     // "<depth-estimation>" / "<segmentation>"
AuxTask parse_task(const std::string& name);  // accepts "depth" or "seg"; throws otherwise

struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depth;  // row-major, meters
  double far_plane = 80.0;

  // Throws std::invalid_argument unless 0 <= depth <= far_plane everywhere.
  void validate() const;
  std::size_t size() const { return depth.size(); }
};

struct DepthStats {
  double x2 = 0.0;
  double x98 = 0.0;
  // Both percentiles as offsets from `anchor`, the sorted sample at or below
  // x2. Normalising against offsets keeps x -> a*x + b invariance exact for
  // dyadic a and b.
  double anchor = 0.0;
  double x2_offset = 0.0;
  double x98_offset = 0.0;

  static DepthStats from_values(double x2, double x98);
};

// Three channels per pixel, interleaved RGB, every value in [-1, 1].
struct PseudoImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  static PseudoImage zeros(int width, int height);
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  double& at(std::size_t pixel, int channel) { return data[3 * pixel + channel]; }
  double at(std::size_t pixel, int channel) const { return data[3 * pixel + channel]; }
  void validate() const;
};

// Affine-normalised depth in [-1, 1]; no metric scale.
struct NormalizedDepth {
  int width = 0;
  int height = 0;
  std::vector<double> values;
};

struct SegMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> labels;
};

using Rgb = std::array<std::uint8_t, 3>;

struct Palette {
  std::vector<Rgb> colors;
  std::size_t size() const { return colors.size(); }
};

struct DepthEncoding {
  PseudoImage image;
  // Set when x2 == x98: the image is all zeros.
  bool flat = false;
};

// Linear-interpolation percentile over the sorted values, rank p/100 * (n - 1).
double percentile(std::vector<double> values, double p);

DepthStats compute_percentiles(const DepthMap& depth);

// ((x - x2) / (x98 - x2) - 0.5) * 2, clamped to [-1, 1] and replicated to
// three channels.
DepthEncoding depth_to_pseudo(const DepthMap& depth, const DepthStats& stats);
double normalize_depth_value(double x, const DepthStats& stats);

// Channel-wise mean.
NormalizedDepth pseudo_to_depth(const PseudoImage& image);

// Golden-ratio hue sequence at full saturation and value.
Palette make_palette(int n);
Rgb hsv_to_rgb(double hue_degrees, double saturation, double value);

// Maps channel c in [0, 255] to c / 127.5 - 1.
double channel_to_unit(std::uint8_t c);

PseudoImage seg_to_pseudo(const SegMask& mask, const Palette& palette);

// Nearest palette colour by squared distance; ties go to the lowest label.
SegMask pseudo_to_seg(const PseudoImage& image, const Palette& palette);

// Smallest Euclidean distance between two palette entries in [-1, 1] units.
double min_palette_distance(const Palette& palette);

}  // namespace cooper

#endif  // COOPER_MODALITY_CODEC_H_
