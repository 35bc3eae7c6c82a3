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

#ifndef COOPER_IMAGE_IO_H_
#define COOPER_IMAGE_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cooper/modality_codec.h"

namespace cooper {

// Malformed or unreadable input file. `offset` is the byte position where
// parsing stopped, or -1 when the problem is not positional.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, long offset = -1)
      : std::runtime_error(offset >= 0 ? what + " (at byte " + std::to_string(offset) + ")" : what),
        offset_(offset) {}
  long offset() const { return offset_; }

 private:
  long offset_;
};

// Netpbm raster: 1 channel for P5, 3 interleaved channels for P6. Samples wider
// than 8 bits are stored big-endian on disk.
struct NetpbmImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  int maxval = 65535;
  std::vector<std::uint16_t> samples;
};

NetpbmImage parse_netpbm(const std::string& bytes);
std::string encode_netpbm(const NetpbmImage& image);
NetpbmImage read_netpbm(const std::filesystem::path& path);
void write_netpbm(const std::filesystem::path& path, const NetpbmImage& image);

// round((v + 1) / 2 * 65535), half away from zero; v is clamped to [-1, 1].
std::uint16_t quantize_unit16(double v);
double dequantize_unit16(std::uint16_t q);
// Sample in [0, maxval] mapped linearly onto [-1, 1].
double sample_to_unit(std::uint16_t q, int maxval);
std::uint16_t unit_to_sample(double v, int maxval);

// Raw depth stored as integers times `meters_per_unit`.
DepthMap depth_from_netpbm(const NetpbmImage& image, double meters_per_unit, double far_plane);

// One-channel 16-bit PGM of the (replicated) normalised depth.
NetpbmImage normalized_depth_to_pgm(const NormalizedDepth& depth);
NetpbmImage pseudo_depth_to_pgm(const PseudoImage& image);

// P6 of a pseudo-image at the given bit depth (maxval 255 or 65535).
NetpbmImage pseudo_to_ppm(const PseudoImage& image, int maxval = 255);
// Accepts P5 (channel replicated) or P6 at any maxval.
PseudoImage pseudo_from_netpbm(const NetpbmImage& image);

std::string encode_mask_json(const SegMask& mask);
SegMask parse_mask_json(const std::string& text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace cooper

#endif  // COOPER_IMAGE_IO_H_
