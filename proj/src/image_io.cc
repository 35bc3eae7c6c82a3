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

#include "cooper/image_io.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cooper {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_int(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000) throw FormatError(std::string(field) + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw FormatError(std::string("expected ") + field, static_cast<long>(start));
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

NetpbmImage parse_netpbm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("not a binary PGM/PPM file (magic must be P5 or P6)", 0);
  }
  NetpbmImage img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader reader(bytes);
  reader.advance(2);
  const long width = reader.read_int("width");
  const long height = reader.read_int("height");
  const long maxval = reader.read_int("maxval");
  if (width <= 0 || height <= 0) throw FormatError("image dimensions must be positive", 2);
  if (maxval < 1 || maxval > 65535) {
    throw FormatError("maxval must be in [1, 65535]", static_cast<long>(reader.pos()));
  }
  if (reader.pos() >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[reader.pos()]))) {
    throw FormatError("missing whitespace after maxval", static_cast<long>(reader.pos()));
  }
  reader.advance(1);
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.maxval = static_cast<int>(maxval);
  const std::size_t count = static_cast<std::size_t>(width) * height * img.channels;
  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t start = reader.pos();
  if (bytes.size() - start < count * bytes_per_sample) {
    throw FormatError("truncated pixel data: expected " + std::to_string(count * bytes_per_sample) +
                          " bytes",
                      static_cast<long>(bytes.size()));
  }
  img.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint16_t v;
    if (bytes_per_sample == 2) {
      v = static_cast<std::uint16_t>((static_cast<unsigned char>(bytes[start + 2 * i]) << 8) |
                                     static_cast<unsigned char>(bytes[start + 2 * i + 1]));
    } else {
      v = static_cast<unsigned char>(bytes[start + i]);
    }
    if (v > maxval) {
      throw FormatError("sample exceeds maxval", static_cast<long>(start + i * bytes_per_sample));
    }
    img.samples[i] = v;
  }
  return img;
}

std::string encode_netpbm(const NetpbmImage& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw std::invalid_argument("netpbm images have 1 or 3 channels");
  }
  const std::size_t count = static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (image.samples.size() != count) throw std::invalid_argument("netpbm sample count mismatch");
  std::ostringstream out;
  out << (image.channels == 1 ? "P5" : "P6") << '\n'
      << image.width << ' ' << image.height << '\n'
      << image.maxval << '\n';
  std::string data = out.str();
  const bool wide = image.maxval > 255;
  data.reserve(data.size() + count * (wide ? 2 : 1));
  for (std::uint16_t v : image.samples) {
    if (wide) data.push_back(static_cast<char>(v >> 8));
    data.push_back(static_cast<char>(v & 0xFF));
  }
  return data;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

NetpbmImage read_netpbm(const std::filesystem::path& path) {
  try {
    return parse_netpbm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_netpbm(const std::filesystem::path& path, const NetpbmImage& image) {
  write_file(path, encode_netpbm(image));
}

std::uint16_t quantize_unit16(double v) {
  const double clamped = std::clamp(v, -1.0, 1.0);
  return static_cast<std::uint16_t>(std::lround((clamped + 1.0) / 2.0 * 65535.0));
}

double dequantize_unit16(std::uint16_t q) { return static_cast<double>(q) / 65535.0 * 2.0 - 1.0; }

double sample_to_unit(std::uint16_t q, int maxval) {
  return static_cast<double>(q) / static_cast<double>(maxval) * 2.0 - 1.0;
}

std::uint16_t unit_to_sample(double v, int maxval) {
  const double clamped = std::clamp(v, -1.0, 1.0);
  return static_cast<std::uint16_t>(std::lround((clamped + 1.0) / 2.0 * maxval));
}

DepthMap depth_from_netpbm(const NetpbmImage& image, double meters_per_unit, double far_plane) {
  if (image.channels != 1) throw FormatError("depth input must be a single-channel PGM (P5)", 0);
  DepthMap d;
  d.width = image.width;
  d.height = image.height;
  d.far_plane = far_plane;
  d.depth.resize(image.samples.size());
  for (std::size_t i = 0; i < image.samples.size(); ++i) {
    d.depth[i] = std::min(static_cast<double>(image.samples[i]) * meters_per_unit, far_plane);
  }
  return d;
}

NetpbmImage normalized_depth_to_pgm(const NormalizedDepth& depth) {
  NetpbmImage img{depth.width, depth.height, 1, 65535, {}};
  img.samples.reserve(depth.values.size());
  for (double v : depth.values) img.samples.push_back(quantize_unit16(v));
  return img;
}

NetpbmImage pseudo_depth_to_pgm(const PseudoImage& image) {
  return normalized_depth_to_pgm(pseudo_to_depth(image));
}

NetpbmImage pseudo_to_ppm(const PseudoImage& image, int maxval) {
  NetpbmImage img{image.width, image.height, 3, maxval, {}};
  img.samples.reserve(image.data.size());
  for (double v : image.data) img.samples.push_back(unit_to_sample(v, maxval));
  return img;
}

PseudoImage pseudo_from_netpbm(const NetpbmImage& image) {
  PseudoImage out = PseudoImage::zeros(image.width, image.height);
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) {
      const std::uint16_t q = image.channels == 1 ? image.samples[p] : image.samples[3 * p + c];
      out.at(p, c) = sample_to_unit(q, image.maxval);
    }
  }
  return out;
}

std::string encode_mask_json(const SegMask& mask) {
  nlohmann::json j;
  j["width"] = mask.width;
  j["height"] = mask.height;
  j["labels"] = mask.labels;
  return j.dump() + "\n";
}

SegMask parse_mask_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("mask JSON: ") + e.what(), static_cast<long>(e.byte));
  }
  SegMask mask;
  for (const char* key : {"width", "height", "labels"}) {
    if (!j.contains(key)) throw FormatError(std::string("mask JSON: missing field '") + key + "'");
  }
  try {
    mask.width = j.at("width").get<int>();
    mask.height = j.at("height").get<int>();
    mask.labels = j.at("labels").get<std::vector<std::uint32_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("mask JSON: ") + e.what());
  }
  if (mask.width <= 0 || mask.height <= 0 ||
      mask.labels.size() != static_cast<std::size_t>(mask.width) * mask.height) {
    throw FormatError("mask JSON: field 'labels' must hold width*height entries");
  }
  return mask;
}

}  // namespace cooper
