/*
 * Copyright (c) 2026, The Prometheus Tracker Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include "prometheus/core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace prometheus {

/// Row-major 8-bit raster.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), pixels(size_t(w) * size_t(h), fill) {}

  std::uint8_t& at(int x, int y) { return pixels[size_t(y) * size_t(width) + size_t(x)]; }
  std::uint8_t at(int x, int y) const { return pixels[size_t(y) * size_t(width) + size_t(x)]; }
  bool same_shape(const GrayImage& other) const { return width == other.width && height == other.height; }
  bool operator==(const GrayImage&) const = default;
};

/// One byte per pixel, 0 or 1.
struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryImage() = default;
  BinaryImage(int w, int h) : width(w), height(h), bits(size_t(w) * size_t(h), 0) {}

  bool test(int x, int y) const { return bits[size_t(y) * size_t(width) + size_t(x)] != 0; }
  void set(int x, int y, bool on = true) { bits[size_t(y) * size_t(width) + size_t(x)] = on ? 1 : 0; }
  size_t count() const {
    size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
  bool operator==(const BinaryImage&) const = default;
};

namespace detail {

inline std::string read_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

}  // namespace detail

inline void write_pgm(const std::string& path, const GrayImage& image) {
  auto out = open_output(path);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), std::streamsize(image.pixels.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  if (detail::read_token(in) != "P5") throw Error(ErrorKind::kParse, path + ": not a binary PGM (P5)");
  const int w = parse_int<int>(detail::read_token(in));
  const int h = parse_int<int>(detail::read_token(in));
  const int maxval = parse_int<int>(detail::read_token(in));
  if (w <= 0 || h <= 0 || maxval != 255) throw Error(ErrorKind::kParse, path + ": unsupported PGM header");
  GrayImage image(w, h);
  in.read(reinterpret_cast<char*>(image.pixels.data()), std::streamsize(image.pixels.size()));
  if (in.gcount() != std::streamsize(image.pixels.size())) throw Error(ErrorKind::kIo, path + ": truncated");
  return image;
}

/// Packed bitmap (P4): rows padded to whole bytes, MSB first, 1 = foreground.
inline void write_pbm(const std::string& path, const BinaryImage& mask) {
  auto out = open_output(path);
  out << "P4\n" << mask.width << ' ' << mask.height << '\n';
  const int row_bytes = (mask.width + 7) / 8;
  std::vector<char> row(static_cast<size_t>(row_bytes));
  for (int y = 0; y < mask.height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < mask.width; ++x)
      if (mask.test(x, y)) row[size_t(x / 8)] = char(row[size_t(x / 8)] | (0x80 >> (x % 8)));
    out.write(row.data(), row_bytes);
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

inline BinaryImage read_pbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  if (detail::read_token(in) != "P4") throw Error(ErrorKind::kParse, path + ": not a binary PBM (P4)");
  const int w = parse_int<int>(detail::read_token(in));
  const int h = parse_int<int>(detail::read_token(in));
  if (w <= 0 || h <= 0) throw Error(ErrorKind::kParse, path + ": bad PBM size");
  BinaryImage mask(w, h);
  const int row_bytes = (w + 7) / 8;
  std::vector<unsigned char> row(static_cast<size_t>(row_bytes));
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), row_bytes);
    if (in.gcount() != row_bytes) throw Error(ErrorKind::kIo, path + ": truncated");
    for (int x = 0; x < w; ++x) mask.set(x, y, (row[size_t(x / 8)] >> (7 - x % 8)) & 1);
  }
  return mask;
}

/// `cam{1..3}/frame_%06d.<ext>` relative to a sequence root.
inline std::filesystem::path frame_path(const std::filesystem::path& root, int camera, int frame,
                                        const char* ext) {
  char name[64];
  std::snprintf(name, sizeof(name), "frame_%06d.%s", frame, ext);
  return root / ("cam" + std::to_string(camera + 1)) / name;
}

/// Number of consecutive frames cam{c}/frame_000000.<ext>, frame_000001, ...
inline int count_frames(const std::filesystem::path& root, int camera, const char* ext) {
  int n = 0;
  while (std::filesystem::exists(frame_path(root, camera, n, ext))) ++n;
  return n;
}

}  // namespace prometheus
