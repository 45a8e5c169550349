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

// Foreground extraction: sliding-window temporal median background, absolute
// difference threshold, morphological opening and a small-region filter.

#include "prometheus/core.hpp"
#include "prometheus/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <span>
#include <vector>

namespace prometheus {

struct BackgroundParams {
  int window_frames = 61;
  double threshold = 100.0;  // gray levels
  int denoise_radius = 1;
  int min_component_px = 4;

  void validate() const {
    require(window_frames >= 3 && window_frames % 2 == 1, "background window must be odd and >= 3");
    require(threshold > 0, "foreground threshold must be > 0");
    require(denoise_radius >= 0, "denoise_radius must be >= 0");
    require(min_component_px >= 0, "min_component_px must be >= 0");
  }
};

struct ForegroundMask {
  int camera_index = 0;
  int frame_index = 0;
  BinaryImage bits;

  bool operator==(const ForegroundMask&) const = default;
};

/// Per-pixel temporal median of the window (lower median for even sizes).
inline GrayImage background_model(std::span<const GrayImage* const> window) {
  if (window.empty()) throw Error(ErrorKind::kDimensionMismatch, "background window is empty");
  const GrayImage& first = *window.front();
  for (const GrayImage* img : window)
    if (!img->same_shape(first)) throw Error(ErrorKind::kDimensionMismatch, "background window frames differ in size");
  GrayImage bg(first.width, first.height);
  const size_t n = window.size();
  const size_t mid = (n - 1) / 2;
  std::vector<std::uint8_t> values(n);
  for (size_t i = 0; i < bg.pixels.size(); ++i) {
    for (size_t k = 0; k < n; ++k) values[k] = window[k]->pixels[i];
    std::nth_element(values.begin(), values.begin() + std::ptrdiff_t(mid), values.end());
    bg.pixels[i] = values[mid];
  }
  return bg;
}

inline GrayImage background_model(std::span<const GrayImage> window) {
  std::vector<const GrayImage*> ptrs;
  for (const auto& img : window) ptrs.push_back(&img);
  return background_model(std::span<const GrayImage* const>(ptrs));
}

/// Raw |frame - background| > threshold, before any denoising.
inline BinaryImage threshold_difference(const GrayImage& frame, const GrayImage& background, double threshold) {
  if (!frame.same_shape(background)) throw Error(ErrorKind::kDimensionMismatch, "frame and background differ in size");
  BinaryImage mask(frame.width, frame.height);
  for (size_t i = 0; i < frame.pixels.size(); ++i)
    mask.bits[i] = std::abs(int(frame.pixels[i]) - int(background.pixels[i])) > threshold ? 1 : 0;
  return mask;
}

namespace detail {

inline std::vector<std::array<int, 2>> disc_offsets(int radius) {
  std::vector<std::array<int, 2>> offsets;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) offsets.push_back({dx, dy});
  return offsets;
}

// Pixels outside the image count as background for both operations.
inline BinaryImage morph(const BinaryImage& in, int radius, bool erode) {
  const auto offsets = disc_offsets(radius);
  BinaryImage out(in.width, in.height);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      if (erode && !in.test(x, y)) continue;
      bool result = erode;
      for (const auto& o : offsets) {
        const int xx = x + o[0], yy = y + o[1];
        const bool on = xx >= 0 && yy >= 0 && xx < in.width && yy < in.height && in.test(xx, yy);
        if (erode && !on) {
          result = false;
          break;
        }
        if (!erode && on) {
          result = true;
          break;
        }
      }
      out.set(x, y, result);
    }
  return out;
}

}  // namespace detail

inline BinaryImage morphological_open(const BinaryImage& mask, int radius) {
  if (radius <= 0) return mask;
  return detail::morph(detail::morph(mask, radius, true), radius, false);
}

/// Drops 8-connected regions with fewer than `min_pixels` pixels.
inline BinaryImage remove_small_regions(const BinaryImage& mask, int min_pixels) {
  BinaryImage out = mask;
  if (min_pixels <= 1) return out;
  std::vector<std::uint8_t> visited(mask.bits.size(), 0);
  std::vector<size_t> region, stack;
  for (size_t start = 0; start < mask.bits.size(); ++start) {
    if (!mask.bits[start] || visited[start]) continue;
    region.clear();
    stack.assign(1, start);
    visited[start] = 1;
    while (!stack.empty()) {
      const size_t idx = stack.back();
      stack.pop_back();
      region.push_back(idx);
      const int x = int(idx % size_t(mask.width)), y = int(idx / size_t(mask.width));
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= mask.width || yy >= mask.height) continue;
          const size_t n = size_t(yy) * size_t(mask.width) + size_t(xx);
          if (mask.bits[n] && !visited[n]) {
            visited[n] = 1;
            stack.push_back(n);
          }
        }
    }
    if (region.size() < size_t(min_pixels))
      for (size_t idx : region) out.bits[idx] = 0;
  }
  return out;
}

inline ForegroundMask extract_foreground(const GrayImage& frame, const GrayImage& background,
                                         const BackgroundParams& params, int camera_index = 0, int frame_index = 0) {
  params.validate();
  BinaryImage raw = threshold_difference(frame, background, params.threshold);
  BinaryImage opened = morphological_open(raw, params.denoise_radius);
  return ForegroundMask{camera_index, frame_index, remove_small_regions(opened, params.min_component_px)};
}

/// [first, last) of the window used for frame t: centered, shifted to stay
/// inside the sequence, shortened only when the sequence itself is shorter.
inline std::pair<int, int> window_bounds(int t, int frame_count, int window) {
  if (frame_count <= window) return {0, frame_count};
  int first = t - window / 2;
  first = std::clamp(first, 0, frame_count - window);
  return {first, first + window};
}

namespace detail {

// Per-pixel 256-bin histograms over a sliding frame window. The lower median
// is tracked incrementally, so sliding by one frame costs O(pixels).
class SlidingMedian {
 public:
  SlidingMedian(int width, int height)
      : width_(width), height_(height), hist_(size_t(width) * size_t(height) * 256, 0),
        median_(size_t(width) * size_t(height), 0), below_(size_t(width) * size_t(height), 0) {}

  void add(const GrayImage& img) { update(img, +1); }
  void remove(const GrayImage& img) { update(img, -1); }

  GrayImage median() {
    GrayImage bg(width_, height_);
    const int mid = (count_ - 1) / 2;
    for (size_t i = 0; i < median_.size(); ++i) {
      const std::uint16_t* h = &hist_[i * 256];
      int m = median_[i], below = below_[i];
      while (below > mid) below -= h[--m];
      while (below + h[m] <= mid) below += h[m++];
      median_[i] = std::uint8_t(m);
      below_[i] = std::uint16_t(below);
      bg.pixels[i] = std::uint8_t(m);
    }
    return bg;
  }

 private:
  void update(const GrayImage& img, int delta) {
    if (img.width != width_ || img.height != height_)
      throw Error(ErrorKind::kDimensionMismatch, "background window frames differ in size");
    for (size_t i = 0; i < median_.size(); ++i) {
      const std::uint8_t v = img.pixels[i];
      hist_[i * 256 + v] = std::uint16_t(hist_[i * 256 + v] + delta);
      if (v < median_[i]) below_[i] = std::uint16_t(below_[i] + delta);
    }
    count_ += delta;
  }

  int width_, height_, count_ = 0;
  std::vector<std::uint16_t> hist_;
  std::vector<std::uint8_t> median_;
  std::vector<std::uint16_t> below_;
};

}  // namespace detail

/// Masks for one camera's sequence, in frame order. Produces the same
/// backgrounds as background_model over window_bounds, incrementally.
inline std::vector<ForegroundMask> compute_masks(std::span<const GrayImage> frames, const BackgroundParams& params,
                                                 int camera_index = 0) {
  params.validate();
  std::vector<ForegroundMask> masks;
  if (frames.empty()) return masks;
  masks.reserve(frames.size());
  const int n = int(frames.size());
  detail::SlidingMedian window(frames[0].width, frames[0].height);
  int first = 0, last = 0;
  for (int t = 0; t < n; ++t) {
    const auto [lo, hi] = window_bounds(t, n, params.window_frames);
    for (; last < hi; ++last) window.add(frames[size_t(last)]);
    for (; first < lo; ++first) window.remove(frames[size_t(first)]);
    const GrayImage bg = window.median();
    masks.push_back(extract_foreground(frames[size_t(t)], bg, params, camera_index, t));
  }
  return masks;
}

using MaskSequences = std::array<std::vector<ForegroundMask>, 3>;

inline void write_masks(const std::filesystem::path& out_dir, const MaskSequences& masks) {
  for (int c = 0; c < 3; ++c) {
    std::filesystem::create_directories(out_dir / ("cam" + std::to_string(c + 1)));
    for (const auto& m : masks[c]) write_pbm(frame_path(out_dir, c, m.frame_index, "pbm").string(), m.bits);
  }
}

inline MaskSequences read_masks(const std::filesystem::path& dir) {
  MaskSequences masks;
  for (int c = 0; c < 3; ++c) {
    const int n = count_frames(dir, c, "pbm");
    for (int f = 0; f < n; ++f) masks[c].push_back({c, f, read_pbm(frame_path(dir, c, f, "pbm").string())});
  }
  return masks;
}

inline std::array<std::vector<GrayImage>, 3> read_sequence(const std::filesystem::path& dir) {
  std::array<std::vector<GrayImage>, 3> frames;
  for (int c = 0; c < 3; ++c) {
    const int n = count_frames(dir, c, "pgm");
    if (n == 0) throw Error(ErrorKind::kIo, "no frames found under " + (dir / ("cam" + std::to_string(c + 1))).string());
    for (int f = 0; f < n; ++f) frames[c].push_back(read_pgm(frame_path(dir, c, f, "pgm").string()));
  }
  return frames;
}

/// Reads cam{1..3}/frame_%06d.pgm under `in_dir`, writes the masks as
/// cam{1..3}/frame_%06d.pbm under `out_dir`.
inline MaskSequences run_foreground(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                                    const BackgroundParams& params) {
  params.validate();
  const auto frames = read_sequence(in_dir);
  MaskSequences masks;
  for (int c = 0; c < 3; ++c) masks[c] = compute_masks(frames[c], params, c);
  write_masks(out_dir, masks);
  return masks;
}

}  // namespace prometheus
