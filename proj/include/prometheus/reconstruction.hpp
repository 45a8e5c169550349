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

// Per-frame pixel matching across the three views under the trifocal
// constraint, and the (3D+1) cloud that results from stacking the frames.

#include "prometheus/core.hpp"
#include "prometheus/geometry.hpp"
#include "prometheus/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace prometheus {

struct MatchParams {
  double epipolar_band_px = 1.5;
  double match_tolerance_px = 1.5;
  double max_depth = 50.0;  // meters

  void validate() const {
    require(epipolar_band_px > 0, "epipolar_band_px must be > 0");
    require(match_tolerance_px > 0, "match_tolerance_px must be > 0");
    require(max_depth > 0, "max_depth must be > 0");
  }
};

struct SpaceTimePoint {
  WorldPoint position = WorldPoint::Zero();
  int frame = 0;
  std::array<Vec2, 3> pixels{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  double reprojection_error = 0.0;
};

struct SpaceTimeCloud {
  std::vector<SpaceTimePoint> points;  // ordered by frame
  int first_frame = 0;
  int last_frame = -1;

  bool empty() const { return points.empty(); }
  size_t size() const { return points.size(); }

  /// offsets[f - first_frame] .. offsets[f - first_frame + 1] index the points of frame f.
  std::vector<size_t> frame_offsets() const {
    const int span = std::max(0, last_frame - first_frame + 1);
    std::vector<size_t> offsets(size_t(span) + 1, 0);
    for (const auto& p : points) ++offsets[size_t(p.frame - first_frame) + 1];
    for (size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
    return offsets;
  }
};

namespace detail {

// Foreground pixels of one view bucketed per row, x ascending.
struct RowIndex {
  int width = 0;
  int height = 0;
  std::vector<std::vector<int>> rows;
  std::vector<int> occupied_rows;

  explicit RowIndex(const BinaryImage& mask) : width(mask.width), height(mask.height), rows(size_t(mask.height)) {
    for (int y = 0; y < mask.height; ++y) {
      for (int x = 0; x < mask.width; ++x)
        if (mask.test(x, y)) rows[size_t(y)].push_back(x);
      if (!rows[size_t(y)].empty()) occupied_rows.push_back(y);
    }
  }

  // Visits every pixel within `band` of the metric line, in raster order.
  template <typename Fn>
  void for_each_in_band(const Vec3& line, double band, Fn&& fn) const {
    const double a = line.x(), b = line.y(), c = line.z();
    double y_lo = -std::numeric_limits<double>::infinity(), y_hi = std::numeric_limits<double>::infinity();
    if (std::abs(b) > 1e-12) {
      const double ya = (-c - band) / b, yb = (-c + band) / b;
      const double lo = std::min(ya, yb), hi = std::max(ya, yb);
      // the band's vertical extent over x in [0, width-1]
      const double shift = -a * (width - 1) / b;
      y_lo = std::min(lo, lo + shift);
      y_hi = std::max(hi, hi + shift);
    }
    auto it = std::lower_bound(occupied_rows.begin(), occupied_rows.end(), int(std::max(-1.0, std::floor(y_lo))));
    for (; it != occupied_rows.end() && *it <= y_hi; ++it) {
      const int y = *it;
      const auto& xs = rows[size_t(y)];
      if (std::abs(a) < 1e-12) {
        if (std::abs(b * y + c) > band) continue;
        for (int x : xs) fn(x, y);
        continue;
      }
      double u0 = (-c - b * y - band) / a, u1 = (-c - b * y + band) / a;
      if (u0 > u1) std::swap(u0, u1);
      auto lo = std::lower_bound(xs.begin(), xs.end(), int(std::ceil(u0 - 1e-9)));
      for (; lo != xs.end() && *lo <= u1 + 1e-9; ++lo)
        if (std::abs(a * *lo + b * y + c) <= band) fn(*lo, y);
    }
  }
};

// Nearest foreground pixel to `p` within `radius`; ties go to raster order.
inline bool nearest_foreground(const BinaryImage& mask, const Vec2& p, double radius, Vec2& out) {
  const int x0 = std::max(0, int(std::ceil(p.x() - radius)));
  const int x1 = std::min(mask.width - 1, int(std::floor(p.x() + radius)));
  const int y0 = std::max(0, int(std::ceil(p.y() - radius)));
  const int y1 = std::min(mask.height - 1, int(std::floor(p.y() + radius)));
  double best = radius * radius;
  bool found = false;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if (!mask.test(x, y)) continue;
      const double d2 = (x - p.x()) * (x - p.x()) + (y - p.y()) * (y - p.y());
      if (d2 < best || (!found && d2 <= best)) {
        best = d2;
        out = Vec2(x, y);
        found = true;
      }
    }
  return found;
}

}  // namespace detail

/// All pixel triplets of one frame that satisfy the trifocal constraint,
/// triangulated. View 1 is the pivot; every qualifying triplet is emitted,
/// ghosts included.
inline std::vector<SpaceTimePoint> match_frame(const std::array<const ForegroundMask*, 3>& masks,
                                               const TrifocalTensor& tensor, const Rig& rig,
                                               const MatchParams& params, const GeometryTolerances& tol = {}) {
  params.validate();
  for (int c = 0; c < 3; ++c)
    if (masks[c]->bits.width != rig[c].width || masks[c]->bits.height != rig[c].height)
      throw Error(ErrorKind::kDimensionMismatch, "mask size does not match camera " + std::to_string(c + 1));
  std::vector<SpaceTimePoint> out;
  const int frame = masks[0]->frame_index;
  const BinaryImage& m1 = masks[0]->bits;
  const BinaryImage& m3 = masks[2]->bits;
  if (m1.count() == 0 || masks[1]->bits.count() == 0 || m3.count() == 0) return out;

  const detail::RowIndex view2(masks[1]->bits);
  const double band = params.epipolar_band_px;
  const double gate = params.match_tolerance_px;
  for (int y1 = 0; y1 < m1.height; ++y1)
    for (int x1 = 0; x1 < m1.width; ++x1) {
      if (!m1.test(x1, y1)) continue;
      const Vec2 p1(x1, y1);
      const PointTransfer pivot(tensor, p1, tol);
      if (!pivot.valid()) continue;
      const Vec3 line = epipolar_line(tensor, p1, 1);
      view2.for_each_in_band(line, band, [&](int x2, int y2) {
        const Vec2 p2(x2, y2);
        const auto p3_star = pivot.to_view3(p2);
        Vec2 p3;
        if (!p3_star || !detail::nearest_foreground(m3, *p3_star, gate, p3)) return;
        Triangulation tri;
        try {
          tri = triangulate(rig, {p1, p2, p3}, tol);
        } catch (const Error&) {
          return;
        }
        if (!(tri.reprojection_error <= gate)) return;
        const std::array<Vec2, 3> px{p1, p2, p3};
        for (int c = 0; c < 3; ++c) {
          const double z = rig[c].depth(tri.point);
          if (!(z > 0.0 && z <= params.max_depth)) return;
          const auto uv = project(rig[c], tri.point);
          if (!uv || (*uv - px[c]).norm() > gate) return;
        }
        out.push_back(SpaceTimePoint{tri.point, frame, {p1, p2, p3}, tri.reprojection_error});
      });
    }
  return out;
}

inline std::vector<SpaceTimePoint> match_frame(const std::array<ForegroundMask, 3>& masks, const TrifocalTensor& tensor,
                                               const Rig& rig, const MatchParams& params,
                                               const GeometryTolerances& tol = {}) {
  return match_frame({&masks[0], &masks[1], &masks[2]}, tensor, rig, params, tol);
}

/// Concatenates match_frame over all frames, ordered by frame and then by
/// view-1 raster order.
inline SpaceTimeCloud build_cloud(const MaskSequences& masks, const TrifocalTensor& tensor, const Rig& rig,
                                  const MatchParams& params, const GeometryTolerances& tol = {}) {
  params.validate();
  const size_t n = masks[0].size();
  if (masks[1].size() != n || masks[2].size() != n)
    throw Error(ErrorKind::kFrameRangeMismatch, "camera mask sequences have different lengths");
  SpaceTimeCloud cloud;
  if (n == 0) return cloud;
  for (size_t k = 0; k < n; ++k)
    if (masks[1][k].frame_index != masks[0][k].frame_index || masks[2][k].frame_index != masks[0][k].frame_index)
      throw Error(ErrorKind::kFrameRangeMismatch, "camera mask sequences cover different frames");
  for (size_t k = 1; k < n; ++k)
    if (masks[0][k].frame_index <= masks[0][k - 1].frame_index)
      throw Error(ErrorKind::kFrameRangeMismatch, "mask frames must be increasing");
  cloud.first_frame = masks[0].front().frame_index;
  cloud.last_frame = masks[0].back().frame_index;
  for (size_t k = 0; k < n; ++k) {
    auto pts = match_frame({&masks[0][k], &masks[1][k], &masks[2][k]}, tensor, rig, params, tol);
    cloud.points.insert(cloud.points.end(), pts.begin(), pts.end());
  }
  return cloud;
}

inline constexpr std::string_view kCloudHeader = "frame,x,y,z,err,u1,v1,u2,v2,u3,v3";

inline void write_cloud(const std::string& path, const SpaceTimeCloud& cloud) {
  auto out = open_output(path);
  out << kCloudHeader << '\n';
  std::string line;
  for (const auto& p : cloud.points) {
    line.clear();
    line += std::to_string(p.frame);
    for (double v : {p.position.x(), p.position.y(), p.position.z(), p.reprojection_error}) {
      line += ',';
      line += format_double(v);
    }
    for (const auto& px : p.pixels) {
      line += ',';
      line += format_double(px.x());
      line += ',';
      line += format_double(px.y());
    }
    line += '\n';
    out << line;
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

/// Frame range is taken from the points (empty cloud: [0, -1]).
inline SpaceTimeCloud read_cloud(const std::string& path) {
  SpaceTimeCloud cloud;
  read_csv(path, kCloudHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 11) throw Error(ErrorKind::kParse, "expected 11 fields");
    SpaceTimePoint p;
    p.frame = parse_int<int>(f[0]);
    p.position = Vec3(parse_double(f[1]), parse_double(f[2]), parse_double(f[3]));
    p.reprojection_error = parse_double(f[4]);
    for (int c = 0; c < 3; ++c) p.pixels[size_t(c)] = Vec2(parse_double(f[5 + 2 * c]), parse_double(f[6 + 2 * c]));
    if (!cloud.points.empty() && p.frame < cloud.points.back().frame)
      throw Error(ErrorKind::kParse, "cloud rows must be ordered by frame");
    cloud.points.push_back(p);
  });
  if (!cloud.points.empty()) {
    cloud.first_frame = cloud.points.front().frame;
    cloud.last_frame = cloud.points.back().frame;
  }
  return cloud;
}

}  // namespace prometheus
