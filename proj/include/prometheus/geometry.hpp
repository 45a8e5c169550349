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

// Pinhole camera algebra for a three-camera rig: projection, back-projection,
// epipolar lines, the trifocal tensor and point transfer, and triangulation.

#include "prometheus/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>

namespace prometheus {

using WorldPoint = Vec3;

/// Degeneracy thresholds; the defaults are compile-time constants but every
/// entry may be overridden from a config file.
struct GeometryTolerances {
  static constexpr double kDefault = 1e-9;
  double collinear = kDefault;     // relative sine between center baselines
  double parallel_rad = kDefault;  // minimum pairwise ray angle
  double transfer = kDefault;      // relative magnitude for a rank-deficient transfer
};

struct ImagePoint {
  Vec2 uv = Vec2::Zero();
  int camera = 0;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

struct CameraModel {
  double focal_length_px = 1.0;
  Vec2 principal_point = Vec2::Zero();
  Mat3 rotation = Mat3::Identity();  // world -> camera
  Vec3 translation = Vec3::Zero();   // world -> camera
  int width = 1;
  int height = 1;

  void validate() const {
    require(std::isfinite(focal_length_px) && focal_length_px > 0, "focal_length_px must be > 0");
    require(width > 0 && height > 0, "sensor dimensions must be > 0");
    require(principal_point.x() >= 0 && principal_point.x() <= width && principal_point.y() >= 0 &&
                principal_point.y() <= height,
            "principal point must lie inside the sensor");
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    require(ortho < 1e-9, "rotation must be orthonormal");
    require(translation.allFinite(), "translation must be finite");
  }

  Mat3 intrinsics() const {
    Mat3 k = Mat3::Identity();
    k(0, 0) = k(1, 1) = focal_length_px;
    k(0, 2) = principal_point.x();
    k(1, 2) = principal_point.y();
    return k;
  }

  Eigen::Matrix<double, 3, 4> projection_matrix() const {
    Eigen::Matrix<double, 3, 4> rt;
    rt.leftCols<3>() = rotation;
    rt.col(3) = translation;
    return intrinsics() * rt;
  }

  Vec3 center() const { return -rotation.transpose() * translation; }

  double depth(const WorldPoint& point) const { return (rotation * point + translation).z(); }

  bool contains(const Vec2& uv) const {
    return uv.x() >= -0.5 && uv.y() >= -0.5 && uv.x() < width - 0.5 && uv.y() < height - 0.5;
  }

  /// Camera at `position` whose optical axis points at `target`; `up` fixes roll.
  static CameraModel look_at(const Vec3& position, const Vec3& target, const Vec3& up,
                             double focal_length_px, int width, int height) {
    const Vec3 z = (target - position).normalized();
    const Vec3 x = z.cross(up).normalized();
    const Vec3 y = z.cross(x);
    CameraModel cam;
    cam.rotation.row(0) = x.transpose();
    cam.rotation.row(1) = y.transpose();
    cam.rotation.row(2) = z.transpose();
    cam.translation = -cam.rotation * position;
    cam.focal_length_px = focal_length_px;
    cam.principal_point = Vec2(0.5 * width, 0.5 * height);
    cam.width = width;
    cam.height = height;
    return cam;
  }
};

using Rig = std::array<CameraModel, 3>;

/// Pinhole projection; std::nullopt when the point has non-positive depth.
inline std::optional<Vec2> project(const CameraModel& camera, const WorldPoint& point) {
  const Vec3 pc = camera.rotation * point + camera.translation;
  if (!(pc.z() > 0.0)) return std::nullopt;
  return Vec2(camera.focal_length_px * pc.x() / pc.z() + camera.principal_point.x(),
              camera.focal_length_px * pc.y() / pc.z() + camera.principal_point.y());
}

inline Ray back_project(const CameraModel& camera, const Vec2& uv) {
  const Vec3 dir_cam((uv.x() - camera.principal_point.x()) / camera.focal_length_px,
                     (uv.y() - camera.principal_point.y()) / camera.focal_length_px, 1.0);
  return Ray{camera.center(), (camera.rotation.transpose() * dir_cam).normalized()};
}

namespace detail {

inline Vec3 homogeneous(const Vec2& uv) {
  Vec3 x(uv.x(), uv.y(), 1.0);
  return x / x.cwiseAbs().maxCoeff();
}

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

// Scales a line so that (a, b) is unit length: l . (u, v, 1) is then a
// signed pixel distance.
inline Vec3 metric_line(const Vec3& line) {
  const double n = std::hypot(line.x(), line.y());
  return n > 0.0 ? Vec3(line / n) : line;
}

inline Vec3 null_vector(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().col(2);
}

}  // namespace detail

/// F such that the epipolar line in camera `to` of pixel x in camera `from` is F x.
inline Mat3 fundamental_matrix(const CameraModel& from, const CameraModel& to) {
  const Mat3 r = to.rotation * from.rotation.transpose();
  const Vec3 t = to.translation - r * from.translation;
  const Mat3 f = to.intrinsics().inverse().transpose() * detail::skew(t) * r * from.intrinsics().inverse();
  return f / f.cwiseAbs().maxCoeff();
}

/// Three 3x3 slices T_i indexed as T[i](q, r): view-1 coordinate i, view-2
/// line coordinate q, view-3 line coordinate r. Also caches the two
/// fundamental matrices derived from the tensor itself.
struct TrifocalTensor {
  std::array<Mat3, 3> slices{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  Mat3 f21 = Mat3::Zero();
  Mat3 f31 = Mat3::Zero();

  /// x1^i l2_q l3_r T_i^{qr}; zero for a consistent point-line-line triple.
  double incidence(const Vec3& x1, const Vec3& l2, const Vec3& l3) const {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += x1[i] * l2.dot(slices[i] * l3);
    return s;
  }

  /// Sum_i x1^i T_i, the correlation mapping a view-2 line to a view-3 point.
  Mat3 contract(const Vec3& x1) const { return x1[0] * slices[0] + x1[1] * slices[1] + x1[2] * slices[2]; }
};

namespace detail {

inline void derive_fundamentals(TrifocalTensor& t) {
  Mat3 left, right;
  for (int i = 0; i < 3; ++i) {
    left.row(i) = null_vector(t.slices[i].transpose()).transpose();
    right.row(i) = null_vector(t.slices[i]).transpose();
  }
  const Vec3 e2 = null_vector(left);   // epipole of C1 in view 2
  const Vec3 e3 = null_vector(right);  // epipole of C1 in view 3
  Mat3 m2, m3;
  for (int i = 0; i < 3; ++i) {
    m2.col(i) = t.slices[i] * e3;
    m3.col(i) = t.slices[i].transpose() * e2;
  }
  t.f21 = skew(e2) * m2;
  t.f31 = skew(e3) * m3;
  t.f21 /= t.f21.cwiseAbs().maxCoeff();
  t.f31 /= t.f31.cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Analytic trifocal tensor of three cameras. Rejects rigs whose centers are
/// collinear (or coincident) within `tol.collinear`.
inline TrifocalTensor compute_trifocal(const CameraModel& c1, const CameraModel& c2, const CameraModel& c3,
                                       const GeometryTolerances& tol = {}) {
  c1.validate();
  c2.validate();
  c3.validate();
  const Vec3 b12 = c2.center() - c1.center();
  const Vec3 b13 = c3.center() - c1.center();
  const double denom = b12.norm() * b13.norm();
  if (!(denom > 0.0) || b12.cross(b13).norm() <= tol.collinear * denom)
    throw Error(ErrorKind::kDegenerateConfiguration, "camera centers are collinear");

  const auto p1 = c1.projection_matrix();
  const auto p2 = c2.projection_matrix();
  const auto p3 = c3.projection_matrix();
  TrifocalTensor t;
  double largest = 0.0;
  for (int i = 0; i < 3; ++i) {
    Eigen::Matrix<double, 2, 4> a_without_i;
    for (int row = 0, k = 0; row < 3; ++row)
      if (row != i) a_without_i.row(k++) = p1.row(row);
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    for (int q = 0; q < 3; ++q) {
      for (int r = 0; r < 3; ++r) {
        Eigen::Matrix4d m;
        m.topRows<2>() = a_without_i;
        m.row(2) = p2.row(q);
        m.row(3) = p3.row(r);
        t.slices[i](q, r) = sign * m.determinant();
        largest = std::max(largest, std::abs(t.slices[i](q, r)));
      }
    }
  }
  for (auto& s : t.slices) s /= largest;
  detail::derive_fundamentals(t);
  return t;
}

inline TrifocalTensor compute_trifocal(const Rig& rig, const GeometryTolerances& tol = {}) {
  return compute_trifocal(rig[0], rig[1], rig[2], tol);
}

/// Epipolar line in `target_view` of pixel `p` seen in `source_view`
/// (views are 0-based). The line is scaled so that its dot product with a
/// homogeneous pixel (u, v, 1) is the signed distance in pixels.
inline Vec3 epipolar_line(const Rig& rig, const Vec2& p, int source_view, int target_view) {
  require(source_view >= 0 && source_view < 3 && target_view >= 0 && target_view < 3 &&
              source_view != target_view,
          "epipolar_line: bad view indices");
  const Mat3 f = fundamental_matrix(rig[source_view], rig[target_view]);
  return detail::metric_line(f * detail::homogeneous(p));
}

/// Epipolar line in view 2 (target_view = 1) or view 3 (target_view = 2) of a
/// view-1 pixel, from the tensor alone.
inline Vec3 epipolar_line(const TrifocalTensor& tensor, const Vec2& p, int target_view) {
  require(target_view == 1 || target_view == 2, "tensor epipolar_line: target view must be 1 or 2");
  const Mat3& f = target_view == 1 ? tensor.f21 : tensor.f31;
  return detail::metric_line(f * detail::homogeneous(p));
}

/// Pixel distance of `p` from a metric line.
inline double line_distance(const Vec3& line, const Vec2& p) {
  return std::abs(line.x() * p.x() + line.y() * p.y() + line.z());
}

/// Point transfer to view 3 for a fixed view-1 pixel. The view-2 point is
/// turned into the line through it perpendicular to the epipolar line of
/// the view-1 pixel, and that line is pushed through the tensor.
class PointTransfer {
 public:
  PointTransfer(const TrifocalTensor& tensor, const Vec2& p1, const GeometryTolerances& tol = {})
      : tol_(tol.transfer) {
    const Vec3 x1 = detail::homogeneous(p1);
    const Vec3 le = tensor.f21 * x1;
    const double n = std::hypot(le.x(), le.y());
    valid_ = n > tol_ * tensor.f21.norm();
    if (!valid_) return;
    epipolar_ = le / n;
    contracted_ = tensor.contract(x1);
    scale_ = contracted_.norm();
  }

  /// False when p1 sits on the epipole (the camera-1/camera-2 baseline).
  bool valid() const { return valid_; }

  /// std::nullopt when the transfer system is rank-deficient.
  std::optional<Vec2> to_view3(const Vec2& p2) const {
    if (!valid_) return std::nullopt;
    const Vec3 perp(epipolar_.y(), -epipolar_.x(), -p2.x() * epipolar_.y() + p2.y() * epipolar_.x());
    const Vec3 x3 = contracted_.transpose() * perp;
    if (!(std::abs(x3.z()) > tol_ * scale_ * perp.norm())) return std::nullopt;
    return Vec2(x3.x() / x3.z(), x3.y() / x3.z());
  }

 private:
  Mat3 contracted_ = Mat3::Zero();
  Vec3 epipolar_ = Vec3::Zero();
  double scale_ = 0.0;
  double tol_ = GeometryTolerances::kDefault;
  bool valid_ = false;
};

/// View-3 image of the correspondence (p1, p2).
inline Vec2 transfer_point(const TrifocalTensor& tensor, const Vec2& p1, const Vec2& p2,
                           const GeometryTolerances& tol = {}) {
  const PointTransfer transfer(tensor, p1, tol);
  if (!transfer.valid()) throw Error(ErrorKind::kUnstableTransfer, "view-1 point coincides with the epipole");
  const auto p3 = transfer.to_view3(p2);
  if (!p3) throw Error(ErrorKind::kUnstableTransfer, "transferred point is at infinity");
  return *p3;
}

struct Triangulation {
  WorldPoint point = WorldPoint::Zero();
  double reprojection_error = 0.0;  // RMS over views, pixels
};

/// Least-squares point closest to all rays (the multi-ray midpoint).
inline WorldPoint triangulate(std::span<const Ray> rays, const GeometryTolerances& tol = {}) {
  if (rays.size() < 2) throw Error(ErrorKind::kParallelRays, "need at least two rays");
  double widest = 0.0;
  for (size_t i = 0; i < rays.size(); ++i)
    for (size_t j = i + 1; j < rays.size(); ++j) {
      const double s = rays[i].direction.cross(rays[j].direction).norm();
      const double c = rays[i].direction.dot(rays[j].direction);
      widest = std::max(widest, std::atan2(s, std::abs(c)));
    }
  if (!(widest > tol.parallel_rad)) throw Error(ErrorKind::kParallelRays, "all rays are parallel");

  Mat3 a = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (const Ray& ray : rays) {
    const Mat3 proj = Mat3::Identity() - ray.direction * ray.direction.transpose();
    a += proj;
    b += proj * ray.origin;
  }
  return a.ldlt().solve(b);
}

inline double reprojection_rms(const Rig& rig, const WorldPoint& point, const std::array<Vec2, 3>& pixels) {
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto uv = project(rig[c], point);
    if (!uv) return std::numeric_limits<double>::infinity();
    sum += (*uv - pixels[c]).squaredNorm();
  }
  return std::sqrt(sum / 3.0);
}

inline Triangulation triangulate(const Rig& rig, const std::array<Vec2, 3>& pixels,
                                 const GeometryTolerances& tol = {}) {
  const std::array<Ray, 3> rays{back_project(rig[0], pixels[0]), back_project(rig[1], pixels[1]),
                                back_project(rig[2], pixels[2])};
  Triangulation t;
  t.point = triangulate(std::span<const Ray>(rays), tol);
  t.reprojection_error = reprojection_rms(rig, t.point, pixels);
  return t;
}

// ---------------------------------------------------------------------------
// Rig text format, one block per camera:
//
//   camera 1
//   focal_length_px 2000
//   principal_point 320 240
//   rotation r00 r01 r02 r10 r11 r12 r20 r21 r22
//   translation tx ty tz
//   sensor_size 640 480
//
// Values are written in shortest round-trip decimal so a read after a write
// reproduces every double exactly.

inline void write_rig(std::ostream& out, const Rig& rig) {
  out << "# prometheus camera rig\n";
  for (int c = 0; c < 3; ++c) {
    const CameraModel& cam = rig[c];
    out << "camera " << c + 1 << '\n';
    out << "focal_length_px " << format_double(cam.focal_length_px) << '\n';
    out << "principal_point " << format_double(cam.principal_point.x()) << ' '
        << format_double(cam.principal_point.y()) << '\n';
    out << "rotation";
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) out << ' ' << format_double(cam.rotation(r, k));
    out << '\n';
    out << "translation " << format_double(cam.translation.x()) << ' ' << format_double(cam.translation.y())
        << ' ' << format_double(cam.translation.z()) << '\n';
    out << "sensor_size " << cam.width << ' ' << cam.height << '\n';
  }
}

inline Rig read_rig(std::istream& in) {
  Rig rig;
  std::array<int, 3> seen_fields{0, 0, 0};
  int current = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::vector<std::string> values;
    for (std::string v; ls >> v;) values.push_back(v);
    auto expect = [&](size_t n) {
      if (values.size() != n) throw Error(ErrorKind::kParse, "rig: '" + key + "' expects " + std::to_string(n) + " values");
      if (current < 0) throw Error(ErrorKind::kParse, "rig: '" + key + "' before any camera line");
    };
    if (key == "camera") {
      if (values.size() != 1) throw Error(ErrorKind::kParse, "rig: camera expects an index");
      current = parse_int<int>(values[0]) - 1;
      if (current < 0 || current > 2) throw Error(ErrorKind::kParse, "rig: camera index must be 1..3");
      continue;
    }
    CameraModel& cam = rig[current < 0 ? 0 : current];
    if (key == "focal_length_px") {
      expect(1);
      cam.focal_length_px = parse_double(values[0]);
    } else if (key == "principal_point") {
      expect(2);
      cam.principal_point = Vec2(parse_double(values[0]), parse_double(values[1]));
    } else if (key == "rotation") {
      expect(9);
      for (int k = 0; k < 9; ++k) cam.rotation(k / 3, k % 3) = parse_double(values[k]);
    } else if (key == "translation") {
      expect(3);
      cam.translation = Vec3(parse_double(values[0]), parse_double(values[1]), parse_double(values[2]));
    } else if (key == "sensor_size") {
      expect(2);
      cam.width = parse_int<int>(values[0]);
      cam.height = parse_int<int>(values[1]);
    } else {
      throw Error(ErrorKind::kParse, "rig: unknown key '" + key + "'");
    }
    ++seen_fields[current];
  }
  for (int c = 0; c < 3; ++c) {
    if (seen_fields[c] != 5) throw Error(ErrorKind::kParse, "rig: camera " + std::to_string(c + 1) + " incomplete");
    rig[c].validate();
  }
  return rig;
}

inline void save_rig(const std::string& path, const Rig& rig) {
  auto out = open_output(path);
  write_rig(out, rig);
}

inline Rig load_rig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  return read_rig(in);
}

}  // namespace prometheus
