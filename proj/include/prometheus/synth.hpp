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

// Semi-natural test data: trajectory smoothing and frame-rate doubling,
// Gaussian-disc rendering in the three views, canned occlusion scenarios,
// and the ground-truth CSV.

#include "prometheus/core.hpp"
#include "prometheus/geometry.hpp"
#include "prometheus/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace prometheus {

struct TrajectorySample {
  int frame = 0;
  WorldPoint position = WorldPoint::Zero();
};

struct GroundTruthTrajectory {
  int target_id = 0;
  std::vector<TrajectorySample> samples;

  /// Frames must be consecutive (strictly increasing, no gaps).
  void validate() const {
    for (size_t i = 1; i < samples.size(); ++i)
      require(samples[i].frame == samples[i - 1].frame + 1,
              "trajectory " + std::to_string(target_id) + ": frames must be consecutive");
  }

  const TrajectorySample* at_frame(int frame) const {
    if (samples.empty()) return nullptr;
    const long k = long(frame) - samples.front().frame;
    if (k < 0 || k >= long(samples.size())) return nullptr;
    return &samples[size_t(k)];
  }
};

/// Centered moving average; near the ends the window shrinks symmetrically,
/// so the first and last samples are kept as they are.
inline GroundTruthTrajectory smooth_trajectory(const GroundTruthTrajectory& traj, int window = 7) {
  require(window >= 1 && window % 2 == 1, "smoothing window must be odd and >= 1");
  const int n = int(traj.samples.size());
  if (n < window)
    throw Error(ErrorKind::kTooShortTrajectory, "trajectory shorter than the smoothing window");
  const int half = window / 2;
  GroundTruthTrajectory out = traj;
  for (int i = 0; i < n; ++i) {
    const int k = std::min({half, i, n - 1 - i});
    Vec3 sum = Vec3::Zero();
    for (int j = i - k; j <= i + k; ++j) sum += traj.samples[size_t(j)].position;
    out.samples[size_t(i)].position = sum / double(2 * k + 1);
  }
  return out;
}

/// Doubles the frame rate: frame f maps to 2f and midpoints fill the odd frames.
inline GroundTruthTrajectory upsample_double(const GroundTruthTrajectory& traj) {
  const size_t n = traj.samples.size();
  if (n < 2) throw Error(ErrorKind::kTooShortTrajectory, "upsampling needs at least two samples");
  GroundTruthTrajectory out;
  out.target_id = traj.target_id;
  out.samples.reserve(2 * n - 1);
  for (size_t i = 0; i < n; ++i) {
    const auto& s = traj.samples[i];
    out.samples.push_back({2 * s.frame, s.position});
    if (i + 1 < n) {
      const auto& t = traj.samples[i + 1];
      out.samples.push_back({2 * s.frame + 1, 0.5 * (s.position + t.position)});
    }
  }
  return out;
}

struct SceneConfig {
  double target_radius = 0.004;      // meters
  double gaussian_sigma_px = 1.5;
  int peak_intensity = 230;
  int background_intensity = 20;
  double noise_sigma = 3.0;          // gray levels
  int frame_count = 1;
  Rig rig;

  void validate() const {
    require(target_radius > 0, "target_radius must be > 0");
    require(gaussian_sigma_px > 0, "gaussian_sigma_px must be > 0");
    require(peak_intensity >= 0 && peak_intensity <= 255 && background_intensity >= 0 &&
                background_intensity <= 255,
            "intensities must be in 0..255");
    require(peak_intensity > background_intensity, "peak_intensity must exceed background_intensity");
    require(noise_sigma >= 0, "noise_sigma must be >= 0");
    require(frame_count >= 1, "frame_count must be >= 1");
    for (const auto& cam : rig) cam.validate();
  }
};

/// Three cameras five meters from the origin. Cameras 1 and 3 sit 24 degrees
/// apart, camera 2 looks down from the side at right angles to them, so a
/// displacement along the 1/3 viewing direction is nearly invisible in two
/// views while camera 2 resolves depth.
inline Rig default_rig() {
  const Vec3 up(0, 1, 0);
  const double f = 2000.0;
  return Rig{CameraModel::look_at(Vec3(-1.04, 0.25, -4.89), Vec3::Zero(), up, f, 640, 480),
             CameraModel::look_at(Vec3(3.5, 3.5, 0.0), Vec3::Zero(), up, f, 640, 480),
             CameraModel::look_at(Vec3(1.04, 0.35, -4.89), Vec3::Zero(), up, f, 640, 480)};
}

/// Gaussian blur radius (one sigma) expressed in meters at the scene center.
inline double world_blur_radius(const SceneConfig& scene, const WorldPoint& center = WorldPoint::Zero()) {
  double sum = 0.0;
  for (const auto& cam : scene.rig) sum += scene.gaussian_sigma_px * cam.depth(center) / cam.focal_length_px;
  return sum / 3.0;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream per (camera, frame) so frames can render in any order.
inline std::uint64_t derive_seed(std::uint64_t seed, int camera, int frame) {
  return splitmix64(splitmix64(seed ^ (std::uint64_t(std::uint32_t(frame)) << 8)) + std::uint64_t(camera));
}

/// Renders one image per camera. Visible targets add
/// peak * exp(-d^2 / (2 sigma^2)) over the background, overlapping targets
/// combine by per-pixel maximum, then Gaussian sensor noise is added and the
/// result is rounded and clamped to 0..255. Targets whose projected center
/// is behind the camera or off the sensor are not drawn.
inline std::array<GrayImage, 3> render_frame(const SceneConfig& scene, const std::vector<WorldPoint>& positions,
                                             std::uint64_t seed, int frame_index = 0) {
  for (const auto& p : positions) require(p.allFinite(), "render_frame: non-finite target position");
  std::array<GrayImage, 3> images;
  const double sigma = scene.gaussian_sigma_px;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  const int reach = int(std::ceil(5.0 * sigma));
  for (int c = 0; c < 3; ++c) {
    const CameraModel& cam = scene.rig[c];
    std::vector<float> glow(size_t(cam.width) * size_t(cam.height), 0.0f);
    for (const auto& p : positions) {
      const auto uv = project(cam, p);
      if (!uv || !cam.contains(*uv)) continue;
      const int x0 = std::max(0, int(std::floor(uv->x())) - reach);
      const int x1 = std::min(cam.width - 1, int(std::ceil(uv->x())) + reach);
      const int y0 = std::max(0, int(std::floor(uv->y())) - reach);
      const int y1 = std::min(cam.height - 1, int(std::ceil(uv->y())) + reach);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const double d2 = (x - uv->x()) * (x - uv->x()) + (y - uv->y()) * (y - uv->y());
          const float v = float(scene.peak_intensity * std::exp(-d2 * inv_two_sigma2));
          float& g = glow[size_t(y) * size_t(cam.width) + size_t(x)];
          g = std::max(g, v);
        }
    }
    GrayImage& img = images[c];
    img = GrayImage(cam.width, cam.height);
    std::mt19937_64 rng(derive_seed(seed, c, frame_index));
    std::normal_distribution<double> noise(0.0, scene.noise_sigma > 0 ? scene.noise_sigma : 1.0);
    for (size_t i = 0; i < glow.size(); ++i) {
      double value = scene.background_intensity + double(glow[i]);
      if (scene.noise_sigma > 0) value += noise(rng);
      img.pixels[i] = std::uint8_t(std::clamp(std::lround(value), 0L, 255L));
    }
  }
  return images;
}

// ---------------------------------------------------------------------------
// Ground truth CSV: frame,target_id,x,y,z sorted by (frame, target_id).

inline constexpr std::string_view kGroundTruthHeader = "frame,target_id,x,y,z";

inline void write_ground_truth(const std::string& path, const std::vector<GroundTruthTrajectory>& trajectories) {
  std::map<std::pair<int, int>, WorldPoint> rows;
  for (const auto& t : trajectories)
    for (const auto& s : t.samples) rows[{s.frame, t.target_id}] = s.position;
  auto out = open_output(path);
  out << kGroundTruthHeader << '\n';
  for (const auto& [key, p] : rows)
    out << key.first << ',' << key.second << ',' << format_double(p.x()) << ',' << format_double(p.y()) << ','
        << format_double(p.z()) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

inline std::vector<GroundTruthTrajectory> read_ground_truth(const std::string& path) {
  std::map<int, GroundTruthTrajectory> by_id;
  read_csv(path, kGroundTruthHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 5) throw Error(ErrorKind::kParse, "expected 5 fields");
    auto& t = by_id[parse_int<int>(f[1])];
    t.target_id = parse_int<int>(f[1]);
    t.samples.push_back({parse_int<int>(f[0]), Vec3(parse_double(f[2]), parse_double(f[3]), parse_double(f[4]))});
  });
  std::vector<GroundTruthTrajectory> out;
  for (auto& [id, t] : by_id) {
    std::sort(t.samples.begin(), t.samples.end(),
              [](const TrajectorySample& a, const TrajectorySample& b) { return a.frame < b.frame; });
    t.validate();
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenarios.

struct Scenario {
  std::string name;
  SceneConfig scene;
  std::vector<GroundTruthTrajectory> trajectories;
  int key_frame = 0;  // frame that shows the configuration the scenario is named after
};

struct ScenarioOptions {
  int frames = 0;   // 0 = scenario default
  int targets = 0;  // swarm only; 0 = default (42)
  std::uint64_t seed = 1;
};

namespace detail {

inline GroundTruthTrajectory straight_line(int id, const Vec3& at_key, const Vec3& velocity, int key_frame,
                                           int frames) {
  GroundTruthTrajectory t;
  t.target_id = id;
  for (int f = 0; f < frames; ++f) t.samples.push_back({f, at_key + double(f - key_frame) * velocity});
  return t;
}

// Unit vector halfway between the viewing directions of cameras 1 and 3 at p.
inline Vec3 hidden_direction(const Rig& rig, const Vec3& p) {
  return ((p - rig[0].center()).normalized() + (p - rig[2].center()).normalized()).normalized();
}

// Smooth random walk at roughly constant speed, bounced inside a box, then
// smoothed with the 7-point filter and doubled in frame rate.
inline GroundTruthTrajectory swarm_walk(int id, int frames, double half_box, double speed, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::normal_distribution<double> turn(0.0, 0.18);
  const int raw_n = frames / 2 + 2;
  Vec3 p(uni(rng) * half_box * 0.8, uni(rng) * half_box * 0.8, uni(rng) * half_box * 0.8);
  Vec3 dir;
  do {
    dir = Vec3(uni(rng), uni(rng), uni(rng));
  } while (dir.norm() < 0.1 || dir.norm() > 1.0);
  dir.normalize();
  GroundTruthTrajectory raw;
  raw.target_id = id;
  const double raw_step = 2.0 * speed;
  for (int k = 0; k < raw_n; ++k) {
    raw.samples.push_back({k, p});
    dir = (dir + Vec3(turn(rng), turn(rng), turn(rng))).normalized();
    Vec3 next = p + raw_step * dir;
    for (int a = 0; a < 3; ++a)
      if (std::abs(next[a]) > half_box) {
        dir[a] = -dir[a];
        next[a] = p[a] + raw_step * dir[a];
      }
    p = next;
  }
  GroundTruthTrajectory out = upsample_double(smooth_trajectory(raw, 7));
  out.samples.resize(size_t(frames));
  return out;
}

}  // namespace detail

inline std::vector<std::string> scenario_names() {
  return {"fig1a", "fig1b", "fig1c", "fig2", "fig3", "fig5", "swarm", "single"};
}

/// Built-in scenarios (all centered on the world origin, default rig):
///   fig1a  two targets apart in 3D and in every view
///   fig1b  apart in 3D, overlapping in views 1 and 3 at the key frame
///   fig1c  true 3D proximity at the key frame (overlap in all views)
///   fig2   two straight lines crossing in views 1 and 3 only
///   fig3   two straight lines passing within linking range for a few frames
///   fig5   two targets flying side by side for a long stretch
///   swarm  seeded smooth random walks (default 42 targets x 200 frames)
///   single one target on a straight line
inline Scenario make_scenario(const std::string& name, const ScenarioOptions& opt = {}) {
  Scenario s;
  s.name = name;
  s.scene.rig = default_rig();
  const Rig& rig = s.scene.rig;
  // One pixel at the scene center is about 2.5 mm; targets move 1.5-2.5 px per frame.
  const double px = 5.0 / 2000.0;
  auto frames_or = [&](int dflt) { return opt.frames > 0 ? opt.frames : dflt; };

  if (name == "fig1a" || name == "fig1b" || name == "fig1c") {
    const int frames = frames_or(21);
    const int key = frames / 2;
    const Vec3 a(-0.02, 0.01, 0.0);
    Vec3 b;
    if (name == "fig1a") {
      b = a + Vec3(0.09, 0.05, 0.03);
    } else if (name == "fig1b") {
      b = a + 0.045 * detail::hidden_direction(rig, a);
    } else {
      b = a + Vec3(0.004, -0.003, 0.002);
    }
    s.trajectories.push_back(detail::straight_line(0, a, Vec3(1.4, 0.8, 1.2) * px, key, frames));
    s.trajectories.push_back(detail::straight_line(1, b, Vec3(-0.5, 1.8, -0.9) * px, key, frames));
    s.key_frame = key;
  } else if (name == "fig2") {
    const int frames = frames_or(60);
    const int key = frames / 2;
    const Vec3 a(0.0, 0.0, 0.0);
    const Vec3 b = a + 0.045 * detail::hidden_direction(rig, a);
    s.trajectories.push_back(detail::straight_line(0, a, Vec3(1.4, 0.6, 1.0) * px, key, frames));
    s.trajectories.push_back(detail::straight_line(1, b, Vec3(-1.2, 0.9, 1.0) * px, key, frames));
    s.key_frame = key;
  } else if (name == "fig3") {
    const int frames = frames_or(60);
    const int key = frames / 2;
    const Vec3 a(0.0, 0.0, 0.0);
    const Vec3 v = Vec3(1.4, 0.0, 1.4) * px;
    const Vec3 gap = 0.014 * Vec3(-1.0, 1.0, 1.0).normalized();
    s.trajectories.push_back(detail::straight_line(0, a, v, key, frames));
    s.trajectories.push_back(detail::straight_line(1, a + gap, -v, key, frames));
    s.key_frame = key;
  } else if (name == "fig5") {
    const int frames = frames_or(90);
    const int key = frames / 2;
    const int together = 40;
    const Vec3 side(0.0, 0.004, 0.004);
    const Vec3 v_common(1.3 * px, 0.0, 1.3 * px);
    const Vec3 v_apart(0.0, 1.6 * px, 0.4 * px);
    for (int id = 0; id < 2; ++id) {
      GroundTruthTrajectory t;
      t.target_id = id;
      const double sgn = id == 0 ? -1.0 : 1.0;
      for (int f = 0; f < frames; ++f) {
        const int dt = f - key;
        const int outside = std::max(0, std::abs(dt) - together / 2);
        Vec3 p = double(dt) * v_common + sgn * (0.5 * side + double(outside) * v_apart);
        t.samples.push_back({f, p});
      }
      s.trajectories.push_back(std::move(t));
    }
    s.key_frame = key;
  } else if (name == "single") {
    const int frames = frames_or(40);
    s.trajectories.push_back(detail::straight_line(0, Vec3(0.01, -0.01, 0.0), Vec3(1.3, 0.7, 1.2) * px,
                                                   frames / 2, frames));
    s.key_frame = frames / 2;
  } else if (name == "swarm") {
    const int frames = frames_or(200);
    const int targets = opt.targets > 0 ? opt.targets : 42;
    std::mt19937_64 rng(splitmix64(opt.seed));
    std::uniform_real_distribution<double> speed(1.6 * px, 2.4 * px);
    for (int id = 0; id < targets; ++id) {
      const double v = speed(rng);
      s.trajectories.push_back(detail::swarm_walk(id, frames, 0.4, v, rng));
    }
    s.key_frame = 0;
  } else {
    throw Error(ErrorKind::kParameterValidation, "unknown scenario '" + name + "'");
  }
  int last = 0;
  for (const auto& t : s.trajectories) last = std::max(last, t.samples.back().frame);
  s.scene.frame_count = last + 1;
  return s;
}

/// Scenario from a ground-truth CSV rendered with the default scene.
inline Scenario scenario_from_file(const std::string& path) {
  Scenario s;
  s.name = std::filesystem::path(path).stem().string();
  s.scene.rig = default_rig();
  s.trajectories = read_ground_truth(path);
  if (s.trajectories.empty()) throw Error(ErrorKind::kEmptyGroundTruth, path + " holds no samples");
  int last = 0;
  for (const auto& t : s.trajectories) last = std::max(last, t.samples.back().frame);
  s.scene.frame_count = last + 1;
  return s;
}

/// Target positions present at `frame`, in trajectory order.
inline std::vector<WorldPoint> positions_at(const std::vector<GroundTruthTrajectory>& trajectories, int frame) {
  std::vector<WorldPoint> out;
  for (const auto& t : trajectories)
    if (const auto* s = t.at_frame(frame)) out.push_back(s->position);
  return out;
}

struct SceneSequence {
  std::array<std::vector<GrayImage>, 3> frames;  // [camera][frame]
};

/// Renders every frame. Frame f of camera c uses the noise stream
/// derive_seed(seed, c, f).
inline SceneSequence render_scene(const std::vector<GroundTruthTrajectory>& trajectories, const SceneConfig& scene,
                                  std::uint64_t seed) {
  scene.validate();
  for (const auto& t : trajectories) {
    t.validate();
    for (const auto& s : t.samples)
      require(s.frame >= 0 && s.frame < scene.frame_count, "trajectory frame outside [0, frame_count)");
  }
  SceneSequence seq;
  for (auto& cam : seq.frames) cam.resize(size_t(scene.frame_count));
  for (int f = 0; f < scene.frame_count; ++f) {
    auto imgs = render_frame(scene, positions_at(trajectories, f), seed, f);
    for (int c = 0; c < 3; ++c) seq.frames[c][size_t(f)] = std::move(imgs[c]);
  }
  return seq;
}

/// Writes the ground truth first, then cam{1..3}/frame_%06d.pgm.
inline SceneSequence generate_scene(const std::vector<GroundTruthTrajectory>& trajectories, const SceneConfig& scene,
                                    std::uint64_t seed, const std::filesystem::path& out_dir) {
  scene.validate();
  std::filesystem::create_directories(out_dir);
  write_ground_truth((out_dir / "ground_truth.csv").string(), trajectories);
  SceneSequence seq = render_scene(trajectories, scene, seed);
  for (int c = 0; c < 3; ++c) {
    std::filesystem::create_directories(out_dir / ("cam" + std::to_string(c + 1)));
    for (int f = 0; f < scene.frame_count; ++f)
      write_pgm(frame_path(out_dir, c, f, "pgm").string(), seq.frames[c][size_t(f)]);
  }
  return seq;
}

/// Targets that at some frame sit within `occlusion_px` of another target in
/// all three views at once (true 3D proximity at the given resolution).
inline std::set<int> all_camera_occluded_targets(const std::vector<GroundTruthTrajectory>& trajectories,
                                                 const Rig& rig, double occlusion_px) {
  std::set<int> occluded;
  int last = 0;
  for (const auto& t : trajectories)
    if (!t.samples.empty()) last = std::max(last, t.samples.back().frame);
  for (int f = 0; f <= last; ++f) {
    std::vector<std::pair<int, std::array<std::optional<Vec2>, 3>>> seen;
    for (const auto& t : trajectories)
      if (const auto* s = t.at_frame(f))
        seen.push_back({t.target_id, {project(rig[0], s->position), project(rig[1], s->position),
                                      project(rig[2], s->position)}});
    for (size_t i = 0; i < seen.size(); ++i)
      for (size_t j = i + 1; j < seen.size(); ++j) {
        bool all = true;
        for (int c = 0; c < 3 && all; ++c) {
          const auto& a = seen[i].second[c];
          const auto& b = seen[j].second[c];
          all = a && b && (*a - *b).norm() < occlusion_px;
        }
        if (all) {
          occluded.insert(seen[i].first);
          occluded.insert(seen[j].first);
        }
      }
  }
  return occluded;
}

}  // namespace prometheus
