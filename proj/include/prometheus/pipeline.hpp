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

// End-to-end orchestration: synthesis (optional), foreground, reconstruction,
// CCL, normalized-cut splitting, trajectories and evaluation, with every
// intermediate persisted under the output directory.
//
// Configuration is a flat text file of `section.key = value` lines; `#`
// starts a comment. Recognized keys:
//
//   run.scenario  run.seed  run.out  run.input  run.rig  run.frames  run.targets
//   scene.sigma_px  scene.peak  scene.background  scene.noise_sigma  scene.target_radius
//   background.window  background.threshold  background.denoise_radius  background.min_component_px
//   match.band  match.tolerance  match.max_depth
//   link.r_static  link.r_dynamic  link.sigma_w
//   ncut.threshold  ncut.min_cluster_points  ncut.max_depth  ncut.eig_tolerance
//   ncut.sweep_candidates  ncut.max_eig_iterations  ncut.dense_limit  ncut.max_component_points
//   eval.match_radius
//   geometry.collinear  geometry.parallel  geometry.transfer
//
// Link radii and the evaluation radius default to 3x / 5x / 3x the blur
// radius of the scene in meters; sigma_w defaults to half of r_static.

#include "prometheus/clustering.hpp"
#include "prometheus/core.hpp"
#include "prometheus/geometry.hpp"
#include "prometheus/graph.hpp"
#include "prometheus/imaging.hpp"
#include "prometheus/reconstruction.hpp"
#include "prometheus/spectral.hpp"
#include "prometheus/synth.hpp"
#include "prometheus/tracking.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace prometheus {

struct PipelineConfig {
  std::string scenario;          // built-in name or ground-truth CSV; empty = use `input`
  std::string input;             // directory with cam{1..3}/frame_*.pgm
  std::string rig_file;          // rig for `input`
  std::string out = "prometheus_out";
  std::uint64_t seed = 1;
  ScenarioOptions scenario_options;

  SceneConfig scene;  // rig is replaced by the scenario's or by rig_file
  BackgroundParams background;
  MatchParams match;
  std::optional<double> r_static, r_dynamic, sigma_w;
  NcutParams ncut;
  std::optional<double> match_radius;
  GeometryTolerances geometry;

  LinkParams link_params(double blur) const {
    LinkParams p = LinkParams::from_blur_radius(blur);
    if (r_static) p.r_static = *r_static;
    if (r_dynamic) p.r_dynamic = *r_dynamic;
    p.sigma_w = sigma_w ? *sigma_w : 0.5 * p.r_static;
    return p;
  }

  double evaluation_radius(double blur) const { return match_radius ? *match_radius : 3.0 * blur; }

  void validate() const {
    require(!scenario.empty() || !input.empty(), "either run.scenario or run.input is required");
    require(scenario.empty() || input.empty(), "run.scenario and run.input are mutually exclusive");
    require(input.empty() || !rig_file.empty(), "run.input needs run.rig");
    background.validate();
    match.validate();
    ncut.validate();
    if (match_radius) require(*match_radius > 0, "eval.match_radius must be > 0");
  }

  /// Applies one `section.key = value` setting.
  void set(const std::string& key, const std::string& value) {
    auto d = [&] { return parse_double(value); };
    auto i = [&] { return parse_int<long long>(value); };
    if (key == "run.scenario") scenario = value;
    else if (key == "run.input") input = value;
    else if (key == "run.rig") rig_file = value;
    else if (key == "run.out") out = value;
    else if (key == "run.seed") seed = parse_int<std::uint64_t>(value);
    else if (key == "run.frames") scenario_options.frames = int(i());
    else if (key == "run.targets") scenario_options.targets = int(i());
    else if (key == "scene.sigma_px") scene.gaussian_sigma_px = d();
    else if (key == "scene.peak") scene.peak_intensity = int(i());
    else if (key == "scene.background") scene.background_intensity = int(i());
    else if (key == "scene.noise_sigma") scene.noise_sigma = d();
    else if (key == "scene.target_radius") scene.target_radius = d();
    else if (key == "background.window") background.window_frames = int(i());
    else if (key == "background.threshold") background.threshold = d();
    else if (key == "background.denoise_radius") background.denoise_radius = int(i());
    else if (key == "background.min_component_px") background.min_component_px = int(i());
    else if (key == "match.band") match.epipolar_band_px = d();
    else if (key == "match.tolerance") match.match_tolerance_px = d();
    else if (key == "match.max_depth") match.max_depth = d();
    else if (key == "link.r_static") r_static = d();
    else if (key == "link.r_dynamic") r_dynamic = d();
    else if (key == "link.sigma_w") sigma_w = d();
    else if (key == "ncut.threshold") ncut.ncut_accept_threshold = d();
    else if (key == "ncut.min_cluster_points") ncut.min_cluster_points = int(i());
    else if (key == "ncut.max_depth") ncut.max_recursion_depth = int(i());
    else if (key == "ncut.eig_tolerance") ncut.eig_tolerance = d();
    else if (key == "ncut.sweep_candidates") ncut.sweep_candidates = int(i());
    else if (key == "ncut.max_eig_iterations") ncut.max_eig_iterations = int(i());
    else if (key == "ncut.dense_limit") ncut.dense_limit = int(i());
    else if (key == "ncut.max_component_points") ncut.max_component_points = size_t(i());
    else if (key == "eval.match_radius") match_radius = d();
    else if (key == "geometry.collinear") geometry.collinear = d();
    else if (key == "geometry.parallel") geometry.parallel_rad = d();
    else if (key == "geometry.transfer") geometry.transfer = d();
    else throw Error(ErrorKind::kParse, "unknown config key '" + key + "'");
  }
};

inline void parse_config(std::istream& in, PipelineConfig& config) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos)
      throw Error(ErrorKind::kParse, "config line " + std::to_string(line_no) + ": expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.find('.') == std::string::npos || value.empty())
      throw Error(ErrorKind::kParse, "config line " + std::to_string(line_no) + ": expected 'section.key = value'");
    try {
      config.set(key, value);
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse, "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  PipelineConfig config;
  parse_config(in, config);
  return config;
}

/// Ordered key=value summary printed at the end of a run.
using Summary = std::vector<std::pair<std::string, std::string>>;

struct PipelineResult {
  Scenario scenario;  // trajectories empty when no ground truth was available
  Rig rig;
  SpaceTimeCloud cloud;
  ClusterLabeling ccl;
  SplitResult split;
  std::vector<Trajectory> tracks;
  std::optional<EvaluationReport> report;
  LinkParams link;
  double blur_radius = 0.0;
  double match_radius = 0.0;
  Summary summary;
};

inline void write_summary(std::ostream& out, const Summary& summary) {
  for (const auto& [k, v] : summary) out << k << '=' << v << '\n';
}

/// Wraps a stage so that its errors name the stage.
template <typename Fn>
auto run_stage(const char* stage, Fn&& fn, std::ostream* log = nullptr) -> decltype(fn()) {
  const auto start = std::chrono::steady_clock::now();
  struct Timer {
    const char* stage;
    std::ostream* log;
    std::chrono::steady_clock::time_point start;
    ~Timer() {
      if (log)
        *log << "[prometheus] stage " << stage << " took "
             << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s" << std::endl;
    }
  } timer{stage, log, start};
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kIo, std::string("stage ") + stage + ": " + e.what());
  }
}

/// Scenario named by `run.scenario` (built-in name, or a ground-truth CSV
/// when a file of that name exists) with the configured scene parameters.
inline Scenario resolve_scenario(const PipelineConfig& config) {
  Scenario s;
  if (std::filesystem::exists(config.scenario)) {
    s = scenario_from_file(config.scenario);
  } else {
    ScenarioOptions o = config.scenario_options;
    o.seed = config.seed;
    s = make_scenario(config.scenario, o);
  }
  const Rig rig = s.scene.rig;
  const int frame_count = s.scene.frame_count;
  s.scene = config.scene;
  s.scene.rig = rig;
  s.scene.frame_count = frame_count;
  return s;
}

/// Blur radius in meters for the configured scene seen through `rig`.
inline double blur_radius(const PipelineConfig& config, const Rig& rig) {
  SceneConfig scene = config.scene;
  scene.rig = rig;
  return world_blur_radius(scene);
}

/// Clusters, splits and extracts tracks from a cloud; shared by `run` and
/// the `cluster` stage so both produce the same bytes.
struct ClusterStageOutput {
  ClusterLabeling ccl;
  SplitResult split;
};

inline ClusterStageOutput cluster_cloud(const SpaceTimeCloud& cloud, const LinkParams& link, const NcutParams& ncut) {
  ClusterStageOutput out;
  out.ccl = connected_components(cloud, link);
  out.split = recursive_split(out.ccl, cloud, link, ncut);
  return out;
}

inline PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path out(config.out);
  fs::create_directories(out);
  PipelineResult result;
  auto note = [&](const std::string& msg) {
    if (log) *log << "[prometheus] " << msg << std::endl;
  };

  std::array<std::vector<GrayImage>, 3> frames;
  run_stage("synth", [&] {
    if (!config.scenario.empty()) {
      result.scenario = resolve_scenario(config);
      const Rig& rig = result.scenario.scene.rig;
      const int frame_count = result.scenario.scene.frame_count;
      result.rig = rig;
      save_rig((out / "rig.txt").string(), rig);
      auto seq = generate_scene(result.scenario.trajectories, result.scenario.scene, config.seed, out / "images");
      frames = std::move(seq.frames);
      note("synthesized " + std::to_string(frame_count) + " frames of scenario " + result.scenario.name);
    } else {
      result.rig = load_rig(config.rig_file);
      frames = read_sequence(config.input);
      save_rig((out / "rig.txt").string(), result.rig);
      const fs::path gt = fs::path(config.input) / "ground_truth.csv";
      result.scenario.scene = config.scene;
      result.scenario.scene.rig = result.rig;
      if (fs::exists(gt)) result.scenario.trajectories = read_ground_truth(gt.string());
    }
    return 0;
  }, log);
  result.blur_radius = blur_radius(config, result.rig);
  result.link = config.link_params(result.blur_radius);
  result.match_radius = config.evaluation_radius(result.blur_radius);

  MaskSequences masks;
  run_stage("foreground", [&] {
    for (int c = 0; c < 3; ++c) masks[c] = compute_masks(frames[c], config.background, c);
    write_masks(out / "masks", masks);
    return 0;
  }, log);
  frames = {};

  run_stage("reconstruct", [&] {
    const TrifocalTensor tensor = compute_trifocal(result.rig, config.geometry);
    result.cloud = build_cloud(masks, tensor, result.rig, config.match, config.geometry);
    write_cloud((out / "cloud.csv").string(), result.cloud);
    note("cloud holds " + std::to_string(result.cloud.size()) + " points");
    return 0;
  }, log);
  masks = {};

  run_stage("cluster", [&] {
    auto stage = cluster_cloud(result.cloud, result.link, config.ncut);
    result.ccl = std::move(stage.ccl);
    result.split = std::move(stage.split);
    write_labels((out / "ccl_labels.csv").string(), result.cloud, result.ccl);
    write_labels((out / "labels.csv").string(), result.cloud, result.split.labeling);
    write_split_audit((out / "splits.csv").string(), result.split.audit);
    for (const auto& w : result.split.warnings) note("warning: " + w);
    return 0;
  }, log);

  run_stage("track", [&] {
    result.tracks = extract_trajectories(result.split.labeling, result.cloud);
    write_tracks((out / "tracks.csv").string(), result.tracks);
    return 0;
  }, log);

  Summary& s = result.summary;
  s.emplace_back("frames", std::to_string(result.cloud.last_frame - result.cloud.first_frame + 1));
  s.emplace_back("points", std::to_string(result.cloud.size()));
  s.emplace_back("ccl_clusters", std::to_string(result.ccl.cluster_count()));
  s.emplace_back("ncut_splits", std::to_string(result.split.accepted_splits()));
  s.emplace_back("clusters", std::to_string(result.split.labeling.cluster_count()));
  s.emplace_back("tracks", std::to_string(result.tracks.size()));
  s.emplace_back("r_static", format_double(result.link.r_static));
  s.emplace_back("r_dynamic", format_double(result.link.r_dynamic));

  if (!result.scenario.trajectories.empty()) {
    run_stage("evaluate", [&] {
      result.report = evaluate(result.tracks, result.scenario.trajectories, result.match_radius);
      auto rep = open_output((out / "report.txt").string());
      write_report(rep, *result.report);
      return 0;
    }, log);
    const auto& r = *result.report;
    double purity_sum = 0.0;
    int matched = 0;
    for (const auto& t : r.tracks)
      if (t.matched_target >= 0) {
        purity_sum += t.purity;
        ++matched;
      }
    s.emplace_back("targets", std::to_string(r.targets.size()));
    s.emplace_back("identity_switches", std::to_string(r.identity_switches));
    s.emplace_back("fragmentation", std::to_string(r.fragmentation));
    s.emplace_back("correct_tracks", std::to_string(r.correct_tracks));
    s.emplace_back("ghost_tracks", std::to_string(int(r.tracks.size()) - matched));
    s.emplace_back("mean_purity", format_double(matched == 0 ? 0.0 : purity_sum / double(matched)));
  }
  {
    auto sum = open_output((out / "summary.txt").string());
    write_summary(sum, s);
  }
  return result;
}

}  // namespace prometheus
