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

#include "prometheus/prometheus.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace prometheus;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> settings;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key/value config file")->check(CLI::ExistingFile);
    app->add_option("--set", settings, "override one setting, section.key=value");
  }

  PipelineConfig load() const {
    PipelineConfig config = config_file.empty() ? PipelineConfig{} : load_config(config_file);
    for (const auto& kv : settings) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::kParse, "--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return config;
  }
};

template <typename T>
void set_if(PipelineConfig& config, const char* key, const std::optional<T>& value) {
  if (!value) return;
  if constexpr (std::is_floating_point_v<T>) config.set(key, format_double(*value));
  else if constexpr (std::is_arithmetic_v<T>) config.set(key, std::to_string(*value));
  else config.set(key, *value);
}

fs::path sibling(const std::string& file, const char* name) { return fs::path(file).parent_path() / name; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prometheus: multi-camera 3D tracking by space-time clustering"};
  app.require_subcommand(1);
  std::string stage = "cli";

  // synth
  Common synth_common;
  std::string synth_scenario, synth_out;
  std::optional<std::uint64_t> synth_seed;
  std::optional<double> synth_noise;
  std::optional<int> synth_frames, synth_targets;
  auto* synth = app.add_subcommand("synth", "render a scenario to PGM frames plus ground truth");
  synth_common.attach(synth);
  synth->add_option("--scenario", synth_scenario, "built-in name or ground-truth CSV")->required();
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "noise seed");
  synth->add_option("--noise-sigma", synth_noise, "sensor noise sigma in gray levels");
  synth->add_option("--frames", synth_frames, "frame count");
  synth->add_option("--targets", synth_targets, "swarm target count");

  // foreground
  Common fg_common;
  std::string fg_in, fg_out;
  std::optional<int> fg_window;
  std::optional<double> fg_threshold;
  auto* fg = app.add_subcommand("foreground", "background subtraction to P4 masks");
  fg_common.attach(fg);
  fg->add_option("--in", fg_in, "frame directory")->required()->check(CLI::ExistingDirectory);
  fg->add_option("--out", fg_out, "mask directory")->required();
  fg->add_option("--window", fg_window, "background window in frames");
  fg->add_option("--threshold", fg_threshold, "difference threshold in gray levels");

  // reconstruct
  Common rec_common;
  std::string rec_masks, rec_rig, rec_out;
  std::optional<double> rec_band, rec_tol;
  auto* rec = app.add_subcommand("reconstruct", "trifocal pixel matching to a space-time cloud");
  rec_common.attach(rec);
  rec->add_option("--masks", rec_masks, "mask directory")->required()->check(CLI::ExistingDirectory);
  rec->add_option("--rig", rec_rig, "rig file")->required()->check(CLI::ExistingFile);
  rec->add_option("--out", rec_out, "cloud CSV")->required();
  rec->add_option("--band", rec_band, "epipolar band in px");
  rec->add_option("--tol", rec_tol, "match tolerance in px");

  // cluster
  Common cl_common;
  std::string cl_cloud, cl_out, cl_rig;
  std::optional<double> cl_rs, cl_rd, cl_sw, cl_thr;
  auto* cl = app.add_subcommand("cluster", "connected components plus normalized-cut splitting");
  cl_common.attach(cl);
  cl->add_option("--cloud", cl_cloud, "cloud CSV")->required()->check(CLI::ExistingFile);
  cl->add_option("--out", cl_out, "labels CSV; ccl_labels.csv and splits.csv go next to it")->required();
  cl->add_option("--rig", cl_rig, "rig file, used to derive default radii")->check(CLI::ExistingFile);
  cl->add_option("--r-static", cl_rs, "static link radius in m");
  cl->add_option("--r-dynamic", cl_rd, "dynamic link radius in m");
  cl->add_option("--sigma-w", cl_sw, "weight scale in m");
  cl->add_option("--ncut-threshold", cl_thr, "accept splits with Ncut below this");

  // track
  std::string tr_cloud, tr_labels, tr_out;
  auto* tr = app.add_subcommand("track", "per-cluster centroid trajectories");
  tr->add_option("--cloud", tr_cloud, "cloud CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--labels", tr_labels, "labels CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "tracks CSV")->required();

  // evaluate
  Common ev_common;
  std::string ev_tracks, ev_truth, ev_rig, ev_out;
  std::optional<double> ev_radius;
  auto* ev = app.add_subcommand("evaluate", "score tracks against ground truth");
  ev_common.attach(ev);
  ev->add_option("--tracks", ev_tracks, "tracks CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--truth", ev_truth, "ground-truth CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--rig", ev_rig, "rig file, used to derive the default match radius")->check(CLI::ExistingFile);
  ev->add_option("--match-radius", ev_radius, "match radius in m");
  ev->add_option("--out", ev_out, "report file (default: stdout)");

  // run
  Common run_common;
  std::optional<std::string> run_scenario, run_out;
  std::optional<std::uint64_t> run_seed;
  auto* run = app.add_subcommand("run", "full pipeline with every intermediate persisted");
  run_common.attach(run);
  run->add_option("--scenario", run_scenario, "built-in name or ground-truth CSV");
  run->add_option("--seed", run_seed, "seed");
  run->add_option("--out", run_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      stage = "synth";
      PipelineConfig config = synth_common.load();
      config.scenario = synth_scenario;
      set_if(config, "run.seed", synth_seed);
      set_if(config, "scene.noise_sigma", synth_noise);
      set_if(config, "run.frames", synth_frames);
      set_if(config, "run.targets", synth_targets);
      const Scenario s = resolve_scenario(config);
      generate_scene(s.trajectories, s.scene, config.seed, synth_out);
      save_rig((fs::path(synth_out) / "rig.txt").string(), s.scene.rig);
      std::cout << "frames=" << s.scene.frame_count << "\ntargets=" << s.trajectories.size() << '\n';
    } else if (*fg) {
      stage = "foreground";
      PipelineConfig config = fg_common.load();
      set_if(config, "background.window", fg_window);
      set_if(config, "background.threshold", fg_threshold);
      config.background.validate();
      const auto masks = run_foreground(fg_in, fg_out, config.background);
      std::cout << "frames=" << masks[0].size() << '\n';
    } else if (*rec) {
      stage = "reconstruct";
      PipelineConfig config = rec_common.load();
      set_if(config, "match.band", rec_band);
      set_if(config, "match.tolerance", rec_tol);
      config.match.validate();
      const Rig rig = load_rig(rec_rig);
      const auto tensor = compute_trifocal(rig, config.geometry);
      const auto cloud = build_cloud(read_masks(rec_masks), tensor, rig, config.match, config.geometry);
      write_cloud(rec_out, cloud);
      std::cout << "points=" << cloud.size() << '\n';
    } else if (*cl) {
      stage = "cluster";
      PipelineConfig config = cl_common.load();
      set_if(config, "link.r_static", cl_rs);
      set_if(config, "link.r_dynamic", cl_rd);
      set_if(config, "link.sigma_w", cl_sw);
      set_if(config, "ncut.threshold", cl_thr);
      config.ncut.validate();
      double blur = 0.0;
      if (!cl_rig.empty()) blur = blur_radius(config, load_rig(cl_rig));
      else if (!config.r_static || !config.r_dynamic)
        throw Error(ErrorKind::kParameterValidation, "--rig is required unless both radii are given");
      const LinkParams link = config.link_params(blur);
      link.validate();
      const auto cloud = read_cloud(cl_cloud);
      const auto out = cluster_cloud(cloud, link, config.ncut);
      write_labels(cl_out, cloud, out.split.labeling);
      write_labels(sibling(cl_out, "ccl_labels.csv").string(), cloud, out.ccl);
      write_split_audit(sibling(cl_out, "splits.csv").string(), out.split.audit);
      for (const auto& w : out.split.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "ccl_clusters=" << out.ccl.cluster_count() << "\nncut_splits=" << out.split.accepted_splits()
                << "\nclusters=" << out.split.labeling.cluster_count() << '\n';
    } else if (*tr) {
      stage = "track";
      const auto cloud = read_cloud(tr_cloud);
      const auto labels = read_labels(tr_labels);
      if (labels.labels.size() != cloud.size())
        throw Error(ErrorKind::kDimensionMismatch, "labels do not cover the cloud");
      const auto tracks = extract_trajectories(labels, cloud);
      write_tracks(tr_out, tracks);
      std::cout << "tracks=" << tracks.size() << '\n';
    } else if (*ev) {
      stage = "evaluate";
      PipelineConfig config = ev_common.load();
      set_if(config, "eval.match_radius", ev_radius);
      double blur = 0.0;
      if (!ev_rig.empty()) blur = blur_radius(config, load_rig(ev_rig));
      else if (!config.match_radius)
        throw Error(ErrorKind::kParameterValidation, "--rig is required unless --match-radius is given");
      const auto report = evaluate(read_tracks(ev_tracks), read_ground_truth(ev_truth), config.evaluation_radius(blur));
      if (ev_out.empty()) {
        write_report(std::cout, report);
      } else {
        auto out = open_output(ev_out);
        write_report(out, report);
      }
    } else if (*run) {
      stage = "run";
      PipelineConfig config = run_common.load();
      set_if(config, "run.scenario", run_scenario);
      set_if(config, "run.seed", run_seed);
      set_if(config, "run.out", run_out);
      const auto result = run_pipeline(config, &std::cerr);
      write_summary(std::cout, result.summary);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << stage << "] " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error [" << stage << "] " << e.what() << '\n';
    return 2;
  }
  return 0;
}
