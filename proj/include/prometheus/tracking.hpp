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

// Per-target trajectories from a cluster labeling, and their scoring against
// ground truth.

#include "prometheus/clustering.hpp"
#include "prometheus/core.hpp"
#include "prometheus/reconstruction.hpp"
#include "prometheus/synth.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace prometheus {

struct TrackSample {
  int frame = 0;
  WorldPoint centroid = WorldPoint::Zero();
  int point_count = 0;
};

struct Trajectory {
  int track_id = 0;
  int cluster_label = 0;
  std::vector<TrackSample> samples;  // strictly increasing frames

  /// Frames between the first and last sample that have no sample.
  std::vector<int> gaps() const {
    std::vector<int> missing;
    for (size_t k = 1; k < samples.size(); ++k)
      for (int f = samples[k - 1].frame + 1; f < samples[k].frame; ++f) missing.push_back(f);
    return missing;
  }
};

/// One trajectory per cluster: the per-frame centroid of its points. Tracks
/// are numbered by first frame, then by cluster label.
inline std::vector<Trajectory> extract_trajectories(const ClusterLabeling& labeling, const SpaceTimeCloud& cloud) {
  require(labeling.labels.size() == cloud.size(), "labeling does not cover the cloud");
  std::vector<Trajectory> tracks;
  for (size_t c = 0; c < labeling.cluster_count(); ++c) {
    Trajectory t;
    t.cluster_label = int(c);
    for (int k : labeling.clusters[c]) {
      const auto& p = cloud.points[size_t(k)];
      if (t.samples.empty() || t.samples.back().frame != p.frame) t.samples.push_back({p.frame, Vec3::Zero(), 0});
      require(t.samples.back().frame == p.frame, "cloud is not frame ordered");
      t.samples.back().centroid += p.position;
      ++t.samples.back().point_count;
    }
    for (auto& s : t.samples) s.centroid /= double(s.point_count);
    if (!t.samples.empty()) tracks.push_back(std::move(t));
  }
  std::stable_sort(tracks.begin(), tracks.end(), [](const Trajectory& a, const Trajectory& b) {
    if (a.samples.front().frame != b.samples.front().frame) return a.samples.front().frame < b.samples.front().frame;
    return a.cluster_label < b.cluster_label;
  });
  for (size_t k = 0; k < tracks.size(); ++k) tracks[k].track_id = int(k);
  return tracks;
}

inline constexpr std::string_view kTracksHeader = "track_id,frame,x,y,z,n_points";

inline void write_tracks(const std::string& path, const std::vector<Trajectory>& tracks) {
  auto out = open_output(path);
  out << kTracksHeader << '\n';
  for (const auto& t : tracks)
    for (const auto& s : t.samples)
      out << t.track_id << ',' << s.frame << ',' << format_double(s.centroid.x()) << ','
          << format_double(s.centroid.y()) << ',' << format_double(s.centroid.z()) << ',' << s.point_count << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

inline std::vector<Trajectory> read_tracks(const std::string& path) {
  std::map<int, Trajectory> by_id;
  read_csv(path, kTracksHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 6) throw Error(ErrorKind::kParse, "expected 6 fields");
    const int id = parse_int<int>(f[0]);
    auto& t = by_id[id];
    t.track_id = id;
    t.cluster_label = id;
    t.samples.push_back({parse_int<int>(f[1]), Vec3(parse_double(f[2]), parse_double(f[3]), parse_double(f[4])),
                         parse_int<int>(f[5])});
  });
  std::vector<Trajectory> out;
  for (auto& [id, t] : by_id) out.push_back(std::move(t));
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation.
//
// Every track sample is assigned to the nearest ground-truth target present
// in its frame, if that target is within match_radius. A track's majority
// target is its match; purity is the share of its samples on that target.
// An identity switch is counted whenever a track's assigned target changes,
// unassigned samples in between being skipped. Coverage is measured per
// ground-truth target over its lifetime, and fragmentation counts the extra
// tracks matched to the same target.

struct TrackScore {
  int track_id = 0;
  int matched_target = -1;
  int samples = 0;
  int assigned_to_match = 0;
  double purity = 0.0;
  double coverage = 0.0;
  double mean_error = 0.0;  // meters, over samples assigned to the match
  int identity_switches = 0;
};

struct TargetScore {
  int target_id = 0;
  int lifetime = 0;
  int matched_tracks = 0;
  double coverage = 0.0;
};

struct EvaluationReport {
  std::vector<TrackScore> tracks;
  std::vector<TargetScore> targets;
  int identity_switches = 0;
  int fragmentation = 0;
  int correct_tracks = 0;

  const TrackScore* best_track_for(int target_id) const {
    const TrackScore* best = nullptr;
    for (const auto& t : tracks)
      if (t.matched_target == target_id && (!best || t.purity > best->purity ||
                                            (t.purity == best->purity && t.coverage > best->coverage)))
        best = &t;
    return best;
  }
};

/// Per-sample assignment: target id or -1.
inline std::vector<int> assign_samples(const Trajectory& track, const std::vector<GroundTruthTrajectory>& truth,
                                       double match_radius) {
  std::vector<int> assigned;
  assigned.reserve(track.samples.size());
  for (const auto& s : track.samples) {
    int best = -1;
    double best_d = match_radius;
    for (const auto& gt : truth) {
      const auto* g = gt.at_frame(s.frame);
      if (!g) continue;
      const double d = (g->position - s.centroid).norm();
      if (d <= best_d && (best < 0 || d < best_d)) {
        best = gt.target_id;
        best_d = d;
      }
    }
    assigned.push_back(best);
  }
  return assigned;
}

inline EvaluationReport evaluate(const std::vector<Trajectory>& tracks, const std::vector<GroundTruthTrajectory>& truth,
                                 double match_radius) {
  require(match_radius > 0, "match_radius must be > 0");
  size_t truth_samples = 0;
  for (const auto& gt : truth) truth_samples += gt.samples.size();
  if (truth_samples == 0) throw Error(ErrorKind::kEmptyGroundTruth, "ground truth is empty");

  EvaluationReport report;
  std::map<int, const GroundTruthTrajectory*> truth_by_id;
  for (const auto& gt : truth) truth_by_id[gt.target_id] = &gt;
  std::map<int, std::vector<char>> covered;  // target -> per-lifetime-frame flag
  for (const auto& gt : truth) covered[gt.target_id].assign(gt.samples.size(), 0);

  for (const auto& track : tracks) {
    TrackScore score;
    score.track_id = track.track_id;
    score.samples = int(track.samples.size());
    const auto assigned = assign_samples(track, truth, match_radius);
    std::map<int, int> votes;
    int last = -1;
    for (int a : assigned) {
      if (a < 0) continue;
      ++votes[a];
      if (last >= 0 && a != last) ++score.identity_switches;
      last = a;
    }
    for (const auto& [target, n] : votes)
      if (n > score.assigned_to_match) {
        score.matched_target = target;
        score.assigned_to_match = n;
      }
    if (score.samples > 0) score.purity = double(score.assigned_to_match) / double(score.samples);
    if (score.matched_target >= 0) {
      const auto* gt = truth_by_id.at(score.matched_target);
      auto& flags = covered[score.matched_target];
      double err = 0.0;
      for (size_t k = 0; k < assigned.size(); ++k) {
        if (assigned[k] != score.matched_target) continue;
        const auto* g = gt->at_frame(track.samples[k].frame);
        err += (g->position - track.samples[k].centroid).norm();
        flags[size_t(track.samples[k].frame - gt->samples.front().frame)] = 1;
      }
      score.mean_error = err / double(score.assigned_to_match);
      score.coverage = double(score.assigned_to_match) / double(gt->samples.size());
    }
    report.identity_switches += score.identity_switches;
    report.tracks.push_back(score);
  }

  for (const auto& gt : truth) {
    TargetScore ts;
    ts.target_id = gt.target_id;
    ts.lifetime = int(gt.samples.size());
    for (const auto& t : report.tracks) ts.matched_tracks += t.matched_target == gt.target_id;
    const auto& flags = covered[gt.target_id];
    if (ts.lifetime > 0)
      ts.coverage = double(std::count(flags.begin(), flags.end(), 1)) / double(ts.lifetime);
    report.fragmentation += std::max(0, ts.matched_tracks - 1);
    report.targets.push_back(ts);
  }
  for (const auto& t : report.tracks) report.correct_tracks += (t.purity == 1.0 && t.coverage >= 0.9);
  return report;
}

inline void write_report(std::ostream& out, const EvaluationReport& report) {
  out << "tracks=" << report.tracks.size() << '\n';
  out << "targets=" << report.targets.size() << '\n';
  out << "identity_switches=" << report.identity_switches << '\n';
  out << "fragmentation=" << report.fragmentation << '\n';
  out << "correct_tracks=" << report.correct_tracks << '\n';
  for (const auto& t : report.tracks)
    out << "track." << t.track_id << "=matched:" << t.matched_target << " purity:" << format_double(t.purity)
        << " coverage:" << format_double(t.coverage) << " mean_error_m:" << format_double(t.mean_error)
        << " switches:" << t.identity_switches << " samples:" << t.samples << '\n';
  for (const auto& t : report.targets)
    out << "target." << t.target_id << "=tracks:" << t.matched_tracks << " coverage:" << format_double(t.coverage)
        << '\n';
}

}  // namespace prometheus
