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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Usage: acceptance [--work DIR] [--only N]

#include "prometheus/prometheus.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace prometheus {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct Suite {
  fs::path work;
  std::vector<double> accepted_residuals;  // from the end-to-end runs
  double eig_tolerance = NcutParams{}.eig_tolerance;
};

PipelineResult run_scenario(const std::string& name, const fs::path& out, std::uint64_t seed = 1) {
  PipelineConfig config;
  config.scenario = name;
  config.seed = seed;
  config.out = out.string();
  fs::remove_all(out);
  return run_pipeline(config);
}

void collect_residuals(Suite& suite, const SplitResult& split) {
  for (const auto& r : split.audit)
    if (r.accepted) suite.accepted_residuals.push_back(r.residual);
}

// 1. Projection, triangulation and transfer on random points.
Outcome geometry_correctness(Suite&) {
  Clock clock;
  const Rig rig = default_rig();
  const TrifocalTensor tensor = compute_trifocal(rig);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double worst_tri = 0.0, worst_transfer = 0.0;
  int visible = 0;
  for (int k = 0; k < 10000; ++k) {
    const Vec3 p(u(rng), u(rng), u(rng));
    std::array<Vec2, 3> px;
    bool ok = true;
    for (int c = 0; c < 3; ++c) {
      const auto uv = project(rig[size_t(c)], p);
      if (!uv) ok = false;
      else px[size_t(c)] = *uv;
    }
    if (!ok) continue;
    ++visible;
    worst_tri = std::max(worst_tri, (triangulate(rig, px).point - p).norm());
    worst_transfer = std::max(worst_transfer, (transfer_point(tensor, px[0], px[1]) - px[2]).norm());
  }
  const double t = clock.seconds();
  return {visible == 10000 && worst_tri < 1e-9 && worst_transfer < 1e-6 && t < 5.0,
          std::to_string(visible) + " points, max triangulation error " + fmt(worst_tri) + " m, max transfer error " +
              fmt(worst_transfer) + " px, " + fmt(t) + " s"};
}

// Spatial clusters among the points of one frame, linked at r_static.
size_t frame_clusters(const SpaceTimeCloud& cloud, int frame, double r_static) {
  std::vector<int> members;
  for (size_t k = 0; k < cloud.size(); ++k)
    if (cloud.points[k].frame == frame) members.push_back(int(k));
  UnionFind uf(members.size());
  for (size_t a = 0; a < members.size(); ++a)
    for (size_t b = a + 1; b < members.size(); ++b)
      if ((cloud.points[size_t(members[a])].position - cloud.points[size_t(members[b])].position).norm() <= r_static)
        uf.unite(int(a), int(b));
  size_t roots = 0;
  for (size_t k = 0; k < members.size(); ++k) roots += uf.find(int(k)) == int(k);
  return roots;
}

// Key-frame cloud of a scenario: background from the window around the key
// frame, masks and matches for that frame only. Masks and cloud go to `dir`.
std::pair<SpaceTimeCloud, double> key_frame_cloud(const std::string& name, const fs::path& dir) {
  const Scenario s = make_scenario(name);
  const auto seq = render_scene(s.trajectories, s.scene, 1);
  const BackgroundParams bg;
  const int key = s.key_frame;
  const auto [lo, hi] = window_bounds(key, s.scene.frame_count, bg.window_frames);
  std::array<ForegroundMask, 3> masks;
  for (int c = 0; c < 3; ++c) {
    const std::span<const GrayImage> frames(seq.frames[size_t(c)]);
    const GrayImage background = background_model(frames.subspan(size_t(lo), size_t(hi - lo)));
    masks[size_t(c)] = extract_foreground(frames[size_t(key)], background, bg, c, key);
    fs::create_directories(frame_path(dir, c, key, "pbm").parent_path());
    write_pbm(frame_path(dir, c, key, "pbm").string(), masks[size_t(c)].bits);
  }
  SpaceTimeCloud cloud;
  cloud.points = match_frame(masks, compute_trifocal(s.scene.rig), s.scene.rig, MatchParams{});
  cloud.first_frame = cloud.last_frame = key;
  write_cloud((dir / "cloud.csv").string(), cloud);
  return {cloud, LinkParams::from_blur_radius(world_blur_radius(s.scene)).r_static};
}

// 2. Key-frame scenarios fig1a, fig1b, fig1c.
Outcome figure_one(Suite&, const fs::path& dir) {
  Clock clock;
  const std::array<std::pair<const char*, size_t>, 3> expected{{{"fig1a", 2}, {"fig1b", 2}, {"fig1c", 1}}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, want] : expected) {
    fs::remove_all(dir / name);
    const auto [cloud, r_static] = key_frame_cloud(name, dir / name);
    const size_t got = frame_clusters(cloud, cloud.first_frame, r_static);
    pass = pass && got == want;
    detail += std::string(name) + "=" + std::to_string(got) + " (want " + std::to_string(want) + ", " +
              std::to_string(cloud.size()) + " points) ";
  }
  const double t = clock.seconds();
  return {pass && t < 10.0, detail + fmt(t) + " s"};
}

// 3. fig2, optical occlusion in two views.
Outcome figure_two(Suite& suite, const fs::path& dir) {
  Clock clock;
  const auto r = run_scenario("fig2", dir);
  const double t = clock.seconds();
  collect_residuals(suite, r.split);
  const auto& rep = *r.report;
  bool pure = true;
  for (const auto& tr : rep.tracks) pure = pure && tr.purity == 1.0;
  const bool pass = r.tracks.size() == 2 && pure && rep.identity_switches == 0 && r.split.accepted_splits() == 0 &&
                    t < 30.0;
  return {pass, std::to_string(r.tracks.size()) + " tracks, all purity 1: " + (pure ? "yes" : "no") + ", " +
                    std::to_string(rep.identity_switches) + " switches, " +
                    std::to_string(r.split.accepted_splits()) + " splits, " + fmt(t) + " s"};
}

// 4. fig3, brief proximity in all views.
Outcome figure_three(Suite& suite, const fs::path& dir) {
  Clock clock;
  const auto r = run_scenario("fig3", dir);
  const double t = clock.seconds();
  collect_residuals(suite, r.split);
  const auto& rep = *r.report;
  bool pure = true;
  std::string purities;
  for (const auto& tr : rep.tracks) {
    pure = pure && tr.purity >= 0.95;
    purities += fmt(tr.purity, 4) + " ";
  }
  const bool pass = r.ccl.cluster_count() == 1 && r.split.accepted_splits() == 1 && r.tracks.size() == 2 && pure &&
                    rep.identity_switches == 0 && t < 60.0;
  return {pass, "CCL " + std::to_string(r.ccl.cluster_count()) + ", " + std::to_string(r.split.accepted_splits()) +
                    " splits, " + std::to_string(r.tracks.size()) + " tracks, purity " + purities + ", " +
                    std::to_string(rep.identity_switches) + " switches, " + fmt(t) + " s"};
}

// Pixel distance at which two equal blobs merge in a mask: twice the
// radius where the rendered profile falls to the foreground threshold.
double occlusion_px(const SceneConfig& scene, const BackgroundParams& bg) {
  return 2.0 * scene.gaussian_sigma_px * std::sqrt(2.0 * std::log(double(scene.peak_intensity) / bg.threshold));
}

// 5. Swarm.
Outcome swarm(Suite& suite, const fs::path& dir) {
  Clock clock;
  const auto r = run_scenario("swarm", dir);
  const double t = clock.seconds();
  collect_residuals(suite, r.split);
  const double px = occlusion_px(r.scenario.scene, BackgroundParams{});
  const auto occluded = all_camera_occluded_targets(r.scenario.trajectories, r.rig, px);
  const auto& rep = *r.report;
  std::vector<int> failed;
  for (const auto& gt : r.scenario.trajectories) {
    if (occluded.count(gt.target_id)) continue;
    bool covered = false;
    for (const auto& tr : rep.tracks)
      covered = covered || (tr.matched_target == gt.target_id && tr.purity == 1.0 && tr.coverage >= 0.9);
    if (!covered) failed.push_back(gt.target_id);
  }
  std::string detail = std::to_string(r.scenario.trajectories.size()) + " targets, " +
                       std::to_string(occluded.size()) + " all-camera occluded at " + fmt(px) + " px, " +
                       std::to_string(r.ccl.cluster_count()) + " CCL clusters, " +
                       std::to_string(r.split.accepted_splits()) + " splits, " + fmt(t) + " s";
  if (!failed.empty()) {
    detail += "; not covered by a pure track:";
    for (int id : failed) {
      const auto* best = rep.best_track_for(id);
      detail += " " + std::to_string(id) + (best ? "(purity " + fmt(best->purity, 4) + ")" : "(no track)");
    }
  }
  std::cout << "  swarm: Ncut splitting outcome on all-camera occluded targets (reported, not asserted):\n";
  for (int id : occluded) {
    const auto* best = rep.best_track_for(id);
    std::cout << "    target " << id << ": ";
    if (best)
      std::cout << "best track " << best->track_id << " purity " << fmt(best->purity, 4) << " coverage "
                << fmt(best->coverage, 4) << '\n';
    else
      std::cout << "no matching track\n";
  }
  return {failed.empty() && t < 600.0, detail};
}

// Component labels by breadth-first search over an edge list.
std::vector<int> bfs_labels(size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[size_t(e.i)].push_back(e.j);
    adj[size_t(e.j)].push_back(e.i);
  }
  std::vector<int> label(n, -1);
  int next = 0;
  for (size_t s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    std::queue<int> q;
    q.push(int(s));
    label[s] = next;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[size_t(u)])
        if (label[size_t(v)] < 0) {
          label[size_t(v)] = next;
          q.push(v);
        }
    }
    ++next;
  }
  return label;
}

std::vector<Edge> random_edges(std::mt19937_64& rng, size_t n, size_t m) {
  std::vector<Edge> edges;
  std::set<std::pair<int, int>> seen;
  std::uniform_int_distribution<int> node(0, int(n) - 1);
  while (edges.size() < m) {
    int a = node(rng), b = node(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.insert({a, b}).second) edges.push_back({a, b, 1.0});
  }
  return edges;
}

// 6. Union-find against BFS, and linear scaling.
Outcome ccl_oracle(Suite&) {
  std::mt19937_64 rng(6);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng() % 1000;
    const size_t max_m = std::min<size_t>(n * (n - 1) / 2, 2 * n);
    const size_t m = max_m == 0 ? 0 : rng() % (max_m + 1);
    const auto edges = random_edges(rng, n, m);
    const auto uf = connected_components(SpaceTimeGraph::from_edges(n, edges));
    agree += uf == ClusterLabeling::from_labels(bfs_labels(n, edges));
  }

  const auto slope = [](const std::vector<std::pair<double, double>>& samples) {
    double mx = 0.0, my = 0.0;
    for (const auto& [m, t] : samples) {
      mx += std::log(m) / double(samples.size());
      my += std::log(t) / double(samples.size());
    }
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [m, t] : samples) {
      sxy += (std::log(m) - mx) * (std::log(t) - my);
      sxx += (std::log(m) - mx) * (std::log(m) - mx);
    }
    return sxy / sxx;
  };
  const auto best_time = [](size_t work, const std::function<size_t()>& fn) {
    const int reps = int(std::max<size_t>(3, 4000000 / work));
    double best = std::numeric_limits<double>::infinity();
    for (int round = 0; round < 5; ++round) {
      Clock clock;
      size_t sink = 0;
      for (int k = 0; k < reps; ++k) sink += fn();
      best = std::min(best, clock.seconds() / reps);
      if (sink == 0) best = std::numeric_limits<double>::quiet_NaN();
    }
    return best;
  };

  // The pipeline's CCL: streaming links over space-time clouds of five
  // jittered tubes, timed against the number of links.
  SceneConfig scene;
  scene.rig = default_rig();
  const LinkParams link = LinkParams::from_blur_radius(world_blur_radius(scene));
  std::normal_distribution<double> jitter(0.0, 0.001);
  std::vector<std::pair<double, double>> cloud_samples;
  std::string cloud_timings;
  for (const int frames : {3, 10, 30, 100, 250}) {
    SpaceTimeCloud cloud;
    for (int f = 0; f < frames; ++f)
      for (int t = 0; t < 5; ++t)
        for (int k = 0; k < 8; ++k) {
          SpaceTimePoint p;
          p.frame = f;
          p.position = Vec3(0.05 * t + 0.002 * f, 0.001 * f, 0.0) + Vec3(jitter(rng), jitter(rng), jitter(rng));
          cloud.points.push_back(p);
        }
    cloud.first_frame = 0;
    cloud.last_frame = frames - 1;
    size_t links = 0;
    for_each_link(cloud, all_members(cloud), link, [&](size_t, size_t, double) { ++links; });
    const double t = best_time(links, [&] { return connected_components(cloud, link).cluster_count(); });
    cloud_samples.emplace_back(double(links), t);
    cloud_timings += std::to_string(links) + ":" + fmt(t * 1e6) + "us ";
  }

  // Stored graphs with uniformly random edges, reported only: the random
  // access pattern measures the cache hierarchy as much as the algorithm.
  std::vector<std::pair<double, double>> random_samples;
  for (const size_t m : {1000, 3000, 10000, 30000, 100000}) {
    const auto graph = SpaceTimeGraph::from_edges(m, random_edges(rng, m, m));
    random_samples.emplace_back(double(m), best_time(m, [&] { return connected_components(graph).cluster_count(); }));
  }
  const double exponent = slope(cloud_samples);
  const bool in_range = cloud_samples.front().first <= 2000 && cloud_samples.back().first >= 100000;
  return {agree == 100 && in_range && exponent <= 1.15,
          std::to_string(agree) + "/100 graphs agree with BFS, scaling exponent " + fmt(exponent) + " over links (" +
              cloud_timings + "), " + fmt(slope(random_samples)) + " on stored uniformly random graphs (not asserted)"};
}

// Minimum Ncut over every bipartition.
double exhaustive_min_ncut(const SpaceTimeGraph& g) {
  const size_t n = g.node_count();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << (n - 1)); ++mask) {
    double cut = 0.0, assoc_a = 0.0, total = 0.0;
    for (size_t u = 0; u < n; ++u) {
      const bool in_a = (mask >> u) & 1u;
      auto nb = g.neighbors(u);
      auto w = g.weights(u);
      for (size_t p = 0; p < nb.size(); ++p) {
        total += w[p];
        if (in_a) assoc_a += w[p];
        if (in_a != bool((mask >> nb[p]) & 1u)) cut += 0.5 * w[p];
      }
    }
    const double assoc_b = total - assoc_a;
    if (assoc_a > 0 && assoc_b > 0) best = std::min(best, cut / assoc_a + cut / assoc_b);
  }
  return best;
}

void add_clique(std::vector<Edge>& edges, int first, int size, double w) {
  for (int i = first; i < first + size; ++i)
    for (int j = i + 1; j < first + size; ++j) edges.push_back({i, j, w});
}

// Tube of `frames` x `width` nodes linked within and across consecutive frames.
void add_tube(std::vector<Edge>& edges, int first, int count, int width, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> w(lo, hi);
  for (int a = 0; a < count; ++a)
    for (int b = a + 1; b < count; ++b) {
      const int fa = a / width, fb = b / width;
      if (fb - fa <= 1) edges.push_back({first + a, first + b, w(rng)});
    }
}

std::vector<SpaceTimeGraph> curated_suite() {
  std::vector<SpaceTimeGraph> suite;
  std::mt19937_64 rng(7);
  for (const auto& [a, b, bridge] : std::vector<std::tuple<int, int, double>>{
           {5, 5, 0.01}, {7, 7, 0.1}, {4, 9, 0.05}, {6, 8, 1.0}, {3, 3, 0.2}, {6, 6, 0.5}}) {
    std::vector<Edge> e;
    add_clique(e, 0, a, 1.0);
    add_clique(e, a, b, 1.0);
    e.push_back({a - 1, a, bridge});
    suite.push_back(SpaceTimeGraph::from_edges(size_t(a + b), e));
  }
  for (int n : {8, 12, 14}) {
    std::vector<Edge> path;
    for (int i = 0; i + 1 < n; ++i) path.push_back({i, i + 1, 1.0});
    suite.push_back(SpaceTimeGraph::from_edges(size_t(n), path));
  }
  {
    std::vector<Edge> grid;
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 4; ++x) {
        if (x + 1 < 4) grid.push_back({y * 4 + x, y * 4 + x + 1, 1.0});
        if (y + 1 < 3) grid.push_back({y * 4 + x, (y + 1) * 4 + x, 1.0});
      }
    suite.push_back(SpaceTimeGraph::from_edges(12, grid));
  }
  {
    std::vector<Edge> ring;
    for (int i = 0; i < 14; ++i) {
      const int j = (i + 1) % 14;
      ring.push_back({std::min(i, j), std::max(i, j), i % 7 == 3 ? 0.05 : 1.0});
    }
    suite.push_back(SpaceTimeGraph::from_edges(14, ring));
  }
  for (int k = 0; k < 6; ++k) {
    std::vector<Edge> tubes;
    add_tube(tubes, 0, 7, 2, rng, 0.5, 1.0);
    add_tube(tubes, 7, 7, 2, rng, 0.5, 1.0);
    tubes.push_back({6, 7, 0.02 * (k + 1)});
    suite.push_back(SpaceTimeGraph::from_edges(14, tubes));
  }
  return suite;
}

// 7. Sweep against the exhaustive optimum, and eigenpair residuals.
Outcome ncut_certification(Suite& suite) {
  Clock clock;
  NcutParams params;
  params.min_cluster_points = 2;
  const auto graphs = curated_suite();
  bool bounded = true;
  double worst_ratio = 0.0;
  for (const auto& g : graphs) {
    const auto pair = fiedler_vector(g, params);
    const auto part = sweep_partition(g, pair.vector, params.sweep_candidates);
    const double exact = exhaustive_min_ncut(g);
    if (!part) {
      bounded = false;
      continue;
    }
    bounded = bounded && part->ncut >= exact - 1e-12;
    worst_ratio = std::max(worst_ratio, part->ncut / exact);
  }
  // accepted splits in the suite itself, accepting any candidate
  NcutParams loose = params;
  loose.ncut_accept_threshold = 1.0;
  std::vector<double> residuals = suite.accepted_residuals;
  for (const auto& g : graphs) {
    const auto split = recursive_split(ClusterLabeling::from_labels(std::vector<int>(g.node_count(), 0)), g, loose);
    for (const auto& r : split.audit)
      if (r.accepted) residuals.push_back(r.residual);
  }
  const double worst_residual = residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
  const double t = clock.seconds();
  return {bounded && worst_ratio <= 1.5 && worst_residual <= suite.eig_tolerance && t < 60.0,
          std::to_string(graphs.size()) + " graphs, sweep >= exhaustive: " + (bounded ? "yes" : "no") +
              ", worst ratio " + fmt(worst_ratio, 4) + ", " + std::to_string(residuals.size()) +
              " accepted splits, worst residual " + fmt(worst_residual) + ", " + fmt(t) + " s"};
}

// 8. Two tubes joined by weak bridges.
Outcome balance(Suite&) {
  std::mt19937_64 rng(8);
  const int instances = 200;
  int exact = 0, accepted = 0;
  for (int k = 0; k < instances; ++k) {
    const int na = 10 + int(rng() % 191), nb = 10 + int(rng() % 191);
    const int wa = 2 + int(rng() % 3), wb = 2 + int(rng() % 3);
    std::vector<Edge> edges;
    add_tube(edges, 0, na, wa, rng, 0.5, 1.0);
    add_tube(edges, na, nb, wb, rng, 0.5, 1.0);
    std::uniform_real_distribution<double> ratio(100.0, 1000.0);
    const int bridges = 1 + int(rng() % 5);
    std::set<std::pair<int, int>> used;
    while (int(used.size()) < bridges) {
      const int a = int(rng() % std::uint64_t(na)), b = na + int(rng() % std::uint64_t(nb));
      if (used.insert({a, b}).second) edges.push_back({a, b, 0.5 / ratio(rng)});
    }
    const auto g = SpaceTimeGraph::from_edges(size_t(na + nb), edges);
    const auto out = spectral_bipartition(g, NcutParams{});
    accepted += out.split;
    if (!out.best) continue;
    auto a = out.best->side_a;
    if (a.empty() || a.front() != 0) a = out.best->side_b;
    std::vector<int> want(static_cast<size_t>(na));
    std::iota(want.begin(), want.end(), 0);
    exact += a == want;
  }
  const double rate = double(exact) / instances;
  return {rate >= 0.95, std::to_string(exact) + "/" + std::to_string(instances) + " recovered exactly (" +
                            fmt(100 * rate) + "%), " + std::to_string(accepted) + " accepted at the default threshold"};
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  std::sort(files.begin(), files.end());
  return files;
}

// 9. Reruns of 2-5 are byte-identical to the first runs.
Outcome determinism(Suite& suite, const std::vector<std::pair<std::string, fs::path>>& first) {
  size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& [name, dir] : first) {
    if (!fs::exists(dir)) {
      differing.push_back(name + ": no first run");
      continue;
    }
    const fs::path again = suite.work / "rerun" / name;
    if (name == "fig1") {
      Suite scratch = suite;
      figure_one(scratch, again);
    } else {
      run_scenario(name, again);
    }
    const auto a = files_under(dir), b = files_under(again);
    if (a != b) differing.push_back(name + ": file lists differ");
    for (const auto& f : a) {
      ++compared;
      if (slurp(dir / f) != slurp(again / f)) differing.push_back(name + "/" + f.string());
    }
  }
  std::string detail = std::to_string(compared) + " files compared";
  for (const auto& d : differing) detail += "; differs: " + d;
  return {differing.empty() && compared > 0, detail};
}

// 10. Long side-by-side flight, characterization only.
Outcome figure_five(Suite& suite, const fs::path& dir) {
  const auto r = run_scenario("fig5", dir);
  collect_residuals(suite, r.split);
  const auto& rep = *r.report;
  int following = 0;
  for (const auto& gt : r.scenario.trajectories) {
    const auto* best = rep.best_track_for(gt.target_id);
    if (best && best->purity >= 0.95 && best->coverage >= 0.9) ++following;
  }
  std::string kind;
  if (r.split.accepted_splits() == 0) kind = "no cut (one merged track)";
  else if (following == int(r.scenario.trajectories.size())) kind = "longitudinal cut (one track per target)";
  else kind = "transverse cut (tracks split in time)";
  std::string detail = kind + ": " + std::to_string(r.ccl.cluster_count()) + " CCL clusters, " +
                       std::to_string(r.split.accepted_splits()) + " splits, " + std::to_string(r.tracks.size()) +
                       " tracks;";
  for (const auto& tr : rep.tracks)
    detail += " track " + std::to_string(tr.track_id) + "->" + std::to_string(tr.matched_target) + " purity " +
              fmt(tr.purity, 4) + " coverage " + fmt(tr.coverage, 4) + ";";
  return {true, detail};
}

}  // namespace
}  // namespace prometheus

int main(int argc, char** argv) {
  using namespace prometheus;
  fs::path work = fs::temp_directory_path() / "prometheus_acceptance";
  int only = 0;
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--work" && k + 1 < argc) work = argv[++k];
    else if (arg == "--only" && k + 1 < argc) only = std::stoi(argv[++k]);
    else {
      std::cerr << "usage: acceptance [--work DIR] [--only N]\n";
      return 2;
    }
  }
  fs::remove_all(work);
  fs::create_directories(work);
  Suite suite;
  suite.work = work;

  const std::vector<std::pair<std::string, fs::path>> runs{
      {"fig1", work / "fig1"}, {"fig2", work / "fig2"}, {"fig3", work / "fig3"}, {"swarm", work / "swarm"}};
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, [&] { return geometry_correctness(suite); }},
      {2, [&] { return figure_one(suite, runs[0].second); }},
      {3, [&] { return figure_two(suite, runs[1].second); }},
      {4, [&] { return figure_three(suite, runs[2].second); }},
      {5, [&] { return swarm(suite, runs[3].second); }},
      {6, [&] { return ccl_oracle(suite); }},
      {7, [&] { return ncut_certification(suite); }},
      {8, [&] { return balance(suite); }},
      {9, [&] { return determinism(suite, runs); }},
      {10, [&] { return figure_five(suite, work / "fig5"); }},
  };
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (only != 0 && id != only) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const char* verdict = id == 10 ? "INFO" : (o.pass ? "PASS" : "FAIL");
    failures += !o.pass;
    std::cout << "criterion " << id << ": " << verdict << " - " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
