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

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <map>
#include <queue>
#include <set>

namespace prometheus {
namespace {

SpaceTimeCloud random_cloud(size_t per_frame, int frames, double half, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SpaceTimeCloud cloud;
  cloud.first_frame = 0;
  cloud.last_frame = frames - 1;
  for (int f = 0; f < frames; ++f)
    for (size_t k = 0; k < per_frame; ++k) {
      SpaceTimePoint p;
      p.frame = f;
      p.position = testing::random_point(rng, half);
      cloud.points.push_back(p);
    }
  return cloud;
}

std::vector<Edge> brute_force_links(const SpaceTimeCloud& cloud, const LinkParams& link) {
  std::vector<Edge> edges;
  for (size_t i = 0; i < cloud.size(); ++i)
    for (size_t j = i + 1; j < cloud.size(); ++j) {
      const auto& a = cloud.points[i];
      const auto& b = cloud.points[j];
      const double d = (a.position - b.position).norm();
      const int gap = std::abs(a.frame - b.frame);
      if ((gap == 0 && d <= link.r_static) || (gap == 1 && d <= link.r_dynamic))
        edges.push_back({int(i), int(j), std::exp(-d * d / (link.sigma_w * link.sigma_w))});
    }
  return edges;
}

// Component id per node by breadth-first search, numbered by smallest node.
std::vector<int> bfs_components(size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[size_t(e.i)].push_back(e.j);
    adj[size_t(e.j)].push_back(e.i);
  }
  std::vector<int> comp(n, -1);
  int next = 0;
  for (size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<int> q;
    q.push(int(s));
    comp[s] = next;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[size_t(u)])
        if (comp[size_t(v)] < 0) {
          comp[size_t(v)] = next;
          q.push(v);
        }
    }
    ++next;
  }
  return comp;
}

std::vector<Edge> random_edges(size_t n, size_t m, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> node(0, int(n) - 1);
  std::set<std::pair<int, int>> seen;
  std::vector<Edge> edges;
  while (edges.size() < m) {
    int a = node(rng), b = node(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) continue;
    edges.push_back({a, b, 1.0});
  }
  return edges;
}

TEST(Graph, DefaultRadiiFollowBlur) {
  const LinkParams p = LinkParams::from_blur_radius(0.002);
  EXPECT_DOUBLE_EQ(p.r_static, 0.006);
  EXPECT_DOUBLE_EQ(p.r_dynamic, 0.010);
  EXPECT_DOUBLE_EQ(p.sigma_w, 0.003);
  EXPECT_DOUBLE_EQ(p.weight(0.0), 1.0);
  EXPECT_DOUBLE_EQ(p.weight(0.003 * 0.003), std::exp(-1.0));
  LinkParams bad;
  bad.r_static = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Graph, LinksMatchAllPairsScan) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cloud = random_cloud(60, 6, 0.03, seed);
    LinkParams link;
    link.r_static = 0.01;
    link.r_dynamic = 0.015;
    link.sigma_w = 0.005;
    const auto got = build_graph(cloud, link).edges();
    auto want = brute_force_links(cloud, link);
    std::sort(want.begin(), want.end(), [](const Edge& a, const Edge& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
    ASSERT_EQ(got.size(), want.size()) << seed;
    for (size_t k = 0; k < got.size(); ++k) {
      EXPECT_EQ(got[k].i, want[k].i);
      EXPECT_EQ(got[k].j, want[k].j);
      EXPECT_NEAR(got[k].w, want[k].w, 1e-15);
    }
  }
}

TEST(Graph, NoLinksAcrossNonConsecutiveFrames) {
  SpaceTimeCloud cloud;
  cloud.points = {{Vec3::Zero(), 0, {}, 0.0}, {Vec3::Zero(), 2, {}, 0.0}, {Vec3(0.001, 0, 0), 3, {}, 0.0}};
  cloud.last_frame = 3;
  const auto g = build_graph(cloud, LinkParams{});
  ASSERT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.edges()[0].i, 1);
  EXPECT_EQ(g.edges()[0].j, 2);
}

TEST(Graph, AdjacencyIsSymmetricWithDegrees) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  auto edges = random_edges(40, 120, rng);
  for (auto& e : edges) e.w = w(rng);
  const auto g = SpaceTimeGraph::from_edges(40, edges);
  std::vector<double> deg(40, 0.0);
  std::map<std::pair<int, int>, double> weight;
  for (const auto& e : edges) {
    deg[size_t(e.i)] += e.w;
    deg[size_t(e.j)] += e.w;
    weight[{e.i, e.j}] = weight[{e.j, e.i}] = e.w;
  }
  for (size_t k = 0; k < 40; ++k) {
    EXPECT_NEAR(g.degree(k), deg[k], 1e-12);
    auto nb = g.neighbors(k);
    auto ws = g.weights(k);
    for (size_t p = 0; p < nb.size(); ++p) EXPECT_EQ(ws[p], (weight.at({int(k), nb[p]})));
  }
  EXPECT_EQ(g.edge_count(), edges.size());
}

TEST(Graph, InvalidEdgesAreRejected) {
  EXPECT_THROW(SpaceTimeGraph::from_edges(3, {{0, 0, 1.0}}), Error);
  EXPECT_THROW(SpaceTimeGraph::from_edges(3, {{0, 3, 1.0}}), Error);
  EXPECT_THROW(SpaceTimeGraph::from_edges(3, {{0, 1, 0.0}}), Error);
}

TEST(Graph, InducedSubgraphKeepsInternalEdges) {
  std::mt19937_64 rng(4);
  const auto edges = random_edges(30, 80, rng);
  const auto g = SpaceTimeGraph::from_edges(30, edges);
  const std::vector<int> members{1, 4, 5, 9, 12, 13, 20, 29};
  const auto sub = g.induced(members);
  std::set<std::pair<int, int>> want;
  for (const auto& e : edges) {
    auto a = std::find(members.begin(), members.end(), e.i), b = std::find(members.begin(), members.end(), e.j);
    if (a != members.end() && b != members.end()) {
      int x = int(a - members.begin()), y = int(b - members.begin());
      want.insert({std::min(x, y), std::max(x, y)});
    }
  }
  std::set<std::pair<int, int>> got;
  for (const auto& e : sub.edges()) got.insert({e.i, e.j});
  EXPECT_EQ(got, want);
  EXPECT_EQ(sub.nodes(), members);
}

TEST(Clustering, UnionFindMatchesBreadthFirstSearch) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<size_t> size(1, 1000);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = size(rng);
    const size_t m = std::min(n * (n - 1) / 2, size_t(std::uniform_int_distribution<size_t>(0, 2 * n)(rng)));
    const auto edges = random_edges(n, m, rng);
    const auto labeling = connected_components(SpaceTimeGraph::from_edges(n, edges));
    EXPECT_TRUE(labeling.is_partition());
    EXPECT_EQ(labeling.labels, bfs_components(n, edges)) << "trial " << trial;
  }
}

TEST(Clustering, StreamingLabelingEqualsGraphLabeling) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cloud = random_cloud(200, 10, 0.05, seed);
    LinkParams link;
    link.r_static = 0.008;
    link.r_dynamic = 0.012;
    link.sigma_w = 0.004;
    EXPECT_EQ(connected_components(cloud, link), connected_components(build_graph(cloud, link)));
  }
}

TEST(Clustering, LabelsAreNumberedBySmallestNode) {
  const auto l = ClusterLabeling::from_labels({7, 3, 7, 9, 3});
  EXPECT_EQ(l.labels, (std::vector<int>{0, 1, 0, 2, 1}));
  EXPECT_EQ(l.clusters, (std::vector<std::vector<int>>{{0, 2}, {1, 4}, {3}}));
  EXPECT_TRUE(l.is_partition());
  ClusterLabeling broken = l;
  broken.labels[0] = 1;
  EXPECT_FALSE(broken.is_partition());
}

TEST(Clustering, NcutValueMatchesDefinition) {
  // path 0-1-2-3 with weights 1, 0.1, 1
  const auto g = SpaceTimeGraph::from_edges(4, {{0, 1, 1.0}, {1, 2, 0.1}, {2, 3, 1.0}});
  const std::vector<int> a{0, 1};
  EXPECT_NEAR(ncut_value(g, a), 0.1 / 2.1 + 0.1 / 2.1, 1e-15);
  const std::vector<int> b{0};
  EXPECT_NEAR(ncut_value(g, b), 1.0 / 1.0 + 1.0 / 3.2, 1e-15);
}

TEST(Clustering, LabelFileRoundTrip) {
  const auto dir = testing::scratch_dir("labels");
  const auto cloud = random_cloud(20, 3, 0.05, 9);
  LinkParams link;
  link.r_static = link.r_dynamic = 0.03;
  const auto labeling = connected_components(cloud, link);
  write_labels((dir / "labels.csv").string(), cloud, labeling);
  EXPECT_EQ(read_labels((dir / "labels.csv").string()), labeling);
  std::ofstream(dir / "bad.csv") << "point_index,frame,x,y,z,cluster_id\n0,0,0,0,0,1\n";
  EXPECT_THROW(read_labels((dir / "bad.csv").string()), Error);
}

}  // namespace
}  // namespace prometheus
