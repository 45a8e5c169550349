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

// Space-time proximity graph over a (3D+1) cloud. Two points are linked when
// they share a frame and lie within r_static, or sit in consecutive frames
// within r_dynamic. Weights are exp(-d^2 / sigma_w^2).

#include "prometheus/core.hpp"
#include "prometheus/reconstruction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace prometheus {

struct LinkParams {
  double r_static = 0.01125;
  double r_dynamic = 0.01875;
  double sigma_w = 0.005625;

  void validate() const {
    require(r_static > 0 && r_dynamic > 0 && sigma_w > 0, "link radii and sigma_w must be > 0");
  }

  /// 3x and 5x the blur radius, weight scale half the static radius.
  static LinkParams from_blur_radius(double blur) { return {3.0 * blur, 5.0 * blur, 1.5 * blur}; }

  double weight(double d2) const { return std::exp(-d2 / (sigma_w * sigma_w)); }
};

struct Edge {
  int i = 0;
  int j = 0;
  double w = 0.0;
  bool operator==(const Edge&) const = default;
};

/// Symmetric sparse adjacency (CSR). `nodes[k]` is the cloud index of local
/// node k, so a graph may cover a subset of a cloud.
class SpaceTimeGraph {
 public:
  SpaceTimeGraph() = default;

  /// Builds from an undirected edge list; (i, j) and (j, i) must not both appear.
  static SpaceTimeGraph from_edges(size_t n, const std::vector<Edge>& edges, std::vector<int> nodes = {}) {
    SpaceTimeGraph g;
    if (nodes.empty()) {
      nodes.resize(n);
      for (size_t k = 0; k < n; ++k) nodes[k] = int(k);
    }
    require(nodes.size() == n, "graph: node map size mismatch");
    g.nodes_ = std::move(nodes);
    g.offsets_.assign(n + 1, 0);
    for (const Edge& e : edges) {
      require(e.i != e.j && e.i >= 0 && e.j >= 0 && size_t(e.i) < n && size_t(e.j) < n, "graph: bad edge");
      require(e.w > 0.0, "graph: edge weights must be positive");
      ++g.offsets_[size_t(e.i) + 1];
      ++g.offsets_[size_t(e.j) + 1];
    }
    for (size_t k = 1; k <= n; ++k) g.offsets_[k] += g.offsets_[k - 1];
    g.neighbors_.resize(g.offsets_[n]);
    g.weights_.resize(g.offsets_[n]);
    std::vector<size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const Edge& e : edges) {
      g.neighbors_[fill[size_t(e.i)]] = e.j;
      g.weights_[fill[size_t(e.i)]++] = e.w;
      g.neighbors_[fill[size_t(e.j)]] = e.i;
      g.weights_[fill[size_t(e.j)]++] = e.w;
    }
    // sort each row by neighbor so that layout does not depend on edge order
    std::vector<std::pair<int, double>> row;
    for (size_t k = 0; k < n; ++k) {
      row.clear();
      for (size_t p = g.offsets_[k]; p < g.offsets_[k + 1]; ++p) row.emplace_back(g.neighbors_[p], g.weights_[p]);
      std::sort(row.begin(), row.end());
      for (size_t p = 0; p < row.size(); ++p) {
        g.neighbors_[g.offsets_[k] + p] = row[p].first;
        g.weights_[g.offsets_[k] + p] = row[p].second;
      }
    }
    g.edge_count_ = edges.size();
    return g;
  }

  size_t node_count() const { return nodes_.size(); }
  size_t edge_count() const { return edge_count_; }
  const std::vector<int>& nodes() const { return nodes_; }

  std::span<const int> neighbors(size_t k) const {
    return {neighbors_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }
  std::span<const double> weights(size_t k) const {
    return {weights_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }

  double degree(size_t k) const {
    double d = 0.0;
    for (double w : weights(k)) d += w;
    return d;
  }

  /// Undirected edges with i < j in lexicographic order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (size_t k = 0; k < node_count(); ++k) {
      auto nb = neighbors(k);
      auto w = weights(k);
      for (size_t p = 0; p < nb.size(); ++p)
        if (nb[p] > int(k)) out.push_back({int(k), nb[p], w[p]});
    }
    return out;
  }

  /// Graph over the listed local nodes (ascending), keeping edges among them.
  SpaceTimeGraph induced(std::span<const int> members) const {
    std::vector<int> local(node_count(), -1);
    for (size_t k = 0; k < members.size(); ++k) local[size_t(members[k])] = int(k);
    std::vector<Edge> sub;
    std::vector<int> ids;
    ids.reserve(members.size());
    for (size_t k = 0; k < members.size(); ++k) {
      const int u = members[k];
      ids.push_back(nodes_[size_t(u)]);
      auto nb = neighbors(size_t(u));
      auto w = weights(size_t(u));
      for (size_t p = 0; p < nb.size(); ++p) {
        const int v = local[size_t(nb[p])];
        if (v > int(k)) sub.push_back({int(k), v, w[p]});
      }
    }
    return from_edges(members.size(), sub, std::move(ids));
  }

 private:
  std::vector<int> nodes_;
  std::vector<size_t> offsets_{0};
  std::vector<int> neighbors_;
  std::vector<double> weights_;
  size_t edge_count_ = 0;
};

namespace detail {

// Uniform hash grid over the points of one frame: (cell key, local index)
// pairs sorted by key.
struct FrameGrid {
  double cell = 1.0;
  std::vector<std::pair<std::int64_t, int>> entries;

  static std::int64_t key(std::int64_t cx, std::int64_t cy, std::int64_t cz) {
    constexpr std::int64_t kBias = std::int64_t(1) << 20;
    return ((cx + kBias) << 42) | ((cy + kBias) << 21) | (cz + kBias);
  }

  std::array<std::int64_t, 3> cell_of(const Vec3& p) const {
    return {std::int64_t(std::floor(p.x() / cell)), std::int64_t(std::floor(p.y() / cell)),
            std::int64_t(std::floor(p.z() / cell))};
  }

  template <typename PositionFn>
  void build(size_t count, PositionFn&& position, double cell_size) {
    cell = cell_size;
    entries.clear();
    entries.reserve(count);
    for (size_t k = 0; k < count; ++k) {
      const auto c = cell_of(position(k));
      entries.emplace_back(key(c[0], c[1], c[2]), int(k));
    }
    std::sort(entries.begin(), entries.end());
  }

  // Visits candidates in the 27 cells around p, cell by cell, index ascending.
  template <typename Fn>
  void for_each_near(const Vec3& p, Fn&& fn) const {
    const auto c = cell_of(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const std::int64_t k = key(c[0] + dx, c[1] + dy, c[2] + dz);
          auto it = std::lower_bound(entries.begin(), entries.end(), std::make_pair(k, -1));
          for (; it != entries.end() && it->first == k; ++it) fn(it->second);
        }
  }
};

}  // namespace detail

/// Calls fn(a, b, w) for every link among `members` (ascending cloud
/// indices, hence frame-ordered); a < b are positions within `members`.
/// Expected cost is linear in the number of points at bounded density.
template <typename Fn>
void for_each_link(const SpaceTimeCloud& cloud, std::span<const int> members, const LinkParams& params, Fn&& fn) {
  params.validate();
  const double r_s2 = params.r_static * params.r_static;
  const double r_d2 = params.r_dynamic * params.r_dynamic;
  const double cell = std::max(params.r_static, params.r_dynamic);
  auto frame_of = [&](size_t k) { return cloud.points[size_t(members[k])].frame; };
  auto pos_of = [&](size_t k) -> const Vec3& { return cloud.points[size_t(members[k])].position; };

  size_t begin = 0;
  detail::FrameGrid current, next;
  size_t next_begin = 0, next_end = 0;
  bool have_next = false;
  while (begin < members.size()) {
    const int f = frame_of(begin);
    size_t end = begin;
    while (end < members.size() && frame_of(end) == f) ++end;
    if (have_next && next_begin == begin) {
      std::swap(current, next);
    } else {
      current.build(end - begin, [&](size_t k) -> const Vec3& { return pos_of(begin + k); }, cell);
    }
    next_begin = end;
    next_end = end;
    while (next_end < members.size() && frame_of(next_end) == f + 1) ++next_end;
    have_next = next_end > next_begin;
    if (have_next)
      next.build(next_end - next_begin, [&](size_t k) -> const Vec3& { return pos_of(next_begin + k); }, cell);

    for (size_t a = begin; a < end; ++a) {
      const Vec3& pa = pos_of(a);
      current.for_each_near(pa, [&](int local) {
        const size_t b = begin + size_t(local);
        if (b <= a) return;
        const double d2 = (pos_of(b) - pa).squaredNorm();
        if (d2 <= r_s2) fn(a, b, params.weight(d2));
      });
      if (have_next)
        next.for_each_near(pa, [&](int local) {
          const size_t b = next_begin + size_t(local);
          const double d2 = (pos_of(b) - pa).squaredNorm();
          if (d2 <= r_d2) fn(a, b, params.weight(d2));
        });
    }
    begin = end;
  }
}

inline std::vector<int> all_members(const SpaceTimeCloud& cloud) {
  std::vector<int> m(cloud.size());
  for (size_t k = 0; k < m.size(); ++k) m[k] = int(k);
  return m;
}

/// Graph over the listed cloud points (ascending indices).
inline SpaceTimeGraph build_subgraph(const SpaceTimeCloud& cloud, std::span<const int> members,
                                     const LinkParams& params) {
  std::vector<Edge> edges;
  for_each_link(cloud, members, params,
                [&](size_t a, size_t b, double w) { edges.push_back({int(a), int(b), w}); });
  return SpaceTimeGraph::from_edges(members.size(), edges, std::vector<int>(members.begin(), members.end()));
}

inline SpaceTimeGraph build_graph(const SpaceTimeCloud& cloud, const LinkParams& params) {
  const auto members = all_members(cloud);
  return build_subgraph(cloud, members, params);
}

}  // namespace prometheus
