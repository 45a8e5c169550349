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

// Partitions of the space-time graph: connected components labeling and the
// normalized-cut objective.

#include "prometheus/core.hpp"
#include "prometheus/graph.hpp"
#include "prometheus/union_find.hpp"

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace prometheus {

/// label[k] for every node k, plus the inverse index (cluster -> ascending
/// node list). Labels are 0..K-1.
struct ClusterLabeling {
  std::vector<int> labels;
  std::vector<std::vector<int>> clusters;

  size_t cluster_count() const { return clusters.size(); }

  /// Relabels so that clusters are numbered by their smallest node index.
  static ClusterLabeling from_labels(const std::vector<int>& raw) {
    ClusterLabeling out;
    out.labels.resize(raw.size());
    std::map<int, int> remap;
    for (size_t k = 0; k < raw.size(); ++k) {
      auto [it, inserted] = remap.try_emplace(raw[k], int(remap.size()));
      if (inserted) out.clusters.emplace_back();
      out.labels[k] = it->second;
      out.clusters[size_t(it->second)].push_back(int(k));
    }
    return out;
  }

  /// Every node carries exactly one label in range and the index agrees.
  bool is_partition() const {
    size_t covered = 0;
    for (size_t c = 0; c < clusters.size(); ++c) {
      if (clusters[c].empty()) return false;
      for (int k : clusters[c]) {
        if (k < 0 || size_t(k) >= labels.size() || labels[size_t(k)] != int(c)) return false;
        ++covered;
      }
    }
    return covered == labels.size();
  }

  bool operator==(const ClusterLabeling&) const = default;
};

namespace detail {

inline ClusterLabeling labeling_from_union_find(UnionFind& uf) {
  ClusterLabeling out;
  out.labels.resize(uf.size());
  std::vector<int> label_of_root(uf.size(), -1);
  for (size_t k = 0; k < uf.size(); ++k) {
    int& label = label_of_root[size_t(uf.find(int(k)))];
    if (label < 0) {
      label = int(out.clusters.size());
      out.clusters.emplace_back();
    }
    out.labels[k] = label;
    out.clusters[size_t(label)].push_back(int(k));
  }
  return out;
}

}  // namespace detail

/// Union-find labeling; clusters numbered by smallest node index.
inline ClusterLabeling connected_components(const SpaceTimeGraph& graph) {
  UnionFind uf(graph.node_count());
  for (size_t k = 0; k < graph.node_count(); ++k)
    for (int v : graph.neighbors(k))
      if (v > int(k)) uf.unite(int(k), v);
  return detail::labeling_from_union_find(uf);
}

/// Same labeling as connected_components(build_graph(cloud, params)) but
/// streams the links instead of storing them.
inline ClusterLabeling connected_components(const SpaceTimeCloud& cloud, const LinkParams& params) {
  UnionFind uf(cloud.size());
  const auto members = all_members(cloud);
  for_each_link(cloud, members, params, [&](size_t a, size_t b, double) { uf.unite(int(a), int(b)); });
  return detail::labeling_from_union_find(uf);
}

/// cut(A,B)/assoc(A,V) + cut(A,B)/assoc(B,V); `in_a[k]` selects side A.
inline double ncut_value(const SpaceTimeGraph& graph, const std::vector<char>& in_a) {
  require(in_a.size() == graph.node_count(), "ncut_value: partition size mismatch");
  double cut = 0.0, assoc_a = 0.0, assoc_b = 0.0;
  size_t count_a = 0;
  for (size_t k = 0; k < graph.node_count(); ++k) {
    const bool a = in_a[k] != 0;
    count_a += a;
    auto nb = graph.neighbors(k);
    auto w = graph.weights(k);
    for (size_t p = 0; p < nb.size(); ++p) {
      (a ? assoc_a : assoc_b) += w[p];
      if (a && !in_a[size_t(nb[p])]) cut += w[p];
    }
  }
  if (count_a == 0 || count_a == graph.node_count())
    throw Error(ErrorKind::kDegeneratePartition, "both sides of the partition must be nonempty");
  if (!(assoc_a > 0.0) || !(assoc_b > 0.0))
    throw Error(ErrorKind::kDegeneratePartition, "a side of the partition has zero association");
  return cut / assoc_a + cut / assoc_b;
}

inline double ncut_value(const SpaceTimeGraph& graph, std::span<const int> side_a) {
  std::vector<char> in_a(graph.node_count(), 0);
  for (int k : side_a) in_a.at(size_t(k)) = 1;
  return ncut_value(graph, in_a);
}

// ---------------------------------------------------------------------------
// Labeling CSV: point_index,frame,x,y,z,cluster_id

inline constexpr std::string_view kLabelsHeader = "point_index,frame,x,y,z,cluster_id";

inline void write_labels(const std::string& path, const SpaceTimeCloud& cloud, const ClusterLabeling& labeling) {
  require(labeling.labels.size() == cloud.size(), "labeling does not cover the cloud");
  auto out = open_output(path);
  out << kLabelsHeader << '\n';
  for (size_t k = 0; k < cloud.size(); ++k) {
    const auto& p = cloud.points[k];
    out << k << ',' << p.frame << ',' << format_double(p.position.x()) << ',' << format_double(p.position.y())
        << ',' << format_double(p.position.z()) << ',' << labeling.labels[k] << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

/// Cluster ids must be dense (0..K-1).
inline ClusterLabeling read_labels(const std::string& path) {
  std::vector<int> raw;
  read_csv(path, kLabelsHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 6) throw Error(ErrorKind::kParse, "expected 6 fields");
    if (parse_int<long long>(f[0]) != (long long)raw.size())
      throw Error(ErrorKind::kParse, "point_index must count up from 0");
    raw.push_back(parse_int<int>(f[5]));
  });
  ClusterLabeling out;
  out.labels = raw;
  int max_label = -1;
  for (int l : raw) max_label = std::max(max_label, l);
  out.clusters.resize(size_t(max_label + 1));
  for (size_t k = 0; k < raw.size(); ++k) {
    if (raw[k] < 0) throw Error(ErrorKind::kParse, "negative cluster id");
    out.clusters[size_t(raw[k])].push_back(int(k));
  }
  if (!out.is_partition()) throw Error(ErrorKind::kParse, "cluster ids must be dense 0..K-1");
  return out;
}

}  // namespace prometheus
