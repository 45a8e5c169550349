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

// Normalized-cut spectral clustering. A connected component is bipartitioned
// with the second generalized eigenvector of (D - W) y = lambda D y, the
// vector is discretized by a threshold sweep, and components are split
// recursively while the best normalized cut stays under the accept
// threshold.

#include "prometheus/clustering.hpp"
#include "prometheus/core.hpp"
#include "prometheus/graph.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace prometheus {

struct NcutParams {
  double ncut_accept_threshold = 0.0008;
  int min_cluster_points = 8;
  int max_recursion_depth = 8;
  double eig_tolerance = 1e-6;
  int sweep_candidates = 64;
  int max_eig_iterations = 600;     // Lanczos steps over all restarts
  int dense_limit = 400;            // components up to this size use a dense solver
  size_t max_component_points = 400000;  // larger components are left unsplit

  void validate() const {
    require(ncut_accept_threshold > 0 && ncut_accept_threshold < 2, "ncut_accept_threshold must be in (0, 2)");
    require(min_cluster_points >= 2, "min_cluster_points must be >= 2");
    require(max_recursion_depth >= 0, "max_recursion_depth must be >= 0");
    require(eig_tolerance > 0, "eig_tolerance must be > 0");
    require(sweep_candidates >= 1, "sweep_candidates must be >= 1");
    require(max_eig_iterations >= 1, "max_eig_iterations must be >= 1");
  }
};

/// Second-smallest generalized eigenpair of (D - W, D).
struct FiedlerPair {
  double lambda = 0.0;
  Eigen::VectorXd vector;  // y, sign fixed so that its first nonzero entry is positive
  double residual = 0.0;   // ||(D - W) y - lambda D y|| / ||y||
  int iterations = 0;
};

namespace detail {

inline Eigen::VectorXd degrees(const SpaceTimeGraph& g) {
  Eigen::VectorXd d(Eigen::Index(g.node_count()));
  for (size_t k = 0; k < g.node_count(); ++k) d[Eigen::Index(k)] = g.degree(k);
  return d;
}

// ||(D - W) y - lambda D y|| / ||y||
inline double generalized_residual(const SpaceTimeGraph& g, const Eigen::VectorXd& d, const Eigen::VectorXd& y,
                                   double lambda) {
  double sum = 0.0;
  for (size_t k = 0; k < g.node_count(); ++k) {
    double wy = 0.0;
    auto nb = g.neighbors(k);
    auto w = g.weights(k);
    for (size_t p = 0; p < nb.size(); ++p) wy += w[p] * y[nb[p]];
    const Eigen::Index i = Eigen::Index(k);
    const double r = d[i] * y[i] - wy - lambda * d[i] * y[i];
    sum += r * r;
  }
  return std::sqrt(sum) / y.norm();
}

inline void fix_sign(Eigen::VectorXd& y) {
  const double scale = y.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (std::abs(y[i]) > 1e-12 * scale) {
      if (y[i] < 0) y = -y;
      return;
    }
}

inline Eigen::SparseMatrix<double> normalized_laplacian(const SpaceTimeGraph& g, const Eigen::VectorXd& inv_sqrt_d,
                                                        double shift) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(g.node_count() + 2 * g.edge_count());
  for (size_t k = 0; k < g.node_count(); ++k) {
    const Eigen::Index i = Eigen::Index(k);
    trips.emplace_back(i, i, 1.0 + shift);
    auto nb = g.neighbors(k);
    auto w = g.weights(k);
    for (size_t p = 0; p < nb.size(); ++p) trips.emplace_back(i, nb[p], -w[p] * inv_sqrt_d[i] * inv_sqrt_d[nb[p]]);
  }
  Eigen::SparseMatrix<double> l(Eigen::Index(g.node_count()), Eigen::Index(g.node_count()));
  l.setFromTriplets(trips.begin(), trips.end());
  return l;
}

// Lanczos with full reorthogonalization on the shift-inverted normalized
// Laplacian, deflated against the trivial eigenvector D^{1/2} 1. Restarts
// from the current Ritz vector until the generalized residual passes.
inline FiedlerPair fiedler_sparse(const SpaceTimeGraph& g, const Eigen::VectorXd& d, const NcutParams& params) {
  const Eigen::Index n = Eigen::Index(g.node_count());
  const Eigen::VectorXd inv_sqrt_d = d.cwiseSqrt().cwiseInverse();
  constexpr double kShift = 1e-7;
  const Eigen::SparseMatrix<double> shifted = normalized_laplacian(g, inv_sqrt_d, kShift);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::kEigensolverNonConvergence, "factorization of the shifted Laplacian failed");

  const Eigen::VectorXd trivial = d.cwiseSqrt().normalized();
  auto deflate = [&](Eigen::VectorXd& v) { v -= trivial.dot(v) * trivial; };

  Eigen::VectorXd start(n);
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) start[i] = uni(rng);

  const int block = int(std::min<Eigen::Index>(n - 1, 80));
  int used = 0;
  FiedlerPair best;
  best.residual = std::numeric_limits<double>::infinity();
  while (used < params.max_eig_iterations) {
    deflate(start);
    start.normalize();
    Eigen::MatrixXd basis(n, block + 1);
    basis.col(0) = start;
    std::vector<double> alpha, beta;
    int steps = 0;
    Eigen::VectorXd ritz;
    for (int k = 0; k < block && used < params.max_eig_iterations; ++k, ++used) {
      Eigen::VectorXd w = solver.solve(basis.col(k));
      deflate(w);
      const double a = basis.col(k).dot(w);
      for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
      deflate(w);
      alpha.push_back(a);
      const double b = w.norm();
      steps = k + 1;
      const bool exhausted = b < 1e-14 * std::abs(a);
      if (!exhausted) {
        beta.push_back(b);
        basis.col(k + 1) = w / b;
      }
      if (exhausted || steps % 10 == 0 || steps == block || used + 1 >= params.max_eig_iterations) {
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(steps, steps);
        for (int i = 0; i < steps; ++i) {
          t(i, i) = alpha[size_t(i)];
          if (i + 1 < steps) t(i, i + 1) = t(i + 1, i) = beta[size_t(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        const Eigen::VectorXd s = es.eigenvectors().col(steps - 1);
        ritz = basis.leftCols(steps) * s;
        deflate(ritz);
        ritz.normalize();
        // Rayleigh quotient on the unshifted normalized Laplacian
        Eigen::VectorXd lz = shifted * ritz - kShift * ritz;
        const double lambda = ritz.dot(lz);
        Eigen::VectorXd y = inv_sqrt_d.asDiagonal() * ritz;
        const double res = generalized_residual(g, d, y, lambda);
        if (res < best.residual) {
          best.lambda = lambda;
          best.vector = y;
          best.residual = res;
          best.iterations = used + 1;
        }
        if (res <= params.eig_tolerance) {
          fix_sign(best.vector);
          return best;
        }
        if (exhausted) break;
      }
    }
    if (ritz.size() == 0) break;
    start = ritz;
  }
  throw Error(ErrorKind::kEigensolverNonConvergence,
              "Lanczos did not reach the residual tolerance after " + std::to_string(used) +
                  " iterations (best residual " + std::to_string(best.residual) + ")");
}

inline FiedlerPair fiedler_dense(const SpaceTimeGraph& g, const Eigen::VectorXd& d, const NcutParams& params) {
  const Eigen::Index n = Eigen::Index(g.node_count());
  const Eigen::VectorXd inv_sqrt_d = d.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(n, n);
  for (size_t k = 0; k < g.node_count(); ++k) {
    auto nb = g.neighbors(k);
    auto w = g.weights(k);
    for (size_t p = 0; p < nb.size(); ++p)
      l(Eigen::Index(k), nb[p]) -= w[p] * inv_sqrt_d[Eigen::Index(k)] * inv_sqrt_d[nb[p]];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::kEigensolverNonConvergence, "dense eigensolver failed");
  FiedlerPair out;
  out.lambda = es.eigenvalues()[1];
  out.vector = inv_sqrt_d.asDiagonal() * es.eigenvectors().col(1);
  out.residual = generalized_residual(g, d, out.vector, out.lambda);
  out.iterations = 1;
  if (!(out.residual <= params.eig_tolerance))
    throw Error(ErrorKind::kEigensolverNonConvergence,
                "dense eigenpair residual " + std::to_string(out.residual) + " above tolerance");
  fix_sign(out.vector);
  return out;
}

}  // namespace detail

/// Fiedler pair of a connected graph with at least two nodes.
inline FiedlerPair fiedler_vector(const SpaceTimeGraph& graph, const NcutParams& params) {
  params.validate();
  require(graph.node_count() >= 2, "fiedler_vector needs at least two nodes");
  const Eigen::VectorXd d = detail::degrees(graph);
  if (!(d.minCoeff() > 0.0))
    throw Error(ErrorKind::kDegeneratePartition, "graph has an isolated node");
  if (graph.node_count() <= size_t(std::max(params.dense_limit, 2))) return detail::fiedler_dense(graph, d, params);
  return detail::fiedler_sparse(graph, d, params);
}

struct Bipartition {
  std::vector<int> side_a;  // local node indices, ascending
  std::vector<int> side_b;
  double ncut = 0.0;
};

struct SpectralOutcome {
  bool split = false;
  std::string reason;  // why no split was made
  std::optional<Bipartition> best;  // best sweep candidate, accepted or not
  std::optional<FiedlerPair> eigen;
};

/// Best of `candidates` evenly spaced thresholds over the range of `y`
/// (A = {y <= t}) among those leaving at least `min_side` nodes on each side.
/// Returns std::nullopt when no threshold qualifies.
inline std::optional<Bipartition> sweep_partition(const SpaceTimeGraph& graph, const Eigen::VectorXd& y,
                                                  int candidates, size_t min_side = 1) {
  const size_t n = graph.node_count();
  const double lo = y.minCoeff(), hi = y.maxCoeff();
  if (!(hi > lo)) return std::nullopt;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return y[a] < y[b]; });
  std::vector<double> deg(n);
  double total = 0.0;
  for (size_t k = 0; k < n; ++k) total += (deg[k] = graph.degree(k));

  std::vector<char> in_a(n, 0);
  double cut = 0.0, assoc_a = 0.0;
  size_t moved = 0;
  double best_value = std::numeric_limits<double>::infinity();
  double best_threshold = lo;
  for (int c = 1; c <= candidates; ++c) {
    const double t = lo + (hi - lo) * double(c) / double(candidates + 1);
    while (moved < n && y[order[moved]] <= t) {
      const int u = order[moved++];
      auto nb = graph.neighbors(size_t(u));
      auto w = graph.weights(size_t(u));
      for (size_t p = 0; p < nb.size(); ++p) cut += in_a[size_t(nb[p])] ? -w[p] : w[p];
      in_a[size_t(u)] = 1;
      assoc_a += deg[size_t(u)];
    }
    if (moved < std::max<size_t>(min_side, 1) || n - moved < std::max<size_t>(min_side, 1)) continue;
    const double assoc_b = total - assoc_a;
    if (!(assoc_a > 0.0) || !(assoc_b > 0.0)) continue;
    const double value = std::max(cut, 0.0) / assoc_a + std::max(cut, 0.0) / assoc_b;
    if (value < best_value) {
      best_value = value;
      best_threshold = t;
    }
  }
  if (!std::isfinite(best_value)) return std::nullopt;
  Bipartition part;
  std::vector<char> side(n, 0);
  for (size_t k = 0; k < n; ++k) {
    if (y[Eigen::Index(k)] <= best_threshold) {
      side[k] = 1;
      part.side_a.push_back(int(k));
    } else {
      part.side_b.push_back(int(k));
    }
  }
  part.ncut = ncut_value(graph, side);
  return part;
}

/// One normalized-cut bipartition of a connected component.
inline SpectralOutcome spectral_bipartition(const SpaceTimeGraph& graph, const NcutParams& params) {
  params.validate();
  SpectralOutcome out;
  if (graph.node_count() < size_t(2 * params.min_cluster_points)) {
    out.reason = "component smaller than 2 * min_cluster_points";
    return out;
  }
  out.eigen = fiedler_vector(graph, params);
  out.best = sweep_partition(graph, out.eigen->vector, params.sweep_candidates, size_t(params.min_cluster_points));
  if (!out.best) {
    out.reason = "no threshold leaves min_cluster_points on both sides";
    return out;
  }
  if (!(out.best->ncut < params.ncut_accept_threshold)) {
    out.reason = "ncut above accept threshold";
    return out;
  }
  out.split = true;
  return out;
}

struct SplitRecord {
  int parent_id = 0;
  int child_a = -1;
  int child_b = -1;
  double ncut = 0.0;  // NaN when no candidate partition existed
  bool accepted = false;
  double lambda = 0.0;
  double residual = 0.0;
  size_t parent_size = 0;
};

struct SplitResult {
  ClusterLabeling labeling;
  std::vector<SplitRecord> audit;
  std::vector<std::string> warnings;

  int accepted_splits() const {
    return int(std::count_if(audit.begin(), audit.end(), [](const SplitRecord& r) { return r.accepted; }));
  }
};

/// Recursive normalized-cut splitting of every cluster of `labeling`.
/// `subgraph(members)` must return the graph induced on the listed nodes
/// (ascending). Cluster ids in the audit log are provisional: the input
/// labels first, then fresh ids in the order children are created. The
/// returned labeling is renumbered by smallest node index.
inline SplitResult recursive_split(const ClusterLabeling& labeling,
                                   const std::function<SpaceTimeGraph(std::span<const int>)>& subgraph,
                                   const NcutParams& params) {
  params.validate();
  struct Work {
    int id;
    std::vector<int> members;
    int depth;
  };
  SplitResult result;
  std::vector<int> provisional(labeling.labels.size(), -1);
  std::deque<Work> queue;
  int next_id = int(labeling.cluster_count());
  for (size_t c = 0; c < labeling.cluster_count(); ++c) queue.push_back({int(c), labeling.clusters[c], 0});

  while (!queue.empty()) {
    Work work = std::move(queue.front());
    queue.pop_front();
    auto finalize = [&] {
      for (int k : work.members) provisional[size_t(k)] = work.id;
    };
    if (work.depth >= params.max_recursion_depth || work.members.size() < size_t(2 * params.min_cluster_points)) {
      finalize();
      continue;
    }
    if (work.members.size() > params.max_component_points) {
      result.warnings.push_back("cluster " + std::to_string(work.id) + " with " + std::to_string(work.members.size()) +
                                " points exceeds max_component_points; left unsplit");
      finalize();
      continue;
    }
    const SpaceTimeGraph g = subgraph(work.members);
    // A child of an earlier split may fall apart; its pieces are separated
    // without a spectral step.
    const ClusterLabeling pieces = connected_components(g);
    if (pieces.cluster_count() > 1) {
      for (const auto& piece : pieces.clusters) {
        std::vector<int> members;
        for (int local : piece) members.push_back(work.members[size_t(local)]);
        queue.push_back({next_id++, std::move(members), work.depth});
      }
      continue;
    }
    SplitRecord record;
    record.parent_id = work.id;
    record.parent_size = work.members.size();
    SpectralOutcome outcome;
    try {
      outcome = spectral_bipartition(g, params);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEigensolverNonConvergence) throw;
      result.warnings.push_back("cluster " + std::to_string(work.id) + ": " + e.what() + "; treated as no-split");
      finalize();
      continue;
    }
    record.ncut = outcome.best ? outcome.best->ncut : std::numeric_limits<double>::quiet_NaN();
    if (outcome.eigen) {
      record.lambda = outcome.eigen->lambda;
      record.residual = outcome.eigen->residual;
    }
    if (!outcome.split) {
      if (outcome.eigen) result.audit.push_back(record);
      finalize();
      continue;
    }
    record.accepted = true;
    record.child_a = next_id++;
    record.child_b = next_id++;
    result.audit.push_back(record);
    std::vector<int> a, b;
    for (int local : outcome.best->side_a) a.push_back(work.members[size_t(local)]);
    for (int local : outcome.best->side_b) b.push_back(work.members[size_t(local)]);
    queue.push_back({record.child_a, std::move(a), work.depth + 1});
    queue.push_back({record.child_b, std::move(b), work.depth + 1});
  }
  result.labeling = ClusterLabeling::from_labels(provisional);
  return result;
}

inline SplitResult recursive_split(const ClusterLabeling& labeling, const SpaceTimeGraph& graph,
                                   const NcutParams& params) {
  return recursive_split(
      labeling, [&](std::span<const int> members) { return graph.induced(members); }, params);
}

/// Splits using subgraphs built on demand from the cloud, so the full graph
/// never has to be held in memory.
inline SplitResult recursive_split(const ClusterLabeling& labeling, const SpaceTimeCloud& cloud,
                                   const LinkParams& link, const NcutParams& params) {
  return recursive_split(
      labeling, [&](std::span<const int> members) { return build_subgraph(cloud, members, link); }, params);
}

inline constexpr std::string_view kSplitAuditHeader = "parent_id,child_a,child_b,ncut,accepted";

inline void write_split_audit(const std::string& path, const std::vector<SplitRecord>& audit) {
  auto out = open_output(path);
  out << kSplitAuditHeader << '\n';
  for (const auto& r : audit)
    out << r.parent_id << ',' << r.child_a << ',' << r.child_b << ','
        << (std::isnan(r.ncut) ? std::string("nan") : format_double(r.ncut)) << ',' << (r.accepted ? 1 : 0) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

}  // namespace prometheus
