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

#include <numeric>
#include <vector>

namespace prometheus {

/// Disjoint sets with path compression and union by size.
class UnionFind {
 public:
  explicit UnionFind(size_t n = 0) { reset(n); }

  void reset(size_t n) {
    parent_.resize(n);
    std::iota(parent_.begin(), parent_.end(), 0);
    size_.assign(n, 1);
  }

  size_t size() const { return parent_.size(); }

  int find(int x) {
    int root = x;
    while (parent_[size_t(root)] != root) root = parent_[size_t(root)];
    while (parent_[size_t(x)] != root) {
      const int next = parent_[size_t(x)];
      parent_[size_t(x)] = root;
      x = next;
    }
    return root;
  }

  /// Returns true when x and y were in different sets.
  bool unite(int x, int y) {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    if (size_[size_t(x)] < size_[size_t(y)]) std::swap(x, y);
    parent_[size_t(y)] = x;
    size_[size_t(x)] += size_[size_t(y)];
    return true;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

}  // namespace prometheus
