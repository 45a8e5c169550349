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

#include <Eigen/Core>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prometheus {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class ErrorKind {
  kParameterValidation,
  kDegenerateConfiguration,
  kUnstableTransfer,
  kParallelRays,
  kTooShortTrajectory,
  kDimensionMismatch,
  kFrameRangeMismatch,
  kDegeneratePartition,
  kEigensolverNonConvergence,
  kEmptyGroundTruth,
  kIo,
  kParse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParameterValidation: return "parameter-validation";
    case ErrorKind::kDegenerateConfiguration: return "degenerate-configuration";
    case ErrorKind::kUnstableTransfer: return "unstable-transfer";
    case ErrorKind::kParallelRays: return "parallel-rays";
    case ErrorKind::kTooShortTrajectory: return "too-short-trajectory";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kFrameRangeMismatch: return "frame-range-mismatch";
    case ErrorKind::kDegeneratePartition: return "degenerate-partition";
    case ErrorKind::kEigensolverNonConvergence: return "eigensolver-nonconvergence";
    case ErrorKind::kEmptyGroundTruth: return "empty-ground-truth";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kParse: return "parse";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (and tests) can branch on the category without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::kParameterValidation, message);
}

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorKind::kParse, "cannot format double");
  return std::string(buf, end);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorKind::kParse, "not a number: '" + std::string(text) + "'");
  return value;
}

template <typename Int = long long>
Int parse_int(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorKind::kParse, "not an integer: '" + std::string(text) + "'");
  return value;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

/// Reads a CSV with a fixed header; rows are handed to `on_row` as field views.
template <typename RowFn>
void read_csv(const std::string& path, std::string_view expected_header, RowFn&& on_row) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kParse, path + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header)
    throw Error(ErrorKind::kParse, path + ": expected header '" + std::string(expected_header) + "'");
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    try {
      on_row(fields);
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  return out;
}

}  // namespace prometheus
