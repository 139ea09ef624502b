// Copyright 2026 The vlapath Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// 2D image-plane paths and the transforms applied to them before they are
// serialized or drawn: gripper-event extraction, Ramer-Douglas-Peucker
// simplification, equal-arc-length resampling and Gaussian jitter.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "vlapath/error.hpp"

namespace vlapath {

/// One path sample in normalized image coordinates. x grows rightwards and y
/// downwards, both nominally in [0, 1]. Projection output may leave the unit
/// square; see `in_frame()`.
struct PathPoint {
  double x = 0.0;
  double y = 0.0;
  bool gripper_open = true;

  bool in_frame() const noexcept { return x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0; }

  friend bool operator==(const PathPoint&, const PathPoint&) = default;
};

/// Ordered, non-empty sequence of path points.
class Path2D {
 public:
  explicit Path2D(std::vector<PathPoint> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error(ErrorCode::kInvalidArgument, "Path2D must be non-empty");
  }
  Path2D(std::initializer_list<PathPoint> points) : Path2D(std::vector<PathPoint>(points)) {}

  const std::vector<PathPoint>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  const PathPoint& operator[](std::size_t i) const { return points_[i]; }
  const PathPoint& front() const { return points_.front(); }
  const PathPoint& back() const { return points_.back(); }
  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  bool in_frame() const noexcept {
    return std::all_of(points_.begin(), points_.end(), [](const PathPoint& p) { return p.in_frame(); });
  }

  friend bool operator==(const Path2D&, const Path2D&) = default;

 private:
  std::vector<PathPoint> points_;
};

enum class GripperAction : std::uint8_t { kClose, kOpen };

/// A change of gripper state between points[index - 1] and points[index].
struct GripperEvent {
  std::size_t index = 1;
  GripperAction kind = GripperAction::kClose;

  friend bool operator==(const GripperEvent&, const GripperEvent&) = default;
};

inline std::vector<GripperEvent> events(const Path2D& path) {
  std::vector<GripperEvent> out;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const bool before = path[i - 1].gripper_open;
    const bool after = path[i].gripper_open;
    if (before != after) {
      out.push_back({i, after ? GripperAction::kOpen : GripperAction::kClose});
    }
  }
  return out;
}

inline double path_length(const Path2D& path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    total += std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
  }
  return total;
}

namespace detail {

/// Euclidean distance from p to the closed segment [a, b]. Degenerate
/// segments reduce to point distance.
inline double point_segment_distance(const PathPoint& p, const PathPoint& a, const PathPoint& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

inline void rdp_recurse(std::span<const PathPoint> pts, std::size_t first, std::size_t last,
                        double epsilon, std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double max_dist = -1.0;
  std::size_t max_index = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > max_dist) {
      max_dist = d;
      max_index = i;
    }
  }
  if (max_dist > epsilon) {
    keep[max_index] = true;
    rdp_recurse(pts, first, max_index, epsilon, keep);
    rdp_recurse(pts, max_index, last, epsilon, keep);
  }
}

}  // namespace detail

/// Ramer-Douglas-Peucker simplification in normalized (x, y) space.
///
/// The first and last points and both points around every gripper event are
/// pinned; RDP then runs independently on each stretch between consecutive
/// pinned points. A point is kept when its distance to the current chord is
/// strictly greater than `epsilon`. The result is a subsequence of the input.
inline Path2D rdp_simplify(const Path2D& path, double epsilon = 0.05) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  const auto& pts = path.points();
  const std::size_t n = pts.size();
  std::vector<bool> keep(n, false);
  keep.front() = true;
  keep.back() = true;
  for (const auto& ev : events(path)) {
    keep[ev.index - 1] = true;
    keep[ev.index] = true;
  }
  std::vector<std::size_t> pinned;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) pinned.push_back(i);
  }
  for (std::size_t k = 1; k < pinned.size(); ++k) {
    detail::rdp_recurse(pts, pinned[k - 1], pinned[k], epsilon, keep);
  }
  std::vector<PathPoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(pts[i]);
  }
  return Path2D(std::move(out));
}

/// Resamples to `n` points spaced equally in arc length, then inserts the
/// point at which each gripper event takes effect at its original
/// coordinates. A sample takes the gripper state of the segment it lies on,
/// where segment i (points[i] -> points[i + 1]) carries points[i]'s state.
/// Zero-length paths yield the first point repeated `n` times followed by the
/// event points.
inline Path2D resample_fixed(const Path2D& path, std::size_t n = 20) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "resample count must be >= 2");
  const auto& pts = path.points();
  const auto evs = events(path);

  std::vector<double> cumulative(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  }
  const double total = cumulative.back();

  std::vector<PathPoint> out;
  out.reserve(n + evs.size());
  if (total == 0.0) {
    out.assign(n, pts.front());
    for (const auto& ev : evs) out.push_back(pts[ev.index]);
    return Path2D(std::move(out));
  }

  // Samples and events are merged by arc position. Events sort after a sample
  // at the same position so the sample keeps its slot.
  std::size_t next_event = 0;
  auto flush_events_up_to = [&](double s) {
    while (next_event < evs.size() && cumulative[evs[next_event].index] < s) {
      const PathPoint& ep = pts[evs[next_event].index];
      if (out.empty() || !(out.back() == ep)) out.push_back(ep);
      ++next_event;
    }
  };

  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = (k + 1 == n) ? total : total * static_cast<double>(k) / static_cast<double>(n - 1);
    flush_events_up_to(s);
    // Advance to the segment containing s; ties at a vertex pick the later
    // segment so the sample inherits the vertex's own state.
    while (seg + 1 < pts.size() - 1 && cumulative[seg + 1] <= s) ++seg;
    PathPoint sample;
    if (k + 1 == n) {
      sample = pts.back();
    } else {
      const double seg_len = cumulative[seg + 1] - cumulative[seg];
      const double t = seg_len > 0.0 ? (s - cumulative[seg]) / seg_len : 0.0;
      sample.x = pts[seg].x + t * (pts[seg + 1].x - pts[seg].x);
      sample.y = pts[seg].y + t * (pts[seg + 1].y - pts[seg].y);
      sample.gripper_open = pts[seg].gripper_open;
    }
    out.push_back(sample);
  }
  // Events at the very end of the path.
  while (next_event < evs.size()) {
    const PathPoint& ep = pts[evs[next_event].index];
    if (!(out.back() == ep)) out.push_back(ep);
    ++next_event;
  }
  return Path2D(std::move(out));
}

/// Adds N(0, sigma) jitter to every x and y, clamped to [0, 1]. Gripper state
/// is left untouched. Deterministic for a given seed on a given standard
/// library.
inline Path2D add_noise(const Path2D& path, double sigma = 0.01, std::uint64_t seed = 0) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be >= 0");
  if (sigma == 0.0) return path;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  std::vector<PathPoint> out = path.points();
  for (auto& p : out) {
    p.x = std::clamp(p.x + gauss(rng), 0.0, 1.0);
    p.y = std::clamp(p.y + gauss(rng), 0.0, 1.0);
  }
  return Path2D(std::move(out));
}

}  // namespace vlapath
