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

// Integer-only path rasterization. Output is byte-identical across platforms:
// the only floating point step is denormalization, floor(v * size + 0.5).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <variant>
#include <vector>

#include "vlapath/error.hpp"
#include "vlapath/pathcore.hpp"

namespace vlapath {

/// Row-major, channel-interleaved 8-bit image.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0) : width(w), height(h), channels(c) {
    if (w < 1 || h < 1 || (c != 3 && c != 6)) {
      throw Error(ErrorCode::kInvalidArgument, "image must be at least 1x1 with 3 or 6 channels");
    }
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
  }

  std::uint8_t* pixel(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * channels; }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

enum class RenderMode { kOverlay, kConcatChannels };

struct OverlayStyle {
  int line_width = 3;
  Rgb gradient_start{0, 0, 255};
  Rgb gradient_end{255, 0, 0};
  Rgb close_color{0, 255, 0};
  Rgb open_color{0, 0, 255};
  int circle_radius = 6;
  RenderMode mode = RenderMode::kOverlay;

  void validate() const {
    if (line_width < 1) throw Error(ErrorCode::kInvalidArgument, "line_width must be >= 1");
    if (circle_radius < 1) throw Error(ErrorCode::kInvalidArgument, "circle_radius must be >= 1");
  }
};

/// Colors used by the ranking study figures: blue close, red open.
inline OverlayStyle ranking_study_style() {
  OverlayStyle s;
  s.close_color = {0, 0, 255};
  s.open_color = {255, 0, 0};
  return s;
}

struct SegmentOp {
  int x0, y0, x1, y1;
  Rgb color;
};
struct DiscOp {
  int x, y, radius;
  Rgb color;
};
using DrawOp = std::variant<SegmentOp, DiscOp>;

/// Round-half-up denormalization clamped to the pixel grid.
inline int denormalize(double v, int size) {
  const double scaled = std::floor(v * static_cast<double>(size) + 0.5);
  if (!(scaled >= 0.0)) return 0;
  if (scaled >= static_cast<double>(size - 1)) return size - 1;
  return static_cast<int>(scaled);
}

inline Rgb lerp_color(Rgb a, Rgb b, int num, int den) {
  if (den <= 0) return a;
  auto mix = [&](int ca, int cb) {
    return static_cast<std::uint8_t>((ca * (den - num) + cb * num + den / 2) / den);
  };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

/// Ordered draw list for a path: one segment per consecutive pair (or a
/// single dot for one-point paths), then one disc per gripper event.
/// With S segments, segment k takes gradient fraction k / (S - 1).
inline std::vector<DrawOp> plan_overlay(const Path2D& path, const OverlayStyle& style, int width, int height) {
  std::vector<DrawOp> ops;
  const auto& pts = path.points();
  auto px = [&](const PathPoint& p) { return denormalize(p.x, width); };
  auto py = [&](const PathPoint& p) { return denormalize(p.y, height); };
  if (pts.size() == 1) {
    ops.push_back(SegmentOp{px(pts[0]), py(pts[0]), px(pts[0]), py(pts[0]), style.gradient_start});
  }
  const int segments = static_cast<int>(pts.size()) - 1;
  for (int k = 0; k < segments; ++k) {
    const auto& a = pts[static_cast<std::size_t>(k)];
    const auto& b = pts[static_cast<std::size_t>(k) + 1];
    ops.push_back(SegmentOp{px(a), py(a), px(b), py(b),
                            lerp_color(style.gradient_start, style.gradient_end, k, segments - 1)});
  }
  for (const auto& ev : events(path)) {
    const auto& p = pts[ev.index];
    ops.push_back(DiscOp{px(p), py(p), style.circle_radius,
                         ev.kind == GripperAction::kClose ? style.close_color : style.open_color});
  }
  return ops;
}

namespace detail {

inline void put_rgb(Image& img, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  auto* p = img.pixel(x, y);
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
}

inline void stamp_square(Image& img, int x, int y, int width, Rgb c) {
  const int lo = -(width - 1) / 2;
  const int hi = width / 2;
  for (int dy = lo; dy <= hi; ++dy) {
    for (int dx = lo; dx <= hi; ++dx) put_rgb(img, x + dx, y + dy, c);
  }
}

/// Supercover traversal: visits every cell the segment between the two cell
/// centers passes through, including both neighbours at exact corner hits.
template <typename Plot>
void supercover_line(int x0, int y0, int x1, int y1, Plot&& plot) {
  int dx = x1 - x0;
  int dy = y1 - y0;
  const int xstep = dx < 0 ? -1 : 1;
  const int ystep = dy < 0 ? -1 : 1;
  dx = std::abs(dx);
  dy = std::abs(dy);
  const int ddx = 2 * dx;
  const int ddy = 2 * dy;
  int x = x0;
  int y = y0;
  plot(x, y);
  if (ddx >= ddy) {
    int error = dx;
    int error_prev = dx;
    for (int i = 0; i < dx; ++i) {
      x += xstep;
      error += ddy;
      if (error > ddx) {
        y += ystep;
        error -= ddx;
        if (error + error_prev < ddx) {
          plot(x, y - ystep);
        } else if (error + error_prev > ddx) {
          plot(x - xstep, y);
        } else {
          plot(x, y - ystep);
          plot(x - xstep, y);
        }
      }
      plot(x, y);
      error_prev = error;
    }
  } else {
    int error = dy;
    int error_prev = dy;
    for (int i = 0; i < dy; ++i) {
      y += ystep;
      error += ddx;
      if (error > ddy) {
        x += xstep;
        error -= ddy;
        if (error + error_prev < ddy) {
          plot(x - xstep, y);
        } else if (error + error_prev > ddy) {
          plot(x, y - ystep);
        } else {
          plot(x - xstep, y);
          plot(x, y - ystep);
        }
      }
      plot(x, y);
      error_prev = error;
    }
  }
}

inline void execute(Image& img, const std::vector<DrawOp>& ops, int line_width) {
  for (const auto& op : ops) {
    if (const auto* s = std::get_if<SegmentOp>(&op)) {
      supercover_line(s->x0, s->y0, s->x1, s->y1,
                      [&](int x, int y) { stamp_square(img, x, y, line_width, s->color); });
    } else {
      const auto& d = std::get<DiscOp>(op);
      const int r2 = d.radius * d.radius;
      for (int dy = -d.radius; dy <= d.radius; ++dy) {
        for (int dx = -d.radius; dx <= d.radius; ++dx) {
          if (dx * dx + dy * dy <= r2) put_rgb(img, d.x + dx, d.y + dy, d.color);
        }
      }
    }
  }
}

}  // namespace detail

/// Draws the path onto a copy of a 3-channel image.
inline Image draw_overlay(const Image& img, const Path2D& path, const OverlayStyle& style) {
  if (style.mode != RenderMode::kOverlay) throw Error(ErrorCode::kInvalidArgument, "style mode is not overlay");
  if (img.channels != 3) throw Error(ErrorCode::kChannelMismatch, "overlay needs a 3-channel image");
  style.validate();
  Image out = img;
  detail::execute(out, plan_overlay(path, style, img.width, img.height), style.line_width);
  return out;
}

/// Six-channel image: the input RGB in channels 0-2 and the path drawn on
/// black in channels 3-5.
inline Image draw_concat(const Image& img, const Path2D& path, const OverlayStyle& style) {
  if (style.mode != RenderMode::kConcatChannels) {
    throw Error(ErrorCode::kInvalidArgument, "style mode is not concat");
  }
  if (img.channels != 3) throw Error(ErrorCode::kChannelMismatch, "concat needs a 3-channel image");
  style.validate();
  Image layer(img.width, img.height, 3, 0);
  detail::execute(layer, plan_overlay(path, style, img.width, img.height), style.line_width);
  Image out(img.width, img.height, 6, 0);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(img.data.data() + i * 3, 3, out.data.data() + i * 6);
    std::copy_n(layer.data.data() + i * 3, 3, out.data.data() + i * 6 + 3);
  }
  return out;
}

/// Dispatches on `style.mode`.
inline Image render_path(const Image& img, const Path2D& path, const OverlayStyle& style) {
  return style.mode == RenderMode::kOverlay ? draw_overlay(img, path, style) : draw_concat(img, path, style);
}

/// Channels [first, first + 3) of a 6-channel image as an RGB image.
inline Image extract_rgb(const Image& img, int first) {
  if (img.channels < first + 3) throw Error(ErrorCode::kChannelMismatch, "not enough channels");
  Image out(img.width, img.height, 3, 0);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(img.data.data() + i * img.channels + first, 3, out.data.data() + i * 3);
  }
  return out;
}

}  // namespace vlapath
