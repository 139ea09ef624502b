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

// JSON conversions for the value types that cross file boundaries.

#pragma once

#include <array>
#include <string>

#include "json.hpp"
#include "vlapath/error.hpp"
#include "vlapath/geometry.hpp"
#include "vlapath/render.hpp"
#include "vlapath/vqa_format.hpp"

namespace vlapath {

using json = nlohmann::json;

inline Eigen::Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kInvalidArgument, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

inline CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  k.validate();
  return k;
}

inline json to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline CameraExtrinsics extrinsics_from_json(const json& j) {
  CameraExtrinsics e;
  const auto& r = j.at("rotation");
  if (!r.is_array() || r.size() != 3) throw Error(ErrorCode::kInvalidArgument, "rotation must be 3x3");
  for (int i = 0; i < 3; ++i) e.rotation.row(i) = vec3_from_json(r[static_cast<std::size_t>(i)]).transpose();
  e.translation = vec3_from_json(j.at("translation"));
  e.validate();
  return e;
}

inline json to_json(const CameraExtrinsics& e) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(to_json(Eigen::Vector3d(e.rotation.row(i).transpose())));
  return {{"rotation", rows}, {"translation", to_json(e.translation)}};
}

inline Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  for (const auto& f : j.at("frames")) {
    EEFrame frame;
    frame.step = f.at("step").get<std::int64_t>();
    frame.position = vec3_from_json(f.at("position"));
    frame.gripper_open = f.value("gripper_open", true);
    t.frames.push_back(frame);
  }
  t.instruction = j.value("instruction", "");
  t.camera_id = j.value("camera_id", "");
  t.validate();
  return t;
}

inline json to_json(const Trajectory& t) {
  json frames = json::array();
  for (const auto& f : t.frames) {
    frames.push_back({{"step", f.step}, {"position", to_json(f.position)}, {"gripper_open", f.gripper_open}});
  }
  return {{"frames", frames}, {"instruction", t.instruction}, {"camera_id", t.camera_id}};
}

inline Correspondence correspondence_from_json(const json& j) {
  Correspondence c;
  c.world = vec3_from_json(j.at("world"));
  const auto& px = j.at("pixel");
  if (!px.is_array() || px.size() != 2) throw Error(ErrorCode::kInvalidArgument, "pixel must be a 2-vector");
  c.pixel = {px[0].get<double>(), px[1].get<double>()};
  return c;
}

inline json to_json(const Correspondence& c) {
  return {{"world", to_json(c.world)}, {"pixel", json::array({c.pixel.x(), c.pixel.y()})}};
}

inline json to_json(const VQASample& s) {
  return {{"image_ref", s.image_ref}, {"prompt", s.prompt}, {"answer", s.answer}, {"source", to_string(s.source)}};
}

inline VQASample sample_from_json(const json& j) {
  VQASample s;
  s.image_ref = j.at("image_ref").get<std::string>();
  s.prompt = j.at("prompt").get<std::string>();
  s.answer = j.at("answer").get<std::string>();
  s.source = parse_sample_source(j.at("source").get<std::string>());
  if (s.answer.empty()) throw Error(ErrorCode::kInvalidArgument, "sample answer must be non-empty");
  return s;
}

inline Rgb rgb_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kInvalidArgument, "color must be [r, g, b]");
  auto channel = [](const json& v) {
    const int c = v.get<int>();
    if (c < 0 || c > 255) throw Error(ErrorCode::kInvalidArgument, "color channel outside [0, 255]");
    return static_cast<std::uint8_t>(c);
  };
  return {channel(j[0]), channel(j[1]), channel(j[2])};
}

inline json to_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

/// Missing keys keep their defaults.
inline OverlayStyle style_from_json(const json& j) {
  OverlayStyle s;
  if (j.contains("line_width")) s.line_width = j["line_width"].get<int>();
  if (j.contains("circle_radius")) s.circle_radius = j["circle_radius"].get<int>();
  if (j.contains("gradient_start")) s.gradient_start = rgb_from_json(j["gradient_start"]);
  if (j.contains("gradient_end")) s.gradient_end = rgb_from_json(j["gradient_end"]);
  if (j.contains("close_color")) s.close_color = rgb_from_json(j["close_color"]);
  if (j.contains("open_color")) s.open_color = rgb_from_json(j["open_color"]);
  if (j.contains("mode")) {
    const auto m = j["mode"].get<std::string>();
    if (m == "overlay") {
      s.mode = RenderMode::kOverlay;
    } else if (m == "concat") {
      s.mode = RenderMode::kConcatChannels;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown render mode '" + m + "'");
    }
  }
  s.validate();
  return s;
}

inline json to_json(const OverlayStyle& s) {
  return {{"line_width", s.line_width},
          {"circle_radius", s.circle_radius},
          {"gradient_start", to_json(s.gradient_start)},
          {"gradient_end", to_json(s.gradient_end)},
          {"close_color", to_json(s.close_color)},
          {"open_color", to_json(s.open_color)},
          {"mode", s.mode == RenderMode::kOverlay ? "overlay" : "concat"}};
}

}  // namespace vlapath
