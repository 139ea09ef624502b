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

// Trajectory manifests -> projected, simplified, serialized VQA shards.
//
// Manifests and shards are JSON Lines. A manifest line:
//
//   {"id": "ep-0", "source": "sim", "camera_id": "front", "image_ref": "ep-0.png",
//    "intrinsics": {"fx": .., "fy": .., "cx": .., "cy": .., "width": .., "height": ..},
//    "extrinsics": {"rotation": [[..],[..],[..]], "translation": [..]},      (optional)
//    "correspondences": [{"world": [x, y, z], "pixel": [u, v]}, ...],        (optional)
//    "instructions": ["..."],
//    "trajectory": {"frames": [{"step": 0, "position": [x, y, z], "gripper_open": true}, ...]}}
//
// Every record needs extrinsics or at least six correspondences.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vlapath/error.hpp"
#include "vlapath/geometry.hpp"
#include "vlapath/json_io.hpp"
#include "vlapath/pathcore.hpp"
#include "vlapath/vqa_format.hpp"

namespace vlapath {

struct ManifestRecord {
  std::string id;
  SampleSource source = SampleSource::kSim;
  Trajectory trajectory;
  std::string camera_id;
  CameraIntrinsics intrinsics;
  std::optional<CameraExtrinsics> extrinsics;
  std::vector<Correspondence> correspondences;
  std::vector<std::string> instructions;
  std::string image_ref;

  void validate() const {
    trajectory.validate();
    intrinsics.validate();
    if (instructions.empty()) throw Error(ErrorCode::kInvalidArgument, "record has no instructions");
    for (const auto& ins : instructions) {
      if (ins.empty()) throw Error(ErrorCode::kInvalidArgument, "empty instruction");
    }
    if (!extrinsics && correspondences.size() < 6) {
      throw Error(ErrorCode::kInvalidArgument, "record needs extrinsics or >= 6 correspondences");
    }
    if (extrinsics) extrinsics->validate();
  }
};

inline ManifestRecord record_from_json(const json& j) {
  ManifestRecord r;
  r.id = j.value("id", "");
  r.source = parse_sample_source(j.value("source", "sim"));
  r.camera_id = j.value("camera_id", "");
  r.image_ref = j.at("image_ref").get<std::string>();
  r.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  if (j.contains("extrinsics") && !j["extrinsics"].is_null()) r.extrinsics = extrinsics_from_json(j["extrinsics"]);
  if (j.contains("correspondences")) {
    for (const auto& c : j["correspondences"]) r.correspondences.push_back(correspondence_from_json(c));
  }
  for (const auto& ins : j.at("instructions")) r.instructions.push_back(ins.get<std::string>());
  r.trajectory = trajectory_from_json(j.at("trajectory"));
  if (r.trajectory.camera_id.empty()) r.trajectory.camera_id = r.camera_id;
  if (r.trajectory.instruction.empty() && !r.instructions.empty()) r.trajectory.instruction = r.instructions.front();
  r.validate();
  return r;
}

inline json to_json(const ManifestRecord& r) {
  json j = {{"id", r.id},
            {"source", to_string(r.source)},
            {"camera_id", r.camera_id},
            {"image_ref", r.image_ref},
            {"intrinsics", to_json(r.intrinsics)},
            {"instructions", r.instructions},
            {"trajectory", to_json(r.trajectory)}};
  if (r.extrinsics) j["extrinsics"] = to_json(*r.extrinsics);
  if (!r.correspondences.empty()) {
    json cs = json::array();
    for (const auto& c : r.correspondences) cs.push_back(to_json(c));
    j["correspondences"] = cs;
  }
  return j;
}

/// One manifest line that failed to parse or convert.
struct Rejection {
  std::size_t index = 0;
  std::string id;
  std::string reason;
  std::string detail;

  friend bool operator==(const Rejection&, const Rejection&) = default;
};

inline json to_json(const Rejection& r) {
  return {{"index", r.index}, {"id", r.id}, {"reason", r.reason}, {"detail", r.detail}};
}

struct Manifest {
  std::vector<ManifestRecord> records;
  /// Line number (0-based, blank lines skipped) of each record.
  std::vector<std::size_t> line_index;
  /// Lines that failed to parse or validate.
  std::vector<Rejection> invalid;
};

inline Manifest parse_manifest(std::istream& in) {
  Manifest m;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      m.records.push_back(record_from_json(j));
      m.line_index.push_back(index);
    } catch (const std::exception& e) {
      std::string id;
      try {
        id = json::parse(line).value("id", "");
      } catch (...) {
      }
      m.invalid.push_back({index, id, "invalid", e.what()});
    }
    ++index;
  }
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + file.string());
  return parse_manifest(in);
}

enum class PathRepresentation { kRdp, kFixed20 };

struct ConvertConfig {
  double epsilon = 0.05;
  PathRepresentation representation = PathRepresentation::kRdp;
  double min_visibility = 0.9;
  std::size_t shard_size = 10000;
  unsigned workers = 1;
};

struct Shard {
  std::vector<VQASample> samples;
  SampleSource source = SampleSource::kSim;
  std::size_t seq = 0;

  friend bool operator==(const Shard&, const Shard&) = default;
};

struct ConvertResult {
  std::vector<Shard> shards;
  std::vector<Rejection> rejections;
};

namespace detail {

struct RecordRejected {
  std::string reason;
  std::string detail;
};

inline Path2D clamp_to_frame(const Path2D& path) {
  std::vector<PathPoint> pts = path.points();
  for (auto& p : pts) {
    p.x = std::clamp(p.x, 0.0, 1.0);
    p.y = std::clamp(p.y, 0.0, 1.0);
  }
  return Path2D(std::move(pts));
}

}  // namespace detail

/// Extrinsics as given, or recovered from the correspondences.
inline CameraExtrinsics resolve_extrinsics(const ManifestRecord& rec) {
  if (rec.extrinsics) return *rec.extrinsics;
  return solve_pnp(rec.correspondences, rec.intrinsics);
}

/// The simplified, clamped answer path for one record. Throws
/// detail::RecordRejected.
inline Path2D record_answer_path(const ManifestRecord& rec, const ConvertConfig& config) {
  CameraExtrinsics extr;
  try {
    extr = resolve_extrinsics(rec);
  } catch (const Error& e) {
    throw detail::RecordRejected{"pnp", e.what()};
  }
  std::optional<ProjectionResult> proj;
  try {
    proj = project_trajectory(rec.trajectory, rec.intrinsics, extr);
  } catch (const Error& e) {
    throw detail::RecordRejected{"projection", e.what()};
  }
  if (proj->visibility < config.min_visibility) {
    throw detail::RecordRejected{"visibility", "visibility " + std::to_string(proj->visibility)};
  }
  const Path2D framed = detail::clamp_to_frame(proj->path);
  return config.representation == PathRepresentation::kRdp ? rdp_simplify(framed, config.epsilon)
                                                           : resample_fixed(framed, 20);
}

inline std::vector<VQASample> convert_record(const ManifestRecord& rec, const ConvertConfig& config) {
  const std::string answer = serialize_answer(record_answer_path(rec, config));
  std::vector<VQASample> out;
  out.reserve(rec.instructions.size());
  for (const auto& ins : rec.instructions) out.push_back({rec.image_ref, render_prompt(ins), answer, rec.source});
  return out;
}

/// Converts every record; failures become rejections. Records may be
/// processed on several workers but output always follows manifest order.
inline ConvertResult convert(const Manifest& manifest, const ConvertConfig& config = {}) {
  if (!(config.epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  if (config.shard_size == 0) throw Error(ErrorCode::kInvalidArgument, "shard size must be > 0");
  const std::size_t n = manifest.records.size();
  struct Outcome {
    std::vector<VQASample> samples;
    std::optional<Rejection> rejection;
  };
  std::vector<Outcome> outcomes(n);
  auto work = [&](std::size_t i) {
    const auto& rec = manifest.records[i];
    const std::size_t line = i < manifest.line_index.size() ? manifest.line_index[i] : i;
    try {
      outcomes[i].samples = convert_record(rec, config);
    } catch (const detail::RecordRejected& r) {
      outcomes[i].rejection = Rejection{line, rec.id, r.reason, r.detail};
    } catch (const std::exception& e) {
      outcomes[i].rejection = Rejection{line, rec.id, "error", e.what()};
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    }
  }

  ConvertResult result;
  result.rejections = manifest.invalid;
  std::map<SampleSource, std::vector<VQASample>> by_source;
  for (auto& o : outcomes) {
    if (o.rejection) {
      result.rejections.push_back(*o.rejection);
    } else {
      for (auto& s : o.samples) by_source[s.source].push_back(std::move(s));
    }
  }
  std::sort(result.rejections.begin(), result.rejections.end(),
            [](const Rejection& a, const Rejection& b) { return a.index < b.index; });
  for (auto& [source, samples] : by_source) {
    for (std::size_t start = 0, seq = 0; start < samples.size(); start += config.shard_size, ++seq) {
      Shard shard;
      shard.source = source;
      shard.seq = seq;
      const std::size_t end = std::min(samples.size(), start + config.shard_size);
      shard.samples.assign(std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(start)),
                           std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(end)));
      result.shards.push_back(std::move(shard));
    }
  }
  return result;
}

inline std::string shard_file_name(const Shard& shard) {
  std::ostringstream name;
  name << to_string(shard.source) << '-';
  name.width(5);
  name.fill('0');
  name << shard.seq << ".jsonl";
  return name.str();
}

inline constexpr const char* kRejectionsFile = "rejections.jsonl";

inline void write_jsonl(const std::filesystem::path& file, const std::vector<json>& lines) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  for (const auto& j : lines) out << j.dump() << '\n';
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + file.string());
}

inline void write_shards(const std::filesystem::path& dir, const ConvertResult& result) {
  std::filesystem::create_directories(dir);
  for (const auto& shard : result.shards) {
    std::vector<json> lines;
    lines.reserve(shard.samples.size());
    for (const auto& s : shard.samples) lines.push_back(to_json(s));
    write_jsonl(dir / shard_file_name(shard), lines);
  }
  std::vector<json> rej;
  for (const auto& r : result.rejections) rej.push_back(to_json(r));
  write_jsonl(dir / kRejectionsFile, rej);
}

inline std::vector<VQASample> read_samples(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  std::vector<VQASample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(sample_from_json(json::parse(line)));
  }
  return out;
}

/// Shards and rejections from a directory written by `write_shards`.
inline ConvertResult load_shards(const std::filesystem::path& dir) {
  ConvertResult result;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    if (f.filename() == kRejectionsFile) {
      std::ifstream in(f);
      std::string line;
      while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const json j = json::parse(line);
        result.rejections.push_back({j.value("index", std::size_t{0}), j.value("id", ""), j.value("reason", ""),
                                     j.value("detail", "")});
      }
      continue;
    }
    Shard shard;
    shard.samples = read_samples(f);
    const std::string stem = f.stem().string();
    const auto dash = stem.rfind('-');
    if (dash != std::string::npos) {
      shard.source = parse_sample_source(stem.substr(0, dash));
      shard.seq = static_cast<std::size_t>(std::stoul(stem.substr(dash + 1)));
    } else if (!shard.samples.empty()) {
      shard.source = shard.samples.front().source;
    }
    result.shards.push_back(std::move(shard));
  }
  // Same order as convert(): by source, then sequence number.
  std::stable_sort(result.shards.begin(), result.shards.end(), [](const Shard& a, const Shard& b) {
    return std::make_pair(a.source, a.seq) < std::make_pair(b.source, b.seq);
  });
  return result;
}

// ---------------------------------------------------------------------------
// Mixing

struct MixSource {
  std::string tag;
  std::vector<VQASample> samples;
};

struct MixSpec {
  std::vector<MixSource> sources;
  std::uint64_t seed = 0;
};

struct MixDraw {
  std::size_t source = 0;
  std::size_t sample = 0;
  friend bool operator==(const MixDraw&, const MixDraw&) = default;
};

/// Draws with replacement, uniformly over the union of all samples, so a
/// source's share equals its share of samples.
class Mixer {
 public:
  explicit Mixer(MixSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {
    std::size_t total = 0;
    for (const auto& s : spec_.sources) {
      offsets_.push_back(total);
      total += s.samples.size();
    }
    if (total == 0) throw Error(ErrorCode::kEmptyMix, "mix has no samples");
    dist_ = std::uniform_int_distribution<std::size_t>(0, total - 1);
  }

  MixDraw next_draw() {
    const std::size_t flat = dist_(rng_);
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat);
    const std::size_t source = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    // Skip empty sources sharing the same offset.
    std::size_t s = source;
    while (flat - offsets_[s] >= spec_.sources[s].samples.size()) ++s;
    return {s, flat - offsets_[s]};
  }

  const VQASample& next() {
    const auto d = next_draw();
    return spec_.sources[d.source].samples[d.sample];
  }

  const MixSpec& spec() const noexcept { return spec_; }

 private:
  MixSpec spec_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> offsets_;
  std::uniform_int_distribution<std::size_t> dist_;
};

inline std::vector<MixDraw> mix(const MixSpec& spec, std::size_t count) {
  Mixer m(spec);
  std::vector<MixDraw> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(m.next_draw());
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct StatsReport {
  std::map<std::string, std::size_t> samples_per_source;
  /// Samples whose answer is a path (sim and real sources).
  std::size_t path_samples = 0;
  double mean_points_per_path = 0.0;
  /// Gripper-event count -> number of path samples.
  std::map<std::size_t, std::size_t> event_histogram;
  std::map<std::string, std::size_t> rejection_reasons;
  std::size_t unparseable_answers = 0;
};

inline StatsReport stats(const std::vector<Shard>& shards, const std::vector<Rejection>& rejections = {}) {
  StatsReport report;
  std::size_t total_points = 0;
  for (const auto& shard : shards) {
    for (const auto& s : shard.samples) {
      ++report.samples_per_source[std::string(to_string(s.source))];
      if (s.source != SampleSource::kSim && s.source != SampleSource::kReal) continue;
      try {
        const Path2D path = parse_answer(s.answer, ParseMode::kStrict);
        ++report.path_samples;
        total_points += path.size();
        ++report.event_histogram[events(path).size()];
      } catch (const Error&) {
        ++report.unparseable_answers;
      }
    }
  }
  if (report.path_samples > 0) {
    report.mean_points_per_path = static_cast<double>(total_points) / static_cast<double>(report.path_samples);
  }
  for (const auto& r : rejections) ++report.rejection_reasons[r.reason];
  return report;
}

inline json to_json(const StatsReport& r) {
  json hist = json::object();
  for (const auto& [k, v] : r.event_histogram) hist[std::to_string(k)] = v;
  return {{"samples_per_source", r.samples_per_source},
          {"path_samples", r.path_samples},
          {"mean_points_per_path", r.mean_points_per_path},
          {"event_histogram", hist},
          {"rejection_reasons", r.rejection_reasons},
          {"unparseable_answers", r.unparseable_answers}};
}

}  // namespace vlapath
