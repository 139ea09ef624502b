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

// vlapath command line: convert, mix, stats, render, filter, simulate, serve.
//
// Exit codes: 0 success, 1 batch-level failure, 2 bad arguments.
// Every subcommand accepts --config FILE, a JSON object whose keys are the
// long flag names (with '-' or '_'); flags given on the command line win.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vlapath/dataset_pipeline.hpp"
#include "vlapath/hier_harness.hpp"
#include "vlapath/image_io.hpp"
#include "vlapath/rank_http.hpp"
#include "vlapath/render.hpp"

namespace fs = std::filesystem;
using vlapath::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBatchFailure = 1;
constexpr int kExitBadArgs = 2;

struct BadArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw vlapath::Error(vlapath::ErrorCode::kIo, "cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Expands `--config FILE` into flag tokens placed ahead of the user's own
/// flags. Options use TakeLast, so explicit flags override the file.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 1; i + 1 < args.size(); ++i) {
    if (args[i] != "--config") continue;
    const fs::path file = args[i + 1];
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    json cfg;
    try {
      cfg = json::parse(read_text(file));
    } catch (const std::exception& e) {
      throw BadArgument("bad config file " + file.string() + ": " + e.what());
    }
    if (!cfg.is_object()) throw BadArgument("config file must hold a JSON object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      tokens.push_back(flag);
      tokens.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
    // After the program name and subcommand.
    const std::size_t at = std::min<std::size_t>(2, args.size());
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), tokens.begin(), tokens.end());
    break;
  }
  return args;
}

void write_json_file(const fs::path& file, const json& j) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw vlapath::Error(vlapath::ErrorCode::kIo, "cannot write " + file.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

struct ConvertArgs {
  std::string manifest, out, rep = "rdp";
  double epsilon = 0.05, min_visibility = 0.9;
  std::size_t shard_size = 10000;
  unsigned workers = 1;
};

int run_convert(const ConvertArgs& a) {
  vlapath::ConvertConfig cfg;
  cfg.epsilon = a.epsilon;
  cfg.min_visibility = a.min_visibility;
  cfg.shard_size = a.shard_size;
  cfg.workers = a.workers;
  cfg.representation = a.rep == "rdp" ? vlapath::PathRepresentation::kRdp : vlapath::PathRepresentation::kFixed20;
  const auto manifest = vlapath::load_manifest(a.manifest);
  const auto result = vlapath::convert(manifest, cfg);
  vlapath::write_shards(a.out, result);
  std::size_t samples = 0;
  for (const auto& s : result.shards) samples += s.samples.size();
  std::cout << json{{"records", manifest.records.size() + manifest.invalid.size()},
                    {"samples", samples},
                    {"shards", result.shards.size()},
                    {"rejections", result.rejections.size()}}
                   .dump()
            << '\n';
  const bool nothing_converted = samples == 0 && !result.rejections.empty();
  return nothing_converted ? kExitBatchFailure : kExitOk;
}

struct MixArgs {
  std::string spec, out;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
};

int run_mix(const MixArgs& a) {
  const json spec_json = json::parse(read_text(a.spec));
  const fs::path base = fs::path(a.spec).parent_path();
  vlapath::MixSpec spec;
  spec.seed = a.seed ? *a.seed : spec_json.value("seed", std::uint64_t{0});
  for (const auto& [tag, paths] : spec_json.at("sources").items()) {
    vlapath::MixSource src{tag, {}};
    for (const auto& p : paths) {
      fs::path path = p.get<std::string>();
      if (path.is_relative()) path = base / path;
      if (fs::is_directory(path)) {
        for (auto& shard : vlapath::load_shards(path).shards) {
          src.samples.insert(src.samples.end(), shard.samples.begin(), shard.samples.end());
        }
      } else {
        auto samples = vlapath::read_samples(path);
        src.samples.insert(src.samples.end(), samples.begin(), samples.end());
      }
    }
    spec.sources.push_back(std::move(src));
  }
  vlapath::Mixer mixer(spec);
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw vlapath::Error(vlapath::ErrorCode::kIo, "cannot write " + a.out);
  for (std::size_t i = 0; i < a.n; ++i) {
    const auto d = mixer.next_draw();
    json j = vlapath::to_json(spec.sources[d.source].samples[d.sample]);
    j["mix_source"] = spec.sources[d.source].tag;
    out << j.dump() << '\n';
  }
  return kExitOk;
}

int run_stats(const std::string& in, const std::string& out) {
  const auto loaded = vlapath::load_shards(in);
  const json report = vlapath::to_json(vlapath::stats(loaded.shards, loaded.rejections));
  if (!out.empty()) write_json_file(out, report);
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

struct RenderArgs {
  std::string image, answer, style, mode = "overlay", out;
};

int run_render(const RenderArgs& a) {
  vlapath::OverlayStyle style;
  if (!a.style.empty()) style = vlapath::style_from_json(json::parse(read_text(a.style)));
  style.mode = a.mode == "overlay" ? vlapath::RenderMode::kOverlay : vlapath::RenderMode::kConcatChannels;
  const vlapath::Image img = vlapath::read_png(a.image);
  const vlapath::Path2D path = vlapath::parse_answer(read_text(a.answer), vlapath::ParseMode::kLenient);
  const vlapath::Image rendered = vlapath::render_path(img, path, style);
  const fs::path out = a.out;
  if (rendered.channels == 3) {
    vlapath::write_png(out, rendered);
  } else if (out.extension() == ".raw") {
    vlapath::write_planar(out, rendered);
  } else {
    const fs::path stem = out.parent_path() / out.stem();
    vlapath::write_png(stem.string() + "_rgb.png", vlapath::extract_rgb(rendered, 0));
    vlapath::write_png(stem.string() + "_path.png", vlapath::extract_rgb(rendered, 3));
  }
  return kExitOk;
}

struct FilterArgs {
  std::string manifest, out;
  double threshold = 0.0, min_visibility = 0.9;
};

int run_filter(const FilterArgs& a) {
  const auto manifest = vlapath::load_manifest(a.manifest);
  std::vector<json> lines;
  std::size_t kept = 0;
  for (const auto& r : manifest.invalid) {
    lines.push_back({{"index", r.index}, {"id", r.id}, {"status", "rejected"}, {"reason", r.reason}, {"detail", r.detail}});
  }
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& rec = manifest.records[i];
    json line = {{"index", manifest.line_index[i]}, {"id", rec.id}};
    auto reject = [&](const std::string& reason, const std::string& detail) {
      line["status"] = "rejected";
      line["reason"] = reason;
      line["detail"] = detail;
    };
    if (rec.correspondences.empty()) {
      reject("no_correspondences", "alignment cannot be checked without labeled correspondences");
    } else {
      try {
        const std::vector<vlapath::AlignmentCandidate> cand{
            {rec.trajectory, rec.correspondences, vlapath::resolve_extrinsics(rec)}};
        const auto report = vlapath::filter_by_alignment(cand, rec.intrinsics, a.threshold, a.min_visibility);
        if (report.kept.empty()) {
          reject(report.rejected.front().reason, report.rejected.front().detail);
        } else {
          line["status"] = "kept";
          ++kept;
        }
      } catch (const vlapath::Error& e) {
        reject("pnp", e.what());
      }
    }
    lines.push_back(line);
  }
  std::sort(lines.begin(), lines.end(), [](const json& x, const json& y) { return x["index"] < y["index"]; });
  if (!a.out.empty()) vlapath::write_jsonl(a.out, lines);
  for (const auto& l : lines) std::cout << l.dump() << '\n';
  std::cerr << kept << " kept, " << lines.size() - kept << " rejected\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string policy = "follower", report;
  std::size_t episodes = 100;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a) {
  namespace h = vlapath::harness;
  const auto policy = a.policy == "follower" ? h::Policy::kPathFollower : h::Policy::kRandom;
  const auto eval = h::run_eval(a.episodes, policy, a.noise, a.seed);
  json per = json::array();
  for (const auto& e : eval.episodes) {
    per.push_back({{"index", e.index},
                   {"task", std::string(h::to_string(e.task_kind))},
                   {"score", e.score},
                   {"completed", e.completed},
                   {"ticks", e.ticks},
                   {"planner_calls", e.planner_calls}});
  }
  const json report = {{"policy", a.policy},  {"episodes", a.episodes},
                       {"noise", a.noise},    {"seed", a.seed},
                       {"mean_score", eval.mean_score}, {"completion_rate", eval.completion_rate},
                       {"per_episode", per}};
  if (!a.report.empty()) write_json_file(a.report, report);
  std::cout << json{{"mean_score", eval.mean_score}, {"completion_rate", eval.completion_rate}}.dump() << '\n';
  return kExitOk;
}

struct ServeArgs {
  std::string host = "127.0.0.1", data, static_dir, image_root = ".";
  int port = 8080;
};

int run_serve(const ServeArgs& a) {
  vlapath::ranking::RankService service(a.data);
  httplib::Server server;
  vlapath::ranking::HttpOptions opts;
  opts.static_dir = a.static_dir;
  opts.image_root = a.image_root;
  vlapath::ranking::mount_routes(server, service, opts);
  std::cerr << "listening on " << a.host << ':' << a.port << '\n';
  if (!server.listen(a.host, a.port)) {
    std::cerr << "cannot listen on " << a.host << ':' << a.port << '\n';
    return kExitBatchFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory-to-2D-path dataset toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  ConvertArgs convert_args;
  auto* convert = app.add_subcommand("convert", "Convert a trajectory manifest into VQA shards");
  convert->add_option("--manifest", convert_args.manifest, "Manifest (JSON Lines)")->required();
  convert->add_option("--out", convert_args.out, "Output directory")->required();
  convert->add_option("--epsilon", convert_args.epsilon, "RDP tolerance")->check(CLI::PositiveNumber);
  convert->add_option("--rep", convert_args.rep, "Path representation")->check(CLI::IsMember({"rdp", "fixed20"}));
  convert->add_option("--min-visibility", convert_args.min_visibility)->check(CLI::Range(0.0, 1.0));
  convert->add_option("--shard-size", convert_args.shard_size)->check(CLI::PositiveNumber);
  convert->add_option("--workers", convert_args.workers)->check(CLI::PositiveNumber);

  MixArgs mix_args;
  std::uint64_t mix_seed = 0;
  auto* mix = app.add_subcommand("mix", "Draw an equal-weight sample stream from several sources");
  mix->add_option("--spec", mix_args.spec, "Mix spec (JSON)")->required();
  mix->add_option("--n", mix_args.n, "Number of draws")->required();
  auto* seed_opt = mix->add_option("--seed", mix_seed, "Overrides the spec seed");
  mix->add_option("--out", mix_args.out, "Output JSON Lines")->required();

  std::string stats_in, stats_out;
  auto* stats = app.add_subcommand("stats", "Summarize a shard directory");
  stats->add_option("--in", stats_in)->required();
  stats->add_option("--out", stats_out, "Also write the report here");

  RenderArgs render_args;
  auto* render = app.add_subcommand("render", "Draw an answer path onto an image");
  render->add_option("--image", render_args.image, "Input PNG")->required();
  render->add_option("--answer", render_args.answer, "File holding an <ans> answer")->required();
  render->add_option("--style", render_args.style, "Style JSON");
  render->add_option("--mode", render_args.mode)->check(CLI::IsMember({"overlay", "concat"}));
  render->add_option("--out", render_args.out)->required();

  FilterArgs filter_args;
  auto* filter = app.add_subcommand("filter", "Check extrinsics quality by reprojection error");
  filter->add_option("--manifest", filter_args.manifest)->required();
  filter->add_option("--threshold", filter_args.threshold, "Max RMSE in pixels")->required()->check(CLI::PositiveNumber);
  filter->add_option("--min-visibility", filter_args.min_visibility)->check(CLI::Range(0.0, 1.0));
  filter->add_option("--out", filter_args.out, "Decisions (JSON Lines)");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run the toy hierarchical harness");
  simulate->add_option("--policy", sim_args.policy)->check(CLI::IsMember({"follower", "random"}));
  simulate->add_option("--episodes", sim_args.episodes)->check(CLI::PositiveNumber);
  simulate->add_option("--noise", sim_args.noise)->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim_args.seed);
  simulate->add_option("--report", sim_args.report);

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Serve ranking sessions over HTTP");
  serve->add_option("--host", serve_args.host);
  serve->add_option("--port", serve_args.port);
  serve->add_option("--data", serve_args.data, "Session log directory");
  serve->add_option("--static", serve_args.static_dir, "Directory for rendered candidate images");
  serve->add_option("--image-root", serve_args.image_root, "Base directory of item images");

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadArgs;
  } catch (const BadArgument& e) {
    std::cerr << e.what() << '\n';
    return kExitBadArgs;
  }
  if (seed_opt->count() > 0) mix_args.seed = mix_seed;

  try {
    if (*convert) return run_convert(convert_args);
    if (*mix) return run_mix(mix_args);
    if (*stats) return run_stats(stats_in, stats_out);
    if (*render) return run_render(render_args);
    if (*filter) return run_filter(filter_args);
    if (*simulate) return run_simulate(sim_args);
    if (*serve) return run_serve(serve_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBatchFailure;
  }
  return kExitBadArgs;
}
