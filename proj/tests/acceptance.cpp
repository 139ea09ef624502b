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

// Release acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "fuzz.hpp"
#include "golden.hpp"
#include "synth.hpp"
#include "test_util.hpp"
#include "vlapath/vlapath.hpp"

using namespace vlapath;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  failures += !o.pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome rdp_compression() {
  std::mt19937_64 rng(2024);
  std::vector<Path2D> strokes;
  for (int i = 0; i < 500; ++i) strokes.push_back(test::pick_place_stroke(rng));
  const auto t0 = Clock::now();
  double total = 0.0;
  for (const auto& s : strokes) {
    const Path2D simplified = rdp_simplify(s, 0.05);
    // Each event pins the two points on either side of the state change;
    // together they stand for one waypoint, so one point per event is
    // excluded.
    total += static_cast<double>(simplified.size() - events(simplified).size());
  }
  const double elapsed = seconds_since(t0);
  const double mean = total / 500.0;
  return {mean >= 2.0 && mean <= 7.0 && elapsed < 1.0, fmt("mean size %.3f in [2, 7], %.3f s < 1 s", mean, elapsed)};
}

Outcome rdp_oracle() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> len(1, 12);
  std::size_t mismatches = 0, checked = 0;
  for (double eps : {0.01, 0.05, 0.15}) {
    for (int i = 0; i < 1000; ++i) {
      const Path2D p = test::random_path(rng, len(rng), 0.25);
      mismatches += !(rdp_simplify(p, eps) == test::reference_rdp(p, eps));
      ++checked;
    }
  }
  return {mismatches == 0, fmt("%zu/%zu paths differ from the reference", mismatches, checked)};
}

Outcome pnp_recovery() {
  std::mt19937_64 rng(5150);
  const CameraIntrinsics k = test::test_camera();
  const auto world = test::cube_corners();
  std::normal_distribution<double> noise(0.0, 0.5);
  double worst_rot = 0.0, worst_trans = 0.0, worst_ratio = 0.0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 100; ++i) {
    const CameraExtrinsics truth = test::random_pose(rng);
    auto corrs = test::exact_correspondences(world, k, truth);
    const CameraExtrinsics est = solve_pnp(corrs, k);
    worst_rot = std::max(worst_rot, test::geodesic_angle(est.rotation, truth.rotation));
    worst_trans = std::max(worst_trans, (est.translation - truth.translation).norm());
    for (auto& c : corrs) c.pixel += Eigen::Vector2d(noise(rng), noise(rng));
    const double rmse = reprojection_rmse(corrs, k, solve_pnp(corrs, k));
    worst_ratio = std::max(worst_ratio, rmse / 0.5);
  }
  const double elapsed = seconds_since(t0);
  const bool ok = worst_rot < 1e-6 && worst_trans < 1e-6 && worst_ratio <= 2.0 && elapsed < 5.0;
  return {ok, fmt("max rotation err %.2e rad, max translation err %.2e m, max noisy RMSE %.3f x sigma, %.3f s",
                  worst_rot, worst_trans, worst_ratio, elapsed)};
}

Outcome round_trip() {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<std::size_t> len(1, 30);
  std::size_t failures_rt = 0;
  for (int i = 0; i < 10000; ++i) {
    // High flip rates give back-to-back events ("ties") on adjacent points.
    const Path2D p = test::random_path(rng, len(rng), i % 2 ? 0.9 : 0.3);
    if (!(parse_answer(serialize_answer(p), ParseMode::kStrict) == quantize(p))) ++failures_rt;
  }
  const std::string example =
      "<ans>[(0.25, 0.32), (0.32, 0.17), (0.13, 0.24), <action>Open Gripper</action>, (0.74, 0.21), "
      "<action>Close Gripper</action>]</ans>";
  const auto parsed = parse_answer_detailed(example, ParseMode::kStrict);
  int opens = 0, closes = 0;
  for (const auto& t : parsed.tokens) {
    if (const auto* a = std::get_if<ActionToken>(&t)) (a->action == GripperAction::kOpen ? opens : closes)++;
  }
  // The prompt's own example trails off with "..."; only Lenient takes it.
  const std::string prompt_example =
      "<ans>[(0.25, 0.32), (0.32, 0.17), (0.13, 0.24), <action>Open Gripper</action>, (0.74, 0.21), "
      "<action>Close Gripper</action>, ...]</ans>";
  const bool lenient_same = parse_answer(prompt_example, ParseMode::kLenient) == parsed.path;
  const bool ok = failures_rt == 0 && parsed.path.size() == 4 && opens == 1 && closes == 1 && lenient_same;
  return {ok, fmt("%zu/10000 round-trip mismatches; example: %zu points, %d Open, %d Close, lenient prompt form %s",
                  failures_rt, parsed.path.size(), opens, closes, lenient_same ? "agrees" : "differs")};
}

Outcome parser_fuzz() {
  std::mt19937_64 rng(424242);
  std::size_t violations = 0;
  double slowest = 0.0;
  std::string first;
  for (int i = 0; i < 1000000; ++i) {
    const std::string input = i % 2 ? test::random_bytes(rng, 256) : test::mutate_canonical(rng);
    const auto t0 = Clock::now();
    const auto v = test::check_parse_contract(input);
    slowest = std::max(slowest, seconds_since(t0));
    if (v) {
      if (violations == 0) first = *v;
      ++violations;
    }
  }
  return {violations == 0 && slowest < 0.1,
          fmt("%zu contract violations%s%s, slowest input %.3f ms", violations, first.empty() ? "" : ", first: ",
              first.c_str(), slowest * 1e3)};
}

Outcome render_determinism() {
  const auto cases = test::load_golden_cases(VLAPATH_FIXTURES);
  std::size_t bad = 0;
  for (const auto& c : cases) {
    const auto a = test::render_golden_case(c);
    const auto b = test::render_golden_case(c);
    const bool ok = a.overlay == b.overlay && a.concat == b.concat && a.overlay == read_png(c.overlay_file) &&
                    a.concat == read_planar(c.concat_file) && extract_rgb(a.concat, 0) == c.image;
    bad += !ok;
  }
  std::mt19937_64 rng(99);
  std::size_t count_bad = 0;
  for (int i = 0; i < 200; ++i) {
    const Path2D p = test::random_path(rng, 1 + i % 15, 0.4);
    std::size_t discs = 0;
    for (const auto& op : plan_overlay(p, {}, 64, 64)) discs += std::holds_alternative<DiscOp>(op);
    count_bad += discs != events(p).size();
  }
  return {cases.size() == 20 && bad == 0 && count_bad == 0,
          fmt("%zu golden cases, %zu mismatched; %zu/200 circle-count mismatches", cases.size(), bad, count_bad)};
}

std::string shard_bytes(const ConvertResult& r) {
  std::ostringstream s;
  for (const auto& shard : r.shards) {
    s << shard_file_name(shard) << '\n';
    for (const auto& v : shard.samples) s << to_json(v).dump() << '\n';
  }
  for (const auto& rej : r.rejections) s << to_json(rej).dump() << '\n';
  return s.str();
}

Outcome pipeline() {
  const std::string text = test::synthetic_manifest_text(100, 100);
  const auto t0 = Clock::now();
  std::istringstream in1(text), in2(text);
  const Manifest m = parse_manifest(in1);
  const ConvertResult a = convert(m);
  const ConvertResult b = convert(parse_manifest(in2));
  const double elapsed = seconds_since(t0);
  const bool identical = shard_bytes(a) == shard_bytes(b);

  // Every answer against the simplified projected path of its record.
  ConvertConfig config;
  std::map<std::string, std::string> answer_by_image;
  std::size_t samples = 0;
  for (const auto& shard : a.shards) {
    for (const auto& s : shard.samples) {
      answer_by_image[s.image_ref] = s.answer;
      ++samples;
    }
  }
  double worst = 0.0;
  std::size_t structural = 0;
  for (const auto& rec : m.records) {
    const auto it = answer_by_image.find(rec.image_ref);
    if (it == answer_by_image.end()) continue;
    const Path2D got = parse_answer(it->second);
    const CameraExtrinsics pose = rec.extrinsics ? *rec.extrinsics : resolve_extrinsics(rec);
    const Path2D want = test::expected_answer_path(rec, pose, config.epsilon);
    if (got.size() != want.size()) {
      ++structural;
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      worst = std::max({worst, std::abs(got[i].x - want[i].x), std::abs(got[i].y - want[i].y)});
      structural += got[i].gripper_open != want[i].gripper_open;
    }
  }
  const bool ok = identical && structural == 0 && worst <= 0.005 + 1e-12 && elapsed < 10.0 && samples > 0;
  return {ok, fmt("%zu samples, %zu rejections, reruns %s, max re-parse error %.4f, %.3f s", samples,
                  a.rejections.size(), identical ? "identical" : "differ", worst, elapsed)};
}

Outcome mixing() {
  MixSpec spec;
  spec.seed = 90210;
  spec.sources.push_back({"big", std::vector<VQASample>(90, {"i", "p", "a", SampleSource::kSim})});
  spec.sources.push_back({"small", std::vector<VQASample>(10, {"i", "p", "a", SampleSource::kReal})});
  const std::size_t n = 100000;
  const auto draws = mix(spec, n);
  std::vector<double> counts(100, 0.0);
  std::size_t big = 0;
  for (const auto& d : draws) {
    big += d.source == 0;
    counts[d.source == 0 ? d.sample : 90 + d.sample] += 1.0;
  }
  const double share = static_cast<double>(big) / n;
  const double expected = static_cast<double>(n) / 100.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(99.0), chi2));
  return {std::abs(share - 0.9) <= 0.01 && p > 0.001, fmt("share %.4f (0.9 +- 0.01), chi2 %.2f, p = %.4f", share, chi2, p)};
}

Outcome hierarchical_harness() {
  namespace h = vlapath::harness;
  const auto t0 = Clock::now();
  const auto follower = h::run_eval(100, h::Policy::kPathFollower, 0.0, 1);
  const auto random = h::run_eval(100, h::Policy::kRandom, 0.0, 1);
  const double elapsed = seconds_since(t0);
  std::size_t bad_calls = 0, bad_scores = 0;
  for (const auto* r : {&follower, &random}) {
    for (const auto& e : r->episodes) {
      bad_calls += e.planner_calls != 1;
      bad_scores += std::abs(e.score * 4.0 - std::round(e.score * 4.0)) > 1e-12;
    }
  }
  const bool ok = follower.mean_score >= 0.95 && random.mean_score <= 0.2 && bad_calls == 0 && bad_scores == 0 &&
                  elapsed < 30.0;
  return {ok, fmt("follower %.3f >= 0.95, random %.3f <= 0.2, %zu bad planner counts, %zu off-rubric scores, %.3f s",
                  follower.mean_score, random.mean_score, bad_calls, bad_scores, elapsed)};
}

Outcome rank_aggregation() {
  using namespace vlapath::ranking;
  const std::vector<std::string> methods = {"A", "B", "C", "D"};
  std::vector<RankingItem> items;
  for (int i = 0; i < 48; ++i) {
    RankingItem it{"item" + std::to_string(i), "img.png", "task", {}, {i < 12 ? "real" : "sim"}};
    for (const auto& m : methods) it.candidates.push_back({m, m + ".png", ""});
    items.push_back(it);
  }
  RankingSession session("acceptance", items, 1, {});
  std::mt19937_64 rng(48);
  std::uniform_int_distribution<int> rank(1, 4);
  // Flat table: sums[method], counts[method] for all and for the "real" split.
  std::map<std::string, double> sum_all, sum_real;
  std::map<std::string, int> n_all, n_real;
  for (int r = 0; r < 5; ++r) {
    for (int i = 0; i < 48; ++i) {
      RankRecord rec{items[i].id, "rater" + std::to_string(r), {}};
      for (const auto& m : methods) {
        const int v = rank(rng);
        rec.ranks[m] = v;
        sum_all[m] += v;
        ++n_all[m];
        if (i < 12) {
          sum_real[m] += v;
          ++n_real[m];
        }
      }
      session.submit(rec);
    }
  }
  const auto all = session.aggregate();
  const auto real = session.aggregate("real");
  std::size_t mismatches = 0, out_of_bounds = 0;
  for (const auto& m : methods) {
    mismatches += all.mean_rank.at(m) != sum_all[m] / n_all[m];
    mismatches += real.mean_rank.at(m) != sum_real[m] / n_real[m];
    for (double v : {all.mean_rank.at(m), real.mean_rank.at(m)}) out_of_bounds += v < 1.0 || v > 4.0;
  }
  return {mismatches == 0 && out_of_bounds == 0 && all.records == 240,
          fmt("%zu records, %zu mismatches against the flat table, %zu means outside [1, 4]", all.records, mismatches,
              out_of_bounds)};
}

}  // namespace

int main() {
  report("rdp-compression", rdp_compression);
  report("rdp-oracle-equivalence", rdp_oracle);
  report("pnp-recovery", pnp_recovery);
  report("wire-format-round-trip", round_trip);
  report("parser-robustness", parser_fuzz);
  report("rendering-determinism", render_determinism);
  report("pipeline-determinism-fidelity", pipeline);
  report("equal-weight-mixing", mixing);
  report("hierarchical-harness", hierarchical_harness);
  report("rank-aggregation", rank_aggregation);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
