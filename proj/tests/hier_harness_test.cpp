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

#include "vlapath/hier_harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace vlapath::harness {
namespace {

World pick_place_world() {
  World w;
  w.objects = {{0, ObjectKind::kObject, {0.3, 0.4}, 0.05}, {1, ObjectKind::kContainer, {0.7, 0.6}, 0.1}};
  w.gripper.position = {0.5, 0.9};
  return w;
}

Task pick_place_task() { return {TaskKind::kPickPlace, 0, 1, "put the object in the container"}; }

World button_world() {
  World w;
  w.objects = {{0, ObjectKind::kButton, {0.2, 0.2}, 0.04}};
  w.gripper.position = {0.8, 0.8};
  return w;
}

bool is_quarter_multiple(double s) { return std::abs(s * 4.0 - std::round(s * 4.0)) < 1e-12; }

bool logs_equal(const EpisodeLog& a, const EpisodeLog& b) {
  if (a.positions.size() != b.positions.size() || a.toggles.size() != b.toggles.size() ||
      a.milestones.size() != b.milestones.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    if (!(a.positions[i] == b.positions[i])) return false;
  }
  for (std::size_t i = 0; i < a.toggles.size(); ++i) {
    if (a.toggles[i].tick != b.toggles[i].tick || a.toggles[i].action != b.toggles[i].action) return false;
  }
  for (std::size_t i = 0; i < a.milestones.size(); ++i) {
    if (a.milestones[i].tick != b.milestones[i].tick || a.milestones[i].milestone != b.milestones[i].milestone) {
      return false;
    }
  }
  return a.gripper_open == b.gripper_open && a.completed == b.completed && a.ticks == b.ticks &&
         a.planner_calls == b.planner_calls;
}

TEST(OraclePlanTest, PickPlaceExample) {
  const Path2D p = oracle_plan(pick_place_world(), pick_place_task());
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0], (PathPoint{0.5, 0.9, true}));
  EXPECT_EQ(p[1], (PathPoint{0.3, 0.4, false}));
  EXPECT_EQ(p[2], (PathPoint{0.7, 0.6, true}));
  const auto ev = events(p);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].index, 1u);
  EXPECT_EQ(ev[0].kind, GripperAction::kClose);
  EXPECT_EQ(ev[1].index, 2u);
  EXPECT_EQ(ev[1].kind, GripperAction::kOpen);
}

TEST(OraclePlanTest, PressButtonEndsOnButton) {
  const Path2D p = oracle_plan(button_world(), {TaskKind::kPressButton, 0, -1, "press"});
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p[2].x, 0.2);
  EXPECT_DOUBLE_EQ(p[2].y, 0.2);
  EXPECT_DOUBLE_EQ(p[1].x, 0.2);
  EXPECT_NEAR(p[1].y, 0.2 - kButtonHover, 1e-15);
}

TEST(OraclePlanTest, KnockDownPassesThroughSubject) {
  World w;
  w.objects = {{0, ObjectKind::kObject, {0.5, 0.5}, 0.05}};
  w.gripper.position = {0.1, 0.5};
  const Path2D p = oracle_plan(w, {TaskKind::kKnockDown, 0, -1, "knock"});
  ASSERT_EQ(p.size(), 3u);
  EXPECT_NEAR(p[1].x, 0.5 - kKnockOffset, 1e-15);
  EXPECT_NEAR(p[2].x, 0.5 + kKnockOffset, 1e-15);
  EXPECT_DOUBLE_EQ(p[2].y, 0.5);
}

TEST(OraclePlanTest, SimplificationLeavesPlansUnchanged) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 300; ++i) {
    const Scenario sc = generate_scenario(rng);
    const Path2D p = oracle_plan(sc.world, sc.task);
    EXPECT_EQ(rdp_simplify(p, 0.05), p);
  }
}

TEST(OraclePlanTest, InvalidTaskThrows) {
  EXPECT_THROW(oracle_plan(pick_place_world(), {TaskKind::kPickPlace, 0, 7, ""}), Error);
  EXPECT_THROW(oracle_plan(pick_place_world(), {TaskKind::kPressButton, 9, -1, ""}), Error);
}

TEST(RunEpisodeTest, FollowerCompletesPickPlace) {
  const auto log = run_episode(pick_place_world(), pick_place_task(), Policy::kPathFollower, 0.0, 1);
  EXPECT_TRUE(log.completed);
  EXPECT_LT(log.ticks, 200);
  EXPECT_EQ(log.planner_calls, 1);
  EXPECT_DOUBLE_EQ(success_score(log, pick_place_task()), 1.0);
  ASSERT_EQ(log.toggles.size(), 2u);
  EXPECT_EQ(log.toggles[0].action, GripperAction::kClose);
  EXPECT_EQ(log.toggles[1].action, GripperAction::kOpen);
  EXPECT_EQ(log.positions.size(), static_cast<std::size_t>(log.ticks) + 1);
}

TEST(RunEpisodeTest, PlannerCalledExactlyOnce) {
  int calls = 0;
  const Planner counting = [&](const World& w, const Task& t) {
    ++calls;
    return oracle_plan(w, t);
  };
  std::mt19937_64 rng(2);
  for (int i = 0; i < 30; ++i) {
    const Scenario sc = generate_scenario(rng);
    calls = 0;
    const auto log = run_episode(sc.world, sc.task, i % 2 ? Policy::kRandom : Policy::kPathFollower, 0.0, i, counting);
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(log.planner_calls, 1);
  }
}

TEST(RunEpisodeTest, SameSeedSameLog) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Scenario sc = generate_scenario(rng);
    for (Policy policy : {Policy::kPathFollower, Policy::kRandom}) {
      const auto a = run_episode(sc.world, sc.task, policy, 0.05, 99);
      const auto b = run_episode(sc.world, sc.task, policy, 0.05, 99);
      EXPECT_TRUE(logs_equal(a, b));
    }
  }
}

TEST(RunEpisodeTest, EpisodesStopAtTickLimit) {
  World w = pick_place_world();
  // The random walker almost surely never finishes; it must still stop.
  const auto log = run_episode(w, pick_place_task(), Policy::kRandom, 0.0, 5);
  EXPECT_LE(log.ticks, kMaxTicks);
  for (std::size_t i = 1; i < log.positions.size(); ++i) {
    EXPECT_LE(distance(log.positions[i], log.positions[i - 1]), kTickStep + 1e-12);
    EXPECT_GE(log.positions[i].x, 0.0);
    EXPECT_LE(log.positions[i].x, 1.0);
  }
}

TEST(SuccessScoreTest, Rubric) {
  const Task pp = pick_place_task();
  EpisodeLog log;
  EXPECT_EQ(success_score(log, pp), 0.0);
  log.milestones = {{Milestone::kReach, 3}};
  EXPECT_EQ(success_score(log, pp), 0.25);
  log.milestones.push_back({Milestone::kGrasp, 4});
  EXPECT_EQ(success_score(log, pp), 0.5);
  log.milestones.push_back({Milestone::kTransport, 9});
  EXPECT_EQ(success_score(log, pp), 0.75);
  log.milestones.push_back({Milestone::kRelease, 10});
  EXPECT_EQ(success_score(log, pp), 1.0);

  // Each sub-action is credited on its own.
  const Task press_only{TaskKind::kPressButton, 0, -1, ""};
  EpisodeLog pressed;
  pressed.milestones = {{Milestone::kPress, 5}};
  EXPECT_EQ(success_score(pressed, press_only), 0.5);

  const Task press{TaskKind::kPressButton, 0, -1, ""};
  EpisodeLog hover;
  hover.milestones = {{Milestone::kHover, 2}};
  EXPECT_EQ(success_score(hover, press), 0.5);
  hover.milestones.push_back({Milestone::kPress, 8});
  EXPECT_EQ(success_score(hover, press), 1.0);

  const Task knock{TaskKind::kKnockDown, 0, -1, ""};
  EpisodeLog touch;
  touch.milestones = {{Milestone::kTouch, 2}};
  EXPECT_EQ(success_score(touch, knock), 0.5);
}

TEST(SuccessScoreTest, HoverWithoutPressScoresHalf) {
  // A planner that stops above the button.
  const Planner hover_only = [](const World& w, const Task& t) {
    const Path2D full = oracle_plan(w, t);
    return Path2D{full[0], {full[1].x, full[1].y, true}};
  };
  const Task press{TaskKind::kPressButton, 0, -1, ""};
  const auto log = run_episode(button_world(), press, Policy::kPathFollower, 0.0, 1, hover_only);
  EXPECT_FALSE(log.completed);
  EXPECT_EQ(success_score(log, press), 0.5);
}

TEST(SuccessScoreTest, ReachOnlyScoresQuarter) {
  const Planner reach_only = [](const World& w, const Task& t) {
    const Path2D full = oracle_plan(w, t);
    return Path2D{full[0], {full[1].x, full[1].y, true}};
  };
  const auto log = run_episode(pick_place_world(), pick_place_task(), Policy::kPathFollower, 0.0, 1, reach_only);
  EXPECT_EQ(success_score(log, pick_place_task()), 0.25);
}

TEST(SuccessScoreTest, ScoresAreQuarterMultiplesWithMonotoneCredit) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const Scenario sc = generate_scenario(rng);
    const Policy policy = i % 2 ? Policy::kRandom : Policy::kPathFollower;
    const auto log = run_episode(sc.world, sc.task, policy, i % 3 == 0 ? 0.2 : 0.0, i);
    const double s = success_score(log, sc.task);
    EXPECT_TRUE(is_quarter_multiple(s)) << s;
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    if (sc.task.kind == TaskKind::kPickPlace) {
      const Milestone order[] = {Milestone::kReach, Milestone::kGrasp, Milestone::kTransport, Milestone::kRelease};
      for (int k = 1; k < 4; ++k) {
        if (log.has(order[k])) EXPECT_TRUE(log.has(order[k - 1])) << to_string(order[k]);
      }
    }
    // Completion means the final sub-action was achieved.
    if (log.completed) EXPECT_GE(s, sc.task.kind == TaskKind::kPickPlace ? 1.0 : 0.5);
    if (log.completed && sc.task.kind == TaskKind::kPickPlace) EXPECT_EQ(s, 1.0);
  }
}

TEST(RunEvalTest, SingleEpisodeAggregateEqualsItsScore) {
  const auto r = run_eval(1, Policy::kPathFollower, 0.0, 11);
  ASSERT_EQ(r.episodes.size(), 1u);
  EXPECT_EQ(r.mean_score, r.episodes[0].score);
  EXPECT_EQ(r.completion_rate, r.episodes[0].completed ? 1.0 : 0.0);
  EXPECT_THROW(run_eval(0, Policy::kPathFollower, 0.0, 1), Error);
}

TEST(RunEvalTest, FollowerBeatsRandom) {
  const auto follower = run_eval(100, Policy::kPathFollower, 0.0, 7);
  const auto random = run_eval(100, Policy::kRandom, 0.0, 7);
  EXPECT_GE(follower.mean_score, 0.95);
  EXPECT_LE(random.mean_score, 0.2);
  for (const auto& e : follower.episodes) {
    EXPECT_EQ(e.planner_calls, 1);
    EXPECT_LT(e.ticks, 200);
  }
}

TEST(RunEvalTest, ScoreDegradesMonotonicallyWithNoise) {
  const double sigmas[] = {0.0, 0.01, 0.05, 0.2};
  double prev = 2.0;
  double clean = 0.0;
  for (double s : sigmas) {
    const double mean = run_eval(200, Policy::kPathFollower, s, 21).mean_score;
    EXPECT_LE(mean, prev) << "sigma " << s;
    if (s == 0.0) clean = mean;
    if (s == 0.01) EXPECT_GE(mean, clean - 0.05);
    prev = mean;
  }
}

TEST(RunEvalTest, Deterministic) {
  const auto a = run_eval(20, Policy::kRandom, 0.0, 3);
  const auto b = run_eval(20, Policy::kRandom, 0.0, 3);
  EXPECT_EQ(a.mean_score, b.mean_score);
  for (std::size_t i = 0; i < a.episodes.size(); ++i) EXPECT_EQ(a.episodes[i].ticks, b.episodes[i].ticks);
}

}  // namespace
}  // namespace vlapath::harness
