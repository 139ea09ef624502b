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

#include "vlapath/vqa_format.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "fuzz.hpp"
#include "test_util.hpp"

namespace vlapath {
namespace {

constexpr const char* kFigureExample =
    "<ans>[(0.25, 0.32), (0.32, 0.17), (0.13, 0.24), <action>Open Gripper</action>, (0.74, 0.21), "
    "<action>Close Gripper</action>]</ans>";

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(VLAPATH_FIXTURES) + "/" + name, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(PromptTest, TemplateMatchesFixture) {
  EXPECT_EQ(std::string(kPathPromptTemplate), read_fixture("prompt_template.txt"));
}

TEST(PromptTest, QuestSubstitution) {
  const std::string p = render_prompt("press the red button");
  EXPECT_NE(p.find("<quest>press the red button</quest>"), std::string::npos);
  EXPECT_EQ(p.find("{quest}"), std::string::npos);
  EXPECT_EQ(render_prompt("press the red button"), p);
}

TEST(PromptTest, DifferOnlyInQuestSpan) {
  const std::string a = render_prompt("open the drawer");
  const std::string b = render_prompt("pick up the green block");
  const auto body = std::string(kPathPromptTemplate);
  const auto at = body.find("{quest}");
  EXPECT_EQ(a.substr(0, at), b.substr(0, at));
  EXPECT_EQ(a.substr(at + 15), b.substr(at + 23));
}

TEST(PromptTest, Preconditions) {
  EXPECT_THROW(render_prompt(""), Error);
  EXPECT_THROW(PromptTemplate("no placeholder"), Error);
  EXPECT_THROW(PromptTemplate("{quest} and {quest}"), Error);
  EXPECT_EQ(PromptTemplate("Do: {quest}!").render("x"), "Do: x!");
}

TEST(FormatCoordinateTest, TwoDecimalsHalfUp) {
  EXPECT_EQ(format_coordinate(0.0), "0.00");
  EXPECT_EQ(format_coordinate(1.0), "1.00");
  EXPECT_EQ(format_coordinate(0.5), "0.50");
  EXPECT_EQ(format_coordinate(0.125), "0.13");
  EXPECT_EQ(format_coordinate(0.145), "0.15");
  EXPECT_EQ(format_coordinate(0.144999), "0.14");
  EXPECT_EQ(format_coordinate(0.999), "1.00");
  EXPECT_THROW(format_coordinate(-0.01), Error);
  EXPECT_THROW(format_coordinate(1.01), Error);
}

TEST(SerializeAnswerTest, PlainPoints) {
  EXPECT_EQ(serialize_answer(Path2D{{0.25, 0.32, true}, {0.32, 0.17, true}}), "<ans>[(0.25, 0.32), (0.32, 0.17)]</ans>");
  EXPECT_EQ(serialize_answer(Path2D{{0.5, 0.5, true}}), "<ans>[(0.50, 0.50)]</ans>");
}

TEST(SerializeAnswerTest, CloseThenOpenTags) {
  const std::string s = serialize_answer(Path2D{{0.1, 0.1, true}, {0.2, 0.2, false}, {0.3, 0.3, true}});
  EXPECT_EQ(s, "<ans>[(0.10, 0.10), <action>Close Gripper</action>, (0.20, 0.20), "
               "<action>Open Gripper</action>, (0.30, 0.30)]</ans>");
}

TEST(SerializeAnswerTest, StartsClosed) {
  const Path2D p{{0.1, 0.1, false}, {0.2, 0.2, false}};
  const std::string s = serialize_answer(p);
  EXPECT_EQ(s, "<ans>[<action>Close Gripper</action>, (0.10, 0.10), (0.20, 0.20)]</ans>");
  EXPECT_EQ(parse_answer(s), p);
}

TEST(SerializeAnswerTest, CoordinatesMatchPattern) {
  std::mt19937_64 rng(1);
  const std::regex number(R"((\d+\.\d+|\d+))");
  const std::regex canonical(R"(\d\.\d\d)");
  for (int i = 0; i < 200; ++i) {
    const std::string s = serialize_answer(test::random_path(rng, 1 + i % 10, 0.3));
    for (auto it = std::sregex_iterator(s.begin(), s.end(), number); it != std::sregex_iterator(); ++it) {
      EXPECT_TRUE(std::regex_match(it->str(), canonical)) << it->str();
    }
  }
}

TEST(ParseAnswerTest, FigureExample) {
  const auto r = parse_answer_detailed(kFigureExample, ParseMode::kStrict);
  ASSERT_EQ(r.path.size(), 4u);
  EXPECT_EQ(r.path[0], (PathPoint{0.25, 0.32, true}));
  EXPECT_EQ(r.path[2], (PathPoint{0.13, 0.24, true}));
  EXPECT_EQ(r.path[3], (PathPoint{0.74, 0.21, false}));
  int opens = 0, closes = 0;
  for (const auto& t : r.tokens) {
    if (const auto* a = std::get_if<ActionToken>(&t)) (a->action == GripperAction::kOpen ? opens : closes)++;
  }
  EXPECT_EQ(opens, 1);
  EXPECT_EQ(closes, 1);
}

TEST(ParseAnswerTest, PromptExampleWithEllipsisIsLenientOnly) {
  const std::string prompt_example =
      "<ans>[(0.25, 0.32), (0.32, 0.17), (0.13, 0.24), <action>Open Gripper</action>, (0.74, 0.21), "
      "<action>Close Gripper</action>, ...]</ans>";
  EXPECT_EQ(code_of([&] { parse_answer(prompt_example); }), ErrorCode::kMalformedAnswer);
  const auto r = parse_answer_detailed(prompt_example, ParseMode::kLenient);
  EXPECT_EQ(r.path, parse_answer(kFigureExample));
  EXPECT_TRUE(r.complete);
}

TEST(ParseAnswerTest, LeadingOpenStartsClosed) {
  const auto p = parse_answer("<ans>[<action>Open Gripper</action>, (0.1, 0.1)]</ans>");
  ASSERT_EQ(p.size(), 1u);
  EXPECT_TRUE(p[0].gripper_open);
}

TEST(ParseAnswerTest, StrictErrorsCarryOffsets) {
  struct Case {
    std::string text;
    std::size_t offset;
  };
  const std::vector<Case> cases = {
      {"[(0.1, 0.2)]", 0},
      {"<ans>(0.1, 0.2)]</ans>", 5},
      {"<ans>[(0.1, 0.2)</ans>", 16},
      {"<ans>[(0.1 0.2)]</ans>", 11},
      {"<ans>[(0.1, 0.2, 0.3)]</ans>", 15},
      {"<ans>[(0.1)]</ans>", 10},
      {"<ans>[(0.1, 1.2)]</ans>", 12},
      {"<ans>[(0.1, -0.2)]</ans>", 12},
      {"<ans>[<action>Jump</action>]</ans>", 6},
      {"<ans>[(0.1, 0.2)]</ans> extra", 24},
      {"<ans>[]</ans>", 0},
      {"<ans>[(0.1, 0.2), ]</ans>", 18},
      {"<ans>[(0.1, 0.2)", 16},
  };
  for (const auto& c : cases) {
    try {
      parse_answer(c.text, ParseMode::kStrict);
      ADD_FAILURE() << "accepted: " << c.text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMalformedAnswer) << c.text;
      ASSERT_TRUE(e.offset()) << c.text;
      EXPECT_EQ(*e.offset(), c.offset) << c.text << " : " << e.what();
    }
  }
}

TEST(ParseAnswerTest, StrictToleratesWhitespace) {
  const auto p = parse_answer("  <ans> [ ( 0.1 ,0.2 ) ,\n<action>Close Gripper</action> ,(1, 0)]</ans>\n");
  EXPECT_EQ(p, (Path2D{{0.1, 0.2, true}, {1.0, 0.0, false}}));
}

TEST(ParseAnswerTest, LenientTruncation) {
  EXPECT_EQ(parse_answer("<ans>[(0.10, 0.20), (0.9", ParseMode::kLenient), (Path2D{{0.1, 0.2, true}}));
  const auto r = parse_answer_detailed("noise before <ans>[(0.10, 0.20), (0.3, 0.4)]", ParseMode::kLenient);
  EXPECT_EQ(r.path.size(), 2u);
  EXPECT_FALSE(r.complete);
  EXPECT_EQ(code_of([] { parse_answer("<ans>[(0.1", ParseMode::kLenient); }), ErrorCode::kEmptyAnswer);
  EXPECT_EQ(code_of([] { parse_answer("nothing here", ParseMode::kLenient); }), ErrorCode::kEmptyAnswer);
}

TEST(ParseAnswerTest, LenientClampsAndFlags) {
  const auto r = parse_answer_detailed("<ans>[(1.2, -0.1), (0.5, 0.5)]</ans>", ParseMode::kLenient);
  EXPECT_TRUE(r.clamped);
  EXPECT_EQ(r.path[0], (PathPoint{1.0, 0.0, true}));
  EXPECT_FALSE(parse_answer_detailed("<ans>[(0.5, 0.5)]</ans>", ParseMode::kLenient).clamped);
}

TEST(ParseAnswerTest, LenientAcceptsEveryPrefixWithAPoint) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Path2D p = quantize(test::random_path(rng, 1 + i % 6, 0.3));
    const std::string s = serialize_answer(p);
    const std::size_t first_point_end = s.find(')') + 1;
    for (std::size_t len = first_point_end; len <= s.size(); ++len) {
      const Path2D got = parse_answer(s.substr(0, len), ParseMode::kLenient);
      ASSERT_GE(got.size(), 1u);
      ASSERT_LE(got.size(), p.size());
      for (std::size_t k = 0; k < got.size(); ++k) ASSERT_EQ(got[k], p[k]) << s.substr(0, len);
    }
  }
}

TEST(RoundTripTest, RandomPathsWithEventTies) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    std::vector<PathPoint> pts = test::random_path(rng, 1 + i % 12, 0.5).points();
    // Repeat coordinates across some state changes.
    for (std::size_t k = 1; k < pts.size(); ++k) {
      if (pts[k].gripper_open != pts[k - 1].gripper_open && k % 2) {
        pts[k].x = pts[k - 1].x;
        pts[k].y = pts[k - 1].y;
      }
    }
    const Path2D p(pts);
    const std::string s = serialize_answer(p);
    EXPECT_EQ(parse_answer(s), quantize(p)) << s;
    EXPECT_EQ(serialize_answer(parse_answer(s)), s);
  }
}

TEST(PointsTest, PaperExampleString) {
  EXPECT_EQ(serialize_points({{0.25, 0.11}, {0.22, 0.19}, {0.53, 0.23}}), "[(0.25, 0.11), (0.22, 0.19), (0.53, 0.23)]");
  EXPECT_EQ(serialize_points({}), "[]");
  EXPECT_TRUE(parse_points("[]").empty());
}

TEST(PointsTest, RoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<Point2> pts(static_cast<std::size_t>(i % 8));
    for (auto& p : pts) p = {u(rng), u(rng)};
    const auto back = parse_points(serialize_points(pts));
    ASSERT_EQ(back.size(), pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      EXPECT_EQ(back[k][0], quantize_coordinate(pts[k][0]));
      EXPECT_EQ(back[k][1], quantize_coordinate(pts[k][1]));
    }
  }
  EXPECT_THROW(parse_points("[(0.1, 0.2), (0.3)]"), Error);
  EXPECT_THROW(parse_points("<ans>[(0.1, 0.2)]</ans>"), Error);
}

TEST(BBoxTest, FormatAndRoundTrip) {
  EXPECT_EQ(serialize_bbox({{0.5, 0.5, 0.2, 0.1}}), "[(0.50, 0.50, 0.20, 0.10)]");
  const auto back = parse_bbox("[(0.50, 0.50, 0.20, 0.10), (0.1, 0.9, 0.05, 0.3)]");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1], (BBox{0.1, 0.9, 0.05, 0.3}));
  EXPECT_THROW(serialize_bbox({{0.5, 0.5, 0.0, 0.1}}), Error);
}

TEST(BBoxTest, ThreeTupleIsMalformedWithOffset) {
  try {
    parse_bbox("[(0.50, 0.50, 0.20)]");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedAnswer);
    EXPECT_EQ(e.offset(), std::optional<std::size_t>(18));
  }
}

TEST(SampleSourceTest, RoundTrip) {
  for (auto s : {SampleSource::kPointPred, SampleSource::kSim, SampleSource::kReal, SampleSource::kCoTrain}) {
    EXPECT_EQ(parse_sample_source(to_string(s)), s);
  }
  EXPECT_THROW(parse_sample_source("video"), Error);
}

TEST(FuzzTest, RandomBytesAndMutations) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20000; ++i) {
    const std::string input = i % 2 ? test::random_bytes(rng, 200) : test::mutate_canonical(rng);
    const auto violation = test::check_parse_contract(input);
    ASSERT_FALSE(violation) << *violation << " on input of " << input.size() << " bytes";
  }
}

TEST(FuzzTest, LargeInputs) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 4; ++i) {
    std::string input = test::random_bytes(rng, 64 * 1024);
    EXPECT_FALSE(test::check_parse_contract(input));
    // Long but well-formed.
    std::string big = "<ans>[";
    for (int k = 0; k < 5000; ++k) big += (k ? ", " : "") + std::string("(0.12, 0.34)");
    big += "]</ans>";
    EXPECT_EQ(parse_answer(big).size(), 5000u);
    EXPECT_FALSE(test::check_parse_contract(big.substr(0, big.size() / 2)));
  }
}

}  // namespace
}  // namespace vlapath
