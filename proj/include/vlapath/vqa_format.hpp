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

// Prompt and answer wire formats for path-predicting VQA samples.
//
// Answer grammar (see docs/answer_grammar.md):
//
//   answer  = ws "<ans>" ws "[" ws [ item { ws "," ws item } ] ws "]" ws "</ans>" ws
//   item    = point | action
//   point   = "(" ws number ws "," ws number ws ")"
//   action  = "<action>" ( "Open Gripper" | "Close Gripper" ) "</action>"
//   number  = digit { digit } [ "." digit { digit } ]
//
// Gripper state starts open (closed if the first item is an Open action) and
// every action item flips the state of the points that follow it.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vlapath/error.hpp"
#include "vlapath/pathcore.hpp"

namespace vlapath {

inline constexpr std::string_view kQuestPlaceholder = "{quest}";

inline constexpr std::string_view kPathPromptTemplate =
    "In the image, please execute the command described in <quest>{quest}</quest>.\n"
    "\n"
    "Provide a sequence of points denoting the trajectory of a robot gripper to achieve the goal.\n"
    "\n"
    "Format your answer as a list of tuples enclosed by <ans> and </ans> tags. For example:\n"
    "\n"
    "<ans>[(0.25, 0.32), (0.32, 0.17), (0.13, 0.24), <action>Open Gripper</action>, (0.74, 0.21), "
    "<action>Close Gripper</action>, ...]</ans>\n"
    "\n"
    "The tuple denotes the x and y location of the end effector of the gripper in the image. "
    "The action tags indicate the gripper action.\n"
    "\n"
    "The coordinates should be floats ranging between 0 and 1, indicating the relative locations of the "
    "points in the image.";

/// Prompt body with exactly one `{quest}` placeholder.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string body = std::string(kPathPromptTemplate)) : body_(std::move(body)) {
    const auto first = body_.find(kQuestPlaceholder);
    if (first == std::string::npos || body_.find(kQuestPlaceholder, first + 1) != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "prompt template needs exactly one {quest} placeholder");
    }
  }

  std::string render(std::string_view instruction) const {
    if (instruction.empty()) throw Error(ErrorCode::kInvalidArgument, "instruction must be non-empty");
    std::string out = body_;
    out.replace(out.find(kQuestPlaceholder), kQuestPlaceholder.size(), instruction);
    return out;
  }

  const std::string& body() const noexcept { return body_; }

 private:
  std::string body_;
};

inline std::string render_prompt(std::string_view instruction) { return PromptTemplate().render(instruction); }

enum class SampleSource { kPointPred, kSim, kReal, kCoTrain };

inline constexpr std::string_view to_string(SampleSource s) {
  switch (s) {
    case SampleSource::kPointPred: return "point_pred";
    case SampleSource::kSim: return "sim";
    case SampleSource::kReal: return "real";
    case SampleSource::kCoTrain: return "cotrain";
  }
  return "sim";
}

inline SampleSource parse_sample_source(std::string_view s) {
  if (s == "point_pred") return SampleSource::kPointPred;
  if (s == "sim") return SampleSource::kSim;
  if (s == "real") return SampleSource::kReal;
  if (s == "cotrain") return SampleSource::kCoTrain;
  throw Error(ErrorCode::kInvalidArgument, "unknown sample source '" + std::string(s) + "'");
}

struct VQASample {
  std::string image_ref;
  std::string prompt;
  std::string answer;
  SampleSource source = SampleSource::kSim;

  friend bool operator==(const VQASample&, const VQASample&) = default;
};

struct PointToken {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PointToken&, const PointToken&) = default;
};
struct ActionToken {
  GripperAction action = GripperAction::kClose;
  friend bool operator==(const ActionToken&, const ActionToken&) = default;
};
using AnswerToken = std::variant<PointToken, ActionToken>;

enum class ParseMode { kStrict, kLenient };

struct ParsedAnswer {
  Path2D path;
  std::vector<AnswerToken> tokens;
  /// False when Lenient mode stopped before a closing `</ans>`.
  bool complete = true;
  /// True when Lenient mode clamped an out-of-range coordinate.
  bool clamped = false;
};

// ---------------------------------------------------------------------------
// Serialization

/// Two-decimal round-half-up. The 1e-9 nudge makes decimal ties such as 0.145
/// round up despite their binary representation falling just below.
inline std::string format_coordinate(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "coordinate outside [0, 1]");
  const int hundredths = std::min(100, static_cast<int>(std::floor(v * 100.0 + 0.5 + 1e-9)));
  std::string out(4, '0');
  out[0] = static_cast<char>('0' + hundredths / 100);
  out[1] = '.';
  out[2] = static_cast<char>('0' + (hundredths / 10) % 10);
  out[3] = static_cast<char>('0' + hundredths % 10);
  return out;
}

inline double quantize_coordinate(double v) {
  return std::min(100, static_cast<int>(std::floor(v * 100.0 + 0.5 + 1e-9))) / 100.0;
}

inline Path2D quantize(const Path2D& path) {
  std::vector<PathPoint> pts = path.points();
  for (auto& p : pts) {
    p.x = quantize_coordinate(p.x);
    p.y = quantize_coordinate(p.y);
  }
  return Path2D(std::move(pts));
}

inline constexpr std::string_view kOpenTag = "<action>Open Gripper</action>";
inline constexpr std::string_view kCloseTag = "<action>Close Gripper</action>";

template <std::size_t N>
std::string format_tuple(const std::array<double, N>& values) {
  std::string out = "(";
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ", ";
    out += format_coordinate(values[i]);
  }
  out += ')';
  return out;
}

/// `<ans>[...]</ans>` with an action tag between the last point of one
/// gripper state and the first point of the next. A path that starts closed
/// gets a leading Close tag.
inline std::string serialize_answer(const Path2D& path) {
  std::string out = "<ans>[";
  bool first_item = true;
  auto emit = [&](std::string_view item) {
    if (!first_item) out += ", ";
    out += item;
    first_item = false;
  };
  if (!path.front().gripper_open) emit(kCloseTag);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0 && path[i].gripper_open != path[i - 1].gripper_open) {
      emit(path[i].gripper_open ? kOpenTag : kCloseTag);
    }
    emit(format_tuple<2>({path[i].x, path[i].y}));
  }
  out += "]</ans>";
  return out;
}

template <std::size_t N>
std::string serialize_tuples(const std::vector<std::array<double, N>>& tuples) {
  std::string out = "[";
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    if (i) out += ", ";
    out += format_tuple<N>(tuples[i]);
  }
  out += ']';
  return out;
}

using Point2 = std::array<double, 2>;
/// (cx, cy, w, h), all normalized.
using BBox = std::array<double, 4>;

inline std::string serialize_points(const std::vector<Point2>& points) { return serialize_tuples<2>(points); }

inline std::string serialize_bbox(const std::vector<BBox>& boxes) {
  for (const auto& b : boxes) {
    if (!(b[2] > 0.0 && b[3] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bbox width and height must be > 0");
  }
  return serialize_tuples<4>(boxes);
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Scanner {
 public:
  explicit Scanner(std::string_view text, std::size_t pos = 0) : text_(text), pos_(pos) {}

  std::size_t pos() const noexcept { return pos_; }
  void seek(std::size_t pos) noexcept { pos_ = pos; }
  bool at_end() const noexcept { return pos_ >= text_.size(); }
  char peek() const noexcept { return at_end() ? '\0' : text_[pos_]; }
  std::string_view rest() const noexcept { return text_.substr(std::min(pos_, text_.size())); }

  void skip_ws() noexcept {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }
  bool consume(std::string_view lit) noexcept {
    if (rest().substr(0, lit.size()) == lit) {
      pos_ += lit.size();
      return true;
    }
    return false;
  }
  bool consume(char c) noexcept {
    if (peek() == c && !at_end()) {
      ++pos_;
      return true;
    }
    return false;
  }

  /// digit+ ('.' digit+)?, optionally preceded by '-' when `allow_sign`.
  std::optional<double> number(bool allow_sign) noexcept {
    const std::size_t start = pos_;
    std::size_t p = pos_;
    if (allow_sign && p < text_.size() && text_[p] == '-') ++p;
    const std::size_t int_start = p;
    while (p < text_.size() && text_[p] >= '0' && text_[p] <= '9') ++p;
    if (p == int_start) return std::nullopt;
    if (p < text_.size() && text_[p] == '.') {
      const std::size_t frac_start = ++p;
      while (p < text_.size() && text_[p] >= '0' && text_[p] <= '9') ++p;
      if (p == frac_start) return std::nullopt;
    }
    double value = 0.0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + p, value);
    if (res.ec != std::errc() || res.ptr != text_.data() + p) return std::nullopt;
    pos_ = p;
    return value;
  }

 private:
  std::string_view text_;
  std::size_t pos_;
};

[[noreturn]] inline void malformed(std::size_t offset, const std::string& reason) {
  throw Error(ErrorCode::kMalformedAnswer, reason + " at byte " + std::to_string(offset), offset);
}

/// "(" n, n, ... ")" with N numbers. Returns nullopt without consuming on
/// failure; `fail_offset` receives the byte where it went wrong. `starts`,
/// when given, receives the offset of each number.
template <std::size_t N>
std::optional<std::array<double, N>> tuple(Scanner& sc, bool allow_sign, std::size_t& fail_offset,
                                           std::string& reason, std::array<std::size_t, N>* starts = nullptr) {
  const std::size_t start = sc.pos();
  std::array<double, N> out{};
  auto fail = [&](const char* why) {
    fail_offset = sc.pos();
    reason = why;
    sc.seek(start);
    return std::nullopt;
  };
  if (!sc.consume('(')) return fail("expected '('");
  for (std::size_t i = 0; i < N; ++i) {
    sc.skip_ws();
    if (i > 0) {
      if (!sc.consume(',')) return fail(sc.peek() == ')' ? "tuple has too few values" : "expected ','");
      sc.skip_ws();
    }
    if (starts) (*starts)[i] = sc.pos();
    const auto v = sc.number(allow_sign);
    if (!v) return fail("expected a decimal number");
    out[i] = *v;
  }
  sc.skip_ws();
  if (!sc.consume(')')) return fail(sc.peek() == ',' ? "tuple has too many values" : "expected ')'");
  return out;
}

inline std::optional<GripperAction> action(Scanner& sc) {
  if (sc.consume(kOpenTag)) return GripperAction::kOpen;
  if (sc.consume(kCloseTag)) return GripperAction::kClose;
  return std::nullopt;
}

inline Path2D path_from_tokens(const std::vector<AnswerToken>& tokens) {
  bool open = true;
  if (!tokens.empty()) {
    if (const auto* a = std::get_if<ActionToken>(&tokens.front()); a && a->action == GripperAction::kOpen) {
      open = false;
    }
  }
  std::vector<PathPoint> pts;
  for (const auto& tok : tokens) {
    if (const auto* p = std::get_if<PointToken>(&tok)) {
      pts.push_back({p->x, p->y, open});
    } else {
      open = !open;
    }
  }
  return Path2D(std::move(pts));
}

inline ParsedAnswer parse_answer_strict(std::string_view text) {
  Scanner sc(text);
  sc.skip_ws();
  if (!sc.consume("<ans>")) malformed(sc.pos(), "expected '<ans>'");
  sc.skip_ws();
  if (!sc.consume('[')) malformed(sc.pos(), "expected '['");
  sc.skip_ws();
  std::vector<AnswerToken> tokens;
  if (!sc.consume(']')) {
    while (true) {
      sc.skip_ws();
      if (sc.peek() == '(') {
        std::size_t off = 0;
        std::string why;
        std::array<std::size_t, 2> at{};
        const auto t = tuple<2>(sc, false, off, why, &at);
        if (!t) malformed(off, why);
        const auto& v = *t;
        for (std::size_t i = 0; i < 2; ++i) {
          if (v[i] > 1.0) malformed(at[i], "coordinate outside [0, 1]");
        }
        tokens.emplace_back(PointToken{v[0], v[1]});
      } else if (sc.peek() == '<') {
        const auto a = action(sc);
        if (!a) malformed(sc.pos(), "unknown action tag");
        tokens.emplace_back(ActionToken{*a});
      } else {
        malformed(sc.pos(), "expected a point or an action tag");
      }
      sc.skip_ws();
      if (sc.consume(']')) break;
      if (!sc.consume(',')) malformed(sc.pos(), "expected ',' or ']'");
    }
  }
  sc.skip_ws();
  if (!sc.consume("</ans>")) malformed(sc.pos(), "expected '</ans>'");
  sc.skip_ws();
  if (!sc.at_end()) malformed(sc.pos(), "trailing characters after '</ans>'");
  const bool any_point =
      std::any_of(tokens.begin(), tokens.end(), [](const AnswerToken& t) { return std::holds_alternative<PointToken>(t); });
  if (!any_point) malformed(0, "answer contains no points");
  ParsedAnswer out{path_from_tokens(tokens), std::move(tokens), true, false};
  return out;
}

inline ParsedAnswer parse_answer_lenient(std::string_view text) {
  Scanner sc(text);
  const auto ans = text.find("<ans>");
  if (ans != std::string_view::npos) {
    sc.seek(ans + 5);
  } else {
    const auto bracket = text.find('[');
    if (bracket == std::string_view::npos) throw Error(ErrorCode::kEmptyAnswer, "no answer list found");
    sc.seek(bracket);
  }
  sc.skip_ws();
  sc.consume('[');

  std::vector<AnswerToken> tokens;
  bool clamped = false;
  bool complete = false;
  while (true) {
    sc.skip_ws();
    if (sc.peek() == '(') {
      std::size_t off = 0;
      std::string why;
      const auto t = tuple<2>(sc, true, off, why);
      if (!t) break;
      double x = (*t)[0];
      double y = (*t)[1];
      if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) {
        clamped = true;
        x = std::clamp(x, 0.0, 1.0);
        y = std::clamp(y, 0.0, 1.0);
      }
      tokens.emplace_back(PointToken{x, y});
    } else if (sc.peek() == '<') {
      const auto a = action(sc);
      if (!a) break;
      tokens.emplace_back(ActionToken{*a});
    } else if (sc.consume("...")) {
      // Elision marker, no token.
    } else {
      break;
    }
    sc.skip_ws();
    if (sc.consume(']')) {
      sc.skip_ws();
      complete = sc.consume("</ans>");
      break;
    }
    sc.consume(',');
  }
  const bool any_point =
      std::any_of(tokens.begin(), tokens.end(), [](const AnswerToken& t) { return std::holds_alternative<PointToken>(t); });
  if (!any_point) throw Error(ErrorCode::kEmptyAnswer, "no complete point recovered");
  ParsedAnswer out{path_from_tokens(tokens), std::move(tokens), complete, clamped};
  return out;
}

template <std::size_t N>
std::vector<std::array<double, N>> parse_tuples(std::string_view text) {
  Scanner sc(text);
  std::vector<std::array<double, N>> out;
  sc.skip_ws();
  if (!sc.consume('[')) malformed(sc.pos(), "expected '['");
  sc.skip_ws();
  if (!sc.consume(']')) {
    while (true) {
      sc.skip_ws();
      std::size_t off = 0;
      std::string why;
      std::array<std::size_t, N> at{};
      const auto t = tuple<N>(sc, false, off, why, &at);
      if (!t) malformed(off, why);
      for (std::size_t i = 0; i < N; ++i) {
        if ((*t)[i] > 1.0) malformed(at[i], "value outside [0, 1]");
      }
      out.push_back(*t);
      sc.skip_ws();
      if (sc.consume(']')) break;
      if (!sc.consume(',')) malformed(sc.pos(), "expected ',' or ']'");
    }
  }
  sc.skip_ws();
  if (!sc.at_end()) malformed(sc.pos(), "trailing characters");
  return out;
}

}  // namespace detail

/// Full parse result including the raw token sequence.
inline ParsedAnswer parse_answer_detailed(std::string_view text, ParseMode mode = ParseMode::kStrict) {
  return mode == ParseMode::kStrict ? detail::parse_answer_strict(text) : detail::parse_answer_lenient(text);
}

inline Path2D parse_answer(std::string_view text, ParseMode mode = ParseMode::kStrict) {
  return parse_answer_detailed(text, mode).path;
}

inline std::vector<Point2> parse_points(std::string_view text) { return detail::parse_tuples<2>(text); }

inline std::vector<BBox> parse_bbox(std::string_view text) { return detail::parse_tuples<4>(text); }

}  // namespace vlapath
