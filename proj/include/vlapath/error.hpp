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

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vlapath {

enum class ErrorCode {
  kInvalidArgument,
  // geometry
  kBehindCamera,
  kAllBehindCamera,
  kTooFewPoints,
  kDegenerateConfiguration,
  kNoConvergence,
  // render
  kChannelMismatch,
  // vqa_format
  kMalformedAnswer,
  kEmptyAnswer,
  // dataset_pipeline
  kEmptyMix,
  kIo,
  // rank_service
  kUnknownSession,
  kUnknownRater,
  kUnknownItem,
  kIncompleteRanks,
  kOutOfRange,
  kConflict,
  kNoData,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kAllBehindCamera: return "AllBehindCamera";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kChannelMismatch: return "ChannelMismatch";
    case ErrorCode::kMalformedAnswer: return "MalformedAnswer";
    case ErrorCode::kEmptyAnswer: return "EmptyAnswer";
    case ErrorCode::kEmptyMix: return "EmptyMix";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kUnknownRater: return "UnknownRater";
    case ErrorCode::kUnknownItem: return "UnknownItem";
    case ErrorCode::kIncompleteRanks: return "IncompleteRanks";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kConflict: return "Conflict";
    case ErrorCode::kNoData: return "NoData";
  }
  return "Unknown";
}

/// Single exception type for the library. `code()` identifies the failure
/// class; `offset()` is set for parse errors and points at the offending byte.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> offset = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        offset_(offset) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> offset_;
};

}  // namespace vlapath
