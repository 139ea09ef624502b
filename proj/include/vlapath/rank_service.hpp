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

// Ranking sessions for side-by-side human evaluation of candidate paths.
//
// Each session persists as an append-only JSON Lines event log
// (<dir>/<session id>.jsonl) with three event types:
//
//   {"event": "create",  "session": .., "seed": .., "raters": [..], "items": [..]}
//   {"event": "present", "item": .., "rater": .., "permutation": [..]}
//   {"event": "ranks",   "item": .., "rater": .., "ranks": {method: rank}}
//
// Replaying the log reconstructs the session exactly.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vlapath/error.hpp"
#include "vlapath/json_io.hpp"

namespace vlapath::ranking {

struct Candidate {
  std::string method;
  std::string image_ref;
  /// Optional serialized answer the image was (or can be) rendered from.
  std::string answer;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct RankingItem {
  std::string id;
  std::string image_ref;
  std::string instruction;
  std::vector<Candidate> candidates;
  std::vector<std::string> tags;

  bool has_tag(std::string_view tag) const { return std::find(tags.begin(), tags.end(), tag) != tags.end(); }
  friend bool operator==(const RankingItem&, const RankingItem&) = default;
};

struct RankRecord {
  std::string item_id;
  std::string rater;
  std::map<std::string, int> ranks;

  friend bool operator==(const RankRecord&, const RankRecord&) = default;
};

/// An item as shown to one rater. `permutation[slot]` is the index into
/// `item->candidates` displayed at that slot.
struct Presentation {
  std::size_t index = 0;
  std::size_t total = 0;
  const RankingItem* item = nullptr;
  std::vector<std::size_t> permutation;
};

enum class SubmitStatus { kAccepted, kDuplicate };

struct Aggregate {
  std::map<std::string, double> mean_rank;
  std::map<std::string, std::size_t> count;
  std::size_t records = 0;
};

inline json to_json(const Candidate& c) {
  json j = {{"method", c.method}, {"image_ref", c.image_ref}};
  if (!c.answer.empty()) j["answer"] = c.answer;
  return j;
}

inline json to_json(const RankingItem& it) {
  json cands = json::array();
  for (const auto& c : it.candidates) cands.push_back(to_json(c));
  return {{"id", it.id},
          {"image_ref", it.image_ref},
          {"instruction", it.instruction},
          {"candidates", cands},
          {"tags", it.tags}};
}

inline RankingItem item_from_json(const json& j) {
  RankingItem it;
  it.id = j.at("id").get<std::string>();
  it.image_ref = j.value("image_ref", "");
  it.instruction = j.value("instruction", "");
  for (const auto& c : j.at("candidates")) {
    it.candidates.push_back({c.at("method").get<std::string>(), c.value("image_ref", ""), c.value("answer", "")});
  }
  if (j.contains("tags")) it.tags = j["tags"].get<std::vector<std::string>>();
  if (it.candidates.size() < 2) throw Error(ErrorCode::kInvalidArgument, "item " + it.id + " needs >= 2 candidates");
  std::set<std::string> methods;
  for (const auto& c : it.candidates) {
    if (!methods.insert(c.method).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate method '" + c.method + "' in item " + it.id);
    }
  }
  return it;
}

/// 64-bit FNV-1a, stable across platforms.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Fisher-Yates with an explicit modulo draw so the order does not depend on
/// the standard library's distribution implementation.
inline std::vector<std::size_t> display_permutation(std::uint64_t session_seed, std::string_view rater,
                                                    std::string_view item_id, std::size_t k) {
  std::uint64_t h = fnv1a(rater, session_seed ^ 0xcbf29ce484222325ULL);
  h = fnv1a("\x1f", h);
  h = fnv1a(item_id, h);
  std::mt19937_64 rng(h);
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = k; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

class RankingSession {
 public:
  /// Creates a session; when `log_path` is non-empty the create event is
  /// written there.
  RankingSession(std::string id, std::vector<RankingItem> items, std::uint64_t seed, std::vector<std::string> raters,
                 std::filesystem::path log_path = {})
      : id_(std::move(id)),
        items_(std::move(items)),
        seed_(seed),
        roster_(raters.begin(), raters.end()),
        log_path_(std::move(log_path)),
        snapshot_(std::make_shared<const std::vector<RankRecord>>()) {
    if (items_.empty()) throw Error(ErrorCode::kInvalidArgument, "session needs at least one item");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].candidates.size() < 2) {
        throw Error(ErrorCode::kInvalidArgument, "item " + items_[i].id + " needs >= 2 candidates");
      }
      if (!ids.insert(items_[i].id).second) throw Error(ErrorCode::kInvalidArgument, "duplicate item id " + items_[i].id);
      item_index_[items_[i].id] = i;
    }
    if (!log_path_.empty()) {
      json items_json = json::array();
      for (const auto& it : items_) items_json.push_back(to_json(it));
      append_event({{"event", "create"},
                    {"session", id_},
                    {"seed", seed_},
                    {"raters", std::vector<std::string>(roster_.begin(), roster_.end())},
                    {"items", items_json}});
    }
  }

  /// Rebuilds a session from its event log. Later writes append to the same file.
  static std::unique_ptr<RankingSession> replay(const std::filesystem::path& log_path) {
    std::ifstream in(log_path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open session log " + log_path.string());
    std::string line;
    std::unique_ptr<RankingSession> session;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json ev = json::parse(line);
      const std::string type = ev.at("event").get<std::string>();
      if (type == "create") {
        std::vector<RankingItem> items;
        for (const auto& it : ev.at("items")) items.push_back(item_from_json(it));
        session = std::make_unique<RankingSession>(ev.at("session").get<std::string>(), std::move(items),
                                                   ev.at("seed").get<std::uint64_t>(),
                                                   ev.value("raters", std::vector<std::string>{}));
      } else if (!session) {
        throw Error(ErrorCode::kIo, "session log does not start with a create event");
      } else if (type == "present") {
        session->presented_[{ev.at("item").get<std::string>(), ev.at("rater").get<std::string>()}] =
            ev.at("permutation").get<std::vector<std::size_t>>();
      } else if (type == "ranks") {
        RankRecord rec{ev.at("item").get<std::string>(), ev.at("rater").get<std::string>(),
                       ev.at("ranks").get<std::map<std::string, int>>()};
        session->submit(rec);
      }
    }
    if (!session) throw Error(ErrorCode::kIo, "empty session log " + log_path.string());
    session->log_path_ = log_path;
    return session;
  }

  const std::string& id() const noexcept { return id_; }
  const std::vector<RankingItem>& items() const noexcept { return items_; }
  std::uint64_t seed() const noexcept { return seed_; }

  const RankingItem& item(std::string_view item_id) const {
    const auto it = item_index_.find(std::string(item_id));
    if (it == item_index_.end()) throw Error(ErrorCode::kUnknownItem, "no item '" + std::string(item_id) + "'");
    return items_[it->second];
  }

  /// Lowest-index item the rater has not ranked, or nullopt when done.
  std::optional<Presentation> next_item(const std::string& rater) {
    check_rater(rater);
    const auto records = snapshot();
    std::set<std::string> done;
    for (const auto& r : *records) {
      if (r.rater == rater) done.insert(r.item_id);
    }
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (done.count(items_[i].id)) continue;
      Presentation p{i, items_.size(), &items_[i], permutation_for(rater, i)};
      return p;
    }
    return std::nullopt;
  }

  /// Display permutation for (rater, item), recorded on first use.
  std::vector<std::size_t> permutation_for(const std::string& rater, std::size_t item_index) {
    const auto& it = items_.at(item_index);
    std::lock_guard<std::mutex> lock(write_mutex_);
    const auto key = std::make_pair(it.id, rater);
    if (const auto found = presented_.find(key); found != presented_.end()) return found->second;
    auto perm = display_permutation(seed_, rater, it.id, it.candidates.size());
    presented_[key] = perm;
    append_event({{"event", "present"}, {"item", it.id}, {"rater", rater}, {"permutation", perm}});
    return perm;
  }

  SubmitStatus submit(const RankRecord& record) {
    check_rater(record.rater);
    const RankingItem& it = item(record.item_id);
    const int k = static_cast<int>(it.candidates.size());
    for (const auto& c : it.candidates) {
      if (!record.ranks.count(c.method)) {
        throw Error(ErrorCode::kIncompleteRanks, "no rank for a candidate of item " + it.id);
      }
    }
    if (record.ranks.size() != it.candidates.size()) {
      throw Error(ErrorCode::kIncompleteRanks, "ranks name methods that are not candidates of item " + it.id);
    }
    for (const auto& [method, rank] : record.ranks) {
      if (rank < 1 || rank > k) {
        throw Error(ErrorCode::kOutOfRange, "rank " + std::to_string(rank) + " outside [1, " + std::to_string(k) + "]");
      }
    }

    std::lock_guard<std::mutex> lock(write_mutex_);
    const auto current = snapshot();
    for (const auto& r : *current) {
      if (r.item_id == record.item_id && r.rater == record.rater) {
        if (r.ranks == record.ranks) return SubmitStatus::kDuplicate;
        throw Error(ErrorCode::kConflict, "rater " + record.rater + " already ranked item " + record.item_id);
      }
    }
    append_event({{"event", "ranks"}, {"item", record.item_id}, {"rater", record.rater}, {"ranks", record.ranks}});
    auto next = std::make_shared<std::vector<RankRecord>>(*current);
    next->push_back(record);
    publish(std::move(next));
    return SubmitStatus::kAccepted;
  }

  /// The stored record for (item, rater), if any.
  std::optional<RankRecord> stored(const std::string& item_id, const std::string& rater) const {
    for (const auto& r : *snapshot()) {
      if (r.item_id == item_id && r.rater == rater) return r;
    }
    return std::nullopt;
  }

  /// Consistent view of all accepted records in submission order.
  std::shared_ptr<const std::vector<RankRecord>> snapshot() const {
    std::lock_guard<std::mutex> lock(snapshot_mutex_);
    return snapshot_;
  }

  /// Mean rank per method over records whose item carries `tag` (all records
  /// when no tag is given).
  Aggregate aggregate(std::optional<std::string> tag = std::nullopt) const {
    Aggregate agg;
    std::map<std::string, double> sums;
    for (const auto& r : *snapshot()) {
      if (tag && !item(r.item_id).has_tag(*tag)) continue;
      ++agg.records;
      for (const auto& [method, rank] : r.ranks) {
        sums[method] += rank;
        ++agg.count[method];
      }
    }
    if (agg.records == 0) throw Error(ErrorCode::kNoData, "no ranks match");
    for (const auto& [method, sum] : sums) agg.mean_rank[method] = sum / static_cast<double>(agg.count[method]);
    return agg;
  }

 private:
  void check_rater(const std::string& rater) const {
    if (rater.empty()) throw Error(ErrorCode::kUnknownRater, "empty rater id");
    if (!roster_.empty() && !roster_.count(rater)) throw Error(ErrorCode::kUnknownRater, "unknown rater '" + rater + "'");
  }

  void publish(std::shared_ptr<const std::vector<RankRecord>> next) {
    std::lock_guard<std::mutex> lock(snapshot_mutex_);
    snapshot_ = std::move(next);
  }

  // Caller holds write_mutex_ (or is the constructor).
  void append_event(const json& ev) {
    if (log_path_.empty()) return;
    std::ofstream out(log_path_, std::ios::app | std::ios::binary);
    out << ev.dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "cannot append to " + log_path_.string());
  }

  std::string id_;
  std::vector<RankingItem> items_;
  std::uint64_t seed_;
  std::set<std::string> roster_;
  std::filesystem::path log_path_;
  std::map<std::string, std::size_t> item_index_;

  std::mutex write_mutex_;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> presented_;

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const std::vector<RankRecord>> snapshot_;
};

/// Owns sessions. With a data directory every session is logged there and
/// existing logs are replayed on construction.
class RankService {
 public:
  explicit RankService(std::filesystem::path dir = {}) : dir_(std::move(dir)) {
    if (dir_.empty()) return;
    std::filesystem::create_directories(dir_);
    std::vector<std::filesystem::path> logs;
    for (const auto& e : std::filesystem::directory_iterator(dir_)) {
      if (e.is_regular_file() && e.path().extension() == ".jsonl") logs.push_back(e.path());
    }
    std::sort(logs.begin(), logs.end());
    for (const auto& p : logs) {
      std::shared_ptr<RankingSession> s = RankingSession::replay(p);
      sessions_[s->id()] = s;
    }
  }

  /// Allocates a fresh session id without creating the session.
  std::string reserve_id() {
    std::lock_guard<std::mutex> lock(mutex_);
    std::string id;
    do {
      id = "s" + std::to_string(++counter_);
    } while (sessions_.count(id));
    return id;
  }

  std::string create_session(std::vector<RankingItem> items, std::uint64_t seed = 0,
                             std::vector<std::string> raters = {}, std::string id = {}) {
    if (id.empty()) id = reserve_id();
    std::lock_guard<std::mutex> lock(mutex_);
    if (sessions_.count(id)) throw Error(ErrorCode::kConflict, "session '" + id + "' already exists");
    const auto log = dir_.empty() ? std::filesystem::path{} : dir_ / (id + ".jsonl");
    sessions_[id] = std::make_shared<RankingSession>(id, std::move(items), seed, std::move(raters), log);
    return id;
  }

  std::shared_ptr<RankingSession> session(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, "no session '" + id + "'");
    return it->second;
  }

  std::optional<Presentation> next_item(const std::string& session_id, const std::string& rater) {
    return session(session_id)->next_item(rater);
  }
  SubmitStatus submit_ranks(const std::string& session_id, const RankRecord& record) {
    return session(session_id)->submit(record);
  }
  Aggregate aggregate(const std::string& session_id, std::optional<std::string> tag = std::nullopt) const {
    return session(session_id)->aggregate(std::move(tag));
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<RankingSession>> sessions_;
  std::size_t counter_ = 0;
};

}  // namespace vlapath::ranking
