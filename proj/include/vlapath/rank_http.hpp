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

// HTTP front end for RankService.
//
//   POST /sessions                      {"items": [..], "seed": 0, "raters": [..]}  -> 201 {"session_id"}
//   GET  /sessions/{id}/next?rater=R    -> {"done": false, "index", "total", "item_id", "image_ref",
//                                           "instruction", "tags", "candidates": [{"slot", "image_ref"}]}
//                                          or {"done": true, "total"}
//   POST /sessions/{id}/ranks           {"rater", "item_id", "ranks": {slot: rank}} -> {"status"}
//   GET  /sessions/{id}/results?tag=T   -> {"mean_rank", "count", "records"}
//   GET  /static/...                    rendered candidate PNGs
//
// Raters only ever see display slots ("c0", "c1", ...); method ids stay on
// the server. Errors are {"error": <code>, "message": ..}.

#pragma once

#include <filesystem>
#include <string>

#include "vlapath/image_io.hpp"
#include "vlapath/json_io.hpp"
#include "vlapath/rank_service.hpp"
#include "vlapath/render.hpp"
#include "vlapath/vqa_format.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that clashes with it.
#include "httplib.h"

namespace vlapath::ranking {

struct HttpOptions {
  /// Served under /static. Candidates submitted with an `answer` and an item
  /// image readable from `image_root` are rendered here as PNG.
  std::filesystem::path static_dir;
  std::filesystem::path image_root;
  OverlayStyle style = ranking_study_style();
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownItem:
    case ErrorCode::kNoData:
      return 404;
    case ErrorCode::kUnknownRater:
      return 403;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kIo:
      return 500;
    default:
      return 400;
  }
}

inline std::string slot_name(std::size_t slot) { return "c" + std::to_string(slot); }

namespace detail {

inline void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void reply_error(httplib::Response& res, const Error& e) {
  reply(res, http_status(e.code()), {{"error", std::string(to_string(e.code()))}, {"message", e.what()}});
}

/// Renders candidates that carry an answer but no image.
inline void render_candidates(const std::string& session_id, RankingItem& item, const HttpOptions& opt) {
  if (opt.static_dir.empty() || item.image_ref.empty()) return;
  bool needed = false;
  for (const auto& c : item.candidates) needed = needed || (c.image_ref.empty() && !c.answer.empty());
  if (!needed) return;
  const Image base = read_png(opt.image_root / item.image_ref);
  const auto out_dir = opt.static_dir / session_id;
  std::filesystem::create_directories(out_dir);
  for (auto& c : item.candidates) {
    if (!c.image_ref.empty() || c.answer.empty()) continue;
    const Path2D path = parse_answer(c.answer, ParseMode::kLenient);
    const std::string name = item.id + "_" + c.method + ".png";
    write_png(out_dir / name, draw_overlay(base, path, opt.style));
    c.image_ref = "/static/" + session_id + "/" + name;
  }
}

}  // namespace detail

inline void mount_routes(httplib::Server& server, RankService& service, HttpOptions options = {}) {
  if (!options.static_dir.empty()) {
    std::filesystem::create_directories(options.static_dir);
    server.set_mount_point("/static", options.static_dir.string());
  }

  server.Post("/sessions", [&service, options](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = json::parse(req.body);
      std::vector<RankingItem> items;
      for (const auto& it : body.at("items")) items.push_back(item_from_json(it));
      const auto seed = body.value("seed", std::uint64_t{0});
      const auto raters = body.value("raters", std::vector<std::string>{});
      // Images are rendered before the session is created so the logged
      // items carry their final image refs.
      const std::string id = service.reserve_id();
      for (auto& it : items) detail::render_candidates(id, it, options);
      service.create_session(std::move(items), seed, raters, id);
      detail::reply(res, 201, {{"session_id", id}});
    } catch (const Error& e) {
      detail::reply_error(res, e);
    } catch (const std::exception& e) {
      detail::reply(res, 400, {{"error", "InvalidArgument"}, {"message", e.what()}});
    }
  });

  server.Get(R"(/sessions/([^/]+)/next)", [&service](const httplib::Request& req, httplib::Response& res) {
    try {
      const std::string id = req.matches[1];
      const std::string rater = req.get_param_value("rater");
      const auto session = service.session(id);
      const auto p = session->next_item(rater);
      if (!p) {
        detail::reply(res, 200, {{"done", true}, {"total", session->items().size()}});
        return;
      }
      json cands = json::array();
      for (std::size_t slot = 0; slot < p->permutation.size(); ++slot) {
        cands.push_back({{"slot", slot_name(slot)}, {"image_ref", p->item->candidates[p->permutation[slot]].image_ref}});
      }
      detail::reply(res, 200,
                    {{"done", false},
                     {"index", p->index},
                     {"total", p->total},
                     {"item_id", p->item->id},
                     {"image_ref", p->item->image_ref},
                     {"instruction", p->item->instruction},
                     {"tags", p->item->tags},
                     {"candidates", cands}});
    } catch (const Error& e) {
      detail::reply_error(res, e);
    }
  });

  server.Post(R"(/sessions/([^/]+)/ranks)", [&service](const httplib::Request& req, httplib::Response& res) {
    try {
      const std::string id = req.matches[1];
      json body;
      try {
        body = json::parse(req.body);
      } catch (const std::exception& e) {
        throw Error(ErrorCode::kInvalidArgument, e.what());
      }
      const auto session = service.session(id);
      RankRecord rec;
      rec.rater = body.value("rater", "");
      rec.item_id = body.value("item_id", "");
      const RankingItem& item = session->item(rec.item_id);
      std::size_t index = 0;
      while (&session->items()[index] != &item) ++index;
      const auto perm = session->permutation_for(rec.rater, index);
      for (const auto& [slot, rank] : body.at("ranks").items()) {
        std::size_t s = perm.size();
        if (slot.size() > 1 && slot[0] == 'c') {
          try {
            s = std::stoul(slot.substr(1));
          } catch (...) {
          }
        }
        if (s >= perm.size()) throw Error(ErrorCode::kIncompleteRanks, "unknown slot '" + slot + "'");
        if (!rank.is_number_integer()) throw Error(ErrorCode::kOutOfRange, "rank must be an integer");
        rec.ranks[item.candidates[perm[s]].method] = rank.get<int>();
      }
      try {
        const auto status = session->submit(rec);
        detail::reply(res, 200, {{"status", status == SubmitStatus::kAccepted ? "accepted" : "duplicate"}});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kConflict) throw;
        json stored = json::object();
        if (const auto prev = session->stored(rec.item_id, rec.rater)) {
          for (std::size_t s = 0; s < perm.size(); ++s) {
            stored[slot_name(s)] = prev->ranks.at(item.candidates[perm[s]].method);
          }
        }
        detail::reply(res, 409, {{"error", "Conflict"}, {"message", e.what()}, {"stored", stored}});
      }
    } catch (const Error& e) {
      detail::reply_error(res, e);
    } catch (const std::exception& e) {
      detail::reply(res, 400, {{"error", "InvalidArgument"}, {"message", e.what()}});
    }
  });

  server.Get(R"(/sessions/([^/]+)/results)", [&service](const httplib::Request& req, httplib::Response& res) {
    try {
      std::optional<std::string> tag;
      if (req.has_param("tag")) tag = req.get_param_value("tag");
      const auto agg = service.aggregate(req.matches[1], tag);
      detail::reply(res, 200, {{"mean_rank", agg.mean_rank}, {"count", agg.count}, {"records", agg.records}});
    } catch (const Error& e) {
      detail::reply_error(res, e);
    }
  });
}

}  // namespace vlapath::ranking
