#pragma once

#include <map>
#include <string>
#include <variant>

#include "gci/deliberation/session.hpp"

namespace gci::testing {

// Ten reviewers; reviewer r prefers A>B iff r < 7, A>C iff r < 6, B>C iff
// r < 8, which reproduces the 7/10, 6/10, 8/10 tally once everyone has
// judged all three pairs.
inline std::string reviewer_letter(const std::string& item) {
  static const std::map<std::string, std::string> letters = {
      {"item-1", "A"}, {"item-2", "B"}, {"item-3", "C"}};
  return letters.at(item);
}

inline bool reviewer_prefers_first(int reviewer, const std::string& first, const std::string& second) {
  const auto a = reviewer_letter(first);
  const auto b = reviewer_letter(second);
  auto beats = [&](const std::string& x, const std::string& y) {
    if (x == "A" && y == "B") return reviewer < 7;
    if (x == "A" && y == "C") return reviewer < 6;
    if (x == "B" && y == "C") return reviewer < 8;
    return false;
  };
  return a < b ? beats(a, b) : !beats(b, a);
}

inline deliberation::Session reviewer_session(std::uint64_t seed,
                                           deliberation::PairPolicy policy =
                                               deliberation::PairPolicy::adaptive) {
  using namespace deliberation;
  SessionConfig cfg;
  cfg.budget = 30;
  cfg.min_judgments = 30;
  cfg.seed = seed;
  cfg.policy = policy;
  auto s = Session::create("ten-reviewers", cfg, "facilitator-id");
  for (const char* text : {"A", "B", "C"}) s.submit_idea("facilitator-id", text);
  s.change_phase("facilitator-id", Phase::reviewing);
  for (int r = 0; r < 10; ++r) s.join("reviewer-" + std::to_string(r));
  for (int round = 0; round < 3; ++round) {
    for (int r = 0; r < 10; ++r) {
      const auto who = "reviewer-" + std::to_string(r);
      auto task = std::get<Task>(s.next_task(who, seed * 1000 + round * 10 + r));
      if (reviewer_prefers_first(r, task.first, task.second)) {
        s.record_judgment(who, task.first, task.second);
      } else {
        s.record_judgment(who, task.second, task.first);
      }
    }
  }
  return s;
}

}  // namespace gci::testing
