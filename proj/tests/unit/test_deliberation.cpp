#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "gci/common/error.hpp"
#include "gci/common/seeding.hpp"
#include "gci/deliberation/decision_matrix.hpp"
#include "gci/deliberation/event_log.hpp"
#include "gci/deliberation/export.hpp"
#include "gci/deliberation/session.hpp"
#include "gci/deliberation/tensions.hpp"
#include "support/oracles.hpp"
#include "support/scenarios.hpp"

using namespace gci::deliberation;
using gci::Error;
using gci::ErrorCode;
using gci::judgment::ComparisonTally;
using gci::judgment::ScoreVector;
namespace oracle = gci::testing;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected gci::Error";
  return ErrorCode::malformed;
}

SessionConfig small_config(std::uint64_t seed = 1) {
  SessionConfig c;
  c.particles = 400;
  c.seed = seed;
  return c;
}

// Session with `items` ideas, idea i authored by "author-i", already reviewing.
Session authored_session(std::size_t items, std::uint64_t seed, std::size_t budget = 1000) {
  auto cfg = small_config(seed);
  cfg.budget = budget;
  cfg.min_judgments = budget;
  auto s = Session::create("s", cfg, "fac");
  for (std::size_t i = 0; i < items; ++i) {
    const auto who = "author-" + std::to_string(i);
    s.join(who);
    s.submit_idea(who, "idea " + std::to_string(i));
  }
  s.change_phase("fac", Phase::reviewing);
  return s;
}

std::string dump_log(const Session& s) {
  std::ostringstream out;
  write_jsonl(out, s.log().events());
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Event log

TEST(EventLog, HashMatchesIndependentSha256) {
  // Frozen from Python's hashlib over "0"*64 + '{"a":1,"b":[true,null,"x"]}'.
  nlohmann::json payload = {{"b", {true, nullptr, "x"}}, {"a", 1}};
  EXPECT_EQ(canonical_json(payload), R"({"a":1,"b":[true,null,"x"]})");
  EXPECT_EQ(chain_hash(kGenesisHash, payload),
            "dbd938dabd20811f82409116f0dad2e6e9d63d4fa8fd0f08d301030e4279c2f3");
}

TEST(EventLog, AppendChainsFromGenesis) {
  EventLog log;
  log.append(EventKind::session_created, {{"x", 1}});
  log.append(EventKind::phase_changed, {{"x", 2}});
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log.events()[0].prev_hash, kGenesisHash);
  EXPECT_EQ(log.events()[1].prev_hash, log.events()[0].hash);
  EXPECT_EQ(log.events()[1].seq, 1u);
  EXPECT_NO_THROW(verify_chain(log.events()));
}

TEST(EventLog, JsonlRoundTrip) {
  auto s = oracle::reviewer_session(3);
  std::istringstream in(dump_log(s));
  auto events = read_jsonl(in);
  ASSERT_EQ(events.size(), s.log().size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(to_jsonl_line(events[i]), to_jsonl_line(s.log().events()[i]));
  }
}

TEST(EventLog, GapIsReported) {
  auto events = oracle::reviewer_session(3).log().events();
  events.erase(events.begin() + 5);
  try {
    verify_chain(events);
    FAIL();
  } catch (const IntegrityError& e) {
    EXPECT_EQ(e.code(), ErrorCode::sequence_gap);
    EXPECT_EQ(e.sequence(), 5u);
  }
}

TEST(EventLog, EverySingleByteTamperIsCaughtAtItsLine) {
  auto s = authored_session(3, 9, 4);
  s.join("judge");
  auto task = std::get<Task>(s.next_task("judge", 1));
  s.record_judgment("judge", task.first, task.second);
  const std::string text = dump_log(s);

  std::vector<std::uint64_t> line_of(text.size());
  std::uint64_t line = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    line_of[i] = line;
    if (text[i] == '\n') ++line;
  }
  std::size_t checked = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n' && i + 1 == text.size()) continue;  // trailing newline
    for (unsigned char delta : {0x01, 0x20}) {
      std::string bad = text;
      bad[i] = static_cast<char>(static_cast<unsigned char>(bad[i]) ^ delta);
      std::istringstream in(bad);
      try {
        read_jsonl(in);
        ADD_FAILURE() << "tamper at byte " << i << " went unnoticed";
      } catch (const IntegrityError& e) {
        EXPECT_EQ(e.sequence(), line_of[i]) << "byte " << i;
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 2000u);
}

TEST(EventLog, EquivalentNumberSpellingIsRejected) {
  EventLog log;
  log.append(EventKind::session_created, {{"x", 1.0}});
  auto line = to_jsonl_line(log.events()[0]);
  const auto pos = line.find("1.0");
  ASSERT_NE(pos, std::string::npos);
  line.replace(pos, 3, "1e0");
  std::istringstream in(line + "\n");
  EXPECT_THROW(read_jsonl(in), IntegrityError);
}

// ---------------------------------------------------------------------------
// Ideas and posterior extension

TEST(SubmitIdea, FirstIdeaHoldsAllMass) {
  auto s = Session::create("s", small_config(), "fac");
  auto id = s.submit_idea("fac", "only");
  EXPECT_EQ(id, "item-1");
  EXPECT_NEAR(s.posterior().mean(id), 1.0, 1e-12);
}

TEST(SubmitIdea, ExtensionPreservesRatios) {
  auto cfg = small_config(5);
  cfg.particles = 1000;
  auto t = Session::create("t", cfg, "fac");
  for (const char* text : {"A", "B", "C"}) t.submit_idea("fac", text);
  auto ratios = [&](const Session& x) {
    return std::array<double, 2>{x.posterior().mean("item-1") / x.posterior().mean("item-2"),
                                 x.posterior().mean("item-2") / x.posterior().mean("item-3")};
  };
  const auto r0 = ratios(t);
  t.submit_idea("fac", "D");
  const auto r1 = ratios(t);
  EXPECT_NEAR(r0[0], r1[0], 0.02);
  EXPECT_NEAR(r0[1], r1[1], 0.02);
}

TEST(SubmitIdea, Rejections) {
  auto s = Session::create("s", small_config(), "fac");
  EXPECT_EQ(code_of([&] { s.submit_idea("fac", "   "); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { s.submit_idea("nobody", "x"); }), ErrorCode::unknown_participant);
  EXPECT_EQ(code_of([&] { s.submit_idea("fac", "x", "item-9"); }), ErrorCode::unknown_item);
  s.submit_idea("fac", "x");
  s.change_phase("fac", Phase::converged);
  const auto events = s.log().size();
  EXPECT_EQ(code_of([&] { s.submit_idea("fac", "late"); }), ErrorCode::phase_conflict);
  EXPECT_EQ(s.log().size(), events);
}

TEST(SubmitIdea, ParentIsRecorded) {
  auto s = Session::create("s", small_config(), "fac");
  auto a = s.submit_idea("fac", "root");
  auto b = s.submit_idea("fac", "builds on root", a);
  ASSERT_TRUE(s.find_idea(b)->parent.has_value());
  EXPECT_EQ(*s.find_idea(b)->parent, a);
}

// ---------------------------------------------------------------------------
// Task assignment

TEST(NextTask, NeverPairsAuthorsWithOwnIdeas) {
  std::size_t calls = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto s = authored_session(10, seed);
    bool any = true;
    while (any) {
      any = false;
      for (int p = 0; p < 10; ++p) {
        const auto who = "author-" + std::to_string(p);
        auto r = s.next_task(who, seed * 100000 + calls);
        ++calls;
        if (auto* t = std::get_if<Task>(&r)) {
          const auto own = "item-" + std::to_string(p + 1);
          ASSERT_NE(t->first, own);
          ASSERT_NE(t->second, own);
          s.record_judgment(who, t->first, t->second);
          any = true;
        } else {
          EXPECT_EQ(std::get<TaskSignal>(r), TaskSignal::no_eligible_pairs);
        }
      }
    }
    // Every non-author pair went to every participant exactly once.
    EXPECT_EQ(s.judgments().size(), 10u * 36u);
    for (const auto& e : s.log().events()) {
      if (e.kind != EventKind::task_assigned) continue;
      const auto who = e.payload.at("participant").get<std::string>();
      for (const char* side : {"first", "second"}) {
        EXPECT_NE(s.find_idea(e.payload.at(side).get<std::string>())->contributor, who);
      }
    }
  }
  EXPECT_GE(calls, 1000u);
}

TEST(NextTask, UncertainPairDominatesSelection) {
  // A holds 0.98 in every particle, so A-B and A-C are settled while the
  // B:C split is uniform.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> particles;
  for (int p = 0; p < 1000; ++p) {
    const double b = 0.02 * u(rng);
    particles.push_back({0.98, b, 0.02 - b});
  }
  auto post = gci::judgment::ScorePosterior::from_particles({"A", "B", "C"}, particles,
                                                            std::vector<double>(1000, 1.0));
  std::vector<std::pair<std::string, std::string>> eligible = {{"A", "B"}, {"A", "C"}, {"B", "C"}};
  int uncertain = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto t = choose_pair(post, eligible, {}, PairPolicy::adaptive, seed);
    std::set<std::string> got{t->first, t->second};
    uncertain += got == std::set<std::string>{"B", "C"} ? 1 : 0;
  }
  EXPECT_GT(uncertain, 950);
}

TEST(NextTask, RoundRobinPrefersLeastAssigned) {
  auto post = gci::judgment::init_posterior({"A", "B", "C"}, 10, 1);
  std::vector<std::pair<std::string, std::string>> eligible = {{"A", "B"}, {"A", "C"}, {"B", "C"}};
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts = {{{"A", "B"}, 2},
                                                                          {{"A", "C"}, 1}};
  auto t = choose_pair(post, eligible, counts, PairPolicy::round_robin, 4);
  EXPECT_EQ((std::set<std::string>{t->first, t->second}), (std::set<std::string>{"B", "C"}));
  counts[{"B", "C"}] = 1;
  t = choose_pair(post, eligible, counts, PairPolicy::round_robin, 4);
  EXPECT_EQ((std::set<std::string>{t->first, t->second}), (std::set<std::string>{"A", "C"}));
}

TEST(NextTask, PresentationOrderVariesWithSeed) {
  auto post = gci::judgment::init_posterior({"A", "B"}, 10, 1);
  int flipped = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto t = choose_pair(post, {{"A", "B"}}, {}, PairPolicy::adaptive, seed);
    flipped += t->first == "B" ? 1 : 0;
  }
  EXPECT_GT(flipped, 60);
  EXPECT_LT(flipped, 140);
}

TEST(NextTask, TwoItemsOneReviewer) {
  auto s = authored_session(2, 1);
  s.join("judge");
  auto t = std::get<Task>(s.next_task("judge", 3));
  EXPECT_EQ((std::set<std::string>{t.first, t.second}),
            (std::set<std::string>{"item-1", "item-2"}));
  EXPECT_EQ(std::get<TaskSignal>(s.next_task("author-0", 3)), TaskSignal::no_eligible_pairs);
}

TEST(NextTask, PendingAssignmentIsRepeatedWithoutEvent) {
  auto s = authored_session(4, 1);
  s.join("judge");
  auto t1 = std::get<Task>(s.next_task("judge", 3));
  const auto events = s.log().size();
  auto t2 = std::get<Task>(s.next_task("judge", 99));
  EXPECT_EQ(t1.first, t2.first);
  EXPECT_EQ(t1.second, t2.second);
  EXPECT_EQ(s.log().size(), events);
}

TEST(NextTask, PhaseAndBudgetSignals) {
  auto cfg = small_config();
  cfg.budget = 1;
  cfg.min_judgments = 5;
  auto s = Session::create("s", cfg, "fac");
  s.join("p");
  s.join("q");
  s.submit_idea("fac", "a");
  s.submit_idea("fac", "b");
  s.submit_idea("fac", "c");
  EXPECT_EQ(std::get<TaskSignal>(s.next_task("p", 1)), TaskSignal::not_started);
  s.change_phase("fac", Phase::reviewing);
  auto t = std::get<Task>(s.next_task("p", 1));
  EXPECT_EQ(std::get<TaskSignal>(s.next_task("q", 1)), TaskSignal::awaiting_convergence);
  s.record_judgment("p", t.first, t.second);
  EXPECT_EQ(std::get<TaskSignal>(s.next_task("p", 1)), TaskSignal::awaiting_convergence);
  s.change_phase("fac", Phase::converged);
  EXPECT_EQ(std::get<TaskSignal>(s.next_task("p", 1)), TaskSignal::closed);
}

// ---------------------------------------------------------------------------
// Judgments and the collective voice

TEST(RecordJudgment, WinnerLeadsTwoItemVoice) {
  auto s = authored_session(2, 4);
  s.join("judge");
  auto t = std::get<Task>(s.next_task("judge", 1));
  auto voice = s.record_judgment("judge", t.second, t.first);
  EXPECT_EQ(voice.entries.front().item, t.second);
  EXPECT_EQ(voice.epoch, 1u);
}

TEST(RecordJudgment, TenReviewerScenarioOrdersABC) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto s = oracle::reviewer_session(seed);
    const auto w = oracle::wins3(s.tally(), {"item-1", "item-2", "item-3"});
    const auto expected = oracle::wins3(oracle::reviewer_tally(), {"A", "B", "C"});
    EXPECT_EQ(w, expected);
    const auto voice = s.collective_voice();
    ASSERT_EQ(voice.entries.size(), 3u);
    EXPECT_EQ(voice.entries[0].item, "item-1");
    EXPECT_EQ(voice.entries[1].item, "item-2");
    EXPECT_EQ(voice.entries[2].item, "item-3");
    for (std::size_t i = 0; i < 3; ++i) {
      const auto id = "item-" + std::to_string(i + 1);
      EXPECT_NEAR(s.posterior().mean(id), oracle::kReviewerExactMle[i], 0.05);
    }
  }
}

TEST(RecordJudgment, UnassignedAndDuplicateAreRejectedWithoutEvents) {
  auto s = authored_session(3, 2);
  s.join("judge");
  const auto events = s.log().size();
  EXPECT_EQ(code_of([&] { s.record_judgment("judge", "item-1", "item-2"); }),
            ErrorCode::unassigned_pair);
  EXPECT_EQ(s.log().size(), events);
  EXPECT_TRUE(s.judgments().empty());
  auto t = std::get<Task>(s.next_task("judge", 1));
  s.record_judgment("judge", t.first, t.second);
  const auto after = s.log().size();
  EXPECT_EQ(code_of([&] { s.record_judgment("judge", t.second, t.first); }),
            ErrorCode::duplicate_judgment);
  EXPECT_EQ(code_of([&] { s.record_judgment("judge", t.first, t.first); }),
            ErrorCode::degenerate_pair);
  EXPECT_EQ(s.log().size(), after);
}

TEST(CollectiveVoice, TopKProbabilitiesSumToK) {
  auto s = authored_session(7, 6);
  for (int j = 0; j < 4; ++j) s.join("judge-" + std::to_string(j));
  for (int round = 0; round < 5; ++round) {
    for (int j = 0; j < 4; ++j) {
      const auto who = "judge-" + std::to_string(j);
      auto t = std::get<Task>(s.next_task(who, round * 10 + j));
      s.record_judgment(who, std::min(t.first, t.second), std::max(t.first, t.second));
      const auto voice = s.collective_voice();
      double sum = 0.0;
      for (const auto& e : voice.entries) sum += e.topk_probability;
      EXPECT_NEAR(sum, 3.0, 1e-6);
      for (std::size_t i = 1; i < voice.entries.size(); ++i) {
        const auto& a = voice.entries[i - 1];
        const auto& b = voice.entries[i];
        EXPECT_TRUE(a.topk_probability > b.topk_probability ||
                    (a.topk_probability == b.topk_probability &&
                     (a.mean > b.mean || (a.mean == b.mean && a.item < b.item))));
      }
    }
  }
}

TEST(CollectiveVoice, EffectiveKIsClampedToItemCount) {
  auto s = authored_session(2, 6);
  EXPECT_EQ(s.collective_voice().k, 2u);
  for (const auto& e : s.collective_voice().entries) EXPECT_NEAR(e.topk_probability, 1.0, 1e-12);
}

TEST(Convergence, WindowArithmetic) {
  std::vector<bool> flags(10, false);
  EXPECT_DOUBLE_EQ(window_stability(flags, 10), 1.0);
  EXPECT_DOUBLE_EQ(window_stability(std::vector<bool>(10, true), 10), 0.0);
  flags[1] = flags[4] = flags[8] = true;
  EXPECT_DOUBLE_EQ(window_stability(flags, 10), 0.7);
  EXPECT_DOUBLE_EQ(window_stability(flags, 11), 0.0);
  flags.insert(flags.begin(), 5, true);  // older changes fall outside the window
  EXPECT_DOUBLE_EQ(window_stability(flags, 10), 0.7);
  EXPECT_EQ(code_of([&] { window_stability(flags, 0); }), ErrorCode::invalid_argument);
}

TEST(Convergence, AutoTransitionOnceStableAndPastMinimum) {
  auto cfg = small_config(8);
  cfg.budget = 500;
  cfg.min_judgments = 12;
  cfg.convergence_window = 5;
  cfg.top_k = 1;
  auto s = Session::create("s", cfg, "fac");
  s.submit_idea("fac", "strong");
  s.submit_idea("fac", "weak");
  s.change_phase("fac", Phase::reviewing);
  int judged = 0;
  for (int j = 0; j < 40 && s.phase() == Phase::reviewing; ++j) {
    const auto who = "judge-" + std::to_string(j);
    s.join(who);
    ASSERT_TRUE(std::holds_alternative<Task>(s.next_task(who, j)));
    s.record_judgment(who, "item-1", "item-2");
    ++judged;
    EXPECT_EQ(s.phase() == Phase::converged,
              judged >= 12 && s.convergence_metric(5) >= 0.9);
  }
  EXPECT_EQ(s.phase(), Phase::converged);
  EXPECT_EQ(judged, 12);
}

// ---------------------------------------------------------------------------
// Tensions

TEST(Tensions, DisagreementScores) {
  EXPECT_DOUBLE_EQ(disagreement(10, 10), 0.0);
  EXPECT_DOUBLE_EQ(disagreement(5, 10), 1.0);
  EXPECT_NEAR(disagreement(7, 10), 0.6, 1e-12);
}

TEST(Tensions, SurfacingRules) {
  ComparisonTally t;
  t.record("A", "B", 10);
  t.record("C", "D", 5);
  t.record("D", "C", 5);
  t.record("A", "C", 7);
  t.record("C", "A", 3);
  t.record("B", "D", 1);
  t.record("D", "B", 2);  // only 3 judgments
  auto all = surface_tensions(t, 0.0);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].first, "C");
  EXPECT_DOUBLE_EQ(all[0].disagreement, 1.0);
  EXPECT_EQ(all[1].second, "C");
  EXPECT_NEAR(all[1].disagreement, 0.6, 1e-12);
  EXPECT_DOUBLE_EQ(all[2].disagreement, 0.0);
  EXPECT_EQ(surface_tensions(t, 0.61).size(), 1u);
  EXPECT_EQ(surface_tensions(t, 1.0).size(), 1u);
  EXPECT_TRUE(surface_tensions(ComparisonTally{}, 0.0).empty());
  EXPECT_EQ(code_of([&] { surface_tensions(t, 1.5); }), ErrorCode::invalid_argument);
}

TEST(Tensions, TenReviewerSessionSurfacesAB) {
  auto s = oracle::reviewer_session(2);
  auto found = s.surface_tensions(0.55);
  ASSERT_EQ(found.size(), 2u);  // A-C at 0.8, A-B at 0.6; B-C is 0.4
  EXPECT_NEAR(found[0].disagreement, 0.8, 1e-12);
  EXPECT_NEAR(found[1].disagreement, 0.6, 1e-12);
}

// ---------------------------------------------------------------------------
// Contribution ranking

TEST(Contributions, OnlyAfterConvergence) {
  auto s = authored_session(3, 1);
  EXPECT_EQ(code_of([&] { s.contribution_ranking(); }), ErrorCode::not_converged);
}

TEST(Contributions, SingleContributorHoldsEverything) {
  auto s = Session::create("s", small_config(), "fac");
  s.join("solo");
  s.submit_idea("solo", "a");
  s.submit_idea("solo", "b");
  s.join("idle");
  s.change_phase("fac", Phase::converged);
  auto ranking = s.contribution_ranking();
  ASSERT_EQ(ranking.size(), 2u);
  EXPECT_EQ(ranking[0].participant, "solo");
  EXPECT_NEAR(ranking[0].relevance, 1.0, 1e-12);
  EXPECT_EQ(ranking[1].participant, "idle");
  EXPECT_DOUBLE_EQ(ranking[1].relevance, 0.0);
}

TEST(Contributions, TenReviewerOwnershipSplit) {
  // Exact MLE means give 0.470 for {A} and 0.531 for {B, C}; the posterior
  // mean is a little flatter, so the check is on order and a loose band.
  SessionConfig cfg = small_config(3);
  cfg.particles = 1000;
  cfg.budget = 30;
  cfg.min_judgments = 30;
  auto s = Session::create("s", cfg, "fac");
  s.join("owner-a");
  s.join("owner-bc");
  s.submit_idea("owner-a", "A");
  s.submit_idea("owner-bc", "B");
  s.submit_idea("owner-bc", "C");
  s.change_phase("fac", Phase::reviewing);
  for (int round = 0; round < 3; ++round) {
    for (int r = 0; r < 10; ++r) {
      const auto who = "reviewer-" + std::to_string(r);
      if (round == 0) s.join(who);
      auto t = std::get<Task>(s.next_task(who, round * 10 + r));
      if (oracle::reviewer_prefers_first(r, t.first, t.second)) {
        s.record_judgment(who, t.first, t.second);
      } else {
        s.record_judgment(who, t.second, t.first);
      }
    }
  }
  if (s.phase() == Phase::reviewing) s.change_phase("fac", Phase::converged);
  auto ranking = s.contribution_ranking();
  ASSERT_EQ(ranking.size(), 12u);
  EXPECT_EQ(ranking[0].participant, "owner-bc");
  EXPECT_EQ(ranking[1].participant, "owner-a");
  EXPECT_NEAR(ranking[0].relevance, 1.0 - oracle::kReviewerExactMle[0], 0.05);
  EXPECT_NEAR(ranking[1].relevance, oracle::kReviewerExactMle[0], 0.05);
  EXPECT_NEAR(ranking[0].relevance + ranking[1].relevance, 1.0, 1e-9);
  EXPECT_EQ(ranking[2].relevance, 0.0);
  EXPECT_EQ(ranking[2].participant, "reviewer-0");  // ties by id
}

// ---------------------------------------------------------------------------
// Decision matrix

TEST(DecisionMatrix, SingleCandidate) {
  auto m = evaluate_decision_matrix({"X"}, {{"cost", 1.0, {}}});
  EXPECT_DOUBLE_EQ(m.success("X"), 1.0);
}

TEST(DecisionMatrix, SymmetricTalliesGiveUniform) {
  ComparisonTally t;
  for (const char* a : {"X", "Y", "Z"})
    for (const char* b : {"X", "Y", "Z"})
      if (std::string(a) != b) t.record(a, b, 3);
  auto m = evaluate_decision_matrix({"X", "Y", "Z"}, {{"c1", 0.3, t}, {"c2", 0.7, t}});
  for (double a : m.aggregate) EXPECT_NEAR(a, 1.0 / 3.0, 1e-9);
}

TEST(DecisionMatrix, WeightedMeanHandComputed) {
  auto m = aggregate_decision({"X", "Y"}, {"c1", "c2"}, {0.5, 0.5},
                              {ScoreVector({"X", "Y"}, {0.8, 0.2}),
                               ScoreVector({"X", "Y"}, {0.4, 0.6})});
  EXPECT_NEAR(m.aggregate[0], 0.6, 1e-12);
  EXPECT_NEAR(m.aggregate[1], 0.4, 1e-12);

  // The same numbers from tallies: with no pseudo-wins a 4-1 split fits 0.8.
  ComparisonTally c1, c2;
  c1.record("X", "Y", 4);
  c1.record("Y", "X", 1);
  c2.record("X", "Y", 2);
  c2.record("Y", "X", 3);
  gci::judgment::FitOptions exact;
  exact.epsilon = 0.0;
  auto fitted = evaluate_decision_matrix({"X", "Y"}, {{"c1", 0.5, c1}, {"c2", 0.5, c2}}, exact);
  EXPECT_NEAR(fitted.success("X"), 0.6, 1e-7);
  EXPECT_NEAR(fitted.success("Y"), 0.4, 1e-7);
}

TEST(DecisionMatrix, Rejections) {
  ComparisonTally xy;
  xy.record("X", "Y");
  ComparisonTally xz;
  xz.record("X", "Z");
  EXPECT_EQ(code_of([&] { evaluate_decision_matrix({"X", "Y"}, {{"a", 0.5, xy}, {"b", 0.4, xy}}); }),
            ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { evaluate_decision_matrix({"X", "Y"}, {{"a", 0.5, xy}, {"b", 0.5, xz}}); }),
            ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { evaluate_decision_matrix({}, {{"a", 1.0, xy}}); }),
            ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { evaluate_decision_matrix({"X", "X"}, {{"a", 1.0, xy}}); }),
            ErrorCode::invalid_argument);
  EXPECT_NO_THROW(
      evaluate_decision_matrix({"X", "Y"}, {{"a", 0.5 + 4e-10, xy}, {"b", 0.5, xy}}));
}

TEST(DecisionMatrix, AggregatesAreADistribution) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> count(0, 6);
  const std::vector<std::string> ids = {"P", "Q", "R", "S"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Criterion> criteria;
    for (int c = 0; c < 3; ++c) {
      ComparisonTally t;
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < ids.size(); ++j)
          if (i != j) t.record(ids[i], ids[j], 1 + count(rng));
      criteria.push_back({"c" + std::to_string(c), c == 0 ? 0.5 : 0.25, t});
    }
    auto m = evaluate_decision_matrix(ids, criteria);
    double sum = 0.0;
    for (double a : m.aggregate) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
      sum += a;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(DecisionMatrix, MoreWinsNeverLowerAggregate) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> count(0, 5);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  const std::vector<std::string> ids = {"P", "Q", "R", "S"};
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<Criterion> criteria;
    for (int c = 0; c < 2; ++c) {
      ComparisonTally t;
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < ids.size(); ++j)
          if (i != j) t.record(ids[i], ids[j], count(rng));
      for (std::size_t i = 1; i < ids.size(); ++i) t.record(ids[0], ids[i], 0);
      criteria.push_back({"c" + std::to_string(c), 0.5, t});
    }
    // Every candidate must appear even if all random counts were zero.
    for (auto& c : criteria)
      for (std::size_t i = 0; i + 1 < ids.size(); ++i) c.tally.record(ids[i], ids[i + 1]);
    const auto base = evaluate_decision_matrix(ids, criteria);
    const auto winner = pick(rng);
    auto loser = pick(rng);
    if (loser == winner) loser = (winner + 1) % ids.size();
    criteria[trial % 2].tally.record(ids[winner], ids[loser]);
    const auto more = evaluate_decision_matrix(ids, criteria);
    EXPECT_GE(more.aggregate[winner], base.aggregate[winner] - 1e-9) << "trial " << trial;
  }
}

TEST(DecisionMatrix, SessionLogsAndReplaysCriteria) {
  auto s = authored_session(2, 3);
  ComparisonTally cost;
  cost.record("item-1", "item-2", 3);
  cost.record("item-2", "item-1", 1);
  const auto& m = s.score_decision("fac", {"item-1", "item-2"}, {{"cost", 1.0, cost}});
  EXPECT_GT(m.success("item-1"), 0.5);
  EXPECT_EQ(s.log().events().back().kind, EventKind::criterion_scored);
  EXPECT_EQ(code_of([&] { s.score_decision("author-0", {"item-1"}, {{"c", 1.0, {}}}); }),
            ErrorCode::forbidden);
  EXPECT_EQ(code_of([&] { s.score_decision("fac", {"item-9"}, {{"c", 1.0, {}}}); }),
            ErrorCode::unknown_item);
  auto r = Session::replay(s.log().events());
  EXPECT_EQ(r.state_hash(), s.state_hash());
  EXPECT_DOUBLE_EQ(r.decision()->success("item-1"), m.success("item-1"));
}

// ---------------------------------------------------------------------------
// Phases, joins

TEST(Phases, OnlyForwardAndOnlyFacilitators) {
  auto s = Session::create("s", small_config(), "fac");
  s.join("p");
  EXPECT_EQ(code_of([&] { s.change_phase("p", Phase::reviewing); }), ErrorCode::forbidden);
  s.change_phase("fac", Phase::converged);  // skipping ahead is allowed
  EXPECT_EQ(code_of([&] { s.change_phase("fac", Phase::reviewing); }), ErrorCode::phase_conflict);
  EXPECT_EQ(code_of([&] { s.change_phase("fac", Phase::converged); }), ErrorCode::phase_conflict);
  s.change_phase("fac", Phase::revealed);
  EXPECT_EQ(s.phase(), Phase::revealed);
}

TEST(Joins, IdempotentByCredentialAndAliasesAreOpaque) {
  auto s = Session::create("s", small_config(), "fac");
  const auto& a = s.join("participant-7f3a", Role::contributor, "cred-digest", "tok-digest");
  const auto alias = a.alias;
  const auto events = s.log().size();
  const auto& again = s.join("other-id", Role::contributor, "cred-digest", "tok2");
  EXPECT_EQ(again.id, "participant-7f3a");
  EXPECT_EQ(again.alias, alias);
  EXPECT_EQ(s.log().size(), events);
  EXPECT_EQ(alias.find("7f3a"), std::string::npos);
  EXPECT_EQ(code_of([&] { s.join("participant-7f3a"); }), ErrorCode::invalid_argument);
  EXPECT_EQ(s.find_by_token_digest("tok-digest")->id, "participant-7f3a");
  EXPECT_EQ(s.find_by_token_digest(""), nullptr);
}

TEST(Config, JsonValidation) {
  auto c = session_config_from_json({{"budget", 50}, {"policy", "roundrobin"}, {"seed", 9}});
  EXPECT_EQ(c.budget, 50u);
  EXPECT_EQ(c.policy, PairPolicy::round_robin);
  EXPECT_EQ(session_config_from_json(to_json(c)).seed, 9u);
  for (const auto& bad : {nlohmann::json{{"budget", 0}}, nlohmann::json{{"budget", -1}},
                          nlohmann::json{{"convergence_threshold", 1.5}},
                          nlohmann::json{{"policy", "random"}}, nlohmann::json{{"colour", 1}},
                          nlohmann::json{{"particles", 0}}, nlohmann::json::array()}) {
    EXPECT_EQ(code_of([&] { session_config_from_json(bad); }), ErrorCode::malformed) << bad;
  }
}

// ---------------------------------------------------------------------------
// Replay, restore, export

TEST(Judgments, IdempotencyKeySurvivesReplayAndSnapshot) {
  auto s = authored_session(3, 4);
  s.join("j");
  const auto t = std::get<Task>(s.next_task("j", 1));
  s.record_judgment("j", t.first, t.second, "key-a");
  const auto size = s.log().size();
  s.record_judgment("j", t.first, t.second, "key-a");
  EXPECT_EQ(s.log().size(), size);
  EXPECT_EQ(code_of([&] { s.record_judgment("j", t.second, t.first, "key-a"); }),
            ErrorCode::duplicate_judgment);

  auto replayed = Session::replay(s.log().events());
  EXPECT_EQ(replayed.state_hash(), s.state_hash());
  replayed.record_judgment("j", t.first, t.second, "key-a");
  EXPECT_EQ(replayed.log().size(), size);
  auto restored = Session::restore(s.snapshot(), s.log().events());
  EXPECT_EQ(restored.state_hash(), s.state_hash());
  restored.record_judgment("j", t.first, t.second, "key-a");
  EXPECT_EQ(restored.log().size(), size);
}

TEST(Replay, EmptyLogIsRejected) {
  EXPECT_EQ(code_of([] { Session::replay({}); }), ErrorCode::missing_session_created);
  auto events = oracle::reviewer_session(1).log().events();
  events.erase(events.begin());
  EXPECT_EQ(code_of([&] { Session::replay(events); }), ErrorCode::missing_session_created);
}

TEST(Replay, ReproducesLiveStateHash) {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    auto s = oracle::reviewer_session(seed);
    auto r = Session::replay(s.log().events());
    EXPECT_EQ(r.state_hash(), s.state_hash());
    EXPECT_EQ(canonical_json(r.snapshot()), canonical_json(s.snapshot()));
  }
}

TEST(Replay, TamperedPayloadNamesSequence) {
  auto events = oracle::reviewer_session(1).log().events();
  events[12].payload["winner"] = "item-3";
  try {
    Session::replay(events);
    FAIL();
  } catch (const IntegrityError& e) {
    EXPECT_EQ(e.code(), ErrorCode::broken_chain);
    EXPECT_EQ(e.sequence(), 12u);
  }
}

TEST(Replay, SnapshotPlusSuffixMatches) {
  auto cfg = small_config(12);
  cfg.budget = 30;
  cfg.min_judgments = 30;
  cfg.drift_sigma = 0.02;
  auto s = authored_session(5, 12, 30);
  s.join("j1");
  s.join("j2");
  nlohmann::json snap;
  std::size_t snap_events = 0;
  for (int k = 0; k < 8; ++k) {
    for (const char* who : {"j1", "j2"}) {
      auto t = std::get<Task>(s.next_task(who, k));
      s.record_judgment(who, t.first, t.second);
    }
    if (k == 3) {
      snap = s.snapshot();
      snap_events = s.log().size();
    }
  }
  auto r = Session::restore(snap, s.log().events());
  EXPECT_EQ(r.state_hash(), s.state_hash());
  EXPECT_EQ(r.log().size(), s.log().size());
  EXPECT_LT(snap_events, s.log().size());
  // A snapshot that claims a different head is refused.
  snap["head_hash"] = std::string(64, 'f');
  EXPECT_THROW(Session::restore(snap, s.log().events()), Error);
}

TEST(Replay, DriftSessionsReplayExactly) {
  auto cfg = small_config(30);
  cfg.drift_sigma = 0.05;
  auto s = Session::create("d", cfg, "fac");
  for (int i = 0; i < 4; ++i) s.submit_idea("fac", "idea");
  s.change_phase("fac", Phase::reviewing);
  s.join("j");
  for (int k = 0; k < 6; ++k) {
    auto t = std::get<Task>(s.next_task("j", k));
    s.record_judgment("j", t.first, t.second);
  }
  EXPECT_EQ(Session::replay(s.log().events()).state_hash(), s.state_hash());
}

TEST(Export, BundleRoundTrip) {
  auto s = oracle::reviewer_session(7);
  const auto dir = std::filesystem::temp_directory_path() / "gci_export_test";
  std::filesystem::remove_all(dir);
  export_bundle(s, dir);
  for (const char* name : {"session.json", "events.jsonl", "voice.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  auto r = import_bundle(dir);
  EXPECT_EQ(r.state_hash(), s.state_hash());
  std::ostringstream csv;
  write_voice_csv(csv, s.collective_voice());
  EXPECT_EQ(csv.str().substr(0, 26), "rank,item,mean,topk_prob\n1");
  std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Invariants

TEST(Invariants, VoiceIgnoresSubmissionOrderAndIdentities) {
  // Same judgment stream over item ids; authorship order and participant
  // ids differ between the two sessions.
  auto run = [](const std::vector<std::string>& authors) {
    auto s = Session::create("s", small_config(40), "fac-" + authors[0]);
    for (const auto& a : authors) s.join(a);
    for (const auto& a : authors) s.submit_idea(a, "idea by " + a);
    s.change_phase("fac-" + authors[0], Phase::reviewing);
    for (int j = 0; j < 6; ++j) s.join("judge-" + std::to_string(j) + authors[0]);
    for (int round = 0; round < 3; ++round) {
      for (int j = 0; j < 6; ++j) {
        const auto who = "judge-" + std::to_string(j) + authors[0];
        auto t = std::get<Task>(s.next_task(who, round * 6 + j));
        s.record_judgment(who, std::min(t.first, t.second), std::max(t.first, t.second));
      }
    }
    return s;
  };
  auto a = run({"ann", "bob", "cy", "dee"});
  auto b = run({"zed", "yan", "xu", "wu"});
  const auto va = a.collective_voice();
  const auto vb = b.collective_voice();
  ASSERT_EQ(va.entries.size(), vb.entries.size());
  for (std::size_t i = 0; i < va.entries.size(); ++i) {
    EXPECT_EQ(va.entries[i].item, vb.entries[i].item);
    EXPECT_EQ(va.entries[i].mean, vb.entries[i].mean);
    EXPECT_EQ(va.entries[i].topk_probability, vb.entries[i].topk_probability);
  }
}

TEST(Invariants, EventCountMatchesInteractions) {
  auto s = oracle::reviewer_session(1);
  // create + 3 ideas + phase + 10 joins + 30 tasks + 30 judgments
  EXPECT_EQ(s.log().size(), 1u + 3u + 1u + 10u + 30u + 30u);
}
