#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "avalon/rules.hpp"

using namespace avalon;

namespace {

const std::array<RoleName, kPlayers> kLayout = {RoleName::Merlin, RoleName::Percival,
                                                RoleName::Servant, RoleName::Morgana,
                                                RoleName::Assassin};

GameState fresh() { return new_game(GameConfig{}, make_roles(kLayout)); }

// Leader proposes `team`, keeps it, everyone votes `v`.
GameState propose_and_vote(GameState s, std::vector<Seat> team, VoteChoice v) {
  s = begin_discussion(s);
  s = propose_team(s, s.leader, team);
  s = close_discussion(s);
  s = propose_team(s, s.leader, team);
  for (Seat p = 0; p < kPlayers; ++p) s = cast_vote(s, p, v);
  return s;
}

RuleErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const RuleError& e) {
    return e.code();
  }
  FAIL("no RuleError thrown");
  return RuleErrorCode::InvalidConfig;
}

}  // namespace

TEST_SUITE("rules") {
  TEST_CASE("knowledge sets follow the role") {
    auto roles = make_roles(kLayout);
    CHECK(roles[0].knowledge == std::vector<Seat>{3, 4});  // Merlin sees both evil seats
    CHECK(roles[1].knowledge == std::vector<Seat>{0, 3});  // Percival: Merlin and Morgana, unlabeled
    CHECK(roles[2].knowledge.empty());
    CHECK(roles[3].knowledge == std::vector<Seat>{4});
    CHECK(roles[4].knowledge == std::vector<Seat>{3});
    CHECK_THROWS_AS(make_roles({RoleName::Merlin, RoleName::Merlin, RoleName::Servant,
                                RoleName::Morgana, RoleName::Assassin}),
                    RuleError);
  }

  TEST_CASE("a full approved round") {
    GameState s = fresh();
    CHECK(s.phase == Phase::Summarize);
    CHECK(s.leader == 0);
    s = propose_and_vote(s, {0, 1}, VoteChoice::Agree);
    CHECK(s.phase == Phase::Quest);
    s = execute_quest(s, {{0, QuestAction::Success}, {1, QuestAction::Success}});
    REQUIRE(s.quest_results.size() == 1);
    CHECK(s.quest_results[0].outcome == QuestResult::Success);
    CHECK(s.round == 2);
    CHECK(s.leader == 1);
    CHECK(s.team_size() == 3);
  }

  TEST_CASE("illegal moves are rejected") {
    GameState s = fresh();
    CHECK(code_of([&] { cast_vote(s, 0, VoteChoice::Agree); }) == RuleErrorCode::WrongPhase);
    GameState d = begin_discussion(s);
    CHECK(code_of([&] { propose_team(d, 2, {0, 1}); }) == RuleErrorCode::NotLeader);
    CHECK(code_of([&] { propose_team(d, 0, {0, 1, 2}); }) == RuleErrorCode::WrongTeamSize);
    CHECK(code_of([&] { propose_team(d, 0, {1, 1}); }) == RuleErrorCode::InvalidTeam);
    CHECK(code_of([&] { propose_team(d, 0, {0, 7}); }) == RuleErrorCode::InvalidSeat);
    CHECK(code_of([&] { close_discussion(d); }) == RuleErrorCode::WrongPhase);

    GameState v = close_discussion(propose_team(d, 0, {0, 3}));
    v = propose_team(v, 0, {0, 3});
    v = cast_vote(v, 1, VoteChoice::Agree);
    CHECK(code_of([&] { cast_vote(v, 1, VoteChoice::Agree); }) == RuleErrorCode::DuplicateVote);
    for (Seat p : {0, 2, 3, 4}) v = cast_vote(v, p, VoteChoice::Agree);
    CHECK(code_of([&] { execute_quest(v, {{0, QuestAction::Fail}, {3, QuestAction::Fail}}); }) ==
          RuleErrorCode::LoyalFailVote);
    CHECK(code_of([&] { execute_quest(v, {{0, QuestAction::Success}}); }) ==
          RuleErrorCode::MissingQuestAction);
    CHECK(code_of([&] {
            execute_quest(v, {{0, QuestAction::Success}, {3, QuestAction::Fail},
                              {2, QuestAction::Success}});
          }) == RuleErrorCode::NonTeamActor);
    CHECK(code_of([&] { assassinate(v, 4, 0); }) == RuleErrorCode::WrongPhase);
  }

  TEST_CASE("leader reconsideration records whether the team changed") {
    GameState s = begin_discussion(fresh());
    s = propose_team(s, 0, {0, 1});
    s = close_discussion(s);
    GameState kept = propose_team(s, 0, {1, 0});
    CHECK(kept.team_changed == false);
    GameState changed = propose_team(s, 0, {0, 2});
    CHECK(changed.team_changed == true);
    CHECK(changed.initial_team == std::vector<Seat>{0, 1});
    CHECK(changed.proposed_team == std::vector<Seat>{0, 2});
  }

  TEST_CASE("five rejections in a row hand the game to evil") {
    GameState s = fresh();
    for (int i = 0; i < 4; ++i) {
      s = propose_and_vote(s, {s.leader, (s.leader + 1) % kPlayers}, VoteChoice::Disagree);
      CHECK(s.phase == Phase::Summarize);
      CHECK(s.attempt == i + 2);
      CHECK(s.leader == i + 1);
    }
    s = propose_and_vote(s, {s.leader, (s.leader + 1) % kPlayers}, VoteChoice::Disagree);
    CHECK(s.phase == Phase::Finished);
    CHECK(s.winner == Alignment::Evil);
    CHECK(s.win_reason == WinReason::RejectionLimit);
  }

  TEST_CASE("an approval resets the rejection counter") {
    GameState s = fresh();
    s = propose_and_vote(s, {0, 1}, VoteChoice::Disagree);
    CHECK(s.consecutive_rejections == 1);
    s = propose_and_vote(s, {1, 2}, VoteChoice::Agree);
    CHECK(s.consecutive_rejections == 0);
  }

  TEST_CASE("three successes lead to the assassination") {
    GameState s = fresh();
    const std::vector<std::vector<Seat>> teams = {{0, 1}, {0, 1, 2}, {1, 2}};
    for (const auto& team : teams) {
      s = propose_and_vote(s, team, VoteChoice::Agree);
      std::map<Seat, QuestAction> acts;
      for (Seat m : team) acts[m] = QuestAction::Success;
      s = execute_quest(s, acts);
    }
    CHECK(s.phase == Phase::Assassinate);
    CHECK(code_of([&] { assassinate(s, 3, 0); }) == RuleErrorCode::NotAssassin);
    GameState hit = assassinate(s, 4, 0);
    CHECK(hit.winner == Alignment::Evil);
    CHECK(hit.win_reason == WinReason::MerlinAssassinated);
    GameState miss = assassinate(s, 4, 1);
    CHECK(miss.winner == Alignment::Loyal);
    CHECK(miss.win_reason == WinReason::AssassinMissed);
  }

  TEST_CASE("three failures end the game for evil") {
    GameState s = fresh();
    const std::vector<std::vector<Seat>> teams = {{0, 3}, {1, 2, 3}, {3, 4}};
    for (const auto& team : teams) {
      s = propose_and_vote(s, team, VoteChoice::Agree);
      std::map<Seat, QuestAction> acts;
      for (Seat m : team) acts[m] = s.is_evil(m) ? QuestAction::Fail : QuestAction::Success;
      s = execute_quest(s, acts);
    }
    CHECK(s.winner == Alignment::Evil);
    CHECK(s.win_reason == WinReason::QuestsFailed);
    CHECK(s.quest_results.back().fail_votes == 2);
  }

  TEST_CASE("config validation") {
    GameConfig c;
    c.quest_team_sizes = {2, 3, 2, 3, 6};
    CHECK(code_of([&] { c.validate(); }) == RuleErrorCode::InvalidConfig);
    GameConfig d;
    d.initial_leader = 5;
    CHECK_THROWS_AS(d.validate(), RuleError);
  }

  TEST_CASE("seeded deals are uniform over seats") {
    // counts[role][seat] over 5000 deals; chi-square with 16 degrees of
    // freedom against the uniform table, critical value 39.25 at p = 0.001.
    std::array<std::array<int, kPlayers>, kPlayers> counts{};
    const int n = 5000;
    for (int i = 0; i < n; ++i) {
      auto roles = assign_roles(GameConfig{}, derive_seed(99, i));
      for (Seat s = 0; s < kPlayers; ++s) ++counts[static_cast<int>(roles[s].name)][s];
    }
    const double expected = n / 5.0;
    double chi2 = 0;
    for (const auto& row : counts) {
      for (int c : row) chi2 += (c - expected) * (c - expected) / expected;
    }
    CHECK(chi2 < 39.25);
    CHECK(assign_roles(GameConfig{}, 7) == assign_roles(GameConfig{}, 7));
  }

  TEST_CASE("scripted games terminate, replay and respect quest invariants") {
    ScriptPolicy policy;
    policy.change_team_rate = 0.3;
    policy.loyal_action = QuestAction::Fail;  // always coerced
    for (const Transcript& t : test::scripted_batch(200, 2024, policy)) {
      const GameState s = replay(t);
      REQUIRE(s.phase == Phase::Finished);
      CHECK(s.winner.has_value());
      CHECK(t.winner() == s.winner);
      for (const auto& q : s.quest_results) {
        int evil = 0;
        for (Seat m : q.team) evil += s.is_evil(m);
        CHECK(q.fail_votes <= evil);
      }
      for (const GameEvent* e : t.of_kind(EventKind::QuestAction)) {
        if (!s.is_evil(e->actor)) CHECK(e->payload.at("action") == "success");
      }
    }
  }
}
