#pragma once

// Five-player Avalon rules as a set of pure state transitions. Every
// operation takes a state by const reference and returns the successor,
// throwing RuleError when the move is illegal. Nothing here touches I/O
// or shared state, so independent games can run on any thread.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avalon/types.hpp"

namespace avalon {

enum class RuleErrorCode {
  WrongPhase,
  NotLeader,
  WrongTeamSize,
  InvalidTeam,
  InvalidSeat,
  DuplicateVote,
  LoyalFailVote,
  NonTeamActor,
  MissingQuestAction,
  NotAssassin,
  InvalidConfig,
};

std::string_view to_string(RuleErrorCode c);

class RuleError : public std::runtime_error {
 public:
  RuleError(RuleErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  RuleErrorCode code() const noexcept { return code_; }

 private:
  RuleErrorCode code_;
};

struct Role {
  RoleName name = RoleName::Servant;
  Alignment alignment = Alignment::Loyal;
  // Seats this role can see at setup, ascending. Percival's pair is unlabeled.
  std::vector<Seat> knowledge;

  bool operator==(const Role&) const = default;
};

using RoleAssignment = std::array<Role, kPlayers>;

// Rule parameters. The leader rotation and rejection limit follow the
// official rulebook; both are plain fields so tests can use degenerate values.
struct GameConfig {
  int n_players = kPlayers;
  std::array<int, kRounds> quest_team_sizes{2, 3, 2, 3, 3};
  std::array<int, kRounds> fails_required{1, 1, 1, 1, 1};
  int max_consecutive_rejections = 5;
  std::uint64_t seed = 0;
  Seat initial_leader = 0;

  // Throws RuleError(InvalidConfig).
  void validate() const;
  bool operator==(const GameConfig&) const = default;
};

enum class WinReason { None, QuestsFailed, MerlinAssassinated, AssassinMissed, RejectionLimit };
std::string_view to_string(WinReason r);
WinReason win_reason_from_string(std::string_view s);

struct QuestOutcome {
  int round = 0;
  Seat leader = kNoSeat;
  std::vector<Seat> team;
  int fail_votes = 0;
  QuestResult outcome = QuestResult::Success;

  bool operator==(const QuestOutcome&) const = default;
};

struct GameState {
  GameConfig config;
  RoleAssignment roles;

  int round = 1;
  // 1-based counter of proposal attempts within the current round.
  int attempt = 1;
  Phase phase = Phase::Summarize;
  Seat leader = 0;
  // Pre-discussion proposal and the current (possibly reconsidered) team.
  std::vector<Seat> initial_team;
  std::vector<Seat> proposed_team;
  std::optional<bool> team_changed;
  std::array<std::optional<VoteChoice>, kPlayers> votes{};
  std::vector<QuestOutcome> quest_results;
  int consecutive_rejections = 0;
  std::optional<Alignment> winner;
  WinReason win_reason = WinReason::None;
  std::optional<Seat> assassination_target;

  int team_size() const { return config.quest_team_sizes[round - 1]; }
  int successes() const;
  int failures() const;
  Seat seat_of(RoleName r) const;
  std::vector<Seat> evil_seats() const;
  bool is_evil(Seat s) const { return roles[s].alignment == Alignment::Evil; }

  bool operator==(const GameState&) const = default;
};

// Seeded, uniform deal of the five roles with knowledge filled in.
RoleAssignment assign_roles(const GameConfig& config, std::uint64_t rng_seed);
// Builds knowledge sets for an explicit seat -> role layout.
RoleAssignment make_roles(const std::array<RoleName, kPlayers>& layout);

GameState new_game(const GameConfig& config, const RoleAssignment& roles);

// Summarize -> Discuss.
GameState begin_discussion(const GameState& s);
// In Discuss: records the leader's initial proposal (once per attempt).
// In Reconsider: the leader's final decision; sets team_changed, moves to Vote.
GameState propose_team(const GameState& s, Seat proposer, std::vector<Seat> team);
// Discuss -> Reconsider; requires an initial proposal.
GameState close_discussion(const GameState& s);
GameState cast_vote(const GameState& s, Seat player, VoteChoice vote);
GameState execute_quest(const GameState& s, const std::map<Seat, QuestAction>& actions);
GameState assassinate(const GameState& s, Seat actor, Seat target);

}  // namespace avalon
