#include "avalon/rules.hpp"

#include <algorithm>

#include "avalon/rng.hpp"

namespace avalon {

std::string_view to_string(RuleErrorCode c) {
  switch (c) {
    case RuleErrorCode::WrongPhase: return "WrongPhase";
    case RuleErrorCode::NotLeader: return "NotLeader";
    case RuleErrorCode::WrongTeamSize: return "WrongTeamSize";
    case RuleErrorCode::InvalidTeam: return "InvalidTeam";
    case RuleErrorCode::InvalidSeat: return "InvalidSeat";
    case RuleErrorCode::DuplicateVote: return "DuplicateVote";
    case RuleErrorCode::LoyalFailVote: return "LoyalFailVote";
    case RuleErrorCode::NonTeamActor: return "NonTeamActor";
    case RuleErrorCode::MissingQuestAction: return "MissingQuestAction";
    case RuleErrorCode::NotAssassin: return "NotAssassin";
    case RuleErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "?";
}

std::string_view to_string(WinReason r) {
  switch (r) {
    case WinReason::None: return "none";
    case WinReason::QuestsFailed: return "quests_failed";
    case WinReason::MerlinAssassinated: return "merlin_assassinated";
    case WinReason::AssassinMissed: return "assassin_missed";
    case WinReason::RejectionLimit: return "rejection_limit";
  }
  return "?";
}

WinReason win_reason_from_string(std::string_view s) {
  for (auto r : {WinReason::None, WinReason::QuestsFailed, WinReason::MerlinAssassinated,
                 WinReason::AssassinMissed, WinReason::RejectionLimit}) {
    if (to_string(r) == s) return r;
  }
  throw std::invalid_argument("unknown win reason: " + std::string(s));
}

void GameConfig::validate() const {
  auto fail = [](const std::string& m) { throw RuleError(RuleErrorCode::InvalidConfig, m); };
  if (n_players != kPlayers) fail("only 5-player games are supported");
  for (int i = 0; i < kRounds; ++i) {
    if (quest_team_sizes[i] < 2 || quest_team_sizes[i] > n_players)
      fail("quest team size out of range in round " + std::to_string(i + 1));
    if (fails_required[i] < 1) fail("fails_required must be >= 1");
  }
  if (max_consecutive_rejections < 1) fail("max_consecutive_rejections must be >= 1");
  if (initial_leader < 0 || initial_leader >= n_players) fail("initial_leader out of range");
}

int GameState::successes() const {
  return static_cast<int>(std::count_if(quest_results.begin(), quest_results.end(), [](auto& q) {
    return q.outcome == QuestResult::Success;
  }));
}

int GameState::failures() const {
  return static_cast<int>(quest_results.size()) - successes();
}

Seat GameState::seat_of(RoleName r) const {
  for (Seat s = 0; s < kPlayers; ++s) {
    if (roles[s].name == r) return s;
  }
  return kNoSeat;
}

std::vector<Seat> GameState::evil_seats() const {
  std::vector<Seat> out;
  for (Seat s = 0; s < kPlayers; ++s) {
    if (is_evil(s)) out.push_back(s);
  }
  return out;
}

RoleAssignment make_roles(const std::array<RoleName, kPlayers>& layout) {
  RoleAssignment roles;
  Seat merlin = kNoSeat, morgana = kNoSeat;
  std::vector<Seat> evil;
  for (Seat s = 0; s < kPlayers; ++s) {
    roles[s].name = layout[s];
    roles[s].alignment = alignment_of(layout[s]);
    if (layout[s] == RoleName::Merlin) merlin = s;
    if (layout[s] == RoleName::Morgana) morgana = s;
    if (roles[s].alignment == Alignment::Evil) evil.push_back(s);
  }
  std::array<RoleName, kPlayers> sorted = layout;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::array<RoleName, kPlayers>{RoleName::Merlin, RoleName::Percival,
                                               RoleName::Servant, RoleName::Morgana,
                                               RoleName::Assassin}) {
    throw RuleError(RuleErrorCode::InvalidConfig, "role layout must contain each role once");
  }
  for (Seat s = 0; s < kPlayers; ++s) {
    switch (roles[s].name) {
      case RoleName::Merlin:
        roles[s].knowledge = evil;
        break;
      case RoleName::Percival:
        roles[s].knowledge = {std::min(merlin, morgana), std::max(merlin, morgana)};
        break;
      case RoleName::Morgana:
      case RoleName::Assassin:
        for (Seat e : evil) {
          if (e != s) roles[s].knowledge.push_back(e);
        }
        break;
      case RoleName::Servant:
        break;
    }
  }
  return roles;
}

RoleAssignment assign_roles(const GameConfig& config, std::uint64_t rng_seed) {
  config.validate();
  std::vector<RoleName> deck(kAllRoles.begin(), kAllRoles.end());
  Rng rng(rng_seed);
  rng.shuffle(deck);
  std::array<RoleName, kPlayers> layout;
  std::copy(deck.begin(), deck.end(), layout.begin());
  return make_roles(layout);
}

GameState new_game(const GameConfig& config, const RoleAssignment& roles) {
  config.validate();
  GameState s;
  s.config = config;
  s.roles = roles;
  s.leader = config.initial_leader;
  return s;
}

namespace {

void require_phase(const GameState& s, std::initializer_list<Phase> allowed, const char* op) {
  for (Phase p : allowed) {
    if (s.phase == p) return;
  }
  throw RuleError(RuleErrorCode::WrongPhase,
                  std::string(op) + " not allowed in phase " + std::string(to_string(s.phase)));
}

void require_seat(Seat s) {
  if (s < 0 || s >= kPlayers) {
    throw RuleError(RuleErrorCode::InvalidSeat, "seat " + std::to_string(s) + " out of range");
  }
}

void finish(GameState& s, Alignment winner, WinReason reason) {
  s.phase = Phase::Finished;
  s.winner = winner;
  s.win_reason = reason;
}

// Moves to the next proposal attempt (same round) or the next round.
void next_attempt(GameState& s, bool new_round) {
  s.leader = (s.leader + 1) % kPlayers;
  s.phase = Phase::Summarize;
  s.initial_team.clear();
  s.proposed_team.clear();
  s.team_changed.reset();
  s.votes = {};
  if (new_round) {
    ++s.round;
    s.attempt = 1;
  } else {
    ++s.attempt;
  }
}

}  // namespace

GameState begin_discussion(const GameState& s) {
  require_phase(s, {Phase::Summarize}, "begin_discussion");
  GameState n = s;
  n.phase = Phase::Discuss;
  return n;
}

GameState propose_team(const GameState& s, Seat proposer, std::vector<Seat> team) {
  require_phase(s, {Phase::Discuss, Phase::Reconsider}, "propose_team");
  require_seat(proposer);
  if (proposer != s.leader) {
    throw RuleError(RuleErrorCode::NotLeader, player_name(proposer) + " is not the leader");
  }
  if (s.phase == Phase::Discuss && !s.initial_team.empty()) {
    throw RuleError(RuleErrorCode::WrongPhase, "team already proposed in this discussion");
  }
  std::sort(team.begin(), team.end());
  for (Seat m : team) require_seat(m);
  if (std::adjacent_find(team.begin(), team.end()) != team.end()) {
    throw RuleError(RuleErrorCode::InvalidTeam, "team lists a player twice");
  }
  if (static_cast<int>(team.size()) != s.team_size()) {
    throw RuleError(RuleErrorCode::WrongTeamSize, "round " + std::to_string(s.round) +
                                                      " needs " + std::to_string(s.team_size()) +
                                                      " players, got " +
                                                      std::to_string(team.size()));
  }
  GameState n = s;
  if (s.phase == Phase::Discuss) {
    n.initial_team = team;
    n.proposed_team = std::move(team);
  } else {
    n.team_changed = team != s.initial_team;
    n.proposed_team = std::move(team);
    n.phase = Phase::Vote;
  }
  return n;
}

GameState close_discussion(const GameState& s) {
  require_phase(s, {Phase::Discuss}, "close_discussion");
  if (s.initial_team.empty()) {
    throw RuleError(RuleErrorCode::WrongPhase, "discussion closed before any proposal");
  }
  GameState n = s;
  n.phase = Phase::Reconsider;
  return n;
}

GameState cast_vote(const GameState& s, Seat player, VoteChoice vote) {
  require_phase(s, {Phase::Vote}, "cast_vote");
  require_seat(player);
  if (s.votes[player]) {
    throw RuleError(RuleErrorCode::DuplicateVote, player_name(player) + " already voted");
  }
  GameState n = s;
  n.votes[player] = vote;
  if (std::any_of(n.votes.begin(), n.votes.end(), [](auto& v) { return !v.has_value(); })) {
    return n;
  }
  const auto agree = std::count_if(n.votes.begin(), n.votes.end(),
                                   [](auto& v) { return *v == VoteChoice::Agree; });
  if (agree * 2 > kPlayers) {
    n.phase = Phase::Quest;
    n.consecutive_rejections = 0;
    return n;
  }
  ++n.consecutive_rejections;
  if (n.consecutive_rejections >= n.config.max_consecutive_rejections) {
    finish(n, Alignment::Evil, WinReason::RejectionLimit);
    return n;
  }
  next_attempt(n, /*new_round=*/false);
  return n;
}

GameState execute_quest(const GameState& s, const std::map<Seat, QuestAction>& actions) {
  require_phase(s, {Phase::Quest}, "execute_quest");
  int fails = 0;
  for (const auto& [seat, action] : actions) {
    require_seat(seat);
    if (!std::binary_search(s.proposed_team.begin(), s.proposed_team.end(), seat)) {
      throw RuleError(RuleErrorCode::NonTeamActor, player_name(seat) + " is not on the team");
    }
    if (action == QuestAction::Fail) {
      if (!s.is_evil(seat)) {
        throw RuleError(RuleErrorCode::LoyalFailVote,
                        player_name(seat) + " is loyal and cannot fail a quest");
      }
      ++fails;
    }
  }
  for (Seat m : s.proposed_team) {
    if (!actions.count(m)) {
      throw RuleError(RuleErrorCode::MissingQuestAction, player_name(m) + " has not acted");
    }
  }
  GameState n = s;
  QuestOutcome q;
  q.round = s.round;
  q.leader = s.leader;
  q.team = s.proposed_team;
  q.fail_votes = fails;
  q.outcome = fails >= s.config.fails_required[s.round - 1] ? QuestResult::Failure
                                                              : QuestResult::Success;
  n.quest_results.push_back(std::move(q));
  if (n.failures() >= 3) {
    finish(n, Alignment::Evil, WinReason::QuestsFailed);
  } else if (n.successes() >= 3) {
    n.phase = Phase::Assassinate;
  } else {
    next_attempt(n, /*new_round=*/true);
  }
  return n;
}

GameState assassinate(const GameState& s, Seat actor, Seat target) {
  require_phase(s, {Phase::Assassinate}, "assassinate");
  require_seat(actor);
  require_seat(target);
  if (s.roles[actor].name != RoleName::Assassin) {
    throw RuleError(RuleErrorCode::NotAssassin, player_name(actor) + " is not the Assassin");
  }
  GameState n = s;
  n.assassination_target = target;
  if (s.roles[target].name == RoleName::Merlin) {
    finish(n, Alignment::Evil, WinReason::MerlinAssassinated);
  } else {
    finish(n, Alignment::Loyal, WinReason::AssassinMissed);
  }
  return n;
}

}  // namespace avalon
