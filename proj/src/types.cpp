#include "avalon/types.hpp"

#include <charconv>
#include <stdexcept>

namespace avalon {

namespace {

template <typename E, std::size_t N>
E lookup(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
         const char* what) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  throw std::invalid_argument(std::string("unknown ") + what + ": '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, RoleName>, 5> kRoleNames{{
    {"Merlin", RoleName::Merlin},
    {"Percival", RoleName::Percival},
    {"Servant", RoleName::Servant},
    {"Morgana", RoleName::Morgana},
    {"Assassin", RoleName::Assassin},
}};

constexpr std::array<std::pair<std::string_view, Phase>, 7> kPhaseNames{{
    {"Summarize", Phase::Summarize},
    {"Discuss", Phase::Discuss},
    {"Reconsider", Phase::Reconsider},
    {"Vote", Phase::Vote},
    {"Quest", Phase::Quest},
    {"Assassinate", Phase::Assassinate},
    {"Finished", Phase::Finished},
}};

}  // namespace

std::string_view to_string(RoleName r) {
  for (const auto& [name, value] : kRoleNames) {
    if (value == r) return name;
  }
  return "?";
}

std::string_view to_string(Alignment a) { return a == Alignment::Loyal ? "Loyal" : "Evil"; }

std::string_view to_string(Phase p) {
  for (const auto& [name, value] : kPhaseNames) {
    if (value == p) return name;
  }
  return "?";
}

std::string_view to_string(VoteChoice v) { return v == VoteChoice::Agree ? "agree" : "disagree"; }
std::string_view to_string(QuestAction a) { return a == QuestAction::Success ? "success" : "fail"; }
std::string_view to_string(QuestResult r) {
  return r == QuestResult::Success ? "success" : "failure";
}

RoleName role_from_string(std::string_view s) { return lookup(s, kRoleNames, "role"); }

Alignment alignment_from_string(std::string_view s) {
  constexpr std::array<std::pair<std::string_view, Alignment>, 2> t{{
      {"Loyal", Alignment::Loyal},
      {"Evil", Alignment::Evil},
  }};
  return lookup(s, t, "alignment");
}

Phase phase_from_string(std::string_view s) { return lookup(s, kPhaseNames, "phase"); }

VoteChoice vote_from_string(std::string_view s) {
  constexpr std::array<std::pair<std::string_view, VoteChoice>, 2> t{{
      {"agree", VoteChoice::Agree},
      {"disagree", VoteChoice::Disagree},
  }};
  return lookup(s, t, "vote");
}

QuestAction quest_action_from_string(std::string_view s) {
  constexpr std::array<std::pair<std::string_view, QuestAction>, 2> t{{
      {"success", QuestAction::Success},
      {"fail", QuestAction::Fail},
  }};
  return lookup(s, t, "quest action");
}

QuestResult quest_result_from_string(std::string_view s) {
  constexpr std::array<std::pair<std::string_view, QuestResult>, 2> t{{
      {"success", QuestResult::Success},
      {"failure", QuestResult::Failure},
  }};
  return lookup(s, t, "quest result");
}

std::string player_name(Seat seat) { return "Player" + std::to_string(seat + 1); }

std::optional<Seat> parse_player_name(std::string_view s) {
  constexpr std::string_view prefix = "Player";
  if (s.size() <= prefix.size() || s.substr(0, prefix.size()) != prefix) return std::nullopt;
  int n = 0;
  const char* first = s.data() + prefix.size();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, n);
  if (ec != std::errc{} || ptr != last || n < 1 || n > kPlayers) return std::nullopt;
  return n - 1;
}

std::string join_players(const std::vector<Seat>& seats) {
  std::string out;
  for (std::size_t i = 0; i < seats.size(); ++i) {
    if (i) out += ", ";
    out += player_name(seats[i]);
  }
  return out;
}

}  // namespace avalon
