#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace avalon {

// Seats are zero-based internally and rendered as "Player<seat+1>".
using Seat = int;
inline constexpr int kPlayers = 5;
inline constexpr int kRounds = 5;
inline constexpr Seat kNoSeat = -1;

enum class RoleName { Merlin, Percival, Servant, Morgana, Assassin };
enum class Alignment { Loyal, Evil };
enum class Phase { Summarize, Discuss, Reconsider, Vote, Quest, Assassinate, Finished };
enum class VoteChoice { Agree, Disagree };
enum class QuestAction { Success, Fail };
enum class QuestResult { Success, Failure };

inline constexpr std::array<RoleName, 5> kAllRoles = {
    RoleName::Merlin, RoleName::Percival, RoleName::Servant, RoleName::Morgana, RoleName::Assassin};

constexpr Alignment alignment_of(RoleName r) {
  return (r == RoleName::Morgana || r == RoleName::Assassin) ? Alignment::Evil : Alignment::Loyal;
}

std::string_view to_string(RoleName r);
std::string_view to_string(Alignment a);
std::string_view to_string(Phase p);
std::string_view to_string(VoteChoice v);
std::string_view to_string(QuestAction a);
std::string_view to_string(QuestResult r);

// Parsers throw std::invalid_argument on unknown names.
RoleName role_from_string(std::string_view s);
Alignment alignment_from_string(std::string_view s);
Phase phase_from_string(std::string_view s);
VoteChoice vote_from_string(std::string_view s);
QuestAction quest_action_from_string(std::string_view s);
QuestResult quest_result_from_string(std::string_view s);

std::string player_name(Seat seat);
// "Player3" -> 2; nullopt when the text is not a valid player name.
std::optional<Seat> parse_player_name(std::string_view s);
// "Player1, Player2, Player4"
std::string join_players(const std::vector<Seat>& seats);

}  // namespace avalon
