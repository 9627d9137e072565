#pragma once

// Parsing of model replies. Every reply must end with a fenced block
// (```answer ... ``` or a bare ``` fence); text before it is kept as prose.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "avalon/catalog.hpp"
#include "avalon/types.hpp"

namespace avalon {

template <typename T>
struct Parsed {
  std::optional<T> value;
  std::string error;

  static Parsed ok(T v) { return Parsed{std::move(v), {}}; }
  static Parsed fail(std::string why) { return Parsed{std::nullopt, std::move(why)}; }
  explicit operator bool() const { return value.has_value(); }
};

struct FencedReply {
  std::string prose;
  std::string block;
};

Parsed<FencedReply> split_fenced(std::string_view text);

// Non-empty block text (summaries, speeches).
Parsed<FencedReply> parse_text_block(std::string_view text);

// Option numbers from the block mapped through `options`, then checked with
// validate_selection for `role`.
Parsed<std::vector<std::string>> parse_selection(std::string_view text, const OptionList& options,
                                                 const IntentionCatalog& catalog, RoleName role);

// 2-3 distinct option numbers, no role check (guessing lists every intention).
Parsed<std::vector<std::string>> parse_choice(std::string_view text, const OptionList& options);
Parsed<VoteChoice> parse_vote(std::string_view text);
Parsed<QuestAction> parse_quest_action(std::string_view text);
// Exactly `size` distinct players.
Parsed<std::vector<Seat>> parse_team(std::string_view text, int size);
Parsed<Seat> parse_player(std::string_view text);

}  // namespace avalon
