#pragma once

// Role-filtered renderings of a game transcript: the per-seat view used in
// prompts, and the two structured contexts used for intention summarization
// and intention guessing.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "avalon/catalog.hpp"
#include "avalon/transcript.hpp"

namespace avalon {

class ExportError : public std::runtime_error {
 public:
  enum class Code { NoSpeech, SelfGuess, BadArgument };
  ExportError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

// Goals text plus the knowledge line the role is licensed to see.
std::string role_details(const RoleAssignment& roles, Seat seat);

struct StructuredContext {
  std::string name;
  std::string role;
  std::string role_details;
  int round = 0;
  std::optional<std::string> speaker_name;
  std::string current_leader;
  std::string current_team;
  std::vector<std::string> previous_rounds_team_voting;
  std::vector<std::string> previous_results;
  std::vector<std::pair<int, std::string>> previous_rounds_summary;
  std::vector<std::pair<std::string, std::string>> previous_discussions;
  std::optional<std::string> your_thinking;
  std::optional<std::string> your_speech;
  std::optional<std::string> first_order_block;
  std::optional<std::string> target_speech;
};

// Public record as seen by `subject` at event seq `cutoff` (exclusive):
// leader and team of the attempt in progress, completed votes and quests,
// the subject's own summaries, and this round's speeches so far.
StructuredContext build_view(const Transcript& t, Seat subject, int round,
                             std::int64_t cutoff = std::numeric_limits<std::int64_t>::max());

// "Name: ... Role: ... Role Details: ..." block that opens every context.
std::string render_header(const StructuredContext& c);

// "Round: ... Previous Discussions ..." block shared by prompts and exports.
std::string render_public_sections(const StructuredContext& c, bool compact_discussion_header);

struct ExportedContext {
  StructuredContext context;
  OptionList options;
  // IntentRevised ids of the subject (summarization) or speaker (guessing).
  std::vector<std::string> gold;
  // IntentSelected ids before second-order modification.
  std::vector<std::string> gold_pre_modification;
  int round = 0;
  int attempt = 0;
  std::string text;
};

// attempt defaults to the last proposal attempt in which the player spoke.
ExportedContext export_summarization_context(const Transcript& t, Seat player, int round,
                                             const IntentionCatalog& catalog,
                                             std::optional<int> attempt = std::nullopt);

ExportedContext export_guessing_context(const Transcript& t, Seat observer, Seat speaker,
                                        int round, const IntentionCatalog& catalog,
                                        std::optional<int> attempt = std::nullopt);

// Hidden-knowledge phrases present in `text` that `subject` is not licensed
// to see. Empty means no leak.
std::vector<std::string> find_leaks(const std::string& text, Seat subject,
                                    const RoleAssignment& roles);

// (seat, round, attempt) of every speech in the transcript, in log order.
struct SpeechRef {
  Seat seat = kNoSeat;
  int round = 0;
  int attempt = 0;
};
std::vector<SpeechRef> speeches(const Transcript& t);

}  // namespace avalon
