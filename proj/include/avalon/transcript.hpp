#pragma once

// Append-only event log for one game. Each game is stored as
// <dir>/<game_id>.jsonl, one event per line, seq starting at 0.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avalon/rules.hpp"
#include "json.hpp"

namespace avalon {

enum class EventKind {
  RoleAssigned,
  Summary,
  FirstOrder,
  IntentSelected,
  Thinking,
  DraftSpeech,
  SecondOrder,
  IntentRevised,
  Speech,
  TeamProposed,
  TeamChanged,
  Vote,
  QuestAction,
  QuestResult,
  Assassination,
  FallbackUsed,
  GameEnd,
};

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);

inline constexpr Seat kSystemActor = -1;

struct GameEvent {
  std::string game_id;
  std::int64_t seq = 0;
  int round = 0;
  int attempt = 0;
  Phase phase = Phase::Summarize;
  Seat actor = kSystemActor;
  EventKind kind = EventKind::Summary;
  nlohmann::json payload = nlohmann::json::object();
  // Logical by default (see EventSink), so seeded runs are byte-identical.
  std::int64_t timestamp = 0;

  nlohmann::json to_json() const;
  static GameEvent from_json(const nlohmann::json& j);
  bool operator==(const GameEvent&) const = default;
};

class TranscriptError : public std::runtime_error {
 public:
  enum class Code { SeqGap, CorruptRecord, NotFound, Io };
  TranscriptError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

// Read-only view over one game's events with the queries the exporters and
// metrics need.
class Transcript {
 public:
  Transcript() = default;
  Transcript(std::string game_id, std::vector<GameEvent> events);

  const std::string& game_id() const { return game_id_; }
  const std::vector<GameEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  std::vector<const GameEvent*> of_kind(EventKind k) const;
  // First event of kind k matching the predicate.
  const GameEvent* find(EventKind k, const std::function<bool(const GameEvent&)>& pred) const;

  // Roles are read from RoleAssigned events; throws if incomplete.
  RoleAssignment roles() const;
  GameConfig config() const;
  std::optional<Alignment> winner() const;
  int last_round() const;

 private:
  std::string game_id_;
  std::vector<GameEvent> events_;
};

struct LoadResult {
  Transcript transcript;
  std::vector<std::string> warnings;
};

// Parses the JSONL text of one game. A torn final line (no trailing newline
// or unparseable) is dropped with a warning; any other bad line throws
// CorruptRecord, and non-consecutive seq throws SeqGap.
LoadResult parse_transcript(const std::string& game_id, const std::string& data);

// Writer for one game file. Not thread-safe; one writer per game.
class TranscriptWriter {
 public:
  TranscriptWriter(const std::filesystem::path& path, std::string game_id);

  // seq must equal next_seq(); throws SeqGap otherwise.
  void append(const GameEvent& e);
  std::int64_t next_seq() const { return next_seq_; }

 private:
  std::ofstream out_;
  std::string game_id_;
  std::int64_t next_seq_ = 0;
};

class TranscriptStore {
 public:
  explicit TranscriptStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(const std::string& game_id) const;

  // Appends with seq continuity checked against what was written so far.
  // Safe to call for different games from different threads.
  void append(const std::string& game_id, const GameEvent& e);
  void flush();

  LoadResult load(const std::string& game_id) const;
  std::vector<std::string> game_ids() const;
  // All games in id order; warnings collected into *warnings if given.
  std::vector<Transcript> load_all(std::vector<std::string>* warnings = nullptr) const;

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<TranscriptWriter>> writers_;
};

std::string serialize_transcript(const std::vector<GameEvent>& events);

// Rebuilds the engine state by re-applying the rule-relevant events.
GameState replay(const Transcript& t);

}  // namespace avalon
