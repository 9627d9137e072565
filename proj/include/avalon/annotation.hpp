#pragma once

// Annotation tasks, bundles and the leasing service behind the HTTP API.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "avalon/catalog.hpp"
#include "avalon/transcript.hpp"
#include "json.hpp"

namespace avalon {

enum class TaskKind {
  SelectionBinary,
  FollowingThinkingLikert,
  FollowingSpeakingLikert,
  SummarizationChoice,
  GuessingChoice,
};

std::string_view to_string(TaskKind k);
TaskKind task_kind_from_string(std::string_view s);
// Rubric resource for a kind, e.g. "rubric/following.md".
std::string rubric_for(TaskKind k);

struct TaskSubject {
  std::string game_id;
  int round = 0;
  int attempt = 0;
  Seat player = kNoSeat;
  Seat observer = kNoSeat;  // guessing only
  std::string intention;    // selection and following only

  bool operator==(const TaskSubject&) const = default;
};

struct AnnotationTask {
  // "game-0001:r1a1:Player2:sel:<intention>"; copies in shared bundles are
  // prefixed with the bundle id and identical for every annotator.
  std::string task_id;
  TaskKind kind = TaskKind::SelectionBinary;
  TaskSubject subject;
  std::string context;
  OptionList options;
  // Never sent to annotators.
  std::vector<std::string> gold;

  nlohmann::json to_json(bool with_gold = false) const;
  static AnnotationTask from_json(const nlohmann::json& j);
  bool operator==(const AnnotationTask&) const = default;
};

struct AnnotationRecord {
  std::string task_id;
  std::string bundle_id;
  TaskKind kind = TaskKind::SelectionBinary;
  TaskSubject subject;
  std::string annotator_id;
  // 0/1, 1..5, or an array of intention ids.
  nlohmann::json value;
  std::string note;
  std::int64_t timestamp = 0;
  int revision = 1;

  nlohmann::json to_json() const;
  static AnnotationRecord from_json(const nlohmann::json& j);
};

// Throws std::runtime_error on malformed lines.
std::vector<AnnotationRecord> load_records(const std::filesystem::path& path);
// Last write per (annotator, bundle, task).
std::vector<AnnotationRecord> latest_records(const std::vector<AnnotationRecord>& all);

struct TaskOptions {
  // Selection and following tasks only cover these ids.
  std::set<std::string> impactful;
  bool selection = true;
  bool following = true;
  bool summarization = true;
  bool guessing = true;
  // Per-game caps on the human-study question kinds; negative = no cap.
  int max_summarization = -1;
  int max_guessing = -1;
};

// Tasks for one game in log order: per discussion turn, one selection and
// two following tasks for each impactful revised intention, then one
// summarization and one guessing question. The guessing observer is the
// next seat after the speaker.
std::vector<AnnotationTask> game_tasks(const Transcript& t, const IntentionCatalog& catalog,
                                       const TaskOptions& options);

struct TaskBundle {
  std::string bundle_id;
  std::vector<std::string> annotators;
  std::vector<std::string> game_ids;
  std::vector<AnnotationTask> tasks;
  bool shared = false;

  nlohmann::json to_json(bool with_tasks = true) const;
  static TaskBundle from_json(const nlohmann::json& j);
};

class AnnotationError : public std::runtime_error {
 public:
  enum class Code { TooFewGames, UnknownAnnotator, UnknownTask, BadDomain, LeaseLost };
  AnnotationError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

std::string_view to_string(AnnotationError::Code c);

struct BundleOptions {
  std::vector<std::string> annotators;
  std::uint64_t seed = 0;
  int shared_bundles = 2;
  TaskOptions tasks;
};

// Every game goes to exactly one annotator (counts differ by at most one);
// shared_bundles further games, picked under the seed, are copied to every
// annotator. Throws TooFewGames when there are fewer games than annotators.
std::vector<TaskBundle> build_bundles(const std::vector<Transcript>& games,
                                      const IntentionCatalog& catalog,
                                      const BundleOptions& options);

// Checks the value against the task's domain and returns it in canonical
// form (option numbers become ids). Throws BadDomain with the reason.
nlohmann::json validate_value(const AnnotationTask& task, const nlohmann::json& value);

struct ServiceOptions {
  std::chrono::milliseconds lease{std::chrono::minutes(15)};
  // Milliseconds since the epoch; injectable for tests.
  std::function<std::int64_t()> now_ms;
  // Live kappa needs this many shared items rated by both annotators.
  int kappa_min_shared = 10;
};

struct SubmitAck {
  AnnotationRecord record;
  bool duplicate = false;
};

// Thread-safe. Records are appended to `store` (JSONL) and reloaded from it
// on construction.
class AnnotationService {
 public:
  AnnotationService(std::vector<TaskBundle> bundles, std::filesystem::path store,
                    ServiceOptions options = {});

  // nullopt once everything assigned to the annotator is done.
  std::optional<AnnotationTask> next_task(const std::string& annotator);
  SubmitAck submit(const std::string& annotator, const std::string& task_id,
                   const nlohmann::json& value, const std::string& note = "");
  nlohmann::json progress() const;
  nlohmann::json bundles_summary() const;

  bool has_annotator(const std::string& annotator) const;
  std::vector<AnnotationRecord> records() const;
  // Every accepted submission, including overwritten ones.
  std::vector<AnnotationRecord> audit() const;

 private:
  struct Slot {
    std::size_t bundle = 0;
    std::size_t task = 0;
    std::optional<std::int64_t> lease_expiry;
    std::optional<AnnotationRecord> record;
  };

  std::int64_t now() const;
  Slot* find_slot(const std::string& annotator, const std::string& task_id);

  std::vector<TaskBundle> bundles_;
  std::filesystem::path store_;
  ServiceOptions options_;
  mutable std::mutex mu_;
  // annotator -> slots in serving order
  std::map<std::string, std::vector<Slot>> slots_;
  std::vector<AnnotationRecord> audit_;
  std::ofstream out_;
};

}  // namespace avalon
