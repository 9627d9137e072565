#pragma once

// Drives the seats of one game through the per-round pipeline: summaries,
// discussion turns (first-order reasoning, intention selection,
// formulation, second-order modification, refinement), leader
// reconsideration, voting, quests and the assassination. Agents only
// produce decisions; the harness validates them, applies fallbacks and
// writes every step to the event log.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avalon/backend.hpp"
#include "avalon/catalog.hpp"
#include "avalon/prompts.hpp"
#include "avalon/rng.hpp"
#include "avalon/rules.hpp"
#include "avalon/transcript.hpp"

namespace avalon {

// Raised when a remote backend stays unreachable after its own retries.
class BackendUnavailable : public std::runtime_error {
 public:
  BackendUnavailable(Seat seat, PromptName step, const std::string& why)
      : std::runtime_error(player_name(seat) + " " + std::string(to_string(step)) + ": " + why) {}
};

// Everything an agent may look at when deciding. `events` is the log so far.
struct SeatView {
  std::string game_id;
  Seat seat = kNoSeat;
  const GameState* state = nullptr;
  const std::vector<GameEvent>* events = nullptr;
  const IntentionCatalog* catalog = nullptr;

  const Role& role() const { return state->roles[seat]; }
};

// One agent decision. value is empty when the agent could not produce a
// usable answer; the harness then applies the step's fallback.
template <typename T>
struct Reply {
  std::optional<T> value;
  // Free text accompanying the decision (thinking, rationale).
  std::string prose;
  // Final user prompt and raw reply, mirrored into the log for model agents.
  std::string prompt;
  std::string raw;
  int attempts = 0;
  std::string error;
};

struct ModifyResult {
  std::string second_order;
  std::vector<std::string> ids;
};

struct Formulation {
  std::string thinking;
  std::string draft_speech;
};

struct TeamDecision {
  std::vector<Seat> team;
  std::string rationale;
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual Reply<std::string> summarize(const SeatView& v, int previous_round) = 0;
  virtual Reply<std::string> first_order(const SeatView& v) = 0;
  virtual Reply<std::vector<std::string>> select_intentions(const SeatView& v,
                                                            const std::string& first_order) = 0;
  virtual Reply<Formulation> formulate(const SeatView& v,
                                       const std::vector<std::string>& intentions) = 0;
  virtual Reply<ModifyResult> modify_intentions(const SeatView& v,
                                                const std::vector<std::string>& intentions,
                                                const Formulation& plan) = 0;
  virtual Reply<std::string> refine(const SeatView& v, const std::vector<std::string>& intentions,
                                    const std::string& second_order,
                                    const std::string& draft_speech) = 0;
  virtual Reply<std::vector<Seat>> propose_team(const SeatView& v, int team_size) = 0;
  virtual Reply<TeamDecision> reconsider_team(const SeatView& v, const std::vector<Seat>& team) = 0;
  virtual Reply<VoteChoice> vote(const SeatView& v) = 0;
  virtual Reply<QuestAction> quest_action(const SeatView& v) = 0;
  virtual Reply<Seat> assassinate(const SeatView& v, const std::vector<Seat>& candidates) = 0;
};

// Agent backed by a chat-completion endpoint. Each step renders its prompt
// template, sends [system, user] and parses the fenced answer; unusable
// replies get a corrective follow-up up to max_retries times.
class LlmAgent : public Agent {
 public:
  struct Options {
    std::string model = "gpt-3.5-turbo-1106";
    double temperature = 0.8;
    int max_retries = 2;
  };

  LlmAgent(std::shared_ptr<ChatBackend> backend, Options options,
           const PromptLibrary& prompts = PromptLibrary::builtin());

  Reply<std::string> summarize(const SeatView& v, int previous_round) override;
  Reply<std::string> first_order(const SeatView& v) override;
  Reply<std::vector<std::string>> select_intentions(const SeatView& v,
                                                    const std::string& first_order) override;
  Reply<Formulation> formulate(const SeatView& v,
                               const std::vector<std::string>& intentions) override;
  Reply<ModifyResult> modify_intentions(const SeatView& v,
                                        const std::vector<std::string>& intentions,
                                        const Formulation& plan) override;
  Reply<std::string> refine(const SeatView& v, const std::vector<std::string>& intentions,
                            const std::string& second_order,
                            const std::string& draft_speech) override;
  Reply<std::vector<Seat>> propose_team(const SeatView& v, int team_size) override;
  Reply<TeamDecision> reconsider_team(const SeatView& v, const std::vector<Seat>& team) override;
  Reply<VoteChoice> vote(const SeatView& v) override;
  Reply<QuestAction> quest_action(const SeatView& v) override;
  Reply<Seat> assassinate(const SeatView& v, const std::vector<Seat>& candidates) override;

  // Rendered system and user messages for a step, exposed for leak checks.
  std::string system_message(const SeatView& v) const;
  std::string user_message(const SeatView& v, PromptName step, const PromptVars& vars) const;

 private:
  // parse returns the value or sets *error.
  template <typename T, typename Parse>
  Reply<T> ask(const SeatView& v, PromptName step, const PromptVars& vars, Parse parse);

  std::shared_ptr<ChatBackend> backend_;
  Options options_;
  const PromptLibrary& prompts_;
};

// Deterministic rule-based agent. Decisions depend only on the policy, the
// seat's own knowledge and a private stream seeded per game and seat.
struct ScriptPolicy {
  enum class TeamRule { Random, Consecutive };
  TeamRule team_rule = TeamRule::Random;
  // Fixed vote for every proposal; otherwise a knowledge-based heuristic.
  std::optional<VoteChoice> vote;
  double change_team_rate = 0.0;
  // Quest action of evil seats; otherwise fail with evil_fail_rate.
  std::optional<QuestAction> evil_action;
  double evil_fail_rate = 0.8;
  // Quest action requested by loyal seats; "fail" is coerced by the harness.
  QuestAction loyal_action = QuestAction::Success;
  // Fixed assassination target; otherwise uniform over the candidates.
  std::optional<Seat> assassinate;
};

class ScriptedAgent : public Agent {
 public:
  ScriptedAgent(ScriptPolicy policy, std::uint64_t seed);

  Reply<std::string> summarize(const SeatView& v, int previous_round) override;
  Reply<std::string> first_order(const SeatView& v) override;
  Reply<std::vector<std::string>> select_intentions(const SeatView& v,
                                                    const std::string& first_order) override;
  Reply<Formulation> formulate(const SeatView& v,
                               const std::vector<std::string>& intentions) override;
  Reply<ModifyResult> modify_intentions(const SeatView& v,
                                        const std::vector<std::string>& intentions,
                                        const Formulation& plan) override;
  Reply<std::string> refine(const SeatView& v, const std::vector<std::string>& intentions,
                            const std::string& second_order,
                            const std::string& draft_speech) override;
  Reply<std::vector<Seat>> propose_team(const SeatView& v, int team_size) override;
  Reply<TeamDecision> reconsider_team(const SeatView& v, const std::vector<Seat>& team) override;
  Reply<VoteChoice> vote(const SeatView& v) override;
  Reply<QuestAction> quest_action(const SeatView& v) override;
  Reply<Seat> assassinate(const SeatView& v, const std::vector<Seat>& candidates) override;

 private:
  ScriptPolicy policy_;
  Rng rng_;
};

struct TurnArtifacts {
  std::string summary;
  std::string first_order;
  std::vector<std::string> selected_intentions;
  std::string thinking;
  std::string draft_speech;
  std::string second_order;
  std::vector<std::string> revised_intentions;
  std::string final_speech;
};

struct HarnessOptions {
  // Discussion passes per proposal attempt; every seat speaks once per pass.
  int discussion_passes = 1;
  // Start timestamps at this value and add one per event (logical clock).
  std::int64_t clock_start = 0;
  // Seat layout to use instead of the seeded deal.
  std::optional<RoleAssignment> fixed_roles;
};

using AgentSet = std::array<std::shared_ptr<Agent>, kPlayers>;

// Runs one game. Not thread-safe; independent games may run concurrently.
class GameRunner {
 public:
  GameRunner(std::string game_id, GameConfig config, AgentSet agents,
             const IntentionCatalog& catalog = IntentionCatalog::builtin(),
             HarnessOptions options = {});

  // Plays to completion and returns the event log.
  const std::vector<GameEvent>& play();

  // The individual stages, public so tests can drive a game step by step.
  void start();
  void summarize_round();
  void open_discussion();
  TurnArtifacts run_turn(Seat seat);
  TeamDecision leader_reconsider();
  void collect_votes();
  void run_quest();
  Seat decide_assassination();

  const GameState& state() const { return state_; }
  const std::vector<GameEvent>& events() const { return events_; }
  int fallbacks() const { return fallbacks_; }

 private:
  SeatView view(Seat seat) const;
  GameEvent& emit(Seat actor, EventKind kind, nlohmann::json payload);
  template <typename T>
  void mirror(nlohmann::json& payload, const Reply<T>& r) const;
  void fallback(Seat actor, PromptName step, const std::string& reason);
  void discussion();
  void finish();

  std::string game_id_;
  AgentSet agents_;
  const IntentionCatalog& catalog_;
  HarnessOptions options_;
  GameState state_;
  std::vector<GameEvent> events_;
  Rng fallback_rng_;
  int fallbacks_ = 0;
  bool started_ = false;
};

}  // namespace avalon
