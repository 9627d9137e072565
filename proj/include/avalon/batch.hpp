#pragma once

// Batches of independent games. Each game gets its own seed, agents and
// backend, so the parallel driver produces exactly what the serial one does.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "avalon/backend.hpp"
#include "avalon/harness.hpp"

namespace avalon {

using AgentFactory = std::function<AgentSet(int index, std::uint64_t game_seed)>;

struct BatchSpec {
  int n_games = 1;
  std::uint64_t seed = 0;
  GameConfig config;
  HarnessOptions options;
  AgentFactory make_agents;
  const IntentionCatalog* catalog = nullptr;  // builtin when null
};

struct GameRecord {
  std::string game_id;
  std::vector<GameEvent> events;
  std::optional<Alignment> winner;
  WinReason reason = WinReason::None;
  int fallbacks = 0;
  // Set when the game was aborted (backend unavailable).
  std::string error;

  bool operator==(const GameRecord&) const = default;
};

// "game-0001" for index 0.
std::string game_id_for(int index);
std::uint64_t game_seed_for(std::uint64_t batch_seed, int index);

GameRecord play_one(const BatchSpec& spec, int index);

// Reference driver: games in index order on the calling thread.
std::vector<GameRecord> play_batch_serial(const BatchSpec& spec);
// Same results, games spread over an OpenMP team. threads <= 0 uses the
// runtime default.
std::vector<GameRecord> play_batch_parallel(const BatchSpec& spec, int threads = 0);

// Agent factories for the stock backends.
AgentSet scripted_agents(const ScriptPolicy& policy, std::uint64_t game_seed);
// LLM agents over a per-game mock: queued fixtures first, then the
// synthetic responder.
AgentSet mock_agents(std::uint64_t game_seed, SyntheticBackend::Options synthetic = {},
                     LlmAgent::Options llm = {}, std::string_view fixtures = {});
AgentSet remote_agents(std::shared_ptr<ChatBackend> backend, LlmAgent::Options llm);

}  // namespace avalon
