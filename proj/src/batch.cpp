#include "avalon/batch.hpp"

#include <cstdio>

#include <omp.h>

namespace avalon {

std::string game_id_for(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "game-%04d", index + 1);
  return buf;
}

std::uint64_t game_seed_for(std::uint64_t batch_seed, int index) {
  return derive_seed(batch_seed, static_cast<std::uint64_t>(index));
}

GameRecord play_one(const BatchSpec& spec, int index) {
  GameRecord rec;
  rec.game_id = game_id_for(index);
  GameConfig config = spec.config;
  config.seed = game_seed_for(spec.seed, index);
  const IntentionCatalog& catalog = spec.catalog ? *spec.catalog : IntentionCatalog::builtin();
  GameRunner runner(rec.game_id, config, spec.make_agents(index, config.seed), catalog,
                    spec.options);
  try {
    runner.play();
    rec.winner = runner.state().winner;
    rec.reason = runner.state().win_reason;
  } catch (const BackendUnavailable& e) {
    rec.error = e.what();
  }
  rec.events = runner.events();
  rec.fallbacks = runner.fallbacks();
  return rec;
}

std::vector<GameRecord> play_batch_serial(const BatchSpec& spec) {
  std::vector<GameRecord> out;
  out.reserve(spec.n_games);
  for (int i = 0; i < spec.n_games; ++i) out.push_back(play_one(spec, i));
  return out;
}

std::vector<GameRecord> play_batch_parallel(const BatchSpec& spec, int threads) {
  std::vector<GameRecord> out(spec.n_games);
  if (threads <= 0) threads = omp_get_max_threads();
  // Games differ a lot in length, so hand them out one at a time.
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < spec.n_games; ++i) out[i] = play_one(spec, i);
  return out;
}

AgentSet scripted_agents(const ScriptPolicy& policy, std::uint64_t game_seed) {
  AgentSet agents;
  for (Seat s = 0; s < kPlayers; ++s) {
    agents[s] = std::make_shared<ScriptedAgent>(policy, derive_seed(game_seed, 100 + s));
  }
  return agents;
}

AgentSet mock_agents(std::uint64_t game_seed, SyntheticBackend::Options synthetic,
                     LlmAgent::Options llm, std::string_view fixtures) {
  synthetic.seed = derive_seed(game_seed, 0x5157ULL);
  auto mock = std::make_shared<MockBackend>(std::make_shared<SyntheticBackend>(synthetic));
  if (!fixtures.empty()) mock->load_fixtures(fixtures);
  return remote_agents(mock, llm);
}

AgentSet remote_agents(std::shared_ptr<ChatBackend> backend, LlmAgent::Options llm) {
  AgentSet agents;
  for (Seat s = 0; s < kPlayers; ++s) agents[s] = std::make_shared<LlmAgent>(backend, llm);
  return agents;
}

}  // namespace avalon
