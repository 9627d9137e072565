#pragma once

#include <unistd.h>

#include <atomic>
#include <map>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "avalon/batch.hpp"
#include "avalon/harness.hpp"
#include "avalon/transcript.hpp"

namespace avalon::test {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(AVALON_TEST_FIXTURES) / name;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("avalon-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Transcript play_scripted(const std::string& game_id, std::uint64_t seed,
                                const ScriptPolicy& policy = {},
                                std::optional<RoleAssignment> roles = std::nullopt) {
  GameConfig config;
  config.seed = seed;
  HarnessOptions options;
  options.fixed_roles = roles;
  GameRunner runner(game_id, config, scripted_agents(policy, seed), IntentionCatalog::builtin(),
                    options);
  return Transcript(game_id, runner.play());
}

inline std::vector<Transcript> transcripts(const std::vector<GameRecord>& records) {
  std::vector<Transcript> out;
  for (const auto& r : records) out.emplace_back(r.game_id, r.events);
  return out;
}

inline std::vector<Transcript> scripted_batch(int n, std::uint64_t seed,
                                              const ScriptPolicy& policy = {}) {
  BatchSpec spec;
  spec.n_games = n;
  spec.seed = seed;
  spec.make_agents = [policy](int, std::uint64_t s) { return scripted_agents(policy, s); };
  return transcripts(play_batch_parallel(spec));
}

inline std::vector<Transcript> mock_batch(int n, std::uint64_t seed, double malformed = 0.1) {
  BatchSpec spec;
  spec.n_games = n;
  spec.seed = seed;
  SyntheticBackend::Options syn;
  syn.malformed_rate = malformed;
  spec.make_agents = [syn](int, std::uint64_t s) { return mock_agents(s, syn); };
  return transcripts(play_batch_parallel(spec));
}

struct MalformedRun {
  int replies = 0;
  int games = 0;
  int aborted = 0;
  int fallbacks = 0;
  int expected_fallbacks = 0;
  int intention_lists = 0;
  int invalid_lists = 0;
  std::size_t leftover = 0;
};

// Plays games whose shared backend serves the queued malformed replies
// first and well-formed synthetic replies after. Each fixture prompt holds
// a multiple of three replies, so every three consumed exhaust one step's
// retries and force exactly one fallback.
inline MalformedRun run_malformed(const std::string& fixtures_jsonl, std::uint64_t seed,
                                  int max_games = 8) {
  MalformedRun out;
  SyntheticBackend::Options syn;
  syn.malformed_rate = 0.0;
  syn.seed = seed;
  auto mock = std::make_shared<MockBackend>(std::make_shared<SyntheticBackend>(syn));
  mock->load_fixtures(fixtures_jsonl);
  std::map<PromptName, std::size_t> queued;
  std::istringstream lines(fixtures_jsonl);
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    ++out.replies;
    ++queued[prompt_name_from_string(nlohmann::json::parse(line).at("prompt").get<std::string>())];
  }
  auto pending = [&] {
    std::size_t n = 0;
    for (const auto& [p, _] : queued) n += mock->pending(p);
    return n;
  };
  for (int g = 0; g < max_games && pending() > 0; ++g) {
    GameConfig config;
    config.seed = derive_seed(seed, g);
    GameRunner runner("malformed-" + std::to_string(g), config,
                      remote_agents(mock, LlmAgent::Options{}));
    ++out.games;
    try {
      runner.play();
    } catch (const std::exception&) {
      ++out.aborted;
      continue;
    }
    Transcript t(runner.events().front().game_id, runner.events());
    const RoleAssignment roles = t.roles();
    out.fallbacks += static_cast<int>(t.of_kind(EventKind::FallbackUsed).size());
    for (EventKind k : {EventKind::IntentSelected, EventKind::IntentRevised}) {
      for (const GameEvent* e : t.of_kind(k)) {
        ++out.intention_lists;
        auto ids = e->payload.at("ids").get<std::vector<std::string>>();
        if (!IntentionCatalog::builtin().valid_selection(roles[e->actor].name, ids)) {
          ++out.invalid_lists;
        }
      }
    }
  }
  out.leftover = pending();
  for (const auto& [p, n] : queued) out.expected_fallbacks += static_cast<int>(n / 3);
  return out;
}

}  // namespace avalon::test
