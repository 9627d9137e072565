#include "doctest.h"
#include "helpers.hpp"

using namespace avalon;

namespace {

BatchSpec scripted_spec(int n, std::uint64_t seed) {
  BatchSpec spec;
  spec.n_games = n;
  spec.seed = seed;
  ScriptPolicy policy;
  policy.change_team_rate = 0.2;
  spec.make_agents = [policy](int, std::uint64_t s) { return scripted_agents(policy, s); };
  return spec;
}

}  // namespace

TEST_SUITE("batch") {
  TEST_CASE("game ids and seeds") {
    CHECK(game_id_for(0) == "game-0001");
    CHECK(game_id_for(41) == "game-0042");
    CHECK(game_seed_for(1, 0) != game_seed_for(1, 1));
    CHECK(game_seed_for(1, 3) == game_seed_for(1, 3));
  }

  TEST_CASE("parallel driver equals the serial reference") {
    auto spec = scripted_spec(64, 9);
    const auto serial = play_batch_serial(spec);
    for (int threads : {1, 2, 4, 0}) {
      CAPTURE(threads);
      CHECK(play_batch_parallel(spec, threads) == serial);
    }
  }

  TEST_CASE("mock batches are equal across drivers too") {
    BatchSpec spec;
    spec.n_games = 6;
    spec.seed = 3;
    spec.make_agents = [](int, std::uint64_t s) { return mock_agents(s); };
    CHECK(play_batch_parallel(spec, 3) == play_batch_serial(spec));
  }

  TEST_CASE("records carry outcome and ids") {
    auto records = play_batch_serial(scripted_spec(5, 1));
    REQUIRE(records.size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(records[i].game_id == game_id_for(i));
      CHECK(records[i].winner.has_value());
      CHECK(records[i].reason != WinReason::None);
      CHECK(records[i].error.empty());
      CHECK(records[i].events.back().kind == EventKind::GameEnd);
    }
  }

  TEST_CASE("a dead backend is reported per game, not thrown") {
    BatchSpec spec;
    spec.n_games = 2;
    spec.make_agents = [](int, std::uint64_t) {
      return remote_agents(std::make_shared<MockBackend>(), LlmAgent::Options{});
    };
    auto records = play_batch_parallel(spec, 2);
    REQUIRE(records.size() == 2);
    for (const auto& r : records) {
      CHECK_FALSE(r.error.empty());
      CHECK_FALSE(r.winner.has_value());
    }
  }
}
