#pragma once

// Independent oracles and hand-built fixtures shared by the metric tests and
// the acceptance runner. Nothing here calls the code under test except to
// build inputs.

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "avalon/batch.hpp"
#include "avalon/metrics.hpp"

namespace avalon::oracle {

// --- set F1 ----------------------------------------------------------------

// Every (pred, gold) pair of subsets of a 5-id universe, gold non-empty,
// checked against popcount arithmetic. Returns the number of mismatches.
inline int f1_subset_mismatches(int* pairs = nullptr) {
  const std::vector<std::string> universe = {"a", "b", "c", "d", "e"};
  auto subset = [&](unsigned mask) {
    std::set<std::string> s;
    for (unsigned i = 0; i < universe.size(); ++i) {
      if (mask & (1u << i)) s.insert(universe[i]);
    }
    return s;
  };
  int bad = 0, n = 0;
  for (unsigned p = 0; p < 32; ++p) {
    for (unsigned g = 1; g < 32; ++g) {
      ++n;
      const int tp = std::popcount(p & g);
      const int np = std::popcount(p), ng = std::popcount(g);
      const double precision = np ? static_cast<double>(tp) / np : 0.0;
      const double recall = static_cast<double>(tp) / ng;
      const double f1 = tp ? static_cast<double>(2 * tp) / (np + ng) : 0.0;
      const F1Score got = set_f1(subset(p), subset(g));
      if (got.precision != precision || got.recall != recall || got.f1 != f1) ++bad;
    }
  }
  if (pairs) *pairs = n;
  return bad;
}

// --- Cohen's kappa ---------------------------------------------------------

struct Table {
  std::vector<std::vector<int>> cells;  // cells[row = rater A][col = rater B]
};

// kappa = (p_o - p_e) / (1 - p_e) straight from the contingency table.
inline double kappa_from_table(const Table& t) {
  const std::size_t k = t.cells.size();
  double n = 0, diag = 0;
  std::vector<double> rows(k, 0), cols(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      n += t.cells[i][j];
      rows[i] += t.cells[i][j];
      cols[j] += t.cells[i][j];
      if (i == j) diag += t.cells[i][j];
    }
  }
  const double po = diag / n;
  double pe = 0;
  for (std::size_t i = 0; i < k; ++i) pe += rows[i] * cols[i] / (n * n);
  return (po - pe) / (1 - pe);
}

// Expands a table into two shuffled, aligned rating vectors.
inline std::pair<std::vector<int>, std::vector<int>> ratings_from_table(const Table& t,
                                                                         std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> items;
  for (std::size_t i = 0; i < t.cells.size(); ++i) {
    for (std::size_t j = 0; j < t.cells.size(); ++j) {
      for (int c = 0; c < t.cells[i][j]; ++c) items.emplace_back(i, j);
    }
  }
  std::shuffle(items.begin(), items.end(), rng);
  std::pair<std::vector<int>, std::vector<int>> out;
  for (auto [a, b] : items) {
    out.first.push_back(a);
    out.second.push_back(b);
  }
  return out;
}

// Largest |kappa - oracle| over `count` random non-degenerate tables.
inline double kappa_random_max_error(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  int done = 0;
  while (done < count) {
    const int k = 2 + static_cast<int>(rng() % 3);
    Table t{std::vector<std::vector<int>>(k, std::vector<int>(k, 0))};
    for (auto& row : t.cells) {
      for (int& c : row) c = static_cast<int>(rng() % 12);
    }
    auto [a, b] = ratings_from_table(t, rng);
    if (a.empty()) continue;
    auto got = cohen_kappa(a, b);
    if (!got) continue;  // degenerate marginals
    worst = std::max(worst, std::abs(*got - kappa_from_table(t)));
    ++done;
  }
  return worst;
}

// 20 items: A says yes on 10, B on 11, they agree on 17.
// p_o = 0.85, p_e = (10*11 + 10*9) / 400 = 0.5, kappa = 0.7.
inline Table hand_table() { return Table{{{9, 1}, {2, 8}}}; }

// --- impactful intentions --------------------------------------------------

struct ImpactFixture {
  std::vector<RoundSelection> selections;
  RoundWinners winners;
  std::set<std::string> expected;
};

// Five annotated games, five rounds each. Rates per planted id:
//   loyal "alpha": selected 5 times, loyal won 4  -> p = 0.8  impactful
//   evil  "beta":  selected 4 times, evil won 1   -> p = 0.25 impactful
//   loyal "gamma": selected once, won             -> count 1  not impactful
//   loyal "delta": selected 4 times, won 2        -> p = 0.5  not impactful
//   evil  "eps":   selected 10 times, won 7       -> p = 0.7  not impactful (not > 0.7)
//   evil  "zeta":  selected 10 times, won 3       -> p = 0.3  not impactful (not < 0.3)
inline ImpactFixture planted_impact_fixture() {
  using A = Alignment;
  ImpactFixture f;
  f.expected = {"alpha", "beta"};
  // Round winners, game by game; L = loyal won the quest.
  const std::vector<std::string> outcomes = {"LLELE", "ELLEE", "LEEEL", "EELLE", "LELEE"};
  std::vector<std::pair<std::string, int>> loyal_rounds, evil_rounds;
  for (int g = 0; g < 5; ++g) {
    for (int r = 1; r <= 5; ++r) {
      const std::string game = "annotated-" + std::to_string(g + 1);
      const A w = outcomes[g][r - 1] == 'L' ? A::Loyal : A::Evil;
      f.winners[{game, r}] = w;
      (w == A::Loyal ? loyal_rounds : evil_rounds).emplace_back(game, r);
    }
  }
  // 11 loyal-won rounds, 14 evil-won rounds.
  auto pick = [&](A side, const std::string& id, int in_loyal, int in_evil) {
    for (int i = 0; i < in_loyal; ++i) {
      f.selections.push_back({loyal_rounds[i].first, loyal_rounds[i].second, side, {id}});
    }
    for (int i = 0; i < in_evil; ++i) {
      f.selections.push_back({evil_rounds[i].first, evil_rounds[i].second, side, {id}});
    }
  };
  pick(A::Loyal, "alpha", 4, 1);
  pick(A::Evil, "beta", 3, 1);  // evil won the 1 evil-won round
  pick(A::Loyal, "gamma", 1, 0);
  pick(A::Loyal, "delta", 2, 2);
  pick(A::Evil, "eps", 3, 7);
  pick(A::Evil, "zeta", 7, 3);
  return f;
}

// Every catalog intention annotated so that exactly the ids flagged
// impactful in the catalog pass the rule: flagged ids are picked by one side
// in rounds that side always won (or always lost), the others split evenly.
inline ImpactFixture catalog_reconstruction_fixture(const IntentionCatalog& catalog) {
  using A = Alignment;
  ImpactFixture f;
  int round_counter = 0;
  auto fresh_round = [&](A winner) {
    const int n = round_counter++;
    const std::pair<std::string, int> key{"recon-" + std::to_string(n / 5 + 1), n % 5 + 1};
    f.winners[key] = winner;
    return key;
  };
  int i = 0;
  for (const auto& intent : catalog.intentions()) {
    const A side = i % 2 ? A::Evil : A::Loyal;
    const A other = side == A::Loyal ? A::Evil : A::Loyal;
    if (intent.impactful) {
      f.expected.insert(intent.id);
      const A winner = i % 4 < 2 ? side : other;  // p = 1 or p = 0
      for (int k = 0; k < 3; ++k) {
        auto key = fresh_round(winner);
        f.selections.push_back({key.first, key.second, side, {intent.id}});
      }
    } else {
      for (A winner : {side, other, side, other}) {
        auto key = fresh_round(winner);
        f.selections.push_back({key.first, key.second, side, {intent.id}});
      }
    }
    ++i;
  }
  return f;
}

// --- correlation -----------------------------------------------------------

struct CorrelationFixture {
  std::vector<RawScore> scores;
  std::map<std::string, Alignment> game_winners;
  RoundWinners quest_winners;
  // Expected shares, {evil_better, equal, loyal_better}, per outcome cell.
  std::array<double, 3> loyal_won;
  std::array<double, 3> loyal_lost;
};

// Seats 0-2 loyal, 3-4 evil; one round per game. Per game (e, l) with the
// comparison 3e vs 2l:
//   g1 W (1,2) 3<4 loyal   g2 W (0,0) equal   g3 W (2,3) equal   g4 W (1,1) evil
//   g5 L (2,2) evil        g6 L (2,1) evil    g7 L (0,1) loyal   g8 L (1,3) loyal
// g9 has scores but no recorded outcome and is not a unit.
inline CorrelationFixture correlation_fixture() {
  using A = Alignment;
  struct Row {
    const char* game;
    std::optional<A> winner;
    std::array<int, 5> bits;
  };
  const std::vector<Row> rows = {
      {"g1", A::Loyal, {1, 1, 0, 1, 0}}, {"g2", A::Loyal, {0, 0, 0, 0, 0}},
      {"g3", A::Loyal, {1, 1, 1, 1, 1}}, {"g4", A::Loyal, {0, 1, 0, 0, 1}},
      {"g5", A::Evil, {1, 0, 1, 1, 1}},  {"g6", A::Evil, {0, 0, 1, 1, 1}},
      {"g7", A::Evil, {0, 1, 0, 0, 0}},  {"g8", A::Evil, {1, 1, 1, 0, 1}},
      {"g9", std::nullopt, {1, 1, 1, 1, 1}},
  };
  CorrelationFixture f;
  for (const auto& r : rows) {
    if (r.winner) {
      f.game_winners[r.game] = *r.winner;
      f.quest_winners[{r.game, 1}] = *r.winner;
    }
    for (Seat s = 0; s < kPlayers; ++s) {
      f.scores.push_back({r.game, 1, s, s >= 3 ? A::Evil : A::Loyal, r.bits[s]});
    }
  }
  f.loyal_won = {0.25, 0.5, 0.25};
  f.loyal_lost = {0.5, 0.0, 0.5};
  return f;
}

// --- game performance ------------------------------------------------------

// Ten scripted games with known outcomes. Leader 0 opens, leaders rotate,
// teams are the leader and the next seats, everyone approves.
//   layout A = Merlin, Percival, Servant, Morgana, Assassin
//   layout B = Servant, Morgana, Merlin, Assassin, Percival
//   games 1-2:  A, evil fails every quest  -> quests S F F F, evil wins
//   game 3:     B, evil fails every quest  -> quests F F F,   evil wins
//   games 4-6:  A, evil never fails, assassin hits Merlin (seat 0)
//   games 7-10: A, evil never fails, assassin picks Percival (seat 1)
inline std::vector<Transcript> performance_suite() {
  using R = RoleName;
  const std::array<R, kPlayers> a = {R::Merlin, R::Percival, R::Servant, R::Morgana, R::Assassin};
  const std::array<R, kPlayers> b = {R::Servant, R::Morgana, R::Merlin, R::Assassin, R::Percival};
  std::vector<Transcript> out;
  for (int g = 1; g <= 10; ++g) {
    ScriptPolicy policy;
    policy.team_rule = ScriptPolicy::TeamRule::Consecutive;
    policy.vote = VoteChoice::Agree;
    policy.evil_action = g <= 3 ? QuestAction::Fail : QuestAction::Success;
    policy.assassinate = g <= 6 ? Seat{0} : Seat{1};
    GameConfig config;
    config.seed = static_cast<std::uint64_t>(g);
    HarnessOptions options;
    options.fixed_roles = make_roles(g == 3 ? b : a);
    const std::string id = "perf-" + std::to_string(g);
    GameRunner runner(id, config, scripted_agents(policy, config.seed),
                      IntentionCatalog::builtin(), options);
    out.emplace_back(id, runner.play());
  }
  return out;
}

// Hand-derived from the schedule above (team sizes 2, 3, 2, 3, 3):
//   quests 4+4+3+7*3 = 32, successes 1+1+0+21 = 23
//   loyal team slots 6+6+3+7*5 = 50 of 3*32, evil 4+4+4+7*2 = 26 of 2*32
//   loyal-led teams 3+3+2+7*3 = 29, clean ones 1+1+0+7 = 9
//   evil-led teams 1+1+1 = 3, all carry an evil seat
//   fail votes 4+4+4 = 12 over 26 evil team slots
//   assassinations 7, hits 3
inline GamePerformance performance_expected() {
  GamePerformance p;
  p.games = 10;
  p.quests = 32;
  p.win_rate = {4.0 / 10, 6.0 / 10};
  p.quest_win_rate = {23.0 / 32, 9.0 / 32};
  p.quest_engagement_rate = {50.0 / 96, 26.0 / 64};
  p.team_selection_accuracy = {9.0 / 29, 3.0 / 3};
  p.failure_vote_rate = {std::nullopt, 12.0 / 26};
  p.proposal_change_rate = {0.0, 0.0};
  p.merlin_assassination_rate = {std::nullopt, 3.0 / 7};
  return p;
}

}  // namespace avalon::oracle
