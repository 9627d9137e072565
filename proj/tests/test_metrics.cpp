#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace avalon;

namespace {

MetricError::Code metric_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const MetricError& e) {
    return e.code();
  }
  FAIL("no MetricError thrown");
  return MetricError::Code::BadValue;
}

void check_rates(const SideRates& got, const SideRates& want) {
  CHECK(got.loyal.has_value() == want.loyal.has_value());
  CHECK(got.evil.has_value() == want.evil.has_value());
  if (got.loyal && want.loyal) CHECK(*got.loyal == *want.loyal);
  if (got.evil && want.evil) CHECK(*got.evil == *want.evil);
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("selection accuracy") {
    CHECK(selection_accuracy({1, 1, 0, 1}) == 0.75);
    CHECK(metric_code([] { selection_accuracy({}); }) == MetricError::Code::EmptyInput);
    CHECK(metric_code([] { selection_accuracy({1, 2}); }) == MetricError::Code::BadValue);
  }

  TEST_CASE("set F1 worked examples") {
    auto s = set_f1({"a", "b"}, {"b", "c", "d"});
    CHECK(s.precision == 0.5);
    CHECK(s.recall == doctest::Approx(1.0 / 3));
    CHECK(s.f1 == 0.4);
    CHECK(set_f1({}, {"a"}).f1 == 0.0);
    CHECK(set_f1({"a"}, {"a"}).f1 == 1.0);
    CHECK(metric_code([] { set_f1({"a"}, {}); }) == MetricError::Code::EmptyGold);
  }

  TEST_CASE("set F1 matches subset enumeration exactly") {
    int pairs = 0;
    CHECK(oracle::f1_subset_mismatches(&pairs) == 0);
    CHECK(pairs == 32 * 31);
  }

  TEST_CASE("macro and micro corpus F1") {
    std::vector<F1Instance> xs = {{{"a", "b"}, {"a"}, 1}, {{"c"}, {"d", "e", "f"}, 2}};
    // Macro: (2/3 + 0) / 2. Micro: tp 1, 3 predicted, 4 gold -> 2/7.
    CHECK(corpus_f1(xs, F1Average::Macro) == doctest::Approx(1.0 / 3));
    CHECK(corpus_f1(xs, F1Average::Micro) == 2.0 / 7);
    CHECK(metric_code([] { corpus_f1({}); }) == MetricError::Code::EmptyInput);
    auto by_round = round_wise_tom(xs);
    CHECK(by_round.size() == 2);
    CHECK(by_round[1] == doctest::Approx(2.0 / 3));
    CHECK(by_round[2] == 0.0);
  }

  TEST_CASE("kappa on the hand-computed table") {
    std::mt19937_64 rng(1);
    auto [a, b] = oracle::ratings_from_table(oracle::hand_table(), rng);
    auto k = cohen_kappa(a, b);
    REQUIRE(k);
    CHECK(std::abs(*k - 0.7) < 1e-12);
    CHECK(std::abs(oracle::kappa_from_table(oracle::hand_table()) - 0.7) < 1e-12);
  }

  TEST_CASE("kappa matches the contingency oracle on random tables") {
    CHECK(oracle::kappa_random_max_error(25, 2024) < 1e-12);
  }

  TEST_CASE("kappa edge cases") {
    CHECK_FALSE(cohen_kappa({1, 1, 1}, {1, 1, 1}).has_value());
    CHECK(*cohen_kappa({0, 1}, {1, 0}) == -1.0);
    CHECK(*cohen_kappa({0, 1, 2}, {0, 1, 2}) == 1.0);
    CHECK(metric_code([] { cohen_kappa({}, {}); }) == MetricError::Code::EmptyInput);
  }

  TEST_CASE("pairwise kappa with groupings") {
    RatingsByAnnotator r;
    r["ann1"] = {{"x1", 1}, {"x2", 5}, {"x3", 4}, {"x4", 2}};
    r["ann2"] = {{"x1", 3}, {"x2", 4}, {"x3", 5}, {"x4", 1}};
    r["ann3"] = {{"x1", 2}, {"x2", 2}, {"x3", 2}, {"x9", 5}};
    auto grouped = pairwise_kappa(r, Grouping::following());
    REQUIRE(grouped.pairs.size() == 3);
    // ann1 vs ann2 agree on every grouped label.
    CHECK(grouped.pairs[0].a == "ann1");
    CHECK(grouped.pairs[0].b == "ann2");
    CHECK(*grouped.pairs[0].kappa == 1.0);
    // ann3 is constant on the shared items: kappa 0 against a varied rater.
    CHECK(*grouped.pairs[1].kappa == 0.0);
    CHECK(grouped.pairs[1].shared_items == 3);
    CHECK(grouped.excluded == 0);
    CHECK(*grouped.mean == doctest::Approx(1.0 / 3));
    CHECK(*grouped.sd == doctest::Approx(std::sqrt(1.0 / 3)));

    auto raw = pairwise_kappa(r, Grouping::identity());
    CHECK(*raw.pairs[0].kappa < 1.0);

    auto strict = pairwise_kappa(r, Grouping::following(), 4);
    CHECK(strict.pairs.size() == 1);

    RatingsByAnnotator apart = {{"p", {{"a", 1}}}, {"q", {{"b", 1}}}};
    CHECK(metric_code([&] { pairwise_kappa(apart, Grouping::identity()); }) ==
          MetricError::Code::InsufficientOverlap);
  }

  TEST_CASE("impactful discovery returns the planted set") {
    auto f = oracle::planted_impact_fixture();
    auto result = discover_impactful(f.selections, f.winners);
    CHECK(result.ids == f.expected);
    for (const auto& s : result.stats) {
      if (s.id == "eps") CHECK(s.p == 0.7);
      if (s.id == "zeta") CHECK(s.p == 0.3);
    }
  }

  TEST_CASE("impactful discovery reconstructs the catalog flags") {
    const auto& c = IntentionCatalog::builtin();
    auto f = oracle::catalog_reconstruction_fixture(c);
    auto result = discover_impactful(f.selections, f.winners);
    CHECK(result.ids.size() == 16);
    CHECK(result.ids == f.expected);
    const auto flagged = c.impactful_ids();
    CHECK(result.ids == std::set<std::string>(flagged.begin(), flagged.end()));
  }

  TEST_CASE("impact rule thresholds are configurable") {
    auto f = oracle::planted_impact_fixture();
    ImpactRule loose{0.69, 0.31, 2};
    auto result = discover_impactful(f.selections, f.winners, loose);
    CHECK(result.ids == std::set<std::string>{"alpha", "beta", "eps", "zeta"});
    ImpactRule single{0.7, 0.3, 1};
    CHECK(discover_impactful(f.selections, f.winners, single).ids.count("gamma") == 1);
  }

  TEST_CASE("round winners and selections from transcripts") {
    auto games = test::scripted_batch(20, 5);
    auto winners = round_winners(games);
    auto played = round_winners(games, false);
    int quests = 0;
    for (const auto& t : games) quests += static_cast<int>(t.of_kind(EventKind::QuestResult).size());
    CHECK(static_cast<int>(played.size()) == quests);
    CHECK(winners.size() >= played.size());
    int turns = 0;
    for (const auto& t : games) turns += static_cast<int>(t.of_kind(EventKind::IntentRevised).size());
    CHECK(static_cast<int>(round_selections(games).size()) == turns);
  }

  TEST_CASE("game performance matches the hand-derived suite") {
    const auto got = game_performance(oracle::performance_suite());
    const auto want = oracle::performance_expected();
    CHECK(got.games == want.games);
    CHECK(got.quests == want.quests);
    check_rates(got.win_rate, want.win_rate);
    check_rates(got.quest_win_rate, want.quest_win_rate);
    check_rates(got.quest_engagement_rate, want.quest_engagement_rate);
    check_rates(got.team_selection_accuracy, want.team_selection_accuracy);
    check_rates(got.failure_vote_rate, want.failure_vote_rate);
    check_rates(got.proposal_change_rate, want.proposal_change_rate);
    check_rates(got.merlin_assassination_rate, want.merlin_assassination_rate);
    CHECK(got == want);
  }

  TEST_CASE("performance rates stay in range on random games") {
    ScriptPolicy policy;
    policy.change_team_rate = 0.5;
    auto p = game_performance(test::scripted_batch(100, 17, policy));
    CHECK(p.games == 100);
    CHECK(*p.win_rate.loyal + *p.win_rate.evil == doctest::Approx(1.0));
    CHECK(*p.quest_win_rate.loyal + *p.quest_win_rate.evil == doctest::Approx(1.0));
    for (const SideRates* r : {&p.quest_engagement_rate, &p.team_selection_accuracy,
                               &p.proposal_change_rate}) {
      for (auto v : {r->loyal, r->evil}) {
        REQUIRE(v);
        CHECK(*v >= 0.0);
        CHECK(*v <= 1.0);
      }
    }
    CHECK(*p.proposal_change_rate.loyal > 0.0);
  }

  TEST_CASE("binarize thresholds") {
    std::vector<RawScore> raw;
    for (int v = 1; v <= 5; ++v) raw.push_back({"g", 1, 0, Alignment::Loyal, v});
    auto bits = [](const std::vector<BinaryScore>& b) {
      std::vector<int> out;
      for (const auto& s : b) out.push_back(s.bit());
      return out;
    };
    CHECK(bits(binarize(raw, Threshold::at_least(3))) == std::vector<int>{0, 0, 1, 1, 1});
    CHECK(bits(binarize(raw, Threshold::exactly(3))) == std::vector<int>{0, 0, 1, 0, 0});
    CHECK(metric_code([&] { binarize(raw, Threshold::binary()); }) == MetricError::Code::BadValue);
  }

  TEST_CASE("correlation reproduces the hand-derived share table") {
    auto f = oracle::correlation_fixture();
    auto bits = binarize(f.scores, Threshold::binary());
    for (auto scope : {CorrelationScope::Game, CorrelationScope::Quest}) {
      auto cells = correlation_analysis(bits, scope, f.game_winners, f.quest_winners);
      REQUIRE(cells.size() == 2);
      CHECK(cells[0].units == 4);
      CHECK(cells[1].units == 4);
      CHECK(std::array<double, 3>{cells[0].evil_better, cells[0].equal, cells[0].loyal_better} ==
            f.loyal_won);
      CHECK(std::array<double, 3>{cells[1].evil_better, cells[1].equal, cells[1].loyal_better} ==
            f.loyal_lost);
    }
    CHECK(metric_code([&] { correlation_analysis(bits, CorrelationScope::Game, {}, {}); }) ==
          MetricError::Code::NoRecordsForScope);
  }
}
