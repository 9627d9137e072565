#include "doctest.h"
#include "helpers.hpp"
#include "avalon/report.hpp"

using namespace avalon;

namespace {

std::set<std::string> impactful() {
  auto ids = IntentionCatalog::builtin().impactful_ids();
  return {ids.begin(), ids.end()};
}

EvalOptions eval_options() {
  EvalOptions o;
  o.impactful = impactful();
  return o;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("count identities follow the transcript bookkeeping") {
    const auto games = test::mock_batch(6, 1);
    auto report = evaluate({{"mock", games}}, {}, {}, IntentionCatalog::builtin(), eval_options());
    const Counts& c = report.counts.at("mock");
    // Independent tally straight from the events.
    int turns = 0, kept = 0;
    const auto keep = impactful();
    for (const auto& t : games) {
      turns += static_cast<int>(t.of_kind(EventKind::Speech).size());
      for (const GameEvent* e : t.of_kind(EventKind::IntentRevised)) {
        for (const auto& id : e->payload.at("ids")) kept += keep.count(id.get<std::string>());
      }
    }
    CHECK(c.games == 6);
    CHECK(c.turns == turns);
    CHECK(c.selection_records == kept);
    CHECK(c.evaluated_pairs == c.selection_records);
    CHECK(c.following_records == 2 * c.evaluated_pairs);
    CHECK(c.summarization_questions == turns);
    CHECK(c.guessing_questions == turns);
  }

  TEST_CASE("mock predictions score and render deterministically") {
    const auto games = test::mock_batch(4, 2);
    const GameSource source{"mock", games};
    SyntheticBackend::Options syn;
    syn.seed = 3;
    SyntheticBackend a(syn), b(syn);
    auto pa = run_predictions(source, a, IntentionCatalog::builtin());
    auto pb = run_predictions(source, b, IntentionCatalog::builtin());
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(to_json(pa[i]) == to_json(pb[i]));
    for (const auto& p : pa) CHECK(prediction_from_json(to_json(p)).predicted == p.predicted);

    auto r1 = evaluate({source}, {}, pa, IntentionCatalog::builtin(), eval_options());
    auto r2 = evaluate({source}, {}, pb, IntentionCatalog::builtin(), eval_options());
    CHECK(r1.to_jsonl() == r2.to_jsonl());
    CHECK(r1.to_table() == r2.to_table());

    int rows = 0;
    for (const auto& row : r1.f1) {
      if (row.who == "Human") continue;
      ++rows;
      CHECK(row.f1.mean >= 0.0);
      CHECK(row.f1.mean <= 1.0);
    }
    CHECK(rows == 2);  // summarization and guessing
  }

  TEST_CASE("performance table has seven rows with N/A cells") {
    const auto games = test::scripted_batch(10, 4);
    auto report = evaluate({{"scripted", games}}, {}, {}, IntentionCatalog::builtin(), eval_options());
    const std::string table = report.to_table();
    for (const char* row : {"Win Rate", "Quest Win Rate", "Quest Engagement Rate",
                            "Team Selection Accuracy", "Failure Vote Rate",
                            "Team Proposal Change Rate", "Merlin Assassination Rate"}) {
      CHECK(table.find(row) != std::string::npos);
    }
    const auto at = table.find("Failure Vote Rate");
    CHECK(table.substr(at, table.find('\n', at) - at).find("N/A") != std::string::npos);

    int performance_lines = 0;
    std::istringstream in(report.to_jsonl());
    for (std::string line; std::getline(in, line);) {
      auto j = nlohmann::json::parse(line);
      REQUIRE(j.contains("section"));
      performance_lines += j["section"] == "performance";
    }
    CHECK(performance_lines >= 1);
  }

  TEST_CASE("revised ids of a turn") {
    auto t = test::play_scripted("rev", 5);
    const GameEvent* e = t.of_kind(EventKind::IntentRevised).front();
    CHECK(revised_ids(t, e->actor, e->round, e->attempt) ==
          e->payload.at("ids").get<std::vector<std::string>>());
    CHECK(revised_ids(t, e->actor, 9, 1).empty());
  }
}
