// Acceptance runner: one PASS/FAIL line per primary criterion. Exit status
// is nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "avalon/context.hpp"
#include "avalon/rules.hpp"

using namespace avalon;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kRulesBudgetSeconds = 10.0;
constexpr double kKappaTolerance = 1e-12;
constexpr double kEndToEndBudgetSeconds = 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 1. Rules engine property suite.
Outcome rules_suite() {
  const auto start = Clock::now();
  ScriptPolicy policy;
  policy.change_team_rate = 0.3;
  policy.loyal_action = QuestAction::Fail;  // every loyal request must be refused
  BatchSpec spec;
  spec.n_games = 1000;
  spec.seed = 20240501;
  spec.make_agents = [policy](int, std::uint64_t s) { return scripted_agents(policy, s); };
  const auto records = play_batch_parallel(spec);

  int unfinished = 0, replay_mismatch = 0, quest_violations = 0, loyal_fail_recorded = 0,
      loyal_fail_accepted = 0;
  for (const auto& r : records) {
    const Transcript t(r.game_id, r.events);
    const GameState s = replay(t);
    if (s.phase != Phase::Finished || !s.winner || !r.winner) ++unfinished;
    if (s.winner != t.winner() || s.winner != r.winner) ++replay_mismatch;
    for (const auto& q : s.quest_results) {
      int evil = 0;
      for (Seat m : q.team) evil += s.is_evil(m);
      if (q.fail_votes > evil) ++quest_violations;
    }
    for (const GameEvent* e : t.of_kind(EventKind::QuestAction)) {
      if (!s.is_evil(e->actor) && e->payload.at("action") != "success") ++loyal_fail_recorded;
    }
    // The engine itself refuses a loyal fail on this game's first team.
    GameState g = new_game(GameConfig{}, t.roles());
    g = begin_discussion(g);
    const std::vector<Seat> team = {g.leader, static_cast<Seat>((g.leader + 1) % kPlayers)};
    g = close_discussion(propose_team(g, g.leader, team));
    g = propose_team(g, g.leader, team);
    for (Seat p = 0; p < kPlayers; ++p) g = cast_vote(g, p, VoteChoice::Agree);
    std::map<Seat, QuestAction> acts;
    for (Seat m : team) acts[m] = QuestAction::Fail;
    const bool any_loyal = !g.is_evil(team[0]) || !g.is_evil(team[1]);
    try {
      execute_quest(g, acts);
      if (any_loyal) ++loyal_fail_accepted;
    } catch (const RuleError& e) {
      if (e.code() != RuleErrorCode::LoyalFailVote) ++loyal_fail_accepted;
    }
  }
  // Determinism: the serial reference reproduces the batch byte for byte.
  BatchSpec sample = spec;
  sample.n_games = 50;
  const auto serial = play_batch_serial(sample);
  int nondeterministic = 0;
  for (int i = 0; i < sample.n_games; ++i) nondeterministic += !(serial[i] == records[i]);

  const double secs = seconds_since(start);
  const int violations = unfinished + replay_mismatch + quest_violations + loyal_fail_recorded +
                         loyal_fail_accepted + nondeterministic;
  return {violations == 0 && secs < kRulesBudgetSeconds,
          "1000 games; unfinished " + std::to_string(unfinished) + ", replay mismatches " +
              std::to_string(replay_mismatch) + ", quest violations " +
              std::to_string(quest_violations) + ", loyal fails kept " +
              std::to_string(loyal_fail_recorded + loyal_fail_accepted) + ", nondeterministic " +
              std::to_string(nondeterministic) + "; " + fmt(secs) + " s (budget " +
              fmt(kRulesBudgetSeconds, 0) + " s)"};
}

// 2. Metric oracles.
Outcome metric_oracles() {
  int pairs = 0;
  const int f1_bad = oracle::f1_subset_mismatches(&pairs);
  const double kappa_err = oracle::kappa_random_max_error(25, 777);
  const auto f = oracle::correlation_fixture();
  const auto bits = binarize(f.scores, Threshold::binary());
  bool corr_ok = true;
  for (auto scope : {CorrelationScope::Game, CorrelationScope::Quest}) {
    const auto cells = correlation_analysis(bits, scope, f.game_winners, f.quest_winners);
    corr_ok &= cells.size() == 2 &&
               std::array<double, 3>{cells[0].evil_better, cells[0].equal,
                                     cells[0].loyal_better} == f.loyal_won &&
               std::array<double, 3>{cells[1].evil_better, cells[1].equal,
                                     cells[1].loyal_better} == f.loyal_lost;
  }
  return {f1_bad == 0 && kappa_err < kKappaTolerance && corr_ok,
          "set F1 " + std::to_string(pairs - f1_bad) + "/" + std::to_string(pairs) +
              " exact; kappa max error " + [&] {
                std::ostringstream s;
                s << kappa_err;
                return s.str();
              }() + " over 25 tables (tol 1e-12); 8-game correlation table " +
              (corr_ok ? "exact" : "differs")};
}

// 3. Impactful-intention discovery.
Outcome impactful() {
  const auto planted = oracle::planted_impact_fixture();
  const auto got = discover_impactful(planted.selections, planted.winners);
  const auto& catalog = IntentionCatalog::builtin();
  const auto recon = oracle::catalog_reconstruction_fixture(catalog);
  const auto rebuilt = discover_impactful(recon.selections, recon.winners);
  const auto flagged = catalog.impactful_ids();
  const bool ok = got.ids == planted.expected && rebuilt.ids.size() == 16 &&
                  rebuilt.ids == std::set<std::string>(flagged.begin(), flagged.end());
  return {ok, "planted set " + std::string(got.ids == planted.expected ? "recovered" : "differs") +
                  " (" + std::to_string(got.ids.size()) + " ids); catalog reconstruction " +
                  std::to_string(rebuilt.ids.size()) + " ids (want 16)"};
}

// 4. Exporter goldens and visibility scan.
Outcome exporters() {
  const auto& c = IntentionCatalog::builtin();
  const Transcript t =
      parse_transcript("game-0001", test::read_file(test::fixture("golden_game/game-0001.jsonl")))
          .transcript;
  const bool sum_ok = export_summarization_context(t, 1, 2, c).text ==
                      test::read_file(test::fixture("golden_game/summarization_golden.txt"));
  const bool guess_ok = export_guessing_context(t, 2, 1, 2, c).text ==
                        test::read_file(test::fixture("golden_game/guessing_golden.txt"));
  int leaks = 0, scanned = 0;
  for (const Transcript& g : test::scripted_batch(100, 4242)) {
    const auto roles = g.roles();
    for (const auto& s : speeches(g)) {
      const Seat observer = (s.seat + 1) % kPlayers;
      leaks += !find_leaks(export_summarization_context(g, s.seat, s.round, c, s.attempt).text,
                           s.seat, roles)
                    .empty();
      leaks += !find_leaks(
                    export_guessing_context(g, observer, s.seat, s.round, c, s.attempt).text,
                    observer, roles)
                    .empty();
      scanned += 2;
    }
  }
  return {sum_ok && guess_ok && leaks == 0,
          std::string("summarization golden ") + (sum_ok ? "identical" : "differs") +
              ", guessing golden " + (guess_ok ? "identical" : "differs") + "; " +
              std::to_string(leaks) + " leaks in " + std::to_string(scanned) +
              " contexts over 100 games"};
}

// 5. End-to-end mock batch through the CLI.
Outcome end_to_end() {
  test::TempDir dir;
  const std::string games = (dir / "games").string();
  const std::string out = (dir / "eval").string();
  const auto start = Clock::now();
  const int play = shell("\"" AVALON_CLI "\" play --games 40 --backend mock --seed 1 --out \"" +
                         games + "\" > /dev/null");
  const int eval = play == 0 ? shell("\"" AVALON_CLI "\" eval --games mock=\"" + games +
                                     "\" --predict mock --out \"" + out + "\" > /dev/null")
                             : -1;
  const double secs = seconds_since(start);
  if (play != 0 || eval != 0) {
    return {false, "play exit " + std::to_string(play) + ", eval exit " + std::to_string(eval)};
  }
  nlohmann::json counts;
  std::istringstream in(test::read_file(std::filesystem::path(out) / "report.jsonl"));
  for (std::string line; std::getline(in, line);) {
    auto j = nlohmann::json::parse(line);
    if (j["section"] == "counts") counts = j;
  }
  // Post-mask intention count, tallied from the transcripts directly.
  const auto ids = IntentionCatalog::builtin().impactful_ids();
  const std::set<std::string> keep(ids.begin(), ids.end());
  int masked = 0, turns = 0;
  for (const auto& t : TranscriptStore(games).load_all()) {
    turns += static_cast<int>(t.of_kind(EventKind::Speech).size());
    for (const GameEvent* e : t.of_kind(EventKind::IntentRevised)) {
      for (const auto& id : e->payload.at("ids")) masked += keep.count(id.get<std::string>());
    }
  }
  const int sel = counts.value("selection_records", -1);
  const int pairs = counts.value("evaluated_pairs", -1);
  const int following = counts.value("following_records", -1);
  const bool ok = counts.value("games", 0) == 40 && following == 2 * pairs && sel == masked &&
                  counts.value("turns", -1) == turns && secs < kEndToEndBudgetSeconds;
  return {ok, "40 mock games + eval in " + fmt(secs) + " s (budget " +
                  fmt(kEndToEndBudgetSeconds, 0) + " s); following " + std::to_string(following) +
                  " = 2 x " + std::to_string(pairs) + " pairs; selection " + std::to_string(sel) +
                  " = post-mask " + std::to_string(masked)};
}

// 6. Game-performance table on the scripted suite.
Outcome performance() {
  const auto got = game_performance(oracle::performance_suite());
  const auto want = oracle::performance_expected();
  return {got == want, "10-game suite, 7 metrics x 2 sides " +
                           std::string(got == want ? "exact (N/A cells included)" : "differ")};
}

// 7. Parse robustness on malformed completions.
Outcome robustness() {
  const auto run =
      test::run_malformed(test::read_file(test::fixture("malformed_completions.jsonl")), 77);
  const bool ok = run.replies == 30 && run.aborted == 0 && run.leftover == 0 &&
                  run.fallbacks == run.expected_fallbacks && run.invalid_lists == 0;
  return {ok, std::to_string(run.replies) + " malformed replies over " +
                  std::to_string(run.games) + " games; aborted " + std::to_string(run.aborted) +
                  "; FallbackUsed " + std::to_string(run.fallbacks) + "/" +
                  std::to_string(run.expected_fallbacks) + "; invalid intention lists " +
                  std::to_string(run.invalid_lists) + "/" + std::to_string(run.intention_lists)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"rules engine property suite", rules_suite},
      {"metric oracles", metric_oracles},
      {"impactful-intention discovery", impactful},
      {"structured-context goldens and visibility", exporters},
      {"end-to-end mock batch", end_to_end},
      {"game-performance table", performance},
      {"agent-harness parse robustness", robustness},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << name << ": " << o.detail
              << std::endl;
  }
  return failed ? 1 : 0;
}
