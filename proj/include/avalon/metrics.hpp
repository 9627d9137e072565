#pragma once

// Evaluation metrics. Everything here is a pure function of its inputs.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "avalon/transcript.hpp"

namespace avalon {

class MetricError : public std::runtime_error {
 public:
  enum class Code { EmptyInput, EmptyGold, InsufficientOverlap, NoRecordsForScope, BadValue };
  MetricError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

// Share of 1s in a list of 0/1 judgments. Throws EmptyInput / BadValue.
double selection_accuracy(const std::vector<int>& judgments);

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Throws EmptyGold when gold is empty.
F1Score set_f1(const std::set<std::string>& predicted, const std::set<std::string>& gold);

enum class F1Average { Macro, Micro };

struct F1Instance {
  std::vector<std::string> predicted;
  std::vector<std::string> gold;
  int round = 0;
};

// Macro: mean of per-instance F1. Micro: F1 of pooled true positives,
// predictions and gold labels. Throws EmptyInput.
double corpus_f1(const std::vector<F1Instance>& instances, F1Average average = F1Average::Macro);

// Mean per-instance F1 keyed by round; rounds without data are absent.
std::map<int, double> round_wise_tom(const std::vector<F1Instance>& guesses);

// Maps raw ratings to categories before agreement is computed.
struct Grouping {
  std::string name;
  std::function<int(int)> category;

  static Grouping identity();
  // 1-3 -> 0, 4-5 -> 1.
  static Grouping following();
};

// Two-rater chance-corrected agreement over paired category labels.
// nullopt when expected agreement is 1 (both raters use one category).
std::optional<double> cohen_kappa(const std::vector<int>& a, const std::vector<int>& b);

struct PairKappa {
  std::string a;
  std::string b;
  int shared_items = 0;
  std::optional<double> kappa;  // nullopt: degenerate marginals, pair excluded
};

struct KappaSummary {
  std::vector<PairKappa> pairs;
  std::optional<double> mean;
  std::optional<double> sd;  // sample standard deviation, needs two usable pairs
  int excluded = 0;
};

using RatingsByAnnotator = std::map<std::string, std::map<std::string, int>>;

// Kappa for every annotator pair over the items both rated, after grouping.
// Throws InsufficientOverlap if no pair shares an item. min_shared skips
// pairs with fewer shared items.
KappaSummary pairwise_kappa(const RatingsByAnnotator& ratings, const Grouping& grouping,
                            int min_shared = 1);

// One side's selection of intentions in one round of one game.
struct RoundSelection {
  std::string game_id;
  int round = 0;
  Alignment side = Alignment::Loyal;
  std::vector<std::string> ids;
};

struct ImpactRule {
  double high = 0.7;
  double low = 0.3;
  int min_count = 2;
};

struct ImpactStat {
  std::string id;
  Alignment side = Alignment::Loyal;
  int selected = 0;
  int wins = 0;
  double p = 0.0;
  bool impactful = false;
};

struct ImpactResult {
  std::set<std::string> ids;
  std::vector<ImpactStat> stats;
};

using RoundWinners = std::map<std::pair<std::string, int>, Alignment>;

// p = P(side wins the round | side selected the intention). An id is
// impactful if for some side p > high or p < low with at least min_count
// selections. Selections in rounds without a known winner are ignored.
ImpactResult discover_impactful(const std::vector<RoundSelection>& selections,
                                const RoundWinners& winners, const ImpactRule& rule = {});

// Revised selections of every discussion turn.
std::vector<RoundSelection> round_selections(const std::vector<Transcript>& games);
// Loyal wins a round iff its quest succeeded. A round that ended without a
// quest (rejection limit) counts for evil when unplayed_as_evil is set and
// is left out otherwise.
RoundWinners round_winners(const std::vector<Transcript>& games, bool unplayed_as_evil = true);

// Rates per side; nullopt renders as N/A.
struct SideRates {
  std::optional<double> loyal;
  std::optional<double> evil;

  bool operator==(const SideRates&) const = default;
};

struct GamePerformance {
  SideRates win_rate;
  SideRates quest_win_rate;
  SideRates quest_engagement_rate;
  SideRates team_selection_accuracy;
  SideRates failure_vote_rate;
  SideRates proposal_change_rate;
  SideRates merlin_assassination_rate;
  int games = 0;
  int quests = 0;

  bool operator==(const GamePerformance&) const = default;
};

// Only finished games (with a GameEnd event) are counted.
GamePerformance game_performance(const std::vector<Transcript>& games);

// --- correlation between intention scores and outcomes -------------------

struct RawScore {
  std::string game_id;
  int round = 0;
  Seat seat = kNoSeat;
  Alignment side = Alignment::Loyal;
  int value = 0;
};

struct Threshold {
  enum class Mode { Binary, AtLeast, Exactly };
  Mode mode = Mode::Binary;
  int cut = 1;

  static Threshold binary() { return {Mode::Binary, 1}; }
  static Threshold at_least(int k) { return {Mode::AtLeast, k}; }
  static Threshold exactly(int k) { return {Mode::Exactly, k}; }
};

// A 0/1 score. Only binarize() creates these, so correlation always sees
// binarized values.
class BinaryScore {
 public:
  const std::string& game_id() const { return game_id_; }
  int round() const { return round_; }
  Seat seat() const { return seat_; }
  Alignment side() const { return side_; }
  int bit() const { return bit_; }

 private:
  friend std::vector<BinaryScore> binarize(const std::vector<RawScore>&, Threshold);
  BinaryScore() = default;

  std::string game_id_;
  int round_ = 0;
  Seat seat_ = kNoSeat;
  Alignment side_ = Alignment::Loyal;
  int bit_ = 0;
};

// Binary mode requires values in {0,1} (BadValue otherwise).
std::vector<BinaryScore> binarize(const std::vector<RawScore>& scores, Threshold threshold);

enum class CorrelationScope { Game, Quest };
enum class OutcomeFilter { LoyalWon, LoyalLost, QuestSuccess, QuestFail };
std::string_view to_string(CorrelationScope s);
std::string_view to_string(OutcomeFilter f);

struct CorrelationCell {
  CorrelationScope scope = CorrelationScope::Game;
  OutcomeFilter filter = OutcomeFilter::LoyalWon;
  int units = 0;
  double evil_better = 0.0;
  double equal = 0.0;
  double loyal_better = 0.0;
};

// Per game (or per quest) r_side = sum of the side's bits / teammates
// (2 evil, 3 loyal); units are split by outcome and classified by
// comparing r_evil with r_loyal. Units are the games (or quests) that have
// at least one score and a known outcome. Throws NoRecordsForScope when
// there are none.
std::vector<CorrelationCell> correlation_analysis(
    const std::vector<BinaryScore>& scores, CorrelationScope scope,
    const std::map<std::string, Alignment>& game_winners, const RoundWinners& quest_winners);

// Game winners from GameEnd events.
std::map<std::string, Alignment> game_winners(const std::vector<Transcript>& games);

}  // namespace avalon
