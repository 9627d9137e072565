#include "avalon/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace avalon {

namespace {

std::optional<double> ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

double selection_accuracy(const std::vector<int>& judgments) {
  if (judgments.empty()) throw MetricError(MetricError::Code::EmptyInput, "no judgments");
  long ones = 0;
  for (int j : judgments) {
    if (j != 0 && j != 1) {
      throw MetricError(MetricError::Code::BadValue, "judgment must be 0 or 1, got " + std::to_string(j));
    }
    ones += j;
  }
  return static_cast<double>(ones) / static_cast<double>(judgments.size());
}

F1Score set_f1(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
  if (gold.empty()) throw MetricError(MetricError::Code::EmptyGold, "gold set is empty");
  std::size_t hit = 0;
  for (const auto& p : predicted) hit += gold.count(p);
  F1Score s;
  s.precision = predicted.empty() ? 0.0 : static_cast<double>(hit) / predicted.size();
  s.recall = static_cast<double>(hit) / gold.size();
  // Harmonic mean of P and R, as one division so the result is exact.
  s.f1 = hit == 0 ? 0.0 : static_cast<double>(2 * hit) / (predicted.size() + gold.size());
  return s;
}

double corpus_f1(const std::vector<F1Instance>& instances, F1Average average) {
  if (instances.empty()) throw MetricError(MetricError::Code::EmptyInput, "no F1 instances");
  if (average == F1Average::Macro) {
    double sum = 0.0;
    for (const auto& i : instances) sum += set_f1(as_set(i.predicted), as_set(i.gold)).f1;
    return sum / static_cast<double>(instances.size());
  }
  long hit = 0, npred = 0, ngold = 0;
  for (const auto& i : instances) {
    auto pred = as_set(i.predicted);
    auto gold = as_set(i.gold);
    if (gold.empty()) throw MetricError(MetricError::Code::EmptyGold, "gold set is empty");
    for (const auto& p : pred) hit += gold.count(p);
    npred += static_cast<long>(pred.size());
    ngold += static_cast<long>(gold.size());
  }
  return hit == 0 ? 0.0 : static_cast<double>(2 * hit) / static_cast<double>(npred + ngold);
}

std::map<int, double> round_wise_tom(const std::vector<F1Instance>& guesses) {
  std::map<int, std::vector<F1Instance>> by_round;
  for (const auto& g : guesses) by_round[g.round].push_back(g);
  std::map<int, double> out;
  for (const auto& [round, items] : by_round) out[round] = corpus_f1(items, F1Average::Macro);
  return out;
}

Grouping Grouping::identity() {
  return {"identity", [](int v) { return v; }};
}

Grouping Grouping::following() {
  return {"1-3/4-5", [](int v) { return v <= 3 ? 0 : 1; }};
}

std::optional<double> cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("rating lists differ in length");
  if (a.empty()) throw MetricError(MetricError::Code::EmptyInput, "no shared items");
  const long n = static_cast<long>(a.size());
  std::map<int, long> ca, cb;
  long agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    agree += a[i] == b[i];
  }
  // Work in counts: p_o = agree/n, p_e = chance/n^2.
  long chance = 0;
  for (const auto& [c, k] : ca) {
    auto it = cb.find(c);
    if (it != cb.end()) chance += k * it->second;
  }
  if (chance == n * n) return std::nullopt;
  return static_cast<double>(n * agree - chance) / static_cast<double>(n * n - chance);
}

KappaSummary pairwise_kappa(const RatingsByAnnotator& ratings, const Grouping& grouping,
                            int min_shared) {
  KappaSummary out;
  bool any_overlap = false;
  for (auto i = ratings.begin(); i != ratings.end(); ++i) {
    for (auto j = std::next(i); j != ratings.end(); ++j) {
      std::vector<int> a, b;
      for (const auto& [item, v] : i->second) {
        auto it = j->second.find(item);
        if (it == j->second.end()) continue;
        a.push_back(grouping.category(v));
        b.push_back(grouping.category(it->second));
      }
      if (a.empty()) continue;
      any_overlap = true;
      if (static_cast<int>(a.size()) < min_shared) continue;
      PairKappa p{i->first, j->first, static_cast<int>(a.size()), cohen_kappa(a, b)};
      if (!p.kappa) ++out.excluded;
      out.pairs.push_back(std::move(p));
    }
  }
  if (!any_overlap) {
    throw MetricError(MetricError::Code::InsufficientOverlap, "no annotator pair shares an item");
  }
  std::vector<double> ks;
  for (const auto& p : out.pairs) {
    if (p.kappa) ks.push_back(*p.kappa);
  }
  if (!ks.empty()) {
    double sum = 0;
    for (double k : ks) sum += k;
    out.mean = sum / ks.size();
    if (ks.size() >= 2) {
      double ss = 0;
      for (double k : ks) ss += (k - *out.mean) * (k - *out.mean);
      out.sd = std::sqrt(ss / (ks.size() - 1));
    }
  }
  return out;
}

ImpactResult discover_impactful(const std::vector<RoundSelection>& selections,
                                const RoundWinners& winners, const ImpactRule& rule) {
  std::map<std::pair<std::string, Alignment>, std::pair<int, int>> counts;
  for (const auto& s : selections) {
    auto w = winners.find({s.game_id, s.round});
    if (w == winners.end()) continue;
    for (const auto& id : s.ids) {
      auto& c = counts[{id, s.side}];
      ++c.first;
      c.second += w->second == s.side;
    }
  }
  ImpactResult out;
  for (const auto& [key, c] : counts) {
    ImpactStat st;
    st.id = key.first;
    st.side = key.second;
    st.selected = c.first;
    st.wins = c.second;
    st.p = static_cast<double>(c.second) / c.first;
    st.impactful = st.selected >= rule.min_count && (st.p > rule.high || st.p < rule.low);
    if (st.impactful) out.ids.insert(st.id);
    out.stats.push_back(std::move(st));
  }
  return out;
}

std::vector<RoundSelection> round_selections(const std::vector<Transcript>& games) {
  std::vector<RoundSelection> out;
  for (const auto& t : games) {
    const RoleAssignment roles = t.roles();
    for (const GameEvent* e : t.of_kind(EventKind::IntentRevised)) {
      out.push_back({t.game_id(), e->round, roles[e->actor].alignment,
                     e->payload.at("ids").get<std::vector<std::string>>()});
    }
  }
  return out;
}

RoundWinners round_winners(const std::vector<Transcript>& games, bool unplayed_as_evil) {
  RoundWinners out;
  for (const auto& t : games) {
    std::set<int> rounds;
    for (const auto& e : t.events()) {
      if (e.round > 0 && e.kind != EventKind::RoleAssigned) rounds.insert(e.round);
    }
    for (const GameEvent* e : t.of_kind(EventKind::QuestResult)) {
      const bool ok = e->payload.at("outcome").get<std::string>() == "success";
      out[{t.game_id(), e->round}] = ok ? Alignment::Loyal : Alignment::Evil;
    }
    if (unplayed_as_evil) {
      for (int r : rounds) out.emplace(std::make_pair(t.game_id(), r), Alignment::Evil);
    }
  }
  return out;
}

GamePerformance game_performance(const std::vector<Transcript>& games) {
  GamePerformance gp;
  long loyal_wins = 0, quests = 0, successes = 0;
  std::map<RoleName, long> engaged;
  long led[2] = {0, 0}, correct[2] = {0, 0};
  long evil_on_team = 0, fail_votes = 0;
  long proposals[2] = {0, 0}, changed[2] = {0, 0};
  long assassinations = 0, hits = 0;

  auto idx = [](Alignment a) { return a == Alignment::Loyal ? 0 : 1; };

  for (const auto& t : games) {
    const GameEvent* end = t.find(EventKind::GameEnd, [](auto&) { return true; });
    if (!end) continue;
    ++gp.games;
    const RoleAssignment roles = t.roles();
    loyal_wins += end->payload.at("winner").get<std::string>() == "Loyal";

    // Leader of every (round, attempt), from the final team decision.
    std::map<std::pair<int, int>, Seat> leader;
    for (const auto& e : t.events()) {
      if (e.kind == EventKind::TeamProposed || e.kind == EventKind::TeamChanged) {
        leader[{e.round, e.attempt}] = e.actor;
      }
      if (e.kind == EventKind::TeamChanged) {
        const int side = idx(roles[e.actor].alignment);
        ++proposals[side];
        changed[side] += e.payload.at("changed").get<bool>();
      }
    }
    for (const GameEvent* e : t.of_kind(EventKind::QuestResult)) {
      ++quests;
      const auto team = e->payload.at("team").get<std::vector<Seat>>();
      successes += e->payload.at("outcome").get<std::string>() == "success";
      fail_votes += e->payload.at("fail_votes").get<int>();
      int evil = 0;
      for (Seat s : team) {
        ++engaged[roles[s].name];
        evil += roles[s].alignment == Alignment::Evil;
      }
      evil_on_team += evil;
      auto l = leader.find({e->round, e->attempt});
      if (l != leader.end()) {
        const Alignment side = roles[l->second].alignment;
        ++led[idx(side)];
        correct[idx(side)] += side == Alignment::Loyal ? evil == 0 : evil > 0;
      }
    }
    for (const GameEvent* e : t.of_kind(EventKind::Assassination)) {
      ++assassinations;
      hits += roles[e->payload.at("target").get<int>()].name == RoleName::Merlin;
    }
  }
  gp.quests = static_cast<int>(quests);
  if (gp.games > 0) {
    gp.win_rate = {ratio(loyal_wins, gp.games), ratio(gp.games - loyal_wins, gp.games)};
  }
  gp.quest_win_rate = {ratio(successes, quests), ratio(quests - successes, quests)};
  if (quests > 0) {
    auto avg = [&](std::initializer_list<RoleName> rs) {
      double sum = 0;
      for (RoleName r : rs) sum += static_cast<double>(engaged[r]) / quests;
      return sum / rs.size();
    };
    gp.quest_engagement_rate = {avg({RoleName::Merlin, RoleName::Percival, RoleName::Servant}),
                                avg({RoleName::Morgana, RoleName::Assassin})};
  }
  gp.team_selection_accuracy = {ratio(correct[0], led[0]), ratio(correct[1], led[1])};
  gp.failure_vote_rate = {std::nullopt, ratio(fail_votes, evil_on_team)};
  gp.proposal_change_rate = {ratio(changed[0], proposals[0]), ratio(changed[1], proposals[1])};
  gp.merlin_assassination_rate = {std::nullopt, ratio(hits, assassinations)};
  return gp;
}

std::vector<BinaryScore> binarize(const std::vector<RawScore>& scores, Threshold threshold) {
  std::vector<BinaryScore> out;
  out.reserve(scores.size());
  for (const auto& s : scores) {
    BinaryScore b;
    b.game_id_ = s.game_id;
    b.round_ = s.round;
    b.seat_ = s.seat;
    b.side_ = s.side;
    switch (threshold.mode) {
      case Threshold::Mode::Binary:
        if (s.value != 0 && s.value != 1) {
          throw MetricError(MetricError::Code::BadValue,
                            "binary score must be 0 or 1, got " + std::to_string(s.value));
        }
        b.bit_ = s.value;
        break;
      case Threshold::Mode::AtLeast: b.bit_ = s.value >= threshold.cut; break;
      case Threshold::Mode::Exactly: b.bit_ = s.value == threshold.cut; break;
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::string_view to_string(CorrelationScope s) {
  return s == CorrelationScope::Game ? "game" : "quest";
}

std::string_view to_string(OutcomeFilter f) {
  switch (f) {
    case OutcomeFilter::LoyalWon: return "loyal_won";
    case OutcomeFilter::LoyalLost: return "loyal_lost";
    case OutcomeFilter::QuestSuccess: return "quest_success";
    case OutcomeFilter::QuestFail: return "quest_fail";
  }
  return "?";
}

std::vector<CorrelationCell> correlation_analysis(
    const std::vector<BinaryScore>& scores, CorrelationScope scope,
    const std::map<std::string, Alignment>& game_winners, const RoundWinners& quest_winners) {
  // unit -> (sum of evil bits, sum of loyal bits)
  std::map<std::pair<std::string, int>, std::pair<long, long>> sums;
  for (const auto& s : scores) {
    const int round = scope == CorrelationScope::Game ? 0 : s.round();
    auto& u = sums[{s.game_id(), round}];
    (s.side() == Alignment::Evil ? u.first : u.second) += s.bit();
  }
  const bool game = scope == CorrelationScope::Game;
  CorrelationCell cells[2];
  cells[0].scope = cells[1].scope = scope;
  cells[0].filter = game ? OutcomeFilter::LoyalWon : OutcomeFilter::QuestSuccess;
  cells[1].filter = game ? OutcomeFilter::LoyalLost : OutcomeFilter::QuestFail;
  long tally[2][3] = {};
  for (const auto& [unit, s] : sums) {
    std::optional<Alignment> outcome;
    if (game) {
      auto it = game_winners.find(unit.first);
      if (it != game_winners.end()) outcome = it->second;
    } else {
      auto it = quest_winners.find(unit);
      if (it != quest_winners.end()) outcome = it->second;
    }
    if (!outcome) continue;
    const int cell = *outcome == Alignment::Loyal ? 0 : 1;
    // r_evil = e/2 vs r_loyal = l/3, compared exactly as 3e vs 2l.
    const long lhs = 3 * s.first, rhs = 2 * s.second;
    ++tally[cell][lhs > rhs ? 0 : lhs == rhs ? 1 : 2];
  }
  const long total = tally[0][0] + tally[0][1] + tally[0][2] + tally[1][0] + tally[1][1] + tally[1][2];
  if (total == 0) {
    throw MetricError(MetricError::Code::NoRecordsForScope,
                      std::string("no scored ") + std::string(to_string(scope)) + " with an outcome");
  }
  for (int c = 0; c < 2; ++c) {
    const long n = tally[c][0] + tally[c][1] + tally[c][2];
    cells[c].units = static_cast<int>(n);
    if (n == 0) continue;
    cells[c].evil_better = static_cast<double>(tally[c][0]) / n;
    cells[c].equal = static_cast<double>(tally[c][1]) / n;
    cells[c].loyal_better = static_cast<double>(tally[c][2]) / n;
  }
  return {cells[0], cells[1]};
}

std::map<std::string, Alignment> game_winners(const std::vector<Transcript>& games) {
  std::map<std::string, Alignment> out;
  for (const auto& t : games) {
    if (auto w = t.winner()) out[t.game_id()] = *w;
  }
  return out;
}

}  // namespace avalon
