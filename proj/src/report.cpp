#include "avalon/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "avalon/context.hpp"
#include "avalon/parse.hpp"
#include "avalon/prompts.hpp"

namespace avalon {

using nlohmann::json;

namespace {

bool is_likert(TaskKind k) {
  return k == TaskKind::FollowingThinkingLikert || k == TaskKind::FollowingSpeakingLikert;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string pct(const std::optional<double>& v) {
  if (!v) return "N/A";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * *v);
  return buf;
}

std::string fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}

MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd m;
  m.n = static_cast<int>(xs.size());
  if (xs.empty()) return m;
  double sum = 0;
  for (double x : xs) sum += x;
  m.mean = sum / xs.size();
  if (xs.size() >= 2) {
    double ss = 0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / (xs.size() - 1));
  }
  return m;
}

json subject_to_json(const TaskSubject& s) {
  json j = {{"game_id", s.game_id}, {"round", s.round}, {"attempt", s.attempt},
            {"player", player_name(s.player)}};
  if (s.observer != kNoSeat) j["observer"] = player_name(s.observer);
  return j;
}

TaskSubject subject_of(const json& j) {
  TaskSubject s;
  s.game_id = j.at("game_id").get<std::string>();
  s.round = j.at("round").get<int>();
  s.attempt = j.at("attempt").get<int>();
  s.player = parse_player_name(j.at("player").get<std::string>()).value_or(kNoSeat);
  if (j.contains("observer")) {
    s.observer = parse_player_name(j.at("observer").get<std::string>()).value_or(kNoSeat);
  }
  return s;
}

// (game, round, attempt, player, intention) identifying one judged item
// regardless of which bundle copy it came from.
using ItemKey = std::tuple<std::string, int, int, Seat, std::string>;

ItemKey item_key(const TaskSubject& s) {
  return {s.game_id, s.round, s.attempt, s.player, s.intention};
}

std::vector<F1Instance> instances_of(const std::vector<ModelPrediction>& ps) {
  std::vector<F1Instance> out;
  for (const auto& p : ps) {
    if (!p.gold.empty()) out.push_back({p.predicted, p.gold, p.subject.round});
  }
  return out;
}

json performance_rows(const GamePerformance& g) {
  return json::array({
      json::array({"Win Rate", opt(g.win_rate.loyal), opt(g.win_rate.evil)}),
      json::array({"Quest Win Rate", opt(g.quest_win_rate.loyal), opt(g.quest_win_rate.evil)}),
      json::array({"Quest Engagement Rate", opt(g.quest_engagement_rate.loyal),
                   opt(g.quest_engagement_rate.evil)}),
      json::array({"Team Selection Accuracy", opt(g.team_selection_accuracy.loyal),
                   opt(g.team_selection_accuracy.evil)}),
      json::array({"Failure Vote Rate", opt(g.failure_vote_rate.loyal),
                   opt(g.failure_vote_rate.evil)}),
      json::array({"Team Proposal Change Rate", opt(g.proposal_change_rate.loyal),
                   opt(g.proposal_change_rate.evil)}),
      json::array({"Merlin Assassination Rate", opt(g.merlin_assassination_rate.loyal),
                   opt(g.merlin_assassination_rate.evil)}),
  });
}

}  // namespace

std::vector<std::string> revised_ids(const Transcript& t, Seat seat, int round, int attempt) {
  const GameEvent* e = t.find(EventKind::IntentRevised, [&](const GameEvent& e) {
    return e.actor == seat && e.round == round && e.attempt == attempt;
  });
  if (!e) return {};
  return e->payload.at("ids").get<std::vector<std::string>>();
}

json to_json(const ModelPrediction& p) {
  return {{"model", p.model},         {"source", p.source},   {"kind", to_string(p.kind)},
          {"subject", subject_to_json(p.subject)}, {"predicted", p.predicted},
          {"gold", p.gold},           {"parsed", p.parsed}};
}

ModelPrediction prediction_from_json(const json& j) {
  ModelPrediction p;
  p.model = j.at("model").get<std::string>();
  p.source = j.at("source").get<std::string>();
  p.kind = task_kind_from_string(j.at("kind").get<std::string>());
  p.subject = subject_of(j.at("subject"));
  p.predicted = j.at("predicted").get<std::vector<std::string>>();
  p.gold = j.at("gold").get<std::vector<std::string>>();
  p.parsed = j.value("parsed", true);
  return p;
}

std::vector<ModelPrediction> run_predictions(const GameSource& source, ChatBackend& backend,
                                             const IntentionCatalog& catalog,
                                             const PredictionOptions& options) {
  const PromptLibrary& prompts = PromptLibrary::builtin();
  std::vector<ModelPrediction> out;
  for (const Transcript& t : source.games) {
    const RoleAssignment roles = t.roles();
    auto ask = [&](TaskKind kind, Seat asker, const ExportedContext& ex, TaskSubject subject) {
      const PromptName step =
          kind == TaskKind::SummarizationChoice ? PromptName::IntentSummarize : PromptName::IntentGuess;
      ChatRequest req;
      req.prompt = step;
      req.seat = asker;
      req.model = options.model;
      req.temperature = options.temperature;
      req.messages = {
          {"system", prompts.get(PromptName::System)
                         .render({{"name", player_name(asker)},
                                  {"role", std::string(to_string(roles[asker].name))},
                                  {"role_details", role_details(roles, asker)}})},
          {"user", prompts.get(step).render({{"context", ex.text}})}};
      ModelPrediction p{options.model, source.label, kind, std::move(subject), {}, ex.gold, false};
      for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        const std::string reply = backend.complete(req).text;
        auto parsed = parse_choice(reply, ex.options);
        if (parsed) {
          p.predicted = *parsed.value;
          p.parsed = true;
          break;
        }
        req.messages.push_back({"assistant", reply});
        req.messages.push_back({"user", "Your reply could not be used: " + parsed.error +
                                             ". Reply again and end with the fenced answer "
                                             "block exactly as instructed."});
      }
      out.push_back(std::move(p));
    };
    for (const SpeechRef& s : speeches(t)) {
      TaskSubject subject{t.game_id(), s.round, s.attempt, s.seat, kNoSeat, ""};
      if (options.summarization) {
        ask(TaskKind::SummarizationChoice, s.seat,
            export_summarization_context(t, s.seat, s.round, catalog, s.attempt), subject);
      }
      if (options.guessing) {
        const Seat observer = (s.seat + 1) % kPlayers;
        subject.observer = observer;
        ask(TaskKind::GuessingChoice, observer,
            export_guessing_context(t, observer, s.seat, s.round, catalog, s.attempt), subject);
      }
    }
  }
  return out;
}

EvalReport evaluate(const std::vector<GameSource>& sources,
                    const std::vector<AnnotationRecord>& records,
                    const std::vector<ModelPrediction>& predictions,
                    const IntentionCatalog& catalog, const EvalOptions& options) {
  EvalReport r;
  std::map<std::string, const Transcript*> by_id;
  std::map<std::string, std::string> source_of;
  std::vector<Transcript> all;

  TaskOptions to;
  to.impactful = options.impactful;
  for (const auto& src : sources) {
    Counts c;
    c.games = static_cast<int>(src.games.size());
    for (const Transcript& t : src.games) {
      by_id[t.game_id()] = &t;
      source_of[t.game_id()] = src.label;
      all.push_back(t);
      c.turns += static_cast<int>(speeches(t).size());
      for (const auto& task : game_tasks(t, catalog, to)) {
        switch (task.kind) {
          case TaskKind::SelectionBinary: ++c.selection_records; ++c.evaluated_pairs; break;
          case TaskKind::FollowingThinkingLikert:
          case TaskKind::FollowingSpeakingLikert: ++c.following_records; break;
          case TaskKind::SummarizationChoice: ++c.summarization_questions; break;
          case TaskKind::GuessingChoice: ++c.guessing_questions; break;
        }
      }
    }
    r.counts[src.label] = c;
    if (!src.games.empty()) {
      GamePerformance g = game_performance(src.games);
      if (g.games > 0) r.performance[src.label] = g;
    }
  }

  // --- human judgments ---------------------------------------------------
  const auto latest = latest_records(records);
  std::vector<int> selection;
  std::array<int, 5> think{}, speak{};
  std::map<TaskKind, RatingsByAnnotator> ratings;
  for (const auto& rec : latest) {
    if (rec.kind == TaskKind::SelectionBinary) selection.push_back(rec.value.get<int>());
    if (rec.kind == TaskKind::FollowingThinkingLikert) ++think[rec.value.get<int>() - 1];
    if (rec.kind == TaskKind::FollowingSpeakingLikert) ++speak[rec.value.get<int>() - 1];
    if (rec.kind == TaskKind::SelectionBinary || is_likert(rec.kind)) {
      ratings[rec.kind][rec.annotator_id][rec.task_id] = rec.value.get<int>();
    }
  }
  if (!selection.empty()) r.selection_accuracy = selection_accuracy(selection);
  auto shares = [](const std::array<int, 5>& h) -> std::optional<std::array<double, 5>> {
    int n = 0;
    for (int x : h) n += x;
    if (n == 0) return std::nullopt;
    std::array<double, 5> out{};
    for (int i = 0; i < 5; ++i) out[i] = static_cast<double>(h[i]) / n;
    return out;
  };
  r.following_thinking = shares(think);
  r.following_speaking = shares(speak);

  for (const auto& [kind, by_annotator] : ratings) {
    std::vector<Grouping> groupings = {Grouping::identity()};
    if (is_likert(kind)) groupings.push_back(Grouping::following());
    for (const auto& g : groupings) {
      try {
        r.kappa.push_back({kind, g.name, pairwise_kappa(by_annotator, g, options.kappa_min_shared)});
      } catch (const MetricError&) {
      }
    }
  }

  // Human F1: per annotator, then mean and sd across annotators.
  std::map<std::pair<TaskKind, std::string>, std::map<std::string, std::vector<F1Instance>>>
      human;
  for (const auto& rec : latest) {
    if (rec.kind != TaskKind::SummarizationChoice && rec.kind != TaskKind::GuessingChoice) continue;
    auto it = by_id.find(rec.subject.game_id);
    if (it == by_id.end()) continue;
    auto gold = revised_ids(*it->second, rec.subject.player, rec.subject.round, rec.subject.attempt);
    if (gold.empty()) continue;
    human[{rec.kind, source_of[rec.subject.game_id]}][rec.annotator_id].push_back(
        {rec.value.get<std::vector<std::string>>(), gold, rec.subject.round});
  }
  for (const auto& [key, per_annotator] : human) {
    F1Row row{"Human", key.second, key.first, {}, {}, 0};
    std::vector<double> scores;
    std::vector<F1Instance> pooled;
    for (const auto& [a, inst] : per_annotator) {
      scores.push_back(corpus_f1(inst, options.average));
      pooled.insert(pooled.end(), inst.begin(), inst.end());
    }
    row.f1 = mean_sd(scores);
    row.by_round = round_wise_tom(pooled);
    r.f1.push_back(std::move(row));
  }

  // Model F1.
  std::map<std::tuple<std::string, std::string, TaskKind>, std::vector<ModelPrediction>> grouped;
  for (const auto& p : predictions) grouped[{p.model, p.source, p.kind}].push_back(p);
  for (const auto& [key, ps] : grouped) {
    const auto inst = instances_of(ps);
    if (inst.empty()) continue;
    F1Row row{std::get<0>(key), std::get<1>(key), std::get<2>(key), {}, {}, 0};
    row.f1.mean = corpus_f1(inst, options.average);
    row.f1.n = static_cast<int>(inst.size());
    row.by_round = round_wise_tom(inst);
    for (const auto& p : ps) row.unparsed += !p.parsed;
    r.f1.push_back(std::move(row));
  }

  // --- impactful intentions and game performance ---------------------------
  if (!all.empty()) {
    r.impactful = discover_impactful(round_selections(all), round_winners(all), options.rule);
  }

  // --- correlation ----------------------------------------------------------
  // One judgment per item: the lexicographically first annotator's.
  std::map<ItemKey, int> sel, follow;
  std::map<ItemKey, std::string> sel_by, follow_by;
  for (const auto& rec : latest) {
    if (rec.kind == TaskKind::SelectionBinary) {
      auto k = item_key(rec.subject);
      if (!sel.count(k) || rec.annotator_id < sel_by[k]) {
        sel[k] = rec.value.get<int>();
        sel_by[k] = rec.annotator_id;
      }
    } else if (rec.kind == TaskKind::FollowingSpeakingLikert) {
      auto k = item_key(rec.subject);
      if (!follow.count(k) || rec.annotator_id < follow_by[k]) {
        follow[k] = rec.value.get<int>();
        follow_by[k] = rec.annotator_id;
      }
    }
  }
  auto raw = [&](const ItemKey& k, int value) -> std::optional<RawScore> {
    auto it = by_id.find(std::get<0>(k));
    if (it == by_id.end()) return std::nullopt;
    const Seat seat = std::get<3>(k);
    return RawScore{std::get<0>(k), std::get<1>(k), seat,
                    alignment_of(it->second->roles()[seat].name), value};
  };
  // Selections count when the intention was also followed (score > 2);
  // following scores count for reasonable intentions only.
  std::vector<RawScore> sel_scores, follow_scores;
  for (const auto& [k, v] : sel) {
    auto f = follow.find(k);
    if (!follow.empty() && (f == follow.end() || f->second <= 2)) continue;
    if (auto s = raw(k, v)) sel_scores.push_back(*s);
  }
  for (const auto& [k, v] : follow) {
    auto s_it = sel.find(k);
    if (!sel.empty() && (s_it == sel.end() || s_it->second != 1)) continue;
    if (auto s = raw(k, v)) follow_scores.push_back(*s);
  }
  const auto gw = game_winners(all);
  const auto qw = round_winners(all, false);
  auto correlate = [&](const std::string& name, const std::vector<BinaryScore>& scores) {
    if (scores.empty()) return;
    for (auto scope : {CorrelationScope::Game, CorrelationScope::Quest}) {
      try {
        for (const auto& cell : correlation_analysis(scores, scope, gw, qw)) {
          r.correlation.push_back({name, cell});
        }
      } catch (const MetricError&) {
      }
    }
  };
  correlate("selection", binarize(sel_scores, Threshold::binary()));
  correlate("following>=3", binarize(follow_scores, Threshold::at_least(3)));
  correlate("following=3", binarize(follow_scores, Threshold::exactly(3)));
  return r;
}

std::string EvalReport::to_jsonl() const {
  std::ostringstream out;
  auto line = [&](json j) { out << j.dump() << '\n'; };
  for (const auto& [src, c] : counts) {
    line({{"section", "counts"},
          {"source", src},
          {"games", c.games},
          {"turns", c.turns},
          {"selection_records", c.selection_records},
          {"evaluated_pairs", c.evaluated_pairs},
          {"following_records", c.following_records},
          {"summarization_questions", c.summarization_questions},
          {"guessing_questions", c.guessing_questions}});
  }
  line({{"section", "selection_accuracy"}, {"value", opt(selection_accuracy)}});
  for (const auto& [name, h] : {std::pair{"thinking", following_thinking},
                                std::pair{"speaking", following_speaking}}) {
    line({{"section", "following"}, {"series", name}, {"shares", h ? json(*h) : json(nullptr)}});
  }
  for (const auto& row : f1) {
    json by_round = json::object();
    for (const auto& [k, v] : row.by_round) by_round[std::to_string(k)] = v;
    line({{"section", "f1"},
          {"who", row.who},
          {"source", row.source},
          {"kind", to_string(row.kind)},
          {"mean", row.f1.mean},
          {"sd", opt(row.f1.sd)},
          {"n", row.f1.n},
          {"unparsed", row.unparsed},
          {"by_round", by_round}});
  }
  for (const auto& k : kappa) {
    json pairs = json::array();
    for (const auto& p : k.summary.pairs) {
      pairs.push_back({{"a", p.a}, {"b", p.b}, {"shared_items", p.shared_items},
                       {"kappa", opt(p.kappa)}});
    }
    line({{"section", "kappa"},
          {"kind", to_string(k.kind)},
          {"grouping", k.grouping},
          {"mean", opt(k.summary.mean)},
          {"sd", opt(k.summary.sd)},
          {"excluded", k.summary.excluded},
          {"pairs", pairs}});
  }
  json stats = json::array();
  for (const auto& s : impactful.stats) {
    stats.push_back({{"id", s.id}, {"side", to_string(s.side)}, {"selected", s.selected},
                     {"wins", s.wins}, {"p", s.p}, {"impactful", s.impactful}});
  }
  line({{"section", "impactful"}, {"ids", impactful.ids}, {"stats", stats}});
  for (const auto& [src, g] : performance) {
    for (const auto& row : performance_rows(g)) {
      line({{"section", "performance"},
            {"source", src},
            {"metric", row[0]},
            {"loyal", row[1]},
            {"evil", row[2]},
            {"games", g.games},
            {"quests", g.quests}});
    }
  }
  for (const auto& c : correlation) {
    line({{"section", "correlation"},
          {"score", c.score},
          {"scope", to_string(c.cell.scope)},
          {"filter", to_string(c.cell.filter)},
          {"units", c.cell.units},
          {"evil_better", c.cell.evil_better},
          {"equal", c.cell.equal},
          {"loyal_better", c.cell.loyal_better}});
  }
  return out.str();
}

std::string EvalReport::to_table() const {
  std::ostringstream out;

  out << "Data statistics\n";
  out << pad("Source", 16) << pad("Games", 7) << pad("Turns", 7) << pad("Selection", 11)
      << pad("Pairs", 7) << pad("Following", 11) << pad("Summ. Qs", 10) << "Guess. Qs\n";
  for (const auto& [src, c] : counts) {
    out << pad(src, 16) << pad(std::to_string(c.games), 7) << pad(std::to_string(c.turns), 7)
        << pad(std::to_string(c.selection_records), 11) << pad(std::to_string(c.evaluated_pairs), 7)
        << pad(std::to_string(c.following_records), 11)
        << pad(std::to_string(c.summarization_questions), 10) << c.guessing_questions << "\n";
  }

  out << "\nIntention selection and following\n";
  out << "Selection accuracy: " << pct(selection_accuracy) << "\n";
  out << pad("Score", 10);
  for (int s = 1; s <= 5; ++s) out << pad(std::to_string(s), 8);
  out << "\n";
  for (const auto& [name, h] : {std::pair{"Thinking", following_thinking},
                                std::pair{"Speaking", following_speaking}}) {
    out << pad(name, 10);
    for (int s = 0; s < 5; ++s) out << pad(h ? pct((*h)[s]) : "N/A", 8);
    out << "\n";
  }

  for (auto kind : {TaskKind::SummarizationChoice, TaskKind::GuessingChoice}) {
    out << "\n" << (kind == TaskKind::SummarizationChoice ? "Intention summarization F1"
                                                          : "Intention guessing F1")
        << "\n";
    out << pad(kind == TaskKind::SummarizationChoice ? "Summarizer" : "Guesser", 22)
        << pad("Source", 16) << pad("F1", 16) << "N\n";
    bool any = false;
    for (const auto& row : f1) {
      if (row.kind != kind) continue;
      any = true;
      std::string v = fixed(100.0 * row.f1.mean);
      if (row.who == "Human") v += row.f1.sd ? " ± " + fixed(100.0 * *row.f1.sd) : " ± N/A";
      out << pad(row.who, 22) << pad(row.source, 16) << pad(v, 16) << row.f1.n << "\n";
    }
    if (!any) out << "(no data)\n";
    if (kind == TaskKind::GuessingChoice && any) {
      out << "\nGuessing F1 by round\n";
      for (const auto& row : f1) {
        if (row.kind != kind) continue;
        out << pad(row.who + " / " + row.source, 38);
        for (const auto& [k, v] : row.by_round) out << "R" << k << " " << fixed(100.0 * v) << "  ";
        out << "\n";
      }
    }
  }

  out << "\nInter-annotator agreement (pairwise kappa)\n";
  if (kappa.empty()) out << "(no shared items)\n";
  for (const auto& k : kappa) {
    std::string v = k.summary.mean ? fixed(*k.summary.mean) : "N/A";
    v += " ± " + (k.summary.sd ? fixed(*k.summary.sd) : std::string("N/A"));
    out << pad(std::string(to_string(k.kind)), 28) << pad(k.grouping, 12) << pad(v, 16)
        << "pairs " << k.summary.pairs.size() << ", excluded " << k.summary.excluded << "\n";
  }

  out << "\nImpactful intentions (" << impactful.ids.size() << ")\n";
  for (const auto& id : impactful.ids) out << "  " << id << "\n";

  for (const auto& [src, g] : performance) {
    out << "\nGame performance: " << src << " (" << g.games << " games, " << g.quests
        << " quests)\n";
    out << pad("Metric", 28) << pad("Loyal", 10) << "Evil\n";
    for (const auto& row : performance_rows(g)) {
      auto cell = [](const json& v) {
        return v.is_null() ? std::string("N/A") : pct(v.get<double>());
      };
      out << pad(row[0].get<std::string>(), 28) << pad(cell(row[1]), 10) << cell(row[2]) << "\n";
    }
  }

  out << "\nIntention scores vs outcome\n";
  if (correlation.empty()) out << "(no annotation records)\n";
  for (const auto& c : correlation) {
    out << pad(c.score, 14) << pad(std::string(to_string(c.cell.scope)), 7)
        << pad(std::string(to_string(c.cell.filter)), 15) << pad("n=" + std::to_string(c.cell.units), 7)
        << "evil better " << pct(c.cell.evil_better) << ", equal " << pct(c.cell.equal)
        << ", loyal better " << pct(c.cell.loyal_better) << "\n";
  }
  return out.str();
}

}  // namespace avalon
