#include "avalon/annotation.hpp"

#include <algorithm>
#include <chrono>
#include <tuple>

#include "avalon/context.hpp"
#include "avalon/metrics.hpp"
#include "avalon/rng.hpp"

namespace avalon {

using nlohmann::json;

namespace {

constexpr std::pair<TaskKind, std::string_view> kKindNames[] = {
    {TaskKind::SelectionBinary, "selection_binary"},
    {TaskKind::FollowingThinkingLikert, "following_thinking_likert"},
    {TaskKind::FollowingSpeakingLikert, "following_speaking_likert"},
    {TaskKind::SummarizationChoice, "summarization_choice"},
    {TaskKind::GuessingChoice, "guessing_choice"},
};

json subject_json(const TaskSubject& s) {
  json j = {{"game_id", s.game_id}, {"round", s.round}, {"attempt", s.attempt},
            {"player", s.player == kNoSeat ? "" : player_name(s.player)}};
  if (s.observer != kNoSeat) j["observer"] = player_name(s.observer);
  if (!s.intention.empty()) j["intention"] = s.intention;
  return j;
}

Seat seat_from(const json& j, const char* key) {
  if (!j.contains(key)) return kNoSeat;
  auto s = parse_player_name(j.at(key).get<std::string>());
  return s ? *s : kNoSeat;
}

TaskSubject subject_from(const json& j) {
  TaskSubject s;
  s.game_id = j.at("game_id").get<std::string>();
  s.round = j.at("round").get<int>();
  s.attempt = j.at("attempt").get<int>();
  s.player = seat_from(j, "player");
  s.observer = seat_from(j, "observer");
  s.intention = j.value("intention", "");
  return s;
}

std::string turn_key(const std::string& game, int round, int attempt, Seat seat) {
  return game + ":r" + std::to_string(round) + "a" + std::to_string(attempt) + ":" +
         player_name(seat);
}

const GameEvent* turn_event(const Transcript& t, EventKind k, const GameEvent& speech) {
  return t.find(k, [&](const GameEvent& e) {
    return e.actor == speech.actor && e.round == speech.round && e.attempt == speech.attempt;
  });
}

bool is_likert(TaskKind k) {
  return k == TaskKind::FollowingThinkingLikert || k == TaskKind::FollowingSpeakingLikert;
}

[[noreturn]] void bad_domain(const std::string& why) {
  throw AnnotationError(AnnotationError::Code::BadDomain, why);
}

}  // namespace

std::string_view to_string(TaskKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

TaskKind task_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  throw std::invalid_argument("unknown task kind: " + std::string(s));
}

std::string rubric_for(TaskKind k) {
  switch (k) {
    case TaskKind::SelectionBinary: return "rubric/selection.md";
    case TaskKind::FollowingThinkingLikert:
    case TaskKind::FollowingSpeakingLikert: return "rubric/following.md";
    case TaskKind::SummarizationChoice: return "rubric/summarization.md";
    case TaskKind::GuessingChoice: return "rubric/guessing.md";
  }
  return {};
}

std::string_view to_string(AnnotationError::Code c) {
  switch (c) {
    case AnnotationError::Code::TooFewGames: return "too_few_games";
    case AnnotationError::Code::UnknownAnnotator: return "unknown_annotator";
    case AnnotationError::Code::UnknownTask: return "unknown_task";
    case AnnotationError::Code::BadDomain: return "bad_domain";
    case AnnotationError::Code::LeaseLost: return "lease_lost";
  }
  return "?";
}

// --- tasks and records ------------------------------------------------------

json AnnotationTask::to_json(bool with_gold) const {
  json opts = json::array();
  for (std::size_t i = 0; i < options.ids.size(); ++i) {
    opts.push_back({{"number", i + 1}, {"id", options.ids[i]}});
  }
  json j = {{"task_id", task_id},
            {"kind", to_string(kind)},
            {"subject", subject_json(subject)},
            {"context", context},
            {"options", opts},
            {"options_text", options.text},
            {"rubric", rubric_for(kind)}};
  if (with_gold) j["gold"] = gold;
  return j;
}

AnnotationTask AnnotationTask::from_json(const json& j) {
  AnnotationTask t;
  t.task_id = j.at("task_id").get<std::string>();
  t.kind = task_kind_from_string(j.at("kind").get<std::string>());
  t.subject = subject_from(j.at("subject"));
  t.context = j.at("context").get<std::string>();
  for (const auto& o : j.at("options")) t.options.ids.push_back(o.at("id").get<std::string>());
  t.options.text = j.value("options_text", "");
  if (j.contains("gold")) t.gold = j.at("gold").get<std::vector<std::string>>();
  return t;
}

json AnnotationRecord::to_json() const {
  return {{"task_id", task_id},   {"bundle_id", bundle_id},       {"kind", to_string(kind)},
          {"subject", subject_json(subject)}, {"annotator_id", annotator_id},
          {"value", value},       {"note", note},                 {"ts", timestamp},
          {"revision", revision}};
}

AnnotationRecord AnnotationRecord::from_json(const json& j) {
  AnnotationRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.bundle_id = j.at("bundle_id").get<std::string>();
  r.kind = task_kind_from_string(j.at("kind").get<std::string>());
  r.subject = subject_from(j.at("subject"));
  r.annotator_id = j.at("annotator_id").get<std::string>();
  r.value = j.at("value");
  r.note = j.value("note", "");
  r.timestamp = j.value("ts", std::int64_t{0});
  r.revision = j.value("revision", 1);
  return r;
}

std::vector<AnnotationRecord> load_records(const std::filesystem::path& path) {
  std::vector<AnnotationRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(AnnotationRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<AnnotationRecord> latest_records(const std::vector<AnnotationRecord>& all) {
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> pos;
  std::vector<AnnotationRecord> out;
  for (const auto& r : all) {
    auto key = std::make_tuple(r.annotator_id, r.bundle_id, r.task_id);
    auto it = pos.find(key);
    if (it == pos.end()) {
      pos.emplace(key, out.size());
      out.push_back(r);
    } else {
      out[it->second] = r;
    }
  }
  return out;
}

std::vector<AnnotationTask> game_tasks(const Transcript& t, const IntentionCatalog& catalog,
                                       const TaskOptions& options) {
  std::vector<AnnotationTask> out;
  const RoleAssignment roles = t.roles();
  std::set<std::string> mask;
  for (const auto& i : catalog.intentions()) {
    if (!options.impactful.count(i.id)) mask.insert(i.id);
  }
  int n_sum = 0, n_guess = 0;

  for (const GameEvent* speech : t.of_kind(EventKind::Speech)) {
    const Seat p = speech->actor;
    const std::string key = turn_key(t.game_id(), speech->round, speech->attempt, p);
    TaskSubject base{t.game_id(), speech->round, speech->attempt, p, kNoSeat, ""};

    if (options.selection || options.following) {
      const GameEvent* revised = turn_event(t, EventKind::IntentRevised, *speech);
      const GameEvent* thinking = turn_event(t, EventKind::Thinking, *speech);
      std::vector<std::string> ids;
      if (revised) ids = revised->payload.at("ids").get<std::vector<std::string>>();
      const StructuredContext view = build_view(t, p, speech->round, speech->seq);
      const std::string head = render_header(view) + "\n" + render_public_sections(view, false);
      const OptionList masked = catalog.render_options(roles[p].name, &mask);
      const std::string think_text = thinking ? thinking->payload.value("text", "") : "";
      const std::string speech_text = speech->payload.value("text", "");

      for (const auto& id : ids) {
        if (!options.impactful.count(id)) continue;
        const std::string& text = catalog.at(id).text;
        TaskSubject s = base;
        s.intention = id;
        if (options.selection) {
          out.push_back({key + ":sel:" + id, TaskKind::SelectionBinary, s,
                         head + "\nIntent options:\n" + masked.text +
                             "\nSelected intention: " + text + "\n",
                         masked, {id}});
        }
        if (options.following) {
          out.push_back({key + ":think:" + id, TaskKind::FollowingThinkingLikert, s,
                         head + "\nIntention: " + text + "\n\nThinking: " + think_text + "\n",
                         masked, {id}});
          out.push_back({key + ":speak:" + id, TaskKind::FollowingSpeakingLikert, s,
                         head + "\nIntention: " + text + "\n\nSpeech: " + speech_text + "\n",
                         masked, {id}});
        }
      }
    }

    if (options.summarization &&
        (options.max_summarization < 0 || n_sum < options.max_summarization)) {
      auto ex = export_summarization_context(t, p, speech->round, catalog, speech->attempt);
      out.push_back({key + ":sum", TaskKind::SummarizationChoice, base, ex.text, ex.options,
                     ex.gold});
      ++n_sum;
    }
    if (options.guessing && (options.max_guessing < 0 || n_guess < options.max_guessing)) {
      const Seat observer = (p + 1) % kPlayers;
      auto ex = export_guessing_context(t, observer, p, speech->round, catalog, speech->attempt);
      TaskSubject s = base;
      s.observer = observer;
      out.push_back({key + ":guess:" + player_name(observer), TaskKind::GuessingChoice, s,
                     ex.text, ex.options, ex.gold});
      ++n_guess;
    }
  }
  return out;
}

// --- bundles ------------------------------------------------------------------

json TaskBundle::to_json(bool with_tasks) const {
  json j = {{"bundle_id", bundle_id},
            {"annotators", annotators},
            {"game_ids", game_ids},
            {"shared", shared},
            {"task_count", tasks.size()}};
  if (with_tasks) {
    j["tasks"] = json::array();
    for (const auto& t : tasks) j["tasks"].push_back(t.to_json(true));
  }
  return j;
}

TaskBundle TaskBundle::from_json(const json& j) {
  TaskBundle b;
  b.bundle_id = j.at("bundle_id").get<std::string>();
  b.annotators = j.at("annotators").get<std::vector<std::string>>();
  b.game_ids = j.at("game_ids").get<std::vector<std::string>>();
  b.shared = j.value("shared", false);
  if (j.contains("tasks")) {
    for (const auto& t : j.at("tasks")) b.tasks.push_back(AnnotationTask::from_json(t));
  }
  return b;
}

std::vector<TaskBundle> build_bundles(const std::vector<Transcript>& games,
                                      const IntentionCatalog& catalog,
                                      const BundleOptions& options) {
  const auto& annotators = options.annotators;
  if (annotators.empty()) throw std::invalid_argument("no annotators");
  if (games.size() < annotators.size()) {
    throw AnnotationError(AnnotationError::Code::TooFewGames,
                          std::to_string(games.size()) + " games for " +
                              std::to_string(annotators.size()) + " annotators");
  }
  std::vector<std::size_t> order(games.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return games[a].game_id() < games[b].game_id(); });
  Rng rng(options.seed);
  rng.shuffle(order);

  std::vector<TaskBundle> out;
  const std::size_t n_shared =
      std::min<std::size_t>(std::max(options.shared_bundles, 0), games.size());
  for (std::size_t k = 0; k < n_shared; ++k) {
    const Transcript& g = games[order[k]];
    TaskBundle b;
    b.bundle_id = "shared-" + std::to_string(k + 1);
    b.annotators = annotators;
    b.game_ids = {g.game_id()};
    b.shared = true;
    for (auto t : game_tasks(g, catalog, options.tasks)) {
      t.task_id = b.bundle_id + ":" + t.task_id;
      b.tasks.push_back(std::move(t));
    }
    out.push_back(std::move(b));
  }

  std::vector<TaskBundle> own(annotators.size());
  for (std::size_t a = 0; a < annotators.size(); ++a) {
    own[a].bundle_id = "bundle-" + annotators[a];
    own[a].annotators = {annotators[a]};
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    TaskBundle& b = own[i % annotators.size()];
    const Transcript& g = games[order[i]];
    b.game_ids.push_back(g.game_id());
    for (auto& t : game_tasks(g, catalog, options.tasks)) b.tasks.push_back(std::move(t));
  }
  for (auto& b : own) out.push_back(std::move(b));
  return out;
}

json validate_value(const AnnotationTask& task, const json& value) {
  if (task.kind == TaskKind::SelectionBinary) {
    if (!value.is_number_integer()) bad_domain("selection value must be 0 or 1");
    const int v = value.get<int>();
    if (v != 0 && v != 1) bad_domain("selection value must be 0 or 1");
    return v;
  }
  if (is_likert(task.kind)) {
    if (!value.is_number_integer()) bad_domain("rating must be an integer from 1 to 5");
    const int v = value.get<int>();
    if (v < 1 || v > 5) bad_domain("rating must be an integer from 1 to 5");
    return v;
  }
  if (!value.is_array()) bad_domain("choice must be a list of 2 or 3 options");
  if (value.size() < static_cast<std::size_t>(kMinSelected) ||
      value.size() > static_cast<std::size_t>(kMaxSelected)) {
    bad_domain("choice must be a list of 2 or 3 options");
  }
  std::vector<std::string> ids;
  for (const auto& v : value) {
    std::optional<std::string> id;
    if (v.is_number_integer()) {
      id = task.options.id_for(v.get<int>());
    } else if (v.is_string() && task.options.number_for(v.get<std::string>())) {
      id = v.get<std::string>();
    }
    if (!id) bad_domain("unknown option: " + v.dump());
    if (std::find(ids.begin(), ids.end(), *id) != ids.end()) bad_domain("duplicate option: " + *id);
    ids.push_back(*id);
  }
  return ids;
}

// --- service --------------------------------------------------------------------

AnnotationService::AnnotationService(std::vector<TaskBundle> bundles, std::filesystem::path store,
                                     ServiceOptions options)
    : bundles_(std::move(bundles)), store_(std::move(store)), options_(std::move(options)) {
  for (std::size_t b = 0; b < bundles_.size(); ++b) {
    for (const auto& a : bundles_[b].annotators) {
      auto& slots = slots_[a];
      for (std::size_t t = 0; t < bundles_[b].tasks.size(); ++t) slots.push_back({b, t, {}, {}});
    }
  }
  for (auto& r : load_records(store_)) {
    if (Slot* s = find_slot(r.annotator_id, r.task_id)) s->record = r;
    audit_.push_back(std::move(r));
  }
  if (store_.has_parent_path()) std::filesystem::create_directories(store_.parent_path());
  out_.open(store_, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open " + store_.string());
}

std::int64_t AnnotationService::now() const {
  if (options_.now_ms) return options_.now_ms();
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

AnnotationService::Slot* AnnotationService::find_slot(const std::string& annotator,
                                                      const std::string& task_id) {
  auto it = slots_.find(annotator);
  if (it == slots_.end()) return nullptr;
  for (auto& s : it->second) {
    if (bundles_[s.bundle].tasks[s.task].task_id == task_id) return &s;
  }
  return nullptr;
}

bool AnnotationService::has_annotator(const std::string& annotator) const {
  std::lock_guard lock(mu_);
  return slots_.count(annotator) > 0;
}

std::optional<AnnotationTask> AnnotationService::next_task(const std::string& annotator) {
  std::lock_guard lock(mu_);
  auto it = slots_.find(annotator);
  if (it == slots_.end()) {
    throw AnnotationError(AnnotationError::Code::UnknownAnnotator, "unknown annotator " + annotator);
  }
  const std::int64_t t = now();
  const std::int64_t expiry = t + options_.lease.count();
  Slot* leased = nullptr;
  for (auto& s : it->second) {
    if (s.record) continue;
    if (s.lease_expiry && *s.lease_expiry > t) {
      if (!leased) leased = &s;
      continue;
    }
    s.lease_expiry = expiry;
    return bundles_[s.bundle].tasks[s.task];
  }
  // Everything left is already leased (another tab): hand the oldest back.
  if (leased) {
    leased->lease_expiry = expiry;
    return bundles_[leased->bundle].tasks[leased->task];
  }
  return std::nullopt;
}

SubmitAck AnnotationService::submit(const std::string& annotator, const std::string& task_id,
                                    const json& value, const std::string& note) {
  std::lock_guard lock(mu_);
  if (!slots_.count(annotator)) {
    throw AnnotationError(AnnotationError::Code::UnknownAnnotator, "unknown annotator " + annotator);
  }
  Slot* s = find_slot(annotator, task_id);
  if (!s) throw AnnotationError(AnnotationError::Code::UnknownTask, "unknown task " + task_id);
  const AnnotationTask& task = bundles_[s->bundle].tasks[s->task];
  json canonical = validate_value(task, value);

  const std::int64_t t = now();
  const bool lease_valid = s->lease_expiry && *s->lease_expiry > t;
  if (s->record && s->record->value == canonical) return {*s->record, true};
  if (!lease_valid) {
    throw AnnotationError(AnnotationError::Code::LeaseLost,
                          "lease on " + task_id + " expired or was never taken");
  }

  AnnotationRecord r;
  r.task_id = task_id;
  r.bundle_id = bundles_[s->bundle].bundle_id;
  r.kind = task.kind;
  r.subject = task.subject;
  r.annotator_id = annotator;
  r.value = std::move(canonical);
  r.note = note;
  r.timestamp = t;
  r.revision = s->record ? s->record->revision + 1 : 1;

  out_ << r.to_json().dump() << '\n';
  out_.flush();
  s->record = r;
  audit_.push_back(r);
  return {r, false};
}

std::vector<AnnotationRecord> AnnotationService::records() const {
  std::lock_guard lock(mu_);
  std::vector<AnnotationRecord> out;
  for (const auto& [a, slots] : slots_) {
    for (const auto& s : slots) {
      if (s.record) out.push_back(*s.record);
    }
  }
  return out;
}

std::vector<AnnotationRecord> AnnotationService::audit() const {
  std::lock_guard lock(mu_);
  return audit_;
}

json AnnotationService::progress() const {
  std::lock_guard lock(mu_);
  json annotators = json::object();
  std::map<TaskKind, RatingsByAnnotator> shared;
  for (const auto& [a, slots] : slots_) {
    int done = 0;
    for (const auto& s : slots) {
      if (!s.record) continue;
      ++done;
      const TaskBundle& b = bundles_[s.bundle];
      const AnnotationTask& task = b.tasks[s.task];
      if (b.shared && (task.kind == TaskKind::SelectionBinary || is_likert(task.kind))) {
        shared[task.kind][a][task.task_id] = s.record->value.get<int>();
      }
    }
    const int total = static_cast<int>(slots.size());
    annotators[a] = {{"done", done},
                     {"total", total},
                     {"fraction", total ? static_cast<double>(done) / total : 0.0}};
  }

  json kappa = json::object();
  for (const auto& [kind, ratings] : shared) {
    const Grouping g = kind == TaskKind::SelectionBinary ? Grouping::identity()
                                                          : Grouping::following();
    KappaSummary k;
    try {
      k = pairwise_kappa(ratings, g, options_.kappa_min_shared);
    } catch (const MetricError&) {
      continue;
    }
    json pairs = json::array();
    for (const auto& p : k.pairs) {
      pairs.push_back({{"a", p.a},
                       {"b", p.b},
                       {"shared_items", p.shared_items},
                       {"kappa", p.kappa ? json(*p.kappa) : json(nullptr)}});
    }
    kappa[std::string(to_string(kind))] = {{"pairs", pairs},
                                           {"mean", k.mean ? json(*k.mean) : json(nullptr)},
                                           {"sd", k.sd ? json(*k.sd) : json(nullptr)},
                                           {"excluded", k.excluded}};
  }
  return {{"annotators", annotators}, {"kappa", kappa}};
}

json AnnotationService::bundles_summary() const {
  json out = json::array();
  for (const auto& b : bundles_) out.push_back(b.to_json(false));
  return out;
}

}  // namespace avalon
