#include "avalon/transcript.hpp"

#include <algorithm>
#include <sstream>

namespace avalon {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<std::string_view, EventKind>, 17> kKinds{{
    {"RoleAssigned", EventKind::RoleAssigned},
    {"Summary", EventKind::Summary},
    {"FirstOrder", EventKind::FirstOrder},
    {"IntentSelected", EventKind::IntentSelected},
    {"Thinking", EventKind::Thinking},
    {"DraftSpeech", EventKind::DraftSpeech},
    {"SecondOrder", EventKind::SecondOrder},
    {"IntentRevised", EventKind::IntentRevised},
    {"Speech", EventKind::Speech},
    {"TeamProposed", EventKind::TeamProposed},
    {"TeamChanged", EventKind::TeamChanged},
    {"Vote", EventKind::Vote},
    {"QuestAction", EventKind::QuestAction},
    {"QuestResult", EventKind::QuestResult},
    {"Assassination", EventKind::Assassination},
    {"FallbackUsed", EventKind::FallbackUsed},
    {"GameEnd", EventKind::GameEnd},
}};

}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [name, value] : kKinds) {
    if (value == k) return name;
  }
  return "?";
}

EventKind event_kind_from_string(std::string_view s) {
  for (const auto& [name, value] : kKinds) {
    if (name == s) return value;
  }
  throw std::invalid_argument("unknown event kind: " + std::string(s));
}

json GameEvent::to_json() const {
  return json{{"game_id", game_id}, {"seq", seq},
              {"round", round},     {"attempt", attempt},
              {"phase", std::string(to_string(phase))},
              {"actor", actor},     {"kind", std::string(to_string(kind))},
              {"payload", payload}, {"ts", timestamp}};
}

GameEvent GameEvent::from_json(const json& j) {
  GameEvent e;
  e.game_id = j.at("game_id").get<std::string>();
  e.seq = j.at("seq").get<std::int64_t>();
  e.round = j.at("round").get<int>();
  e.attempt = j.value("attempt", 0);
  e.phase = phase_from_string(j.at("phase").get<std::string>());
  e.actor = j.at("actor").get<int>();
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  e.payload = j.at("payload");
  e.timestamp = j.value("ts", std::int64_t{0});
  return e;
}

namespace {

// Serialized line with stable key order: envelope keys in declaration order,
// payload keys sorted (nlohmann::json default).
std::string to_line(const GameEvent& e) {
  std::string out = "{\"game_id\":" + json(e.game_id).dump();
  out += ",\"seq\":" + std::to_string(e.seq);
  out += ",\"round\":" + std::to_string(e.round);
  out += ",\"attempt\":" + std::to_string(e.attempt);
  out += ",\"phase\":" + json(std::string(to_string(e.phase))).dump();
  out += ",\"actor\":" + std::to_string(e.actor);
  out += ",\"kind\":" + json(std::string(to_string(e.kind))).dump();
  out += ",\"payload\":" + e.payload.dump();
  out += ",\"ts\":" + std::to_string(e.timestamp);
  out += "}";
  return out;
}

}  // namespace

std::string serialize_transcript(const std::vector<GameEvent>& events) {
  std::string out;
  for (const auto& e : events) out += to_line(e) + "\n";
  return out;
}

Transcript::Transcript(std::string game_id, std::vector<GameEvent> events)
    : game_id_(std::move(game_id)), events_(std::move(events)) {}

std::vector<const GameEvent*> Transcript::of_kind(EventKind k) const {
  std::vector<const GameEvent*> out;
  for (const auto& e : events_) {
    if (e.kind == k) out.push_back(&e);
  }
  return out;
}

const GameEvent* Transcript::find(EventKind k,
                                  const std::function<bool(const GameEvent&)>& pred) const {
  for (const auto& e : events_) {
    if (e.kind == k && pred(e)) return &e;
  }
  return nullptr;
}

RoleAssignment Transcript::roles() const {
  const GameEvent* e = find(EventKind::RoleAssigned, [](auto&) { return true; });
  if (!e) throw TranscriptError(TranscriptError::Code::CorruptRecord, "no RoleAssigned event");
  RoleAssignment roles;
  const auto& arr = e->payload.at("roles");
  if (arr.size() != kPlayers) {
    throw TranscriptError(TranscriptError::Code::CorruptRecord, "RoleAssigned needs 5 roles");
  }
  for (const auto& r : arr) {
    Seat s = r.at("seat").get<int>();
    roles.at(s).name = role_from_string(r.at("role").get<std::string>());
    roles.at(s).alignment = alignment_from_string(r.at("alignment").get<std::string>());
    roles.at(s).knowledge = r.at("knowledge").get<std::vector<Seat>>();
  }
  return roles;
}

GameConfig Transcript::config() const {
  const GameEvent* e = find(EventKind::RoleAssigned, [](auto&) { return true; });
  if (!e) throw TranscriptError(TranscriptError::Code::CorruptRecord, "no RoleAssigned event");
  const auto& c = e->payload.at("config");
  GameConfig cfg;
  cfg.n_players = c.at("n_players").get<int>();
  auto sizes = c.at("quest_team_sizes").get<std::vector<int>>();
  auto fails = c.at("fails_required").get<std::vector<int>>();
  if (sizes.size() != kRounds || fails.size() != kRounds) {
    throw TranscriptError(TranscriptError::Code::CorruptRecord, "bad config arrays");
  }
  std::copy(sizes.begin(), sizes.end(), cfg.quest_team_sizes.begin());
  std::copy(fails.begin(), fails.end(), cfg.fails_required.begin());
  cfg.max_consecutive_rejections = c.at("max_consecutive_rejections").get<int>();
  cfg.seed = c.at("seed").get<std::uint64_t>();
  cfg.initial_leader = c.at("initial_leader").get<int>();
  return cfg;
}

std::optional<Alignment> Transcript::winner() const {
  const GameEvent* e = find(EventKind::GameEnd, [](auto&) { return true; });
  if (!e) return std::nullopt;
  return alignment_from_string(e->payload.at("winner").get<std::string>());
}

int Transcript::last_round() const {
  int r = 0;
  for (const auto& e : events_) r = std::max(r, e.round);
  return r;
}

LoadResult parse_transcript(const std::string& game_id, const std::string& data) {
  LoadResult result;
  std::vector<GameEvent> events;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    const bool last = nl == std::string::npos;
    std::string line = data.substr(pos, last ? std::string::npos : nl - pos);
    pos = last ? data.size() : nl + 1;
    ++lineno;
    if (line.empty()) continue;
    const bool is_final = pos >= data.size();
    GameEvent e;
    try {
      e = GameEvent::from_json(json::parse(line));
    } catch (const std::exception& ex) {
      if (is_final) {
        result.warnings.push_back(game_id + ": truncated torn trailing record at line " +
                                  std::to_string(lineno));
        break;
      }
      throw TranscriptError(TranscriptError::Code::CorruptRecord,
                            game_id + " line " + std::to_string(lineno) + ": " + ex.what());
    }
    if (last) {
      // Parsed, but the writer never finished the line; treat as torn.
      result.warnings.push_back(game_id + ": trailing record without newline at line " +
                                std::to_string(lineno) + " dropped");
      break;
    }
    if (e.seq != static_cast<std::int64_t>(events.size())) {
      throw TranscriptError(TranscriptError::Code::SeqGap,
                            game_id + ": expected seq " + std::to_string(events.size()) +
                                ", found " + std::to_string(e.seq));
    }
    events.push_back(std::move(e));
  }
  result.transcript = Transcript(game_id, std::move(events));
  return result;
}

TranscriptWriter::TranscriptWriter(const std::filesystem::path& path, std::string game_id)
    : out_(path, std::ios::binary | std::ios::app), game_id_(std::move(game_id)) {
  if (!out_) {
    throw TranscriptError(TranscriptError::Code::Io, "cannot open " + path.string());
  }
}

void TranscriptWriter::append(const GameEvent& e) {
  if (e.seq != next_seq_) {
    throw TranscriptError(TranscriptError::Code::SeqGap,
                          game_id_ + ": append seq " + std::to_string(e.seq) + ", expected " +
                              std::to_string(next_seq_));
  }
  out_ << to_line(e) << '\n';
  out_.flush();
  ++next_seq_;
}

TranscriptStore::TranscriptStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path TranscriptStore::path_for(const std::string& game_id) const {
  return dir_ / (game_id + ".jsonl");
}

void TranscriptStore::append(const std::string& game_id, const GameEvent& e) {
  TranscriptWriter* w = nullptr;
  {
    std::lock_guard lock(mu_);
    auto& slot = writers_[game_id];
    if (!slot) slot = std::make_unique<TranscriptWriter>(path_for(game_id), game_id);
    w = slot.get();
  }
  w->append(e);
}

void TranscriptStore::flush() {
  std::lock_guard lock(mu_);
  writers_.clear();
}

LoadResult TranscriptStore::load(const std::string& game_id) const {
  std::ifstream in(path_for(game_id), std::ios::binary);
  if (!in) throw TranscriptError(TranscriptError::Code::NotFound, "no transcript for " + game_id);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_transcript(game_id, ss.str());
}

std::vector<std::string> TranscriptStore::game_ids() const {
  std::vector<std::string> ids;
  if (!std::filesystem::exists(dir_)) return ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<Transcript> TranscriptStore::load_all(std::vector<std::string>* warnings) const {
  std::vector<Transcript> out;
  for (const auto& id : game_ids()) {
    auto r = load(id);
    if (warnings) warnings->insert(warnings->end(), r.warnings.begin(), r.warnings.end());
    out.push_back(std::move(r.transcript));
  }
  return out;
}

GameState replay(const Transcript& t) {
  GameState s = new_game(t.config(), t.roles());
  std::map<Seat, QuestAction> pending;
  for (const auto& e : t.events()) {
    switch (e.kind) {
      case EventKind::TeamProposed: {
        if (s.phase == Phase::Summarize) s = begin_discussion(s);
        s = propose_team(s, e.actor, e.payload.at("team").get<std::vector<Seat>>());
        break;
      }
      case EventKind::TeamChanged: {
        if (s.phase == Phase::Discuss) s = close_discussion(s);
        s = propose_team(s, e.actor, e.payload.at("team").get<std::vector<Seat>>());
        break;
      }
      case EventKind::Vote:
        s = cast_vote(s, e.actor, vote_from_string(e.payload.at("vote").get<std::string>()));
        break;
      case EventKind::QuestAction:
        pending[e.actor] = quest_action_from_string(e.payload.at("action").get<std::string>());
        break;
      case EventKind::QuestResult: {
        s = execute_quest(s, pending);
        pending.clear();
        const auto& q = s.quest_results.back();
        if (q.fail_votes != e.payload.at("fail_votes").get<int>()) {
          throw TranscriptError(TranscriptError::Code::CorruptRecord,
                                t.game_id() + ": replayed quest disagrees with log");
        }
        break;
      }
      case EventKind::Assassination:
        s = assassinate(s, e.actor, e.payload.at("target").get<int>());
        break;
      default:
        break;
    }
  }
  return s;
}

}  // namespace avalon
