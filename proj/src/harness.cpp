#include "avalon/harness.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "avalon/context.hpp"
#include "avalon/parse.hpp"

namespace avalon {

using nlohmann::json;

namespace {

std::string bullet_list(const IntentionCatalog& catalog, const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    const Intention* i = catalog.find(id);
    out += "- " + (i ? i->text : id) + "\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::string public_record(const SeatView& v) {
  Transcript t(v.game_id, *v.events);
  return render_public_sections(build_view(t, v.seat, v.state->round), false);
}

std::vector<Seat> known_evil(const SeatView& v) {
  const Role& r = v.role();
  if (r.name == RoleName::Merlin) return r.knowledge;
  if (r.alignment == Alignment::Evil) {
    std::vector<Seat> out = r.knowledge;
    out.push_back(v.seat);
    return out;
  }
  return {};
}

bool contains(const std::vector<Seat>& v, Seat s) { return std::find(v.begin(), v.end(), s) != v.end(); }

std::string lower_first(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

std::string strip_parenthetical(std::string s) {
  if (!s.empty() && s.back() == ')') {
    auto p = s.rfind('(');
    if (p != std::string::npos) s = s.substr(0, p);
  }
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// LlmAgent

LlmAgent::LlmAgent(std::shared_ptr<ChatBackend> backend, Options options,
                   const PromptLibrary& prompts)
    : backend_(std::move(backend)), options_(std::move(options)), prompts_(prompts) {}

std::string LlmAgent::system_message(const SeatView& v) const {
  const RoleAssignment& roles = v.state->roles;
  return prompts_.get(PromptName::System)
      .render({{"name", player_name(v.seat)},
               {"role", std::string(to_string(roles[v.seat].name))},
               {"role_details", role_details(roles, v.seat)}});
}

std::string LlmAgent::user_message(const SeatView& v, PromptName step,
                                   const PromptVars& vars) const {
  return public_record(v) + "\n" + prompts_.get(step).render(vars);
}

template <typename T, typename Parse>
Reply<T> LlmAgent::ask(const SeatView& v, PromptName step, const PromptVars& vars, Parse parse) {
  Reply<T> r;
  ChatRequest req;
  req.prompt = step;
  req.seat = v.seat;
  req.model = options_.model;
  req.temperature = options_.temperature;
  req.messages = {{"system", system_message(v)}, {"user", user_message(v, step, vars)}};
  r.prompt = req.messages[1].content;
  for (int attempt = 1; attempt <= options_.max_retries + 1; ++attempt) {
    ChatResponse resp;
    try {
      resp = backend_->complete(req);
    } catch (const ChatError& e) {
      throw BackendUnavailable(v.seat, step, e.what());
    }
    r.raw = resp.text;
    r.attempts = attempt;
    std::string error;
    std::optional<T> value = parse(resp.text, r.prose, error);
    if (value) {
      r.value = std::move(value);
      r.error.clear();
      return r;
    }
    r.error = error;
    req.messages.push_back({"assistant", resp.text});
    req.messages.push_back(
        {"user", "Your reply could not be used: " + error +
                     ". Reply again and end with the fenced answer block exactly as instructed."});
  }
  return r;
}

Reply<std::string> LlmAgent::summarize(const SeatView& v, int previous_round) {
  return ask<std::string>(v, PromptName::Summarize,
                          {{"previous_round", std::to_string(previous_round)}},
                          [](const std::string& raw, std::string& prose, std::string& err)
                              -> std::optional<std::string> {
                            auto f = parse_text_block(raw);
                            if (!f) {
                              err = f.error;
                              return std::nullopt;
                            }
                            prose = f.value->prose;
                            return f.value->block;
                          });
}

Reply<std::string> LlmAgent::first_order(const SeatView& v) {
  // The first-order instruction has no answer format of its own; a fenced
  // block is used when present, otherwise the whole reply.
  return ask<std::string>(v, PromptName::FirstOrder, {{"name", player_name(v.seat)}},
                          [](const std::string& raw, std::string& prose, std::string& err)
                              -> std::optional<std::string> {
                            auto f = parse_text_block(raw);
                            if (f) {
                              prose = f.value->prose;
                              return prose.empty() ? f.value->block : prose + "\n" + f.value->block;
                            }
                            if (raw.find_first_not_of(" \t\r\n") == std::string::npos) {
                              err = "empty reply";
                              return std::nullopt;
                            }
                            return raw;
                          });
}

Reply<std::vector<std::string>> LlmAgent::select_intentions(const SeatView& v,
                                                            const std::string& first_order) {
  const RoleName role = v.role().name;
  OptionList options = v.catalog->render_options(role);
  const IntentionCatalog& catalog = *v.catalog;
  return ask<std::vector<std::string>>(
      v, PromptName::IntentSelection, {{"first_order", first_order}, {"options", options.text}},
      [&](const std::string& raw, std::string& prose, std::string& err)
          -> std::optional<std::vector<std::string>> {
        auto p = parse_selection(raw, options, catalog, role);
        if (!p) {
          err = p.error;
          return std::nullopt;
        }
        prose = split_fenced(raw).value->prose;
        return p.value;
      });
}

Reply<Formulation> LlmAgent::formulate(const SeatView& v,
                                       const std::vector<std::string>& intentions) {
  return ask<Formulation>(v, PromptName::Formulation,
                          {{"intentions", bullet_list(*v.catalog, intentions)}},
                          [](const std::string& raw, std::string& prose, std::string& err)
                              -> std::optional<Formulation> {
                            auto f = parse_text_block(raw);
                            if (!f) {
                              err = f.error;
                              return std::nullopt;
                            }
                            prose = f.value->prose;
                            return Formulation{f.value->prose, f.value->block};
                          });
}

Reply<ModifyResult> LlmAgent::modify_intentions(const SeatView& v,
                                                const std::vector<std::string>& intentions,
                                                const Formulation& plan) {
  const RoleName role = v.role().name;
  OptionList options = v.catalog->render_options(role);
  const IntentionCatalog& catalog = *v.catalog;
  return ask<ModifyResult>(
      v, PromptName::IntentModification,
      {{"intentions", bullet_list(catalog, intentions)},
       {"thinking", plan.thinking},
       {"draft_speech", plan.draft_speech},
       {"options", options.text}},
      [&](const std::string& raw, std::string& prose, std::string& err)
          -> std::optional<ModifyResult> {
        auto p = parse_selection(raw, options, catalog, role);
        if (!p) {
          err = p.error;
          return std::nullopt;
        }
        prose = split_fenced(raw).value->prose;
        return ModifyResult{prose, *p.value};
      });
}

Reply<std::string> LlmAgent::refine(const SeatView& v, const std::vector<std::string>& intentions,
                                    const std::string& second_order,
                                    const std::string& draft_speech) {
  return ask<std::string>(v, PromptName::Refinement,
                          {{"intentions", bullet_list(*v.catalog, intentions)},
                           {"second_order", second_order},
                           {"draft_speech", draft_speech}},
                          [](const std::string& raw, std::string& prose, std::string& err)
                              -> std::optional<std::string> {
                            auto f = parse_text_block(raw);
                            if (!f) {
                              err = f.error;
                              return std::nullopt;
                            }
                            prose = f.value->prose;
                            return f.value->block;
                          });
}

Reply<std::vector<Seat>> LlmAgent::propose_team(const SeatView& v, int team_size) {
  return ask<std::vector<Seat>>(
      v, PromptName::TeamProposal,
      {{"round", std::to_string(v.state->round)}, {"team_size", std::to_string(team_size)}},
      [team_size](const std::string& raw, std::string& prose, std::string& err)
          -> std::optional<std::vector<Seat>> {
        auto p = parse_team(raw, team_size);
        if (!p) {
          err = p.error;
          return std::nullopt;
        }
        prose = split_fenced(raw).value->prose;
        return p.value;
      });
}

Reply<TeamDecision> LlmAgent::reconsider_team(const SeatView& v, const std::vector<Seat>& team) {
  const int size = static_cast<int>(team.size());
  return ask<TeamDecision>(
      v, PromptName::TeamChange,
      {{"team", join_players(team)}, {"team_size", std::to_string(size)}},
      [size](const std::string& raw, std::string& prose, std::string& err)
          -> std::optional<TeamDecision> {
        auto p = parse_team(raw, size);
        if (!p) {
          err = p.error;
          return std::nullopt;
        }
        prose = split_fenced(raw).value->prose;
        return TeamDecision{*p.value, prose};
      });
}

Reply<VoteChoice> LlmAgent::vote(const SeatView& v) {
  return ask<VoteChoice>(v, PromptName::Vote,
                         {{"leader", player_name(v.state->leader)},
                          {"team", join_players(v.state->proposed_team)}},
                         [](const std::string& raw, std::string& prose, std::string& err)
                             -> std::optional<VoteChoice> {
                           auto p = parse_vote(raw);
                           if (!p) {
                             err = p.error;
                             return std::nullopt;
                           }
                           prose = split_fenced(raw).value->prose;
                           return p.value;
                         });
}

Reply<QuestAction> LlmAgent::quest_action(const SeatView& v) {
  return ask<QuestAction>(v, PromptName::QuestAction,
                          {{"team", join_players(v.state->proposed_team)}},
                          [](const std::string& raw, std::string& prose, std::string& err)
                              -> std::optional<QuestAction> {
                            auto p = parse_quest_action(raw);
                            if (!p) {
                              err = p.error;
                              return std::nullopt;
                            }
                            prose = split_fenced(raw).value->prose;
                            return p.value;
                          });
}

Reply<Seat> LlmAgent::assassinate(const SeatView& v, const std::vector<Seat>& candidates) {
  return ask<Seat>(v, PromptName::Assassinate, {{"candidates", join_players(candidates)}},
                   [&candidates](const std::string& raw, std::string& prose, std::string& err)
                       -> std::optional<Seat> {
                     auto p = parse_player(raw);
                     if (!p) {
                       err = p.error;
                       return std::nullopt;
                     }
                     if (!contains(candidates, *p.value)) {
                       err = player_name(*p.value) + " is not a candidate";
                       return std::nullopt;
                     }
                     prose = split_fenced(raw).value->prose;
                     return p.value;
                   });
}

// ---------------------------------------------------------------------------
// ScriptedAgent

ScriptedAgent::ScriptedAgent(ScriptPolicy policy, std::uint64_t seed)
    : policy_(policy), rng_(seed) {}

namespace {

template <typename T>
Reply<T> scripted(T value, std::string prose = {}) {
  Reply<T> r;
  r.value = std::move(value);
  r.prose = std::move(prose);
  return r;
}

}  // namespace

Reply<std::string> ScriptedAgent::summarize(const SeatView& v, int previous_round) {
  std::string text = "Round " + std::to_string(previous_round) + " had no quest.";
  for (const auto& q : v.state->quest_results) {
    if (q.round != previous_round) continue;
    text = "In round " + std::to_string(q.round) + " " + player_name(q.leader) + " led and " +
           join_players(q.team) + " went on the quest, which ended in " +
           std::string(to_string(q.outcome)) + " with " + std::to_string(q.fail_votes) +
           " fail votes.";
  }
  return scripted(text);
}

Reply<std::string> ScriptedAgent::first_order(const SeatView& v) {
  const auto evil = known_evil(v);
  std::string text;
  for (Seat s = 0; s < kPlayers; ++s) {
    if (s == v.seat) continue;
    text += player_name(s) + ": ";
    if (contains(evil, s)) {
      text += "on the other side from the loyal players, likely to push for failed quests.\n";
    } else if (v.role().alignment == Alignment::Evil || v.role().name == RoleName::Merlin) {
      text += "loyal, wants quests to succeed.\n";
    } else {
      text += "unclear so far.\n";
    }
  }
  return scripted(text);
}

Reply<std::vector<std::string>> ScriptedAgent::select_intentions(const SeatView& v,
                                                                 const std::string&) {
  auto eligible = v.catalog->eligible_for(v.role().name);
  rng_.shuffle(eligible);
  const std::size_t k = 2 + rng_.below(2);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < k && i < eligible.size(); ++i) ids.push_back(eligible[i]->id);
  return scripted(ids);
}

Reply<Formulation> ScriptedAgent::formulate(const SeatView& v,
                                            const std::vector<std::string>& intentions) {
  Formulation f;
  f.thinking = "For this turn:";
  for (const auto& id : intentions) {
    const std::string text = strip_parenthetical(v.catalog->at(id).text);
    f.thinking += " I will " + lower_first(text) + ".";
    f.draft_speech += (f.draft_speech.empty() ? "" : " ") + std::string("I want to ") +
                      lower_first(text) + ".";
  }
  return scripted(f, f.thinking);
}

Reply<ModifyResult> ScriptedAgent::modify_intentions(const SeatView& v,
                                                     const std::vector<std::string>& intentions,
                                                     const Formulation&) {
  ModifyResult m;
  m.ids = intentions;
  m.second_order = "The others will take this as an ordinary contribution to the discussion.";
  if (rng_.chance(0.3)) {
    auto eligible = v.catalog->eligible_for(v.role().name);
    const std::string& candidate = rng_.pick(eligible)->id;
    if (std::find(m.ids.begin(), m.ids.end(), candidate) == m.ids.end()) {
      m.ids.back() = candidate;
      m.second_order = "That draft could draw suspicion, so I shift one intention.";
    }
  }
  return scripted(m, m.second_order);
}

Reply<std::string> ScriptedAgent::refine(const SeatView&, const std::vector<std::string>&,
                                         const std::string&, const std::string& draft_speech) {
  return scripted(draft_speech);
}

Reply<std::vector<Seat>> ScriptedAgent::propose_team(const SeatView& v, int team_size) {
  std::vector<Seat> team;
  if (policy_.team_rule == ScriptPolicy::TeamRule::Consecutive) {
    for (int i = 0; i < team_size; ++i) team.push_back((v.seat + i) % kPlayers);
  } else {
    const auto evil = known_evil(v);
    const bool loyal = v.role().alignment == Alignment::Loyal;
    std::vector<Seat> others;
    for (Seat s = 0; s < kPlayers; ++s) {
      if (s != v.seat) others.push_back(s);
    }
    rng_.shuffle(others);
    // Loyal seats with knowledge put suspects last.
    if (loyal) {
      std::stable_partition(others.begin(), others.end(),
                            [&](Seat s) { return !contains(evil, s); });
    }
    team.push_back(v.seat);
    for (Seat s : others) {
      if (static_cast<int>(team.size()) == team_size) break;
      team.push_back(s);
    }
  }
  std::sort(team.begin(), team.end());
  return scripted(team);
}

Reply<TeamDecision> ScriptedAgent::reconsider_team(const SeatView&, const std::vector<Seat>& team) {
  TeamDecision d{team, "The discussion did not change my view of this team."};
  if (policy_.change_team_rate > 0 && rng_.chance(policy_.change_team_rate)) {
    std::vector<Seat> outside;
    for (Seat s = 0; s < kPlayers; ++s) {
      if (!contains(team, s)) outside.push_back(s);
    }
    if (!outside.empty()) {
      d.team[rng_.below(d.team.size())] = rng_.pick(outside);
      std::sort(d.team.begin(), d.team.end());
      d.rationale = "After the discussion I swap one member.";
    }
  }
  return scripted(d, d.rationale);
}

Reply<VoteChoice> ScriptedAgent::vote(const SeatView& v) {
  if (policy_.vote) return scripted(*policy_.vote);
  const GameState& s = *v.state;
  if (s.consecutive_rejections + 1 >= s.config.max_consecutive_rejections) {
    return scripted(VoteChoice::Agree);
  }
  const auto evil = known_evil(v);
  const bool has_evil = std::any_of(s.proposed_team.begin(), s.proposed_team.end(),
                                    [&](Seat x) { return contains(evil, x); });
  bool agree;
  if (v.role().alignment == Alignment::Evil) {
    agree = has_evil || rng_.chance(0.2);
  } else if (v.role().name == RoleName::Merlin) {
    agree = !has_evil;
  } else {
    agree = contains(s.proposed_team, v.seat) || s.leader == v.seat || rng_.chance(0.6);
  }
  return scripted(agree ? VoteChoice::Agree : VoteChoice::Disagree);
}

Reply<QuestAction> ScriptedAgent::quest_action(const SeatView& v) {
  if (v.role().alignment == Alignment::Loyal) return scripted(policy_.loyal_action);
  if (policy_.evil_action) return scripted(*policy_.evil_action);
  return scripted(rng_.chance(policy_.evil_fail_rate) ? QuestAction::Fail : QuestAction::Success);
}

Reply<Seat> ScriptedAgent::assassinate(const SeatView&, const std::vector<Seat>& candidates) {
  if (policy_.assassinate) return scripted(*policy_.assassinate);
  return scripted(rng_.pick(candidates));
}

// ---------------------------------------------------------------------------
// GameRunner

GameRunner::GameRunner(std::string game_id, GameConfig config, AgentSet agents,
                       const IntentionCatalog& catalog, HarnessOptions options)
    : game_id_(std::move(game_id)),
      agents_(std::move(agents)),
      catalog_(catalog),
      options_(std::move(options)),
      fallback_rng_(derive_seed(config.seed, 0xFA11BAC4ULL)) {
  config.validate();
  for (Seat s = 0; s < kPlayers; ++s) {
    if (!agents_[s]) throw std::invalid_argument("no agent bound to " + player_name(s));
  }
  const RoleAssignment roles =
      options_.fixed_roles ? *options_.fixed_roles : assign_roles(config, config.seed);
  state_ = new_game(config, roles);
}

SeatView GameRunner::view(Seat seat) const {
  return SeatView{game_id_, seat, &state_, &events_, &catalog_};
}

GameEvent& GameRunner::emit(Seat actor, EventKind kind, json payload) {
  GameEvent e;
  e.game_id = game_id_;
  e.seq = static_cast<std::int64_t>(events_.size());
  e.round = state_.round;
  e.attempt = state_.attempt;
  e.phase = state_.phase;
  e.actor = actor;
  e.kind = kind;
  e.payload = std::move(payload);
  e.timestamp = options_.clock_start + e.seq;
  events_.push_back(std::move(e));
  return events_.back();
}

template <typename T>
void GameRunner::mirror(json& payload, const Reply<T>& r) const {
  if (r.prompt.empty()) return;
  payload["prompt"] = r.prompt;
  payload["raw"] = r.raw;
  payload["attempts"] = r.attempts;
}

void GameRunner::fallback(Seat actor, PromptName step, const std::string& reason) {
  ++fallbacks_;
  emit(actor, EventKind::FallbackUsed,
       {{"step", std::string(to_string(step))}, {"reason", reason}});
}

void GameRunner::start() {
  if (started_) return;
  started_ = true;
  const GameConfig& c = state_.config;
  json roles = json::array();
  for (Seat s = 0; s < kPlayers; ++s) {
    const Role& r = state_.roles[s];
    roles.push_back({{"seat", s},
                     {"role", std::string(to_string(r.name))},
                     {"alignment", std::string(to_string(r.alignment))},
                     {"knowledge", r.knowledge}});
  }
  emit(kSystemActor, EventKind::RoleAssigned,
       {{"config",
         {{"n_players", c.n_players},
          {"quest_team_sizes", c.quest_team_sizes},
          {"fails_required", c.fails_required},
          {"max_consecutive_rejections", c.max_consecutive_rejections},
          {"seed", c.seed},
          {"initial_leader", c.initial_leader}}},
        {"roles", roles}});
}

void GameRunner::summarize_round() {
  const int previous = state_.round - 1;
  for (Seat s = 0; s < kPlayers; ++s) {
    auto r = agents_[s]->summarize(view(s), previous);
    std::string text = r.value.value_or("");
    if (text.empty()) {
      fallback(s, PromptName::Summarize, r.error.empty() ? "empty summary" : r.error);
      text = "No summary available for round " + std::to_string(previous) + ".";
    }
    json payload = {{"of_round", previous}, {"text", text}};
    mirror(payload, r);
    emit(s, EventKind::Summary, std::move(payload));
  }
}

void GameRunner::open_discussion() {
  state_ = begin_discussion(state_);
  const Seat leader = state_.leader;
  const int size = state_.team_size();
  auto r = agents_[leader]->propose_team(view(leader), size);
  std::vector<Seat> team;
  bool ok = r.value && static_cast<int>(r.value->size()) == size;
  if (ok) {
    std::set<Seat> uniq(r.value->begin(), r.value->end());
    ok = static_cast<int>(uniq.size()) == size && *uniq.begin() >= 0 && *uniq.rbegin() < kPlayers;
    team.assign(uniq.begin(), uniq.end());
  }
  if (!ok) {
    fallback(leader, PromptName::TeamProposal, r.error.empty() ? "invalid team" : r.error);
    team.clear();
    for (int i = 0; i < size; ++i) team.push_back((leader + i) % kPlayers);
    std::sort(team.begin(), team.end());
  }
  json payload = {{"team", team}};
  mirror(payload, r);
  emit(leader, EventKind::TeamProposed, std::move(payload));
  state_ = propose_team(state_, leader, team);
}

TurnArtifacts GameRunner::run_turn(Seat seat) {
  Agent& agent = *agents_[seat];
  const RoleName role = state_.roles[seat].name;
  TurnArtifacts a;

  auto fo = agent.first_order(view(seat));
  a.first_order = fo.value.value_or("");
  if (a.first_order.empty()) {
    fallback(seat, PromptName::FirstOrder, fo.error.empty() ? "empty analysis" : fo.error);
    a.first_order = "No analysis available.";
  }
  json p = {{"text", a.first_order}};
  mirror(p, fo);
  emit(seat, EventKind::FirstOrder, std::move(p));

  auto sel = agent.select_intentions(view(seat), a.first_order);
  if (sel.value && catalog_.valid_selection(role, *sel.value)) {
    a.selected_intentions = *sel.value;
  } else {
    fallback(seat, PromptName::IntentSelection,
             sel.error.empty() ? "selection failed validation" : sel.error);
    auto eligible = catalog_.eligible_for(role);
    fallback_rng_.shuffle(eligible);
    a.selected_intentions = {eligible[0]->id, eligible[1]->id};
  }
  p = {{"ids", a.selected_intentions}};
  mirror(p, sel);
  emit(seat, EventKind::IntentSelected, std::move(p));

  auto form = agent.formulate(view(seat), a.selected_intentions);
  Formulation plan = form.value.value_or(Formulation{});
  if (plan.draft_speech.empty()) {
    fallback(seat, PromptName::Formulation, form.error.empty() ? "empty draft" : form.error);
    plan.draft_speech = "I have nothing to add yet.";
  }
  a.thinking = plan.thinking;
  a.draft_speech = plan.draft_speech;
  emit(seat, EventKind::Thinking, {{"text", a.thinking}});
  p = {{"text", a.draft_speech}};
  mirror(p, form);
  emit(seat, EventKind::DraftSpeech, std::move(p));

  auto mod = agent.modify_intentions(view(seat), a.selected_intentions, plan);
  if (mod.value && catalog_.valid_selection(role, mod.value->ids)) {
    a.second_order = mod.value->second_order;
    a.revised_intentions = mod.value->ids;
  } else {
    fallback(seat, PromptName::IntentModification,
             mod.error.empty() ? "revision failed validation" : mod.error);
    a.second_order = mod.value ? mod.value->second_order : "";
    a.revised_intentions = a.selected_intentions;
  }
  emit(seat, EventKind::SecondOrder, {{"text", a.second_order}});
  p = {{"ids", a.revised_intentions}, {"changed", a.revised_intentions != a.selected_intentions}};
  mirror(p, mod);
  emit(seat, EventKind::IntentRevised, std::move(p));

  auto fin = agent.refine(view(seat), a.revised_intentions, a.second_order, a.draft_speech);
  a.final_speech = fin.value.value_or("");
  if (a.final_speech.empty()) {
    fallback(seat, PromptName::Refinement, fin.error.empty() ? "empty speech" : fin.error);
    a.final_speech = a.draft_speech;
  }
  p = {{"text", a.final_speech}};
  mirror(p, fin);
  emit(seat, EventKind::Speech, std::move(p));
  return a;
}

void GameRunner::discussion() {
  for (int pass = 0; pass < options_.discussion_passes; ++pass) {
    for (int i = 0; i < kPlayers; ++i) run_turn((state_.leader + i) % kPlayers);
  }
}

TeamDecision GameRunner::leader_reconsider() {
  if (state_.phase == Phase::Discuss) state_ = close_discussion(state_);
  const Seat leader = state_.leader;
  const std::vector<Seat> original = state_.initial_team;
  auto r = agents_[leader]->reconsider_team(view(leader), original);
  TeamDecision d;
  bool ok = r.value && r.value->team.size() == original.size();
  if (ok) {
    std::set<Seat> uniq(r.value->team.begin(), r.value->team.end());
    ok = uniq.size() == original.size() && *uniq.begin() >= 0 && *uniq.rbegin() < kPlayers;
    d.team.assign(uniq.begin(), uniq.end());
    d.rationale = r.value->rationale;
  }
  if (!ok) {
    fallback(leader, PromptName::TeamChange, r.error.empty() ? "invalid team" : r.error);
    d.team = original;
    d.rationale = "";
  }
  const bool changed = d.team != original;
  json payload = {{"team", d.team}, {"changed", changed}, {"rationale", d.rationale}};
  mirror(payload, r);
  emit(leader, EventKind::TeamChanged, std::move(payload));
  state_ = propose_team(state_, leader, d.team);
  return d;
}

void GameRunner::collect_votes() {
  // Votes are collected before any is revealed, then recorded in seat order.
  std::array<VoteChoice, kPlayers> votes{};
  std::array<Reply<VoteChoice>, kPlayers> replies;
  for (Seat s = 0; s < kPlayers; ++s) {
    replies[s] = agents_[s]->vote(view(s));
    if (replies[s].value) {
      votes[s] = *replies[s].value;
    } else {
      fallback(s, PromptName::Vote, replies[s].error);
      votes[s] = VoteChoice::Agree;
    }
  }
  for (Seat s = 0; s < kPlayers; ++s) {
    json payload = {{"vote", std::string(to_string(votes[s]))}};
    mirror(payload, replies[s]);
    GameState next = cast_vote(state_, s, votes[s]);
    emit(s, EventKind::Vote, std::move(payload));
    state_ = std::move(next);
  }
}

void GameRunner::run_quest() {
  std::map<Seat, QuestAction> actions;
  for (Seat s : state_.proposed_team) {
    auto r = agents_[s]->quest_action(view(s));
    const bool evil = state_.is_evil(s);
    QuestAction a;
    json payload;
    if (!r.value) {
      fallback(s, PromptName::QuestAction, r.error);
      a = evil ? QuestAction::Fail : QuestAction::Success;
    } else {
      a = *r.value;
    }
    if (!evil && a == QuestAction::Fail) {
      // Loyal seats cannot fail a quest; the request is kept for analysis.
      payload["coerced"] = true;
      a = QuestAction::Success;
    }
    payload["action"] = std::string(to_string(a));
    mirror(payload, r);
    emit(s, EventKind::QuestAction, std::move(payload));
    actions[s] = a;
  }
  GameState next = execute_quest(state_, actions);
  const QuestOutcome& q = next.quest_results.back();
  emit(kSystemActor, EventKind::QuestResult,
       {{"team", q.team},
        {"fail_votes", q.fail_votes},
        {"outcome", std::string(to_string(q.outcome))}});
  state_ = std::move(next);
}

Seat GameRunner::decide_assassination() {
  const Seat assassin = state_.seat_of(RoleName::Assassin);
  std::vector<Seat> candidates;
  for (Seat s = 0; s < kPlayers; ++s) {
    if (s != assassin && !contains(state_.roles[assassin].knowledge, s)) candidates.push_back(s);
  }
  auto r = agents_[assassin]->assassinate(view(assassin), candidates);
  Seat target;
  if (r.value && *r.value >= 0 && *r.value < kPlayers && *r.value != assassin) {
    target = *r.value;
  } else {
    fallback(assassin, PromptName::Assassinate, r.error.empty() ? "invalid target" : r.error);
    std::vector<Seat> others;
    for (Seat s = 0; s < kPlayers; ++s) {
      if (s != assassin) others.push_back(s);
    }
    target = fallback_rng_.pick(others);
  }
  GameState next = assassinate(state_, assassin, target);
  json payload = {{"target", target},
                  {"correct", state_.roles[target].name == RoleName::Merlin}};
  mirror(payload, r);
  emit(assassin, EventKind::Assassination, std::move(payload));
  state_ = std::move(next);
  return target;
}

void GameRunner::finish() {
  emit(kSystemActor, EventKind::GameEnd,
       {{"winner", std::string(to_string(*state_.winner))},
        {"reason", std::string(to_string(state_.win_reason))},
        {"successes", state_.successes()},
        {"failures", state_.failures()}});
}

const std::vector<GameEvent>& GameRunner::play() {
  start();
  while (state_.phase != Phase::Finished) {
    switch (state_.phase) {
      case Phase::Summarize:
        if (state_.round >= 2 && state_.attempt == 1) summarize_round();
        open_discussion();
        break;
      case Phase::Discuss:
        discussion();
        leader_reconsider();
        break;
      case Phase::Vote:
        collect_votes();
        break;
      case Phase::Quest:
        run_quest();
        break;
      case Phase::Assassinate:
        decide_assassination();
        break;
      case Phase::Reconsider:
        leader_reconsider();
        break;
      case Phase::Finished:
        break;
    }
  }
  finish();
  return events_;
}

}  // namespace avalon
