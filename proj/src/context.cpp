#include "avalon/context.hpp"

#include <algorithm>
#include <map>

#include "avalon/prompts.hpp"

namespace avalon {

namespace {

std::string pair_of(Seat a, Seat b) { return player_name(a) + " and " + player_name(b); }

std::vector<Seat> team_of(const GameEvent& e) { return e.payload.at("team").get<std::vector<Seat>>(); }

}  // namespace

std::string role_details(const RoleAssignment& roles, Seat seat) {
  const Role& r = roles.at(seat);
  std::string out;
  switch (r.name) {
    case RoleName::Merlin:
      out =
          "You are Merlin. These are your goals and characteristics:\n"
          "- Know the identities of evil players.\n"
          "- Subtly guide your team, especially Percival.\n"
          "- Avoid behaviors that expose your role: overly accusing, being too helpful.\n"
          "- Goal(Main Intent): Win without revealing identity.\n";
      out += "- " + pair_of(r.knowledge.at(0), r.knowledge.at(1)) + " are evil players\n";
      break;
    case RoleName::Percival:
      out =
          "You are Percival. These are your goals and characteristics:\n"
          "- Know who Merlin and Morgana are, but not which is which.\n"
          "- Protect Merlin and keep your own role hidden from the evil players.\n"
          "- Goal(Main Intent): Win by helping complete Quests and protecting Merlin.\n";
      out += "- " + pair_of(r.knowledge.at(0), r.knowledge.at(1)) +
             " are Merlin and Morgana in some order\n";
      break;
    case RoleName::Servant:
      out =
          "You are a Loyal Servant of Arthur. These are your goals and characteristics:\n"
          "- No special knowledge, rely on discussion and voting.\n"
          "- Contribute to the success of Quests.\n"
          "- Goal(Main Intent): Win by helping complete Quests and protecting Merlin.\n";
      break;
    case RoleName::Morgana:
      out =
          "You are Morgana. These are your goals and characteristics:\n"
          "- Know your evil teammate.\n"
          "- Appear as Merlin to Percival and mislead the loyal players.\n"
          "- Goal(Main Intent): Win by failing Quests or helping the Assassin find Merlin.\n";
      out += "- " + player_name(r.knowledge.at(0)) + " is your evil teammate\n";
      break;
    case RoleName::Assassin:
      out =
          "You are the Assassin. These are your goals and characteristics:\n"
          "- Know your evil teammate.\n"
          "- Sabotage Quests while staying hidden, and watch for Merlin.\n"
          "- Goal(Main Intent): Win by failing Quests or assassinating Merlin.\n";
      out += "- " + player_name(r.knowledge.at(0)) + " is your evil teammate\n";
      break;
  }
  return out;
}

StructuredContext build_view(const Transcript& t, Seat subject, int round, std::int64_t cutoff) {
  const RoleAssignment roles = t.roles();
  StructuredContext c;
  c.name = player_name(subject);
  c.role = std::string(to_string(roles[subject].name));
  c.role_details = role_details(roles, subject);
  c.round = round;

  std::map<std::pair<int, int>, std::array<std::optional<VoteChoice>, kPlayers>> votes;
  std::vector<std::pair<int, int>> vote_order;
  for (const auto& e : t.events()) {
    if (e.seq >= cutoff || e.round > round) break;
    switch (e.kind) {
      case EventKind::TeamProposed:
        if (e.round == round) {
          c.current_leader = player_name(e.actor);
          c.current_team = join_players(team_of(e));
        }
        break;
      case EventKind::Vote: {
        auto key = std::make_pair(e.round, e.attempt);
        if (!votes.count(key)) vote_order.push_back(key);
        votes[key][e.actor] = vote_from_string(e.payload.at("vote").get<std::string>());
        break;
      }
      case EventKind::QuestResult:
        c.previous_results.push_back(
            "Round " + std::to_string(e.round) + ": Team = " + join_players(team_of(e)) +
            ". Result = " + e.payload.at("outcome").get<std::string>());
        break;
      case EventKind::Summary:
        if (e.actor == subject && e.payload.at("of_round").get<int>() < round) {
          c.previous_rounds_summary.emplace_back(e.payload.at("of_round").get<int>(),
                                                 e.payload.at("text").get<std::string>());
        }
        break;
      case EventKind::Speech:
        if (e.round == round) {
          c.previous_discussions.emplace_back(player_name(e.actor),
                                              e.payload.at("text").get<std::string>());
        }
        break;
      default:
        break;
    }
  }
  for (const auto& key : vote_order) {
    const auto& v = votes[key];
    if (std::any_of(v.begin(), v.end(), [](auto& x) { return !x.has_value(); })) continue;
    std::string line = "Round " + std::to_string(key.first) + ":";
    int agree = 0;
    for (Seat s = 0; s < kPlayers; ++s) {
      line += (s ? ", " : " ") + player_name(s) + " = " + std::string(to_string(*v[s]));
      agree += *v[s] == VoteChoice::Agree;
    }
    line += agree * 2 > kPlayers ? "\n(players agreed on team)" : "\n(players didn't agree on team)";
    c.previous_rounds_team_voting.push_back(std::move(line));
  }
  return c;
}

std::string render_public_sections(const StructuredContext& c, bool compact_discussion_header) {
  std::string out;
  out += "Round: " + std::to_string(c.round) + "\n\n";
  if (c.speaker_name) out += "Speaker Name: " + *c.speaker_name + "\n\n";
  out += "Current Leader: " + c.current_leader + "\n\n";
  out += "Current Team: " + c.current_team + "\n\n";
  out += "Previous Rounds Team Voting:\n";
  for (const auto& l : c.previous_rounds_team_voting) out += l + "\n";
  out += "\nPrevious Results:\n";
  for (const auto& l : c.previous_results) out += l + "\n";
  out += "\nPrevious Rounds Summary:\n";
  for (const auto& [r, text] : c.previous_rounds_summary) {
    out += "Round " + std::to_string(r) + ":\n" + text + "\n";
  }
  out += compact_discussion_header ? "\nPrevious Discussions(in the current round):\n"
                                   : "\nPrevious Discussions (in the current round):\n";
  for (const auto& [who, text] : c.previous_discussions) out += who + ": " + text + "\n";
  return out;
}

std::string render_header(const StructuredContext& c) {
  return "Name: " + c.name + "\n\nRole: " + c.role + "\n\nRole Details:\n" + c.role_details +
         "\n";
}

namespace {

struct TurnEvents {
  const GameEvent* proposal = nullptr;
  const GameEvent* selected = nullptr;
  const GameEvent* thinking = nullptr;
  const GameEvent* revised = nullptr;
  const GameEvent* speech = nullptr;
};

TurnEvents turn_events(const Transcript& t, Seat seat, int round, std::optional<int> attempt) {
  int chosen = 0;
  if (attempt) {
    chosen = *attempt;
  } else {
    for (const auto& e : t.events()) {
      if (e.kind == EventKind::Speech && e.actor == seat && e.round == round) chosen = e.attempt;
    }
  }
  TurnEvents te;
  for (const auto& e : t.events()) {
    if (e.round != round || e.attempt != chosen) continue;
    if (e.kind == EventKind::TeamProposed) te.proposal = &e;
    if (e.actor != seat) continue;
    switch (e.kind) {
      case EventKind::IntentSelected: te.selected = &e; break;
      case EventKind::Thinking: te.thinking = &e; break;
      case EventKind::IntentRevised: te.revised = &e; break;
      case EventKind::Speech: te.speech = &e; break;
      default: break;
    }
  }
  if (!te.speech) {
    throw ExportError(ExportError::Code::NoSpeech,
                      player_name(seat) + " did not speak in round " + std::to_string(round));
  }
  return te;
}

std::vector<std::string> ids_of(const GameEvent* e) {
  if (!e) return {};
  return e->payload.at("ids").get<std::vector<std::string>>();
}

}  // namespace

ExportedContext export_summarization_context(const Transcript& t, Seat player, int round,
                                             const IntentionCatalog& catalog,
                                             std::optional<int> attempt) {
  if (player < 0 || player >= kPlayers) {
    throw ExportError(ExportError::Code::BadArgument, "player out of range");
  }
  TurnEvents te = turn_events(t, player, round, attempt);
  const RoleAssignment roles = t.roles();

  ExportedContext ex;
  ex.round = round;
  ex.attempt = te.speech->attempt;
  ex.context = build_view(t, player, round, te.speech->seq);
  ex.context.your_thinking = te.thinking ? te.thinking->payload.at("text").get<std::string>() : "";
  ex.context.your_speech = te.speech->payload.at("text").get<std::string>();
  ex.options = catalog.render_options(roles[player].name);
  ex.gold = ids_of(te.revised);
  ex.gold_pre_modification = ids_of(te.selected);

  const auto& c = ex.context;
  ex.text = render_header(c);
  ex.text += render_public_sections(c, /*compact_discussion_header=*/false);
  ex.text += "\nYour thinking: " + *c.your_thinking + "\n\n";
  ex.text += "Your speech: " + *c.your_speech + "\n\n";
  ex.text +=
      "Summarize your intent from your dialogues in this round.\n"
      "Select multiple intents from the given options that best match your intentions from the "
      "current round.\n"
      "Also, provide an explanation of the intents that you showed in the current round.\n"
      "Remember this is private information to you and won't be shown to other players.\n"
      "Remember that you can select 2-3 intents and don't use more than 50 words for "
      "explanation.\n"
      "Intent options:\n";
  ex.text += ex.options.text;
  return ex;
}

ExportedContext export_guessing_context(const Transcript& t, Seat observer, Seat speaker,
                                        int round, const IntentionCatalog& catalog,
                                        std::optional<int> attempt) {
  if (observer < 0 || observer >= kPlayers || speaker < 0 || speaker >= kPlayers) {
    throw ExportError(ExportError::Code::BadArgument, "seat out of range");
  }
  if (observer == speaker) {
    throw ExportError(ExportError::Code::SelfGuess, "observer and speaker are the same player");
  }
  TurnEvents te = turn_events(t, speaker, round, attempt);

  ExportedContext ex;
  ex.round = round;
  ex.attempt = te.speech->attempt;
  ex.context = build_view(t, observer, round, te.speech->seq);
  ex.context.speaker_name = player_name(speaker);
  ex.context.first_order_block = PromptLibrary::builtin()
                                     .get(PromptName::FirstOrder)
                                     .render({{"name", player_name(observer)}});
  ex.context.target_speech = te.speech->payload.at("text").get<std::string>();
  // The speaker's role is hidden from the observer, so the full catalog is offered.
  ex.options = catalog.render_all();
  ex.gold = ids_of(te.revised);
  ex.gold_pre_modification = ids_of(te.selected);

  const auto& c = ex.context;
  const std::string who = *c.speaker_name;
  ex.text = render_header(c);
  ex.text += render_public_sections(c, /*compact_discussion_header=*/true);
  ex.text += "\n" + *c.first_order_block + "\n";
  ex.text += "Now, here is " + who + "'s speech: " + *c.target_speech + "\n\n";
  ex.text += "Select 2-3 intents without modifications that you think " + who +
             " has from the given options based on your guess of their role and speech.\n"
             "Let's think step by step before making your decisions.\n"
             "Intent options:\n";
  ex.text += ex.options.text;
  return ex;
}

std::vector<std::string> find_leaks(const std::string& text, Seat subject,
                                    const RoleAssignment& roles) {
  const Role& me = roles.at(subject);
  std::vector<std::string> phrases;
  for (Seat s = 0; s < kPlayers; ++s) {
    if (s == subject) continue;
    const std::string n = player_name(s);
    const std::string role(to_string(roles[s].name));
    phrases.push_back(n + " is " + role);
    phrases.push_back(n + " is the " + role);
    if (roles[s].name == RoleName::Servant) phrases.push_back(n + " is a Loyal Servant");
    const bool knows_alignment =
        me.name == RoleName::Merlin || me.alignment == Alignment::Evil;
    if (roles[s].alignment == Alignment::Evil) {
      if (!knows_alignment) phrases.push_back(n + " is evil");
      if (me.alignment != Alignment::Evil) phrases.push_back(n + " is your evil teammate");
    }
  }
  std::vector<Seat> evil;
  Seat merlin = kNoSeat, morgana = kNoSeat;
  for (Seat s = 0; s < kPlayers; ++s) {
    if (roles[s].alignment == Alignment::Evil) evil.push_back(s);
    if (roles[s].name == RoleName::Merlin) merlin = s;
    if (roles[s].name == RoleName::Morgana) morgana = s;
  }
  if (me.name != RoleName::Merlin) phrases.push_back(pair_of(evil[0], evil[1]) + " are evil players");
  if (me.name != RoleName::Percival) {
    phrases.push_back(pair_of(std::min(merlin, morgana), std::max(merlin, morgana)) +
                      " are Merlin and Morgana");
  }

  std::vector<std::string> found;
  for (const auto& p : phrases) {
    if (text.find(p) != std::string::npos &&
        std::find(found.begin(), found.end(), p) == found.end()) {
      found.push_back(p);
    }
  }
  return found;
}

std::vector<SpeechRef> speeches(const Transcript& t) {
  std::vector<SpeechRef> out;
  for (const auto& e : t.events()) {
    if (e.kind == EventKind::Speech) out.push_back({e.actor, e.round, e.attempt});
  }
  return out;
}

}  // namespace avalon
