#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "avalon/backend.hpp"
#include "avalon/rng.hpp"

namespace avalon {

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

// Text after `key` up to end of line, or "".
std::string value_after(const std::string& text, const std::string& key) {
  auto p = text.find(key);
  if (p == std::string::npos) return "";
  p += key.size();
  auto e = text.find('\n', p);
  return text.substr(p, e == std::string::npos ? std::string::npos : e - p);
}

// Numbered "N. text" lines following the last "Intent options:" header.
std::vector<std::string> option_lines(const std::string& text) {
  std::vector<std::string> out;
  auto p = text.rfind("Intent options:");
  if (p == std::string::npos) return out;
  for (const auto& l : lines_of(text.substr(p))) {
    auto dot = l.find(". ");
    if (dot == std::string::npos || dot == 0) continue;
    if (!std::all_of(l.begin(), l.begin() + static_cast<long>(dot), ::isdigit)) continue;
    out.push_back(l.substr(dot + 2));
  }
  return out;
}

// "- text" lines that follow `header` until the first blank line.
std::vector<std::string> bullet_block(const std::string& text, const std::string& header) {
  std::vector<std::string> out;
  auto p = text.find(header);
  if (p == std::string::npos) return out;
  bool started = false;
  for (const auto& l : lines_of(text.substr(p + header.size()))) {
    if (l.rfind("- ", 0) == 0) {
      out.push_back(l.substr(2));
      started = true;
    } else if (started || !l.empty()) {
      if (started) break;
    }
  }
  return out;
}

std::string section(const std::string& text, const std::string& header) {
  auto p = text.find(header);
  if (p == std::string::npos) return "";
  p += header.size();
  auto e = text.find("\n\n", p);
  return text.substr(p, e == std::string::npos ? std::string::npos : e - p);
}

std::string strip_paren(std::string s) {
  auto p = s.rfind('(');
  if (p != std::string::npos && s.back() == ')') s = s.substr(0, p);
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

std::set<std::string> content_words(const std::string& s) {
  static const std::set<std::string> stop = {"that", "they", "them", "with", "your", "this",
                                             "from", "about", "have", "player", "players",
                                             "team", "will", "want", "their", "only"};
  std::set<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 4 && !stop.count(cur)) out.insert(cur);
    cur.clear();
  };
  for (unsigned char c : s) {
    if (std::isalpha(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string fenced(const std::string& prose, const std::string& block) {
  return prose + "\n```answer\n" + block + "\n```";
}

std::string join_numbers(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> pick_numbers(Rng& rng, int n, int k) {
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i + 1;
  rng.shuffle(all);
  all.resize(std::min(k, n));
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<Seat> players_in(const std::string& s) {
  std::vector<Seat> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    while (!tok.empty() && (tok.back() == ',' || tok.back() == '.')) tok.pop_back();
    if (auto seat = parse_player_name(tok)) out.push_back(*seat);
  }
  return out;
}

// A speech line that carries a few words of the intention without quoting it.
std::string speech_for(const std::string& intent, Rng& rng, Seat self) {
  std::istringstream in(strip_paren(intent));
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  std::size_t keep = std::min<std::size_t>(words.size(), 3 + rng.below(3));
  std::string phrase;
  for (std::size_t i = 0; i < keep; ++i) phrase += (i ? " " : "") + words[i];
  if (!phrase.empty()) phrase[0] = static_cast<char>(std::tolower(phrase[0]));
  Seat target = static_cast<Seat>(rng.below(kPlayers));
  if (target == self) target = (target + 1) % kPlayers;
  static const char* openers[] = {"I think it is time to", "Let me", "I would like to",
                                  "Right now I need to"};
  return std::string(openers[rng.below(4)]) + " " + phrase + ", and I am watching " +
         player_name(target) + ".";
}

}  // namespace

SyntheticBackend::SyntheticBackend(Options options) : options_(options) {}

ChatResponse SyntheticBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  const bool retry = request.messages.size() > 2;
  ChatResponse r;
  r.text = answer(request, retry);
  r.prompt_tokens = rough_tokens(request.messages);
  r.completion_tokens = rough_tokens({{"assistant", r.text}});
  return r;
}

std::string SyntheticBackend::answer(const ChatRequest& request, bool retry) {
  Rng rng(derive_seed(options_.seed, counter_++));
  std::string system, user;
  for (const auto& m : request.messages) {
    if (m.role == "system") system = m.content;
    if (m.role == "user" && user.empty()) user = m.content;
  }
  const std::string role = value_after(system, "Role: ");
  const bool evil = role == "Morgana" || role == "Assassin";
  const Seat self = parse_player_name(value_after(system, "Name: ")).value_or(0);
  const bool malformed = !retry && rng.chance(options_.malformed_rate);

  switch (request.prompt) {
    case PromptName::Summarize: {
      std::string last;
      for (const auto& l : lines_of(section(user, "Previous Results:\n"))) {
        if (!l.empty()) last = l;
      }
      return fenced("Looking back at the last round.",
                    (last.empty() ? std::string("No quest has finished yet.") : last) +
                        " I will keep an eye on who supported that team.");
    }
    case PromptName::FirstOrder: {
      static const char* reads[] = {"seems loyal so far", "might be hiding something",
                                    "is hard to read", "votes like a loyal player"};
      std::string block;
      for (Seat s = 0; s < kPlayers; ++s) {
        if (s == self) continue;
        block += player_name(s) + ": " + reads[rng.below(4)] + ".\n";
      }
      return fenced("My read of the table.", block);
    }
    case PromptName::IntentSelection:
    case PromptName::IntentModification: {
      const auto options = option_lines(user);
      const int n = static_cast<int>(options.size());
      std::vector<int> chosen;
      if (request.prompt == PromptName::IntentModification) {
        for (const auto& text : bullet_block(user, "Your selected intentions:\n")) {
          auto it = std::find(options.begin(), options.end(), text);
          if (it != options.end()) chosen.push_back(static_cast<int>(it - options.begin()) + 1);
        }
        if (chosen.size() >= 2 && rng.chance(options_.intent_change_rate)) {
          int replacement = static_cast<int>(rng.below(n)) + 1;
          if (std::find(chosen.begin(), chosen.end(), replacement) == chosen.end()) {
            chosen[rng.below(chosen.size())] = replacement;
          }
        }
        std::sort(chosen.begin(), chosen.end());
      }
      if (chosen.size() < 2) chosen = pick_numbers(rng, n, 2 + static_cast<int>(rng.below(2)));
      if (malformed) {
        switch (rng.below(3)) {
          case 0: return fenced("I choose these.", join_numbers(pick_numbers(rng, n, 4)));
          case 1: return "I would go with options " + join_numbers(chosen) + ".";
          default: return fenced("I choose these.", join_numbers({chosen[0], n + 1}));
        }
      }
      const char* prose = request.prompt == PromptName::IntentSelection
                              ? "These fit the situation best."
                              : "Others may read my draft as intended, so I keep my focus.";
      return fenced(prose, join_numbers(chosen));
    }
    case PromptName::Formulation: {
      const auto intents = bullet_block(user, "Your selected intentions for this turn:\n");
      std::string thinking = "My plan for this turn:";
      std::string speech;
      for (const auto& i : intents) {
        std::string t = strip_paren(i);
        if (!t.empty()) t[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(t[0])));
        thinking += " I will " + t + ".";
        speech += (speech.empty() ? "" : " ") + speech_for(i, rng, self);
      }
      if (speech.empty()) speech = "I have nothing to add yet.";
      return fenced(thinking, speech);
    }
    case PromptName::Refinement: {
      std::string speech;
      for (const auto& i : bullet_block(user, "Your intentions after reflection:\n")) {
        speech += (speech.empty() ? "" : " ") + speech_for(i, rng, self);
      }
      if (speech.empty()) speech = section(user, "Your draft speech:\n");
      if (speech.empty()) speech = "I have nothing to add yet.";
      return fenced("Tightening the wording.", speech);
    }
    case PromptName::TeamProposal: {
      int size = std::atoi(value_after(user, "a team of exactly ").c_str());
      if (size < 1 || size > kPlayers) size = 2;
      std::vector<Seat> others;
      for (Seat s = 0; s < kPlayers; ++s) {
        if (s != self) others.push_back(s);
      }
      rng.shuffle(others);
      std::vector<Seat> team;
      if (rng.chance(0.7)) team.push_back(self);
      for (Seat s : others) {
        if (static_cast<int>(team.size()) == size) break;
        team.push_back(s);
      }
      std::sort(team.begin(), team.end());
      if (malformed) return "I pick " + join_players(team) + ".";
      return fenced("This team looks reasonable.", join_players(team));
    }
    case PromptName::TeamChange: {
      auto team = players_in(value_after(user, "you proposed: "));
      std::string prose = "The discussion did not change my mind.";
      if (!team.empty() && rng.chance(options_.team_change_rate)) {
        std::vector<Seat> outside;
        for (Seat s = 0; s < kPlayers; ++s) {
          if (std::find(team.begin(), team.end(), s) == team.end()) outside.push_back(s);
        }
        if (!outside.empty()) {
          team[rng.below(team.size())] = rng.pick(outside);
          std::sort(team.begin(), team.end());
          prose = "The discussion raised doubts, so I am swapping one member.";
        }
      }
      if (malformed) return fenced(prose, join_players(team) + ", " + player_name(self));
      return fenced(prose, join_players(team));
    }
    case PromptName::Vote: {
      const bool agree = rng.chance(options_.agree_rate);
      if (malformed) return agree ? "I agree with this team." : "I cannot support this.";
      return fenced("Weighing the team.", agree ? "agree" : "disagree");
    }
    case PromptName::QuestAction: {
      const bool fail = evil && rng.chance(options_.evil_fail_rate);
      if (malformed) return "I will play " + std::string(fail ? "fail" : "success");
      return fenced("1. Scores noted. 2. Suspicion considered. 3. Decided.",
                    fail ? "fail" : "success");
    }
    case PromptName::Assassinate: {
      auto candidates = players_in(value_after(user, "Candidates: "));
      Seat pick = candidates.empty() ? 0 : rng.pick(candidates);
      return fenced("Merlin guided the votes too well.", player_name(pick));
    }
    case PromptName::IntentSummarize:
    case PromptName::IntentGuess: {
      const auto options = option_lines(user);
      std::string evidence;
      if (request.prompt == PromptName::IntentSummarize) {
        evidence = value_after(user, "Your thinking: ") + " " + value_after(user, "Your speech: ");
      } else {
        auto p = user.find("Now, here is ");
        evidence = p == std::string::npos ? "" : value_after(user.substr(p), "speech: ");
      }
      const auto ev = content_words(evidence);
      std::vector<std::pair<double, int>> scored;
      for (std::size_t i = 0; i < options.size(); ++i) {
        const auto ow = content_words(strip_paren(options[i]));
        double hits = 0;
        for (const auto& w : ow) hits += ev.count(w);
        double score = ow.empty() ? 0 : hits / static_cast<double>(ow.size());
        scored.emplace_back(-score - 1e-6 * rng.unit(), static_cast<int>(i) + 1);
      }
      std::sort(scored.begin(), scored.end());
      std::vector<int> picked;
      for (std::size_t i = 0; i < scored.size() && picked.size() < 3; ++i) {
        if (picked.size() >= 2 && -scored[i].first < 0.5 * -scored[0].first) break;
        picked.push_back(scored[i].second);
      }
      std::sort(picked.begin(), picked.end());
      return fenced("Matching the options against what was said.", join_numbers(picked));
    }
    case PromptName::System:
      break;
  }
  return fenced("", "pass");
}

}  // namespace avalon
