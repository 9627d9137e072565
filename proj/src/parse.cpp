#include "avalon/parse.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace avalon {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Splits on commas, whitespace and semicolons.
std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ';' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

Parsed<FencedReply> split_fenced(std::string_view text) {
  const std::string_view fence = "```";
  std::size_t close = text.rfind(fence);
  if (close == std::string_view::npos) return Parsed<FencedReply>::fail("missing fenced block");
  // Anything but whitespace after the closing fence means the reply does
  // not end with the block.
  if (!trim(text.substr(close + fence.size())).empty()) {
    return Parsed<FencedReply>::fail("reply must end with the fenced block");
  }
  std::size_t open = close == 0 ? std::string_view::npos : text.rfind(fence, close - 1);
  if (open == std::string_view::npos) return Parsed<FencedReply>::fail("unterminated fenced block");
  std::size_t body = open + fence.size();
  std::size_t eol = text.find('\n', body);
  if (eol == std::string_view::npos || eol > close) {
    return Parsed<FencedReply>::fail("fenced block must start on its own line");
  }
  // The info string (e.g. "answer") on the opening line is ignored.
  FencedReply r;
  r.prose = trim(text.substr(0, open));
  r.block = trim(text.substr(eol + 1, close - eol - 1));
  return Parsed<FencedReply>::ok(std::move(r));
}

Parsed<FencedReply> parse_text_block(std::string_view text) {
  auto f = split_fenced(text);
  if (!f) return f;
  if (f.value->block.empty()) return Parsed<FencedReply>::fail("fenced block is empty");
  return f;
}

Parsed<std::vector<std::string>> parse_selection(std::string_view text, const OptionList& options,
                                                 const IntentionCatalog& catalog, RoleName role) {
  using R = Parsed<std::vector<std::string>>;
  auto f = split_fenced(text);
  if (!f) return R::fail(f.error);
  std::vector<std::string> ids;
  for (const auto& tok : tokens(f.value->block)) {
    std::string t = tok;
    if (!t.empty() && t.back() == '.') t.pop_back();
    int n = 0;
    if (t.empty() || t.size() > 6 || !std::all_of(t.begin(), t.end(), ::isdigit)) {
      return R::fail("'" + tok + "' is not an option number");
    }
    n = std::stoi(t);
    auto id = options.id_for(n);
    if (!id) return R::fail("option " + t + " does not exist");
    ids.push_back(*id);
  }
  auto violations = catalog.validate_selection(role, ids);
  if (!violations.empty()) {
    std::string why;
    for (const auto& v : violations) {
      if (!why.empty()) why += "; ";
      why += std::string(to_string(v.kind));
      if (!v.id.empty()) why += " " + v.id;
    }
    if (why.find("TooMany") != std::string::npos || why.find("TooFew") != std::string::npos) {
      why += " (select 2 or 3 options)";
    }
    return R::fail(why);
  }
  return R::ok(std::move(ids));
}

Parsed<std::vector<std::string>> parse_choice(std::string_view text, const OptionList& options) {
  using R = Parsed<std::vector<std::string>>;
  auto f = split_fenced(text);
  if (!f) return R::fail(f.error);
  std::vector<std::string> ids;
  for (const auto& tok : tokens(f.value->block)) {
    std::string t = tok;
    if (!t.empty() && t.back() == '.') t.pop_back();
    if (t.empty() || t.size() > 6 || !std::all_of(t.begin(), t.end(), ::isdigit)) {
      return R::fail("'" + tok + "' is not an option number");
    }
    auto id = options.id_for(std::stoi(t));
    if (!id) return R::fail("option " + t + " does not exist");
    if (std::find(ids.begin(), ids.end(), *id) != ids.end()) return R::fail("option " + t + " repeated");
    ids.push_back(*id);
  }
  if (ids.size() < static_cast<std::size_t>(kMinSelected) ||
      ids.size() > static_cast<std::size_t>(kMaxSelected)) {
    return R::fail("select 2 or 3 options");
  }
  return R::ok(std::move(ids));
}

Parsed<VoteChoice> parse_vote(std::string_view text) {
  auto f = split_fenced(text);
  if (!f) return Parsed<VoteChoice>::fail(f.error);
  std::string b = lower(f.value->block);
  if (b == "agree") return Parsed<VoteChoice>::ok(VoteChoice::Agree);
  if (b == "disagree") return Parsed<VoteChoice>::ok(VoteChoice::Disagree);
  return Parsed<VoteChoice>::fail("vote must be 'agree' or 'disagree'");
}

Parsed<QuestAction> parse_quest_action(std::string_view text) {
  auto f = split_fenced(text);
  if (!f) return Parsed<QuestAction>::fail(f.error);
  std::string b = lower(f.value->block);
  if (b == "success") return Parsed<QuestAction>::ok(QuestAction::Success);
  if (b == "fail" || b == "failure") return Parsed<QuestAction>::ok(QuestAction::Fail);
  return Parsed<QuestAction>::fail("action must be 'success' or 'fail'");
}

Parsed<std::vector<Seat>> parse_team(std::string_view text, int size) {
  using R = Parsed<std::vector<Seat>>;
  auto f = split_fenced(text);
  if (!f) return R::fail(f.error);
  std::set<Seat> seats;
  for (const auto& tok : tokens(f.value->block)) {
    auto s = parse_player_name(tok);
    if (!s) return R::fail("'" + tok + "' is not a player");
    if (!seats.insert(*s).second) return R::fail(tok + " listed twice");
  }
  if (static_cast<int>(seats.size()) != size) {
    return R::fail("team must have exactly " + std::to_string(size) + " players");
  }
  return R::ok(std::vector<Seat>(seats.begin(), seats.end()));
}

Parsed<Seat> parse_player(std::string_view text) {
  auto f = split_fenced(text);
  if (!f) return Parsed<Seat>::fail(f.error);
  auto s = parse_player_name(trim(f.value->block));
  if (!s) return Parsed<Seat>::fail("expected a single player name");
  return Parsed<Seat>::ok(*s);
}

}  // namespace avalon
