#include "avalon/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

#include "avalon/resources.hpp"
#include "json.hpp"

namespace avalon {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<std::string_view, IntentCategory>, kIntentCategories> kCategories{{
    {"Interrogation", IntentCategory::Interrogation},
    {"Defense", IntentCategory::Defense},
    {"Confrontation", IntentCategory::Confrontation},
    {"Concealment", IntentCategory::Concealment},
    {"Deception", IntentCategory::Deception},
    {"Persuasion", IntentCategory::Persuasion},
    {"Teamwork", IntentCategory::Teamwork},
}};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Span of a trailing "(...)" group, or npos.
std::size_t trailing_paren(std::string_view text) {
  auto t = trim(text);
  if (t.empty() || t.back() != ')') return std::string_view::npos;
  return t.rfind('(');
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(IntentCategory c) {
  for (const auto& [name, value] : kCategories) {
    if (value == c) return name;
  }
  return "?";
}

IntentCategory category_from_string(std::string_view s) {
  for (const auto& [name, value] : kCategories) {
    if (name == s) return value;
  }
  throw std::invalid_argument("unknown intention category: " + std::string(s));
}

std::string_view to_string(SelectionViolationKind k) {
  switch (k) {
    case SelectionViolationKind::TooFew: return "TooFew";
    case SelectionViolationKind::TooMany: return "TooMany";
    case SelectionViolationKind::UnknownId: return "UnknownId";
    case SelectionViolationKind::Ineligible: return "Ineligible";
    case SelectionViolationKind::Duplicate: return "Duplicate";
  }
  return "?";
}

bool Intention::eligible(RoleName r) const {
  return eligible_roles.empty() ||
         std::find(eligible_roles.begin(), eligible_roles.end(), r) != eligible_roles.end();
}

std::string slugify(std::string_view text) {
  if (auto p = trailing_paren(text); p != std::string_view::npos) text = text.substr(0, p);
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) && c < 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (std::isspace(c)) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    }
    // everything else (punctuation, UTF-8 bytes) is dropped in place
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  std::string out;
  for (std::size_t i = 0; i < words.size() && i < 8; ++i) {
    if (i) out += '-';
    out += words[i];
  }
  return out;
}

std::vector<RoleName> parse_eligibility(std::string_view text) {
  auto p = trailing_paren(text);
  if (p == std::string_view::npos) return {};
  auto t = trim(text);
  std::string_view inner = trim(t.substr(p + 1, t.size() - p - 2));
  if (inner.substr(0, 4) == "for ") inner = trim(inner.substr(4));

  // Split on ',', '/', and the word "and".
  std::string normalized(inner);
  for (char& c : normalized) {
    if (c == ',' || c == '/') c = '|';
  }
  std::string buf;
  for (std::size_t i = 0; i < normalized.size();) {
    if (normalized.compare(i, 5, " and ") == 0) {
      buf += '|';
      i += 5;
    } else {
      buf += normalized[i++];
    }
  }

  std::set<RoleName> roles;
  std::stringstream ss(buf);
  std::string part;
  while (std::getline(ss, part, '|')) {
    auto token = trim(part);
    if (token.empty()) continue;
    if (token == "evil players" || token == "evil") {
      roles.insert(RoleName::Morgana);
      roles.insert(RoleName::Assassin);
    } else {
      roles.insert(role_from_string(token));
    }
  }
  std::vector<RoleName> out;
  for (RoleName r : kAllRoles) {
    if (roles.count(r)) out.push_back(r);
  }
  return out;
}

std::optional<std::string> OptionList::id_for(int number) const {
  if (number < 1 || number > static_cast<int>(ids.size())) return std::nullopt;
  return ids[number - 1];
}

std::optional<int> OptionList::number_for(std::string_view id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

IntentionCatalog::IntentionCatalog(std::string version, std::vector<Intention> intentions)
    : version_(std::move(version)), intentions_(std::move(intentions)) {
  check_invariants();
}

void IntentionCatalog::check_invariants() const {
  std::set<std::string> ids, texts;
  for (const auto& i : intentions_) {
    if (i.id.empty() || i.text.empty()) throw std::runtime_error("intention with empty id/text");
    if (!ids.insert(i.id).second) throw std::runtime_error("duplicate intention id " + i.id);
    if (!texts.insert(i.text).second) throw std::runtime_error("duplicate intention text " + i.text);
  }
}

const IntentionCatalog& IntentionCatalog::builtin() {
  static const IntentionCatalog catalog = from_jsonl(resource("intentions.jsonl"));
  return catalog;
}

IntentionCatalog IntentionCatalog::from_jsonl(std::string_view data) {
  std::string version;
  std::vector<Intention> items;
  std::istringstream in{std::string(data)};
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("catalog line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!header) {
      if (j.value("schema", "") != "intention-catalog") {
        throw std::runtime_error("catalog header missing");
      }
      version = j.at("version").get<std::string>();
      header = true;
      continue;
    }
    Intention it;
    it.id = j.at("id").get<std::string>();
    it.category = category_from_string(j.at("category").get<std::string>());
    it.text = j.at("text").get<std::string>();
    for (const auto& r : j.at("eligible_roles")) it.eligible_roles.push_back(role_from_string(r.get<std::string>()));
    it.impactful = j.at("impactful").get<bool>();
    items.push_back(std::move(it));
  }
  if (!header) throw std::runtime_error("empty catalog");
  return IntentionCatalog(std::move(version), std::move(items));
}

std::string IntentionCatalog::to_jsonl() const {
  std::string out = json{{"schema", "intention-catalog"}, {"version", version_}}.dump() + "\n";
  for (const auto& i : intentions_) {
    json roles = json::array();
    for (RoleName r : i.eligible_roles) roles.push_back(std::string(to_string(r)));
    json j = {{"id", i.id},
              {"category", std::string(to_string(i.category))},
              {"text", i.text},
              {"eligible_roles", roles},
              {"impactful", i.impactful}};
    out += j.dump() + "\n";
  }
  return out;
}

std::uint64_t IntentionCatalog::checksum() const { return fnv1a64(to_jsonl()); }

const Intention* IntentionCatalog::find(std::string_view id) const {
  for (const auto& i : intentions_) {
    if (i.id == id) return &i;
  }
  return nullptr;
}

const Intention& IntentionCatalog::at(std::string_view id) const {
  if (auto* i = find(id)) return *i;
  throw std::out_of_range("unknown intention id " + std::string(id));
}

std::vector<const Intention*> IntentionCatalog::eligible_for(RoleName role,
                                                             bool impactful_only) const {
  std::vector<const Intention*> out;
  for (const auto& i : intentions_) {
    if (i.eligible(role) && (!impactful_only || i.impactful)) out.push_back(&i);
  }
  return out;
}

std::vector<std::string> IntentionCatalog::impactful_ids() const {
  std::vector<std::string> out;
  for (const auto& i : intentions_) {
    if (i.impactful) out.push_back(i.id);
  }
  return out;
}

std::vector<SelectionViolation> IntentionCatalog::validate_selection(
    RoleName role, const std::vector<std::string>& chosen) const {
  std::vector<SelectionViolation> out;
  if (static_cast<int>(chosen.size()) < kMinSelected) {
    out.push_back({SelectionViolationKind::TooFew, ""});
  } else if (static_cast<int>(chosen.size()) > kMaxSelected) {
    out.push_back({SelectionViolationKind::TooMany, ""});
  }
  std::set<std::string> seen;
  for (const auto& id : chosen) {
    if (!seen.insert(id).second) {
      out.push_back({SelectionViolationKind::Duplicate, id});
      continue;
    }
    const Intention* i = find(id);
    if (!i) {
      out.push_back({SelectionViolationKind::UnknownId, id});
    } else if (!i->eligible(role)) {
      out.push_back({SelectionViolationKind::Ineligible, id});
    }
  }
  return out;
}

namespace {

OptionList render(const std::vector<const Intention*>& items, const std::set<std::string>* mask) {
  OptionList list;
  for (const Intention* i : items) {
    if (mask && mask->count(i->id)) continue;
    list.ids.push_back(i->id);
    list.text += std::to_string(list.ids.size()) + ". " + i->text + "\n";
  }
  return list;
}

}  // namespace

OptionList IntentionCatalog::render_options(RoleName role, const std::set<std::string>* mask) const {
  return render(eligible_for(role), mask);
}

OptionList IntentionCatalog::render_all(const std::set<std::string>* mask) const {
  std::vector<const Intention*> all;
  for (const auto& i : intentions_) all.push_back(&i);
  return render(all, mask);
}

std::set<std::string> IntentionCatalog::non_impactful_mask() const {
  std::set<std::string> out;
  for (const auto& i : intentions_) {
    if (!i.impactful) out.insert(i.id);
  }
  return out;
}

}  // namespace avalon
