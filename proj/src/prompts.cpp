#include "avalon/prompts.hpp"

#include <array>

#include "avalon/resources.hpp"

namespace avalon {

namespace {

constexpr std::array<std::pair<std::string_view, PromptName>, 14> kNames{{
    {"system", PromptName::System},
    {"summarize", PromptName::Summarize},
    {"first_order", PromptName::FirstOrder},
    {"intent_selection", PromptName::IntentSelection},
    {"formulation", PromptName::Formulation},
    {"intent_modification", PromptName::IntentModification},
    {"refinement", PromptName::Refinement},
    {"team_proposal", PromptName::TeamProposal},
    {"team_change", PromptName::TeamChange},
    {"vote", PromptName::Vote},
    {"quest_action", PromptName::QuestAction},
    {"assassinate", PromptName::Assassinate},
    {"intent_summarize", PromptName::IntentSummarize},
    {"intent_guess", PromptName::IntentGuess},
}};

bool placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls fn(start, end, name) for each {name} slot in body.
template <typename Fn>
void scan(std::string_view body, Fn fn) {
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < body.size() && placeholder_char(body[j])) ++j;
    if (j > i + 1 && j < body.size() && body[j] == '}') {
      fn(i, j + 1, body.substr(i + 1, j - i - 1));
      i = j;
    }
  }
}

}  // namespace

std::string_view to_string(PromptName n) {
  for (const auto& [name, value] : kNames) {
    if (value == n) return name;
  }
  return "?";
}

PromptName prompt_name_from_string(std::string_view s) {
  for (const auto& [name, value] : kNames) {
    if (name == s) return value;
  }
  throw TemplateError("unknown prompt name: " + std::string(s));
}

PromptTemplate::PromptTemplate(std::string name, std::string body)
    : name_(std::move(name)), body_(std::move(body)) {
  scan(body_, [&](std::size_t, std::size_t, std::string_view p) {
    placeholders_.insert(std::string(p));
  });
}

std::string PromptTemplate::render(const PromptVars& vars) const {
  std::string missing;
  for (const auto& p : placeholders_) {
    if (!vars.count(p)) missing += (missing.empty() ? "" : ", ") + p;
  }
  if (!missing.empty()) {
    throw TemplateError("template '" + name_ + "' is missing values for: " + missing);
  }
  std::string out;
  std::size_t last = 0;
  scan(body_, [&](std::size_t start, std::size_t end, std::string_view p) {
    out.append(body_, last, start - last);
    out += vars.find(p)->second;
    last = end;
  });
  out.append(body_, last, std::string::npos);
  return out;
}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary lib = [] {
    PromptLibrary l;
    for (const auto& [name, value] : kNames) {
      l.set(value, std::string(resource("prompts/" + std::string(name) + ".txt")));
    }
    return l;
  }();
  return lib;
}

const PromptTemplate& PromptLibrary::get(PromptName n) const {
  auto it = templates_.find(n);
  if (it == templates_.end()) throw TemplateError("no template " + std::string(to_string(n)));
  return it->second;
}

void PromptLibrary::set(PromptName n, std::string body) {
  templates_.insert_or_assign(n, PromptTemplate(std::string(to_string(n)), std::move(body)));
}

}  // namespace avalon
