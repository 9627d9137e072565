#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace avalon {

enum class PromptName {
  System,
  Summarize,
  FirstOrder,
  IntentSelection,
  Formulation,
  IntentModification,
  Refinement,
  TeamProposal,
  TeamChange,
  Vote,
  QuestAction,
  Assassinate,
  IntentSummarize,
  IntentGuess,
};

std::string_view to_string(PromptName n);
PromptName prompt_name_from_string(std::string_view s);

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using PromptVars = std::map<std::string, std::string, std::less<>>;

// Text with {placeholder} slots. Placeholder names are [a-z_]+; any other
// brace usage is literal.
class PromptTemplate {
 public:
  PromptTemplate(std::string name, std::string body);

  const std::string& name() const { return name_; }
  const std::string& body() const { return body_; }
  const std::set<std::string>& placeholders() const { return placeholders_; }

  // Throws TemplateError naming every placeholder missing from vars.
  std::string render(const PromptVars& vars) const;

 private:
  std::string name_;
  std::string body_;
  std::set<std::string> placeholders_;
};

// Templates loaded from the embedded prompts/ resources.
class PromptLibrary {
 public:
  static const PromptLibrary& builtin();

  const PromptTemplate& get(PromptName n) const;
  // Override one template (experiments swap prompt text without rebuilding).
  void set(PromptName n, std::string body);

 private:
  std::map<PromptName, PromptTemplate> templates_;
};

}  // namespace avalon
