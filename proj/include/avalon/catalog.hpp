#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "avalon/types.hpp"

namespace avalon {

enum class IntentCategory {
  Interrogation,
  Defense,
  Confrontation,
  Concealment,
  Deception,
  Persuasion,
  Teamwork,
};

inline constexpr int kIntentCategories = 7;

std::string_view to_string(IntentCategory c);
IntentCategory category_from_string(std::string_view s);

struct Intention {
  std::string id;
  IntentCategory category = IntentCategory::Interrogation;
  std::string text;
  // Empty means every role may pick it.
  std::vector<RoleName> eligible_roles;
  bool impactful = false;

  bool eligible(RoleName r) const;
  bool operator==(const Intention&) const = default;
};

// Lowercase, ASCII alphanumerics only, trailing "(for X)" dropped, first 8
// words joined by '-'.
std::string slugify(std::string_view text);

// Reads the trailing parenthetical of a catalog sentence: "(for Merlin)",
// "(for evil players)", "(for evil/Servant)", "(Merlin)", ... Result is in
// canonical role order; empty when there is no parenthetical.
std::vector<RoleName> parse_eligibility(std::string_view text);

// A rendered, numbered option list. numbers are 1-based positions in ids.
struct OptionList {
  std::vector<std::string> ids;
  std::string text;

  // Maps a 1-based option number to its id.
  std::optional<std::string> id_for(int number) const;
  std::optional<int> number_for(std::string_view id) const;
};

enum class SelectionViolationKind { TooFew, TooMany, UnknownId, Ineligible, Duplicate };
std::string_view to_string(SelectionViolationKind k);

struct SelectionViolation {
  SelectionViolationKind kind;
  std::string id;  // empty for count violations

  bool operator==(const SelectionViolation&) const = default;
};

inline constexpr int kMinSelected = 2;
inline constexpr int kMaxSelected = 3;

class IntentionCatalog {
 public:
  IntentionCatalog() = default;
  IntentionCatalog(std::string version, std::vector<Intention> intentions);

  // The catalog compiled into the library.
  static const IntentionCatalog& builtin();

  // Line-delimited JSON: a header line {"schema","version"} followed by one
  // intention per line. Throws std::runtime_error on malformed input.
  static IntentionCatalog from_jsonl(std::string_view data);
  std::string to_jsonl() const;
  // FNV-1a 64 over to_jsonl().
  std::uint64_t checksum() const;

  const std::string& version() const { return version_; }
  const std::vector<Intention>& intentions() const { return intentions_; }
  std::size_t size() const { return intentions_.size(); }

  const Intention* find(std::string_view id) const;
  const Intention& at(std::string_view id) const;

  std::vector<const Intention*> eligible_for(RoleName role, bool impactful_only = false) const;
  std::vector<std::string> impactful_ids() const;

  // Empty result means the selection is valid.
  std::vector<SelectionViolation> validate_selection(RoleName role,
                                                     const std::vector<std::string>& chosen) const;
  bool valid_selection(RoleName role, const std::vector<std::string>& chosen) const {
    return validate_selection(role, chosen).empty();
  }

  // "1. text\n2. text\n..." over the role's eligible intentions, skipping
  // masked ids and renumbering the rest.
  OptionList render_options(RoleName role, const std::set<std::string>* mask = nullptr) const;
  // Same layout over every intention, regardless of role.
  OptionList render_all(const std::set<std::string>* mask = nullptr) const;
  // Ids of all non-impactful intentions, the usual mask for annotation.
  std::set<std::string> non_impactful_mask() const;

 private:
  void check_invariants() const;

  std::string version_;
  std::vector<Intention> intentions_;
};

}  // namespace avalon
