#pragma once

#include <string_view>
#include <vector>

namespace avalon {

// Files under resources/ compiled into the library, keyed by relative path
// ("intentions.jsonl", "prompts/vote.txt", ...). Throws std::out_of_range
// for unknown names.
std::string_view resource(std::string_view name);
std::vector<std::string_view> resource_names();

}  // namespace avalon
