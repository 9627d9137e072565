#include "doctest.h"
#include "avalon/parse.hpp"

using namespace avalon;

namespace {
std::string fenced(const std::string& prose, const std::string& block) {
  return prose + "\n```answer\n" + block + "\n```\n";
}
}  // namespace

TEST_SUITE("parse") {
  TEST_CASE("fenced block split") {
    auto r = split_fenced("I think so.\n```answer\nagree\n```");
    REQUIRE(r);
    CHECK(r.value->prose == "I think so.");
    CHECK(r.value->block == "agree");
    CHECK(split_fenced("```\nx\n```").value->block == "x");
    // The last block wins.
    r = split_fenced("```\nfirst\n```\nthen\n```answer\nsecond\n```\n");
    REQUIRE(r);
    CHECK(r.value->block == "second");
    CHECK(r.value->prose == "```\nfirst\n```\nthen");

    CHECK_FALSE(split_fenced("agree"));
    CHECK_FALSE(split_fenced("```answer\nagree\n``` trailing"));
    CHECK_FALSE(split_fenced("``` agree```"));
    CHECK(split_fenced("no fence").error == "missing fenced block");
    CHECK_FALSE(parse_text_block("```\n\n```"));
  }

  TEST_CASE("votes, quest actions, teams, players") {
    CHECK(parse_vote(fenced("", "Agree")).value == VoteChoice::Agree);
    CHECK(parse_vote(fenced("", "disagree")).value == VoteChoice::Disagree);
    CHECK_FALSE(parse_vote(fenced("", "maybe")));
    CHECK(parse_quest_action(fenced("", "fail")).value == QuestAction::Fail);
    CHECK_FALSE(parse_quest_action("success"));

    auto t = parse_team(fenced("", "Player1, Player3"), 2);
    REQUIRE(t);
    CHECK(*t.value == std::vector<Seat>{0, 2});
    CHECK_FALSE(parse_team(fenced("", "Player1, Player3, Player4"), 2));
    CHECK_FALSE(parse_team(fenced("", "Player1, Player1"), 2));
    CHECK_FALSE(parse_team(fenced("", "Player1, Player9"), 2));
    CHECK(parse_player(fenced("", "Player5")).value == 4);
    CHECK_FALSE(parse_player(fenced("", "Player5, Player4")));
  }

  TEST_CASE("intention selection maps numbers through the option list") {
    const auto& c = IntentionCatalog::builtin();
    auto opts = c.render_options(RoleName::Servant);
    auto r = parse_selection(fenced("because", "1, 2"), opts, c, RoleName::Servant);
    REQUIRE(r);
    CHECK(*r.value == std::vector<std::string>{opts.ids[0], opts.ids[1]});
    CHECK(parse_selection(fenced("", "1. 2."), opts, c, RoleName::Servant));

    CHECK_FALSE(parse_selection(fenced("", "1"), opts, c, RoleName::Servant));
    CHECK_FALSE(parse_selection(fenced("", "1, 2, 3, 4"), opts, c, RoleName::Servant));
    CHECK_FALSE(parse_selection(fenced("", "1, 99"), opts, c, RoleName::Servant));
    CHECK_FALSE(parse_selection(fenced("", "one, two"), opts, c, RoleName::Servant));
    CHECK_FALSE(parse_selection(fenced("", "1, 99999999999999"), opts, c, RoleName::Servant));
    CHECK_FALSE(parse_selection("1, 2", opts, c, RoleName::Servant));
    auto e = parse_selection(fenced("", "1, 1"), opts, c, RoleName::Servant);
    CHECK(e.error.find("Duplicate") != std::string::npos);
    // A Merlin-only option under a Servant's numbering is ineligible.
    auto merlin = c.render_options(RoleName::Merlin);
    int merlin_only = 0;
    for (std::size_t i = 0; i < merlin.ids.size(); ++i) {
      if (!c.at(merlin.ids[i]).eligible(RoleName::Servant)) merlin_only = static_cast<int>(i) + 1;
    }
    REQUIRE(merlin_only > 0);
    auto inel = parse_selection(fenced("", "1, " + std::to_string(merlin_only)), merlin, c,
                                RoleName::Servant);
    CHECK(inel.error.find("Ineligible") != std::string::npos);
  }

  TEST_CASE("choice parsing ignores role eligibility") {
    const auto& c = IntentionCatalog::builtin();
    auto all = c.render_all();
    auto r = parse_choice(fenced("", "3, 30"), all);
    REQUIRE(r);
    CHECK(*r.value == std::vector<std::string>{all.ids[2], all.ids[29]});
    CHECK_FALSE(parse_choice(fenced("", "3"), all));
    CHECK_FALSE(parse_choice(fenced("", "1, 2, 3, 4"), all));
    CHECK_FALSE(parse_choice(fenced("", "3, 3"), all));
    CHECK_FALSE(parse_choice(fenced("", "3, 40"), all));
  }
}
