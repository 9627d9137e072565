#include "doctest.h"
#include "helpers.hpp"
#include "avalon/parse.hpp"

using namespace avalon;

namespace {

std::vector<EventKind> kinds_of(const Transcript& t, int round, int attempt) {
  std::vector<EventKind> out;
  for (const auto& e : t.events()) {
    if (e.round == round && e.attempt == attempt) out.push_back(e.kind);
  }
  return out;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("round pipeline emits events in order") {
    auto t = test::play_scripted("order", 3);
    auto k = kinds_of(t, 1, 1);
    REQUIRE(k.size() > 10);
    CHECK(k[0] == EventKind::RoleAssigned);
    // Leader's initial team precedes the first speech; each speaker runs the
    // full intention pipeline before speaking.
    auto first = [&](EventKind x) {
      return std::find(k.begin(), k.end(), x) - k.begin();
    };
    CHECK(first(EventKind::TeamProposed) < first(EventKind::Speech));
    const std::vector<EventKind> turn = {EventKind::FirstOrder,  EventKind::IntentSelected,
                                         EventKind::Thinking,    EventKind::DraftSpeech,
                                         EventKind::SecondOrder, EventKind::IntentRevised,
                                         EventKind::Speech};
    auto at = std::search(k.begin(), k.end(), turn.begin(), turn.end());
    CHECK(at != k.end());
    CHECK(std::count(k.begin(), k.end(), EventKind::Speech) == kPlayers);
    CHECK(std::count(k.begin(), k.end(), EventKind::Vote) == kPlayers);
    CHECK(first(EventKind::Speech) < first(EventKind::Vote));
    // Summaries open every later round, one per seat.
    auto k2 = kinds_of(t, 2, 1);
    CHECK(std::count(k2.begin(), k2.begin() + kPlayers, EventKind::Summary) == kPlayers);
  }

  TEST_CASE("timestamps are a logical clock") {
    auto t = test::play_scripted("clock", 4);
    for (std::size_t i = 0; i < t.events().size(); ++i) {
      CHECK(t.events()[i].seq == static_cast<std::int64_t>(i));
      CHECK(t.events()[i].timestamp == static_cast<std::int64_t>(i));
    }
  }

  TEST_CASE("speakers start at the leader and wrap around") {
    auto t = test::play_scripted("speakers", 8);
    std::vector<Seat> order;
    for (const GameEvent* e : t.of_kind(EventKind::Speech)) {
      if (e->round == 1 && e->attempt == 1) order.push_back(e->actor);
    }
    const Seat leader = t.of_kind(EventKind::TeamProposed).front()->actor;
    REQUIRE(order.size() == kPlayers);
    for (int i = 0; i < kPlayers; ++i) CHECK(order[i] == (leader + i) % kPlayers);
  }

  TEST_CASE("loyal fail requests are coerced to success") {
    ScriptPolicy policy;
    policy.loyal_action = QuestAction::Fail;
    auto t = test::play_scripted("coerce", 6, policy);
    const auto roles = t.roles();
    int coerced = 0;
    for (const GameEvent* e : t.of_kind(EventKind::QuestAction)) {
      if (roles[e->actor].alignment == Alignment::Evil) continue;
      CHECK(e->payload.at("action") == "success");
      coerced += e->payload.value("coerced", false);
    }
    CHECK(coerced > 0);
  }

  TEST_CASE("every fixture reply is rejected by its parser") {
    const auto text = test::read_file(test::fixture("malformed_completions.jsonl"));
    const auto& c = IntentionCatalog::builtin();
    const auto options = c.render_options(RoleName::Servant);
    std::istringstream in(text);
    int n = 0;
    for (std::string line; std::getline(in, line);) {
      auto j = nlohmann::json::parse(line);
      const auto reply = j.at("reply").get<std::string>();
      const auto prompt = prompt_name_from_string(j.at("prompt").get<std::string>());
      CAPTURE(reply);
      switch (prompt) {
        case PromptName::IntentSelection:
        case PromptName::IntentModification:
          CHECK_FALSE(parse_selection(reply, options, c, RoleName::Servant));
          break;
        case PromptName::TeamProposal:
        case PromptName::TeamChange:
          CHECK_FALSE(parse_team(reply, 2));
          break;
        case PromptName::Vote:
          CHECK_FALSE(parse_vote(reply));
          break;
        case PromptName::QuestAction:
          CHECK_FALSE(parse_quest_action(reply));
          break;
        default:
          FAIL("unexpected prompt in fixture");
      }
      ++n;
    }
    CHECK(n == 30);
  }

  TEST_CASE("malformed completions never abort a game") {
    auto run = test::run_malformed(test::read_file(test::fixture("malformed_completions.jsonl")), 77);
    CHECK(run.replies == 30);
    CHECK(run.aborted == 0);
    CHECK(run.leftover == 0);
    CHECK(run.expected_fallbacks == 10);
    CHECK(run.fallbacks == run.expected_fallbacks);
    CHECK(run.intention_lists > 0);
    CHECK(run.invalid_lists == 0);
  }

  TEST_CASE("mock games with random malformed replies keep valid intentions") {
    for (const Transcript& t : test::mock_batch(6, 12, 0.5)) {
      const auto roles = t.roles();
      CHECK(replay(t).phase == Phase::Finished);
      for (EventKind k : {EventKind::IntentSelected, EventKind::IntentRevised}) {
        for (const GameEvent* e : t.of_kind(k)) {
          CHECK(IntentionCatalog::builtin().valid_selection(
              roles[e->actor].name, e->payload.at("ids").get<std::vector<std::string>>()));
        }
      }
    }
  }

  TEST_CASE("an unreachable backend aborts with BackendUnavailable") {
    auto mock = std::make_shared<MockBackend>();
    GameRunner runner("dead", GameConfig{}, remote_agents(mock, LlmAgent::Options{}));
    CHECK_THROWS_AS(runner.play(), BackendUnavailable);
  }

  TEST_CASE("fixed roles are honoured") {
    const std::array<RoleName, kPlayers> layout = {RoleName::Assassin, RoleName::Merlin,
                                                   RoleName::Servant, RoleName::Percival,
                                                   RoleName::Morgana};
    auto t = test::play_scripted("fixed", 1, {}, make_roles(layout));
    for (Seat s = 0; s < kPlayers; ++s) CHECK(t.roles()[s].name == layout[s]);
  }
}
