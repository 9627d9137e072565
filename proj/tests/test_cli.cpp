#include <sys/wait.h>

#include <cstdlib>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

using namespace avalon;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with `args`, capturing stdout and stderr together.
Run cli(const std::string& args, const std::string& env = "") {
  static std::atomic<int> n{0};
  const auto capture = std::filesystem::temp_directory_path() /
                       ("avalon-cli-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
  const std::string cmd = env + " \"" AVALON_CLI "\" " + args + " > \"" + capture.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = test::read_file(capture);
  std::filesystem::remove(capture);
  return r;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("play writes deterministic transcripts") {
    test::TempDir dir;
    auto a = cli("play --games 3 --backend scripted --seed 7 --out " + q(dir / "a"));
    REQUIRE(a.code == 0);
    auto b = cli("play --games 3 --backend scripted --seed 7 --threads 1 --out " + q(dir / "b"));
    REQUIRE(b.code == 0);
    for (const char* id : {"game-0001", "game-0002", "game-0003"}) {
      const std::string name = std::string(id) + ".jsonl";
      CHECK(std::filesystem::exists(dir / "a" / name));
      CHECK(test::read_file(dir / "a" / name) == test::read_file(dir / "b" / name));
    }
    CHECK(a.out.find("game-0003") != std::string::npos);

    // Refuses to overwrite without --force.
    auto again = cli("play --games 3 --backend scripted --seed 7 --out " + q(dir / "a"));
    CHECK(again.code != 0);
    CHECK(again.out.find("error:") != std::string::npos);
    CHECK(cli("play --games 3 --backend scripted --seed 7 --force --out " + q(dir / "a")).code == 0);
  }

  TEST_CASE("remote backend without credentials fails at startup") {
    test::TempDir dir;
    auto r = cli("play --games 1 --backend remote --out " + q(dir / "r"),
                 "env -u AVALON_API_KEY -u AVALON_API_BASE");
    CHECK(r.code != 0);
    CHECK(r.out.find("AVALON_API") != std::string::npos);
  }

  TEST_CASE("config file, environment and flags layer in order") {
    test::TempDir dir;
    {
      std::ofstream(dir / "cfg.json") << R"({"games": 2, "backend": "scripted", "seed": 3})";
    }
    auto from_file = cli("--json play --config " + q(dir / "cfg.json") + " --out " + q(dir / "f"));
    REQUIRE(from_file.code == 0);
    auto j = json::parse(from_file.out);
    CHECK(j["games"].size() == 2);
    auto flag_wins = cli("--json play --config " + q(dir / "cfg.json") + " --games 1 --out " +
                         q(dir / "g"));
    REQUIRE(flag_wins.code == 0);
    CHECK(json::parse(flag_wins.out)["games"].size() == 1);
  }

  TEST_CASE("eval on the shipped suite matches the golden report") {
    test::TempDir dir;
    auto r = cli("eval --games scripted=" + q(test::fixture("perf_suite")) + " --out " + q(dir / "rep"));
    REQUIRE(r.code == 0);
    CHECK(test::read_file(dir / "rep" / "report.txt") ==
          test::read_file(test::fixture("golden_report/report.txt")));
    CHECK(test::read_file(dir / "rep" / "report.jsonl") ==
          test::read_file(test::fixture("golden_report/report.jsonl")));
  }

  TEST_CASE("report renders seven performance rows") {
    auto r = cli("report --format table --games scripted=" + q(test::fixture("perf_suite")));
    REQUIRE(r.code == 0);
    int rows = 0;
    for (const char* row : {"Win Rate", "Quest Win Rate", "Quest Engagement Rate",
                            "Team Selection Accuracy", "Failure Vote Rate",
                            "Team Proposal Change Rate", "Merlin Assassination Rate"}) {
      rows += r.out.find(row) != std::string::npos;
    }
    CHECK(rows == 7);
    auto js = cli("report --format json --games scripted=" + q(test::fixture("perf_suite")));
    REQUIRE(js.code == 0);
    std::istringstream in(js.out);
    for (std::string line; std::getline(in, line);) CHECK(json::accept(line));
  }

  TEST_CASE("dump prints the guessing context") {
    auto r = cli("dump --games " + q(test::fixture("golden_game")) +
                 " --game game-0001 --kind guessing --player Player2 --observer Player3 --round 2");
    REQUIRE(r.code == 0);
    CHECK(r.out == test::read_file(test::fixture("golden_game/guessing_golden.txt")));
    auto self = cli("dump --games " + q(test::fixture("golden_game")) +
                    " --game game-0001 --kind guessing --player Player2 --observer Player2 --round 2");
    CHECK(self.code != 0);
  }

  TEST_CASE("bundle then eval with records") {
    test::TempDir dir;
    REQUIRE(cli("play --games 6 --backend scripted --seed 2 --out " + q(dir / "games")).code == 0);
    auto b = cli("bundle --games " + q(dir / "games") + " --annotators a,b --seed 1 --out " +
                 q(dir / "bundles.json"));
    REQUIRE(b.code == 0);
    auto bundles = json::parse(test::read_file(dir / "bundles.json"));
    CHECK(bundles.size() == 4);
    auto e = cli("--json eval --games " + q(dir / "games") + " --records " + q(dir / "none.jsonl"));
    CHECK(e.code == 0);
  }

  TEST_CASE("unknown verbs and bad flags exit nonzero") {
    CHECK(cli("frobnicate").code != 0);
    CHECK(cli("play --games zero").code != 0);
  }
}
