#include "doctest.h"
#include "helpers.hpp"
#include "httplib.h"
#include "avalon/server.hpp"
#include "json.hpp"

using namespace avalon;
using nlohmann::json;

namespace {

struct Fixture {
  test::TempDir dir;
  std::unique_ptr<AnnotationService> service;
  std::unique_ptr<AnnotationServer> server;
  std::unique_ptr<httplib::Client> client;

  Fixture() {
    BundleOptions o;
    o.annotators = {"ann1", "ann2"};
    o.seed = 1;
    auto ids = IntentionCatalog::builtin().impactful_ids();
    o.tasks.impactful = {ids.begin(), ids.end()};
    auto bundles = build_bundles(test::scripted_batch(4, 21), IntentionCatalog::builtin(), o);
    service = std::make_unique<AnnotationService>(std::move(bundles), dir / "records.jsonl");
    server = std::make_unique<AnnotationServer>(*service);
    const int port = server->start_background();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  ~Fixture() { server->stop(); }

  httplib::Headers auth(const std::string& who) const {
    return {{"Authorization", "Bearer " + who}};
  }
  httplib::Result get(const std::string& path, const std::string& who = "ann1") {
    return client->Get(path, auth(who));
  }
  httplib::Result submit(const std::string& id, const json& body, const std::string& who = "ann1") {
    return client->Post("/api/tasks/" + id + "/submit", auth(who), body.dump(),
                        "application/json");
  }
};

}  // namespace

TEST_SUITE("server") {
  TEST_CASE("authentication") {
    Fixture f;
    auto none = f.client->Get("/api/tasks/next");
    REQUIRE(none);
    CHECK(none->status == 401);
    auto unknown = f.get("/api/tasks/next", "mallory");
    REQUIRE(unknown);
    CHECK(unknown->status == 403);
    CHECK(json::parse(unknown->body)["error"] == "unknown_annotator");
  }

  TEST_CASE("next, submit and progress round trip") {
    Fixture f;
    auto next = f.get("/api/tasks/next");
    REQUIRE(next);
    REQUIRE(next->status == 200);
    auto body = json::parse(next->body);
    CHECK(body["done"] == false);
    const auto task = body["task"];
    CHECK_FALSE(task.contains("gold"));
    const std::string id = task["task_id"];
    CHECK(task["kind"] == "selection_binary");

    auto ok = f.submit(id, {{"value", 1}, {"note", "fine"}});
    REQUIRE(ok);
    CHECK(ok->status == 200);
    auto ack = json::parse(ok->body);
    CHECK(ack["duplicate"] == false);
    CHECK(ack["record"]["annotator_id"] == "ann1");
    CHECK(ack["record"]["note"] == "fine");

    auto dup = f.submit(id, {{"value", 1}});
    REQUIRE(dup);
    CHECK(dup->status == 200);
    CHECK(json::parse(dup->body)["duplicate"] == true);

    auto progress = f.get("/api/progress");
    REQUIRE(progress);
    CHECK(progress->status == 200);
    CHECK(json::parse(progress->body)["annotators"]["ann1"]["done"] == 1);
    CHECK(f.service->records().size() == 1);
  }

  TEST_CASE("error statuses") {
    Fixture f;
    auto next = f.get("/api/tasks/next");
    const std::string id = json::parse(next->body)["task"]["task_id"];

    auto bad_domain = f.submit(id, {{"value", 3}});
    REQUIRE(bad_domain);
    CHECK(bad_domain->status == 422);
    CHECK(json::parse(bad_domain->body)["error"] == "bad_domain");

    auto unknown = f.submit("nope", {{"value", 1}});
    REQUIRE(unknown);
    CHECK(unknown->status == 404);

    auto no_value = f.submit(id, {{"note", "x"}});
    REQUIRE(no_value);
    CHECK(no_value->status == 400);

    auto garbage = f.client->Post("/api/tasks/" + id + "/submit", f.auth("ann1"), "{oops",
                                  "application/json");
    REQUIRE(garbage);
    CHECK(garbage->status == 400);

    // ann2 never leased this task.
    auto lost = f.submit(id, {{"value", 1}}, "ann2");
    REQUIRE(lost);
    CHECK(lost->status == 409);
    CHECK(json::parse(lost->body)["error"] == "lease_lost");
  }

  TEST_CASE("percent-encoded task ids") {
    Fixture f;
    const std::string id = json::parse(f.get("/api/tasks/next")->body)["task"]["task_id"];
    auto res = f.submit(httplib::detail::encode_url(id), {{"value", 0}});
    REQUIRE(res);
    CHECK(res->status == 200);
  }

  TEST_CASE("rubrics and bundles") {
    Fixture f;
    auto rubric = f.get("/api/rubric/following_speaking_likert");
    REQUIRE(rubric);
    CHECK(rubric->status == 200);
    CHECK(rubric->get_header_value("Content-Type").find("text/markdown") == 0);
    CHECK_FALSE(rubric->body.empty());
    auto missing = f.get("/api/rubric/no_such_kind");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    auto bundles = f.get("/api/bundles");
    REQUIRE(bundles);
    auto list = json::parse(bundles->body);
    CHECK(list.size() == 4);  // two shared, one per annotator
    for (const auto& b : list) CHECK_FALSE(b.contains("tasks"));
  }
}
