#include "ema/averaging.hpp"
#include "ema/experts.hpp"
#include "ema/io.hpp"
#include "ema/session.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

using namespace ema;
using namespace ema::session;
using testutil::graph;
using testutil::letters;
using namespace std::chrono_literals;

namespace {

// (a,b) split 1:1 -> orientation query; (a,c) in half the models -> existence query
nlohmann::json fixtureBody() {
    auto vs = letters(3);
    return {{"models", {io::graphToJson(graph(vs, "a->b a->c")), io::graphToJson(graph(vs, "b->a"))}},
            {"truth", io::graphToJson(graph(vs, "a->b a->c"))},
            {"description", "fixture"}};
}

int statusOf(const std::function<void()>& f) {
    try {
        f();
    } catch (const ServiceError& e) {
        return e.status();
    }
    return 200;
}

}  // namespace

TEST(SessionManager, DrivesAveragingThroughAnswers) {
    SessionManager m;
    auto id = m.create(fixtureBody());
    ASSERT_TRUE(m.waitPending(id, 5s));
    auto p = m.pending(id);
    EXPECT_EQ(p["status"], "WaitingForAnswer");
    EXPECT_EQ(p["query"]["kind"], "orientation");
    EXPECT_EQ(p["query"]["x"]["name"], "a");
    EXPECT_EQ(p["query"]["c"], 2);
    EXPECT_EQ(p["query"]["orientedShares"]["xy"], 0.5);
    const auto q1 = p["query"]["queryId"].get<std::uint64_t>();

    EXPECT_EQ(statusOf([&] { m.submit(id, {{"queryId", q1}, {"parent", "a"}, {"child", "c"}}); }), 400);
    EXPECT_EQ(statusOf([&] { m.submit(id, {{"queryId", q1}, {"accept", true}}); }), 400);
    EXPECT_EQ(statusOf([&] { m.submit(id, {{"queryId", q1 + 7}, {"parent", "a"}, {"child", "b"}}); }), 409);
    EXPECT_EQ(statusOf([&] { m.result(id); }), 409);
    m.submit(id, {{"queryId", q1}, {"parent", "a"}, {"child", "b"}});
    EXPECT_EQ(statusOf([&] { m.submit(id, {{"queryId", q1}, {"parent", "a"}, {"child", "b"}}); }), 409);

    ASSERT_TRUE(m.waitPending(id, 5s));
    p = m.pending(id);
    EXPECT_EQ(p["query"]["kind"], "existence");
    EXPECT_EQ(p["query"]["connectionShare"], 0.5);
    ASSERT_EQ(p["query"]["history"].size(), 1u);
    EXPECT_EQ(p["query"]["history"][0]["orientation"], (nlohmann::json{"a", "b"}));
    m.submit(id, {{"queryId", p["query"]["queryId"]}, {"accept", true}});

    EXPECT_EQ(m.waitFinished(id, 5s), Status::Finished);
    EXPECT_EQ(m.pending(id)["query"], nullptr);
    auto r = m.result(id);
    auto dag = io::parseGraphJson(r["dag"]);
    auto vs = dag.variablesPtr();
    EXPECT_EQ(dag, graph(vs, "a->b a->c"));
    EXPECT_EQ(r["metrics"]["bsf"]["exact"], "1");
    EXPECT_EQ(r["metrics"]["expertCalls"]["orientation"], 1);
    EXPECT_EQ(m.trace(id)["answered"].size(), 2u);
}

TEST(SessionManager, ReplayMatchesBatch) {
    SessionManager m;
    auto id = m.create(fixtureBody());
    ASSERT_TRUE(m.waitPending(id, 5s));
    m.submit(id, {{"queryId", m.pending(id)["query"]["queryId"]}, {"parent", "b"}, {"child", "a"}});
    ASSERT_TRUE(m.waitPending(id, 5s));
    m.submit(id, {{"queryId", m.pending(id)["query"]["queryId"]}, {"accept", false}});
    ASSERT_EQ(m.waitFinished(id, 5s), Status::Finished);
    auto r = m.result(id);
    auto sessionDag = io::parseGraphJson(r["dag"]);

    auto vs = sessionDag.variablesPtr();
    std::vector<MixedGraph> models{graph(vs, "a->b a->c"), graph(vs, "b->a")};
    ScriptedExpert replay(io::transcriptFromTraceJson(r["trace"]));
    auto batch = expertModelAverage(models, {}, replay);
    EXPECT_EQ(batch.dag.toMixed(), sessionDag);
    EXPECT_EQ(replay.remaining(), 0u);
}

TEST(SessionManager, NoGateFinishesWithoutQueries) {
    SessionManager m;
    auto vs = letters(2);
    auto id = m.create({{"models", {io::graphToJson(graph(vs, "a->b"))}}});
    EXPECT_EQ(m.waitFinished(id, 5s), Status::Finished);
    EXPECT_EQ(m.pending(id)["query"], nullptr);
    EXPECT_EQ(m.result(id)["metrics"], nullptr);
}

TEST(SessionManager, TimeoutAndBadInput) {
    SessionManager m;
    auto body = fixtureBody();
    body["timeoutSeconds"] = 0.05;
    auto id = m.create(body);
    EXPECT_EQ(m.waitFinished(id, 5s), Status::TimedOut);
    EXPECT_EQ(m.status(id)["status"], "TimedOut");
    EXPECT_EQ(statusOf([&] { m.create({{"models", nlohmann::json::array()}}); }), 400);
    EXPECT_EQ(statusOf([&] { m.create({{"nothing", 1}}); }), 400);
    EXPECT_EQ(statusOf([&] { m.create(nlohmann::json::array()); }), 400);
    auto llm = fixtureBody();
    llm["expert"] = "llm";
    EXPECT_EQ(statusOf([&] { m.create(llm); }), 400);
    EXPECT_EQ(statusOf([&] { m.status("s999"); }), 404);
}

TEST(SessionServer, HttpRoundTrip) {
    SessionManager m;
    SessionServer server(m);
    const int port = server.start("127.0.0.1", 0);
    httplib::Client c("127.0.0.1", port);

    auto health = c.Get("/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);

    auto created = c.Post("/sessions", fixtureBody().dump(), "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 201);
    const auto id = nlohmann::json::parse(created->body)["sessionId"].get<std::string>();
    ASSERT_TRUE(m.waitPending(id, 5s));

    auto pending = c.Get("/sessions/" + id + "/pending");
    ASSERT_TRUE(pending);
    auto q = nlohmann::json::parse(pending->body)["query"];
    auto answer = c.Post("/sessions/" + id + "/answer",
                         nlohmann::json{{"queryId", q["queryId"]}, {"parent", "a"}, {"child", "b"}}.dump(),
                         "application/json");
    EXPECT_EQ(answer->status, 200);
    auto dup = c.Post("/sessions/" + id + "/answer",
                      nlohmann::json{{"queryId", q["queryId"]}, {"parent", "a"}, {"child", "b"}}.dump(),
                      "application/json");
    EXPECT_EQ(dup->status, 409);
    EXPECT_EQ(c.Post("/sessions/" + id + "/answer", "{not json", "application/json")->status, 400);

    ASSERT_TRUE(m.waitPending(id, 5s));
    q = nlohmann::json::parse(c.Get("/sessions/" + id + "/pending")->body)["query"];
    c.Post("/sessions/" + id + "/answer", nlohmann::json{{"queryId", q["queryId"]}, {"accept", true}}.dump(),
           "application/json");
    ASSERT_EQ(m.waitFinished(id, 5s), Status::Finished);
    auto result = c.Get("/sessions/" + id + "/result");
    EXPECT_EQ(result->status, 200);
    EXPECT_EQ(nlohmann::json::parse(result->body)["dag"]["edges"].size(), 2u);
    auto trace = c.Get("/sessions/" + id + "/trace");
    EXPECT_EQ(trace->status, 200);
    EXPECT_EQ(c.Get("/sessions/nope/pending")->status, 404);
    server.stop();
}
