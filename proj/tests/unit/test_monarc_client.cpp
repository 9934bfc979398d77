#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "fixtures.hpp"
#include "generator.hpp"
#include "oracles.hpp"
#include "rmm/adapters/monarc_client.hpp"

using namespace rmm;
using namespace rmm::adapters;

namespace {

ElementId id(const char* s) { return ElementId(s); }

/// Local REST stand-in running on a background thread.
class TestServer {
public:
    TestServer() {
        server_.Post(R"(/api/client-anr/(\w+)/(\w+))", [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res, std::nullopt);
        });
        server_.Put(R"(/api/client-anr/(\w+)/(\w+)/([\w-]+))",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(req, res, std::string(req.matches[3]));
                    });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~TestServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::atomic<int> fail_next{0};      // 503 responses before succeeding
    std::atomic<int> status_override{0};  // fixed status for every request
    std::atomic<int> calls{0};
    std::string last_token;
    std::string last_project;

private:
    void handle(const httplib::Request& req, httplib::Response& res, std::optional<std::string> ext) {
        ++calls;
        last_token = req.get_header_value("token");
        last_project = req.matches[1];
        if (status_override != 0) {
            res.status = status_override;
            res.set_content("{}", "application/json");
            return;
        }
        if (fail_next > 0) {
            --fail_next;
            res.status = 503;
            return;
        }
        const json body = json::parse(req.body);
        if (!body.contains("id") || !body.contains("source_revision")) {
            res.status = 400;
            return;
        }
        const std::string assigned = ext.value_or(std::string(req.matches[2]) + "-" + std::to_string(next_++));
        res.status = ext ? 200 : 201;
        res.set_content(json{{"id", assigned}}.dump(), "application/json");
    }

    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    int next_ = 1;
};

HttpClientConfig config_for(const TestServer& s) {
    HttpClientConfig c;
    c.base_url = s.url();
    c.project = "7";
    c.token = "secret";
    c.timeout = std::chrono::milliseconds(2000);
    c.retries = 2;
    return c;
}

}  // namespace

TEST_CASE("push order and first-time creation on the fake client") {
    const RiskModel m = testing::water_model();
    FakeMonarcClient client;
    const PushReport report = monarc_push(client, m);
    CHECK(report.failed.empty());
    CHECK_FALSE(report.transport_failed());
    CHECK(report.updated == 0);
    CHECK(report.created == static_cast<int>(client.requests().size()));
    CHECK(report.links.size() == client.requests().size());

    // Dependency order: no concept appears after a later one.
    for (std::size_t i = 1; i < client.requests().size(); ++i) {
        CHECK(client.requests()[i - 1].endpoint <= client.requests()[i].endpoint);
    }
    CHECK(client.records(MonarcConcept::Risks).size() == 3);
    for (const auto& [ext, body] : client.records(MonarcConcept::Risks)) {
        CHECK_FALSE(body["asset_ref"].is_null());
        CHECK_FALSE(body["threat_ref"].is_null());
        CHECK(body["source_revision"] == m.revision);
    }
    for (const auto& l : report.links) {
        CHECK(l.direction == TraceDirection::Exported);
        CHECK(l.metadata.contains("endpoint"));
    }
}

TEST_CASE("second push updates the recorded external ids") {
    RiskModel m = testing::water_model();
    FakeMonarcClient client;
    const PushReport first = monarc_push(client, m);
    m = record_links(m, first.links);
    const PushReport second = monarc_push(client, m);
    CHECK(second.created == 0);
    CHECK(second.updated == first.created);
    CHECK(client.records(MonarcConcept::Assets).size() == 3 + 7);
    const json j = to_json(second);
    CHECK(j["failed_count"] == 0);
}

TEST_CASE("conflicts and transport failures are reported per element") {
    const RiskModel m = testing::water_model();
    FakeMonarcClient client;
    client.seed_conflict(MonarcConcept::Risks, "r-customer-leak");
    client.seed_transport_failure(MonarcConcept::Threats, "att-insider");
    const PushReport report = monarc_push(client, m);
    REQUIRE(report.failed.size() >= 2);
    CHECK(report.transport_failed());
    bool saw_conflict = false;
    for (const auto& f : report.failed) {
        if (f.element == id("r-customer-leak") && f.endpoint == MonarcConcept::Risks) saw_conflict = f.conflict;
    }
    CHECK(saw_conflict);
    const json j = to_json(report);
    CHECK(j["failed_count"] == report.failed.size());
}

TEST_CASE("a newer remote revision is a conflict") {
    RiskModel m = testing::water_model();
    FakeMonarcClient client;
    m = record_links(m, monarc_push(client, m).links);
    RiskModel older = m;
    older.revision = 0;
    const PushReport report = monarc_push(client, older);
    CHECK_FALSE(report.failed.empty());
    for (const auto& f : report.failed) CHECK(f.conflict);
}

TEST_CASE("fake client state persists across instances") {
    testing::TempDir dir("monarc-state");
    const std::string state = dir.file("remote.json");
    {
        FakeMonarcClient client(state);
        client.create_or_update(MonarcConcept::Assets, std::nullopt, json{{"id", "ba-x"}, {"source_revision", 1}});
        client.save();
    }
    FakeMonarcClient again(state);
    CHECK(again.records(MonarcConcept::Assets).size() == 1);
}

TEST_CASE("http client creates, updates and sends the token") {
    TestServer server;
    HttpMonarcClient client(config_for(server));
    const json body{{"id", "ba-x"}, {"source_revision", 3}};
    const PushResponse created = client.create_or_update(MonarcConcept::Assets, std::nullopt, body);
    CHECK(created.created);
    CHECK(created.external_id == "assets-1");
    CHECK(server.last_token == "secret");
    CHECK(server.last_project == "7");
    const PushResponse updated = client.create_or_update(MonarcConcept::Assets, created.external_id, body);
    CHECK_FALSE(updated.created);
    CHECK(updated.external_id == "assets-1");
}

TEST_CASE("http client retries server errors") {
    TestServer server;
    HttpMonarcClient client(config_for(server));
    server.fail_next = 2;
    const auto r = client.create_or_update(MonarcConcept::Threats, std::nullopt, json{{"id", "a"}, {"source_revision", 1}});
    CHECK(r.created);
    CHECK(server.calls == 3);

    server.calls = 0;
    server.fail_next = 5;
    CHECK_THROWS_AS(client.create_or_update(MonarcConcept::Threats, std::nullopt, json{{"id", "a"}, {"source_revision", 1}}),
                    TransportError);
    CHECK(server.calls == 3);
}

TEST_CASE("http status mapping") {
    TestServer server;
    HttpMonarcClient client(config_for(server));
    const json body{{"id", "r"}, {"source_revision", 1}};
    server.status_override = 409;
    CHECK_THROWS_AS(client.create_or_update(MonarcConcept::Risks, std::string("risks-9"), body), ConflictError);
    server.status_override = 403;
    CHECK_THROWS_AS(client.create_or_update(MonarcConcept::Risks, std::nullopt, body), TransportError);
}

TEST_CASE("unreachable server is a transport error") {
    int port = 0;
    {
        TestServer probe;
        port = std::stoi(probe.url().substr(probe.url().rfind(':') + 1));
    }
    HttpClientConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port);
    c.project = "1";
    c.timeout = std::chrono::milliseconds(300);
    c.retries = 1;
    HttpMonarcClient client(c);
    try {
        client.create_or_update(MonarcConcept::Assets, std::nullopt, json{{"id", "x"}, {"source_revision", 1}});
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.endpoint().find("/api/client-anr/1/assets") != std::string::npos);
    }
}

TEST_CASE("full push over http") {
    TestServer server;
    HttpMonarcClient client(config_for(server));
    const PushReport report = monarc_push(client, testing::water_model());
    CHECK(report.failed.empty());
    CHECK(report.created == server.calls);
}

TEST_CASE("created count equals the mapped element count") {
    // Mapped elements: business assets, support assets in the tree, and per kept row its
    // attacker (threat), first-step vulnerability and the risk itself.
    for (std::uint64_t seed = 0; seed <= 20; ++seed) {
        const RiskModel m = seed == 0 ? testing::water_model() : testing::random_model(seed);
        const RiskModel p = testing::monarc_projection(m);
        const std::size_t expected = p.business_assets.size() + p.support_assets.size() + p.attackers.size() +
                                     p.vulnerabilities.size() + p.risks.size();
        FakeMonarcClient client;
        const PushReport report = monarc_push(client, m);
        CAPTURE(seed);
        CHECK(report.failed.empty());
        CHECK(static_cast<std::size_t>(report.created) == expected);
        CHECK(report.links.size() == expected);
        CHECK(record_links(m, report.links).trace_links.size() == m.trace_links.size() + expected);
    }
}
