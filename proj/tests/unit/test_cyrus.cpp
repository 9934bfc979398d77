#include <doctest.h>

#include "fixtures.hpp"
#include "generator.hpp"
#include "rmm/adapters/cyrus.hpp"
#include "sql_replayer.hpp"

using namespace rmm;
using namespace rmm::adapters;

namespace {

ElementId id(const char* s) { return ElementId(s); }

std::vector<std::string> table_names() {
    std::vector<std::string> names;
    for (const auto& t : cyrus_tables()) names.push_back(t.name);
    return names;
}

RiskModel exported_water() {
    const RiskModel m = testing::water_model();
    return record_links(m, export_cyrus(m).links);
}

}  // namespace

TEST_CASE("quoting") {
    CHECK(sql_quote("plain") == "'plain'");
    CHECK(sql_quote("it's") == "'it''s'");
    CHECK(sql_quote("a\nb\tc") == "'a b c'");
    CHECK(sql_quote("") == "''");
}

TEST_CASE("fixture export in dependency order") {
    const RelationalExport e = export_cyrus(testing::water_model());
    CHECK(e.statements.size() == 7 + 3 + 7 + 3 + 3);
    CHECK(e.tables == std::vector<std::string>{"component", "interface", "vulnerability", "attack_path", "test_suite"});
    std::size_t last = 0;
    for (const auto& s : e.statements) {
        const std::string table = s.substr(12, s.find(' ', 12) - 12);
        const std::size_t pos = static_cast<std::size_t>(
            std::find(e.tables.begin(), e.tables.end(), table) - e.tables.begin());
        CHECK(pos >= last);
        last = pos;
    }
    const std::string text = e.text();
    CHECK(text.back() == '\n');
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(e.statements.size()));
    for (const auto& l : e.links) {
        CHECK(l.source_tool == Tool::Cyrus);
        CHECK(l.external_id.find(':') != std::string::npos);
    }
}

TEST_CASE("replayed rows carry the model content") {
    testing::SqlReplayer db(table_names());
    db.replay(export_cyrus(testing::water_model()).text());
    const auto& tables = db.tables();
    const auto& plc = tables.at("component").at("sa-plc");
    CHECK(plc.at("zone") == std::optional<std::string>("z-field"));
    CHECK(plc.at("category") == std::optional<std::string>("hardware"));
    const auto& path = tables.at("attack_path").at("s-remote-dosing");
    CHECK(path.at("steps") ==
          std::optional<std::string>("sa-vpn-gw:v-vpn-traversal>sa-scada-server:v-scada-rce>sa-plc:v-plc-unauth-write"));
    CHECK(tables.at("vulnerability").at("v-scada-rce").at("qualification") == std::optional<std::string>("3"));
    CHECK(tables.at("test_suite").at("r-customer-leak").at("attack_path") ==
          std::optional<std::string>("s-erp-exfiltration"));
}

TEST_CASE("zoneless components export a null zone") {
    RiskModel m = testing::water_model();
    m.support_assets.at(id("sa-operator")).zone.reset();
    testing::SqlReplayer db(table_names());
    db.replay(export_cyrus(m).text());
    CHECK_FALSE(db.tables().at("component").at("sa-operator").at("zone").has_value());
}

TEST_CASE("replaying twice leaves the same tables") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const std::string script = export_cyrus(testing::random_model(seed)).text();
        testing::SqlReplayer once(table_names());
        once.replay(script);
        testing::SqlReplayer twice(table_names());
        twice.replay(script);
        twice.replay(script);
        CAPTURE(seed);
        CHECK(once.tables() == twice.tables());
    }
}

TEST_CASE("export is gated") {
    RiskModel m = testing::water_model();
    m.vulnerabilities.at(id("v-plc-unauth-write")).affects.clear();
    CHECK_THROWS_AS(export_cyrus(m), ValidationGateError);
}

TEST_CASE("result rows are validated") {
    const json good = parse_json(testing::fixture_text("water_results.json"));
    CHECK(parse_test_results(good).size() == 3);
    json bad = good;
    bad[0]["verdict"] = "flaky";
    CHECK_THROWS_AS(parse_test_results(bad), SchemaError);
    bad = good;
    bad[1].erase("session");
    CHECK_THROWS_AS(parse_test_results(bad), SchemaError);
    CHECK_THROWS_AS(parse_test_results(json::object()), SchemaError);
}

TEST_CASE("importing results attaches verdicts and flags failures") {
    const RiskModel m = exported_water();
    const auto rows = parse_test_results(parse_json(testing::fixture_text("water_results.json")));
    const ResultsImport r = import_cyrus_results(rows, m);
    CHECK(r.unknown.empty());
    CHECK(r.model.revision == m.revision + 1);
    REQUIRE(r.findings.size() == 1);
    CHECK(r.findings[0].rule_id == "W-CONTROL-UNVERIFIED");
    CHECK(r.findings[0].element == id("r-supply-outage"));
    CHECK(r.findings[0].message.find("ctl-historian-hardening") != std::string::npos);

    int verdicts = 0;
    for (const auto& l : r.model.trace_links) {
        if (l.direction == TraceDirection::Imported && l.source_tool == Tool::Cyrus) {
            ++verdicts;
            CHECK(l.metadata.at("session") == "sess-2026-10-01");
            CHECK(l.external_id.find("@sess-2026-10-01") != std::string::npos);
        }
    }
    CHECK(verdicts == 3);
}

TEST_CASE("unknown suites are collected and leave the model alone") {
    const RiskModel m = exported_water();
    const std::vector<TestResult> rows{{"r-ghost", "s1", "fail", "2026-10-01T00:00:00Z"}};
    const ResultsImport r = import_cyrus_results(rows, m);
    REQUIRE(r.unknown.size() == 1);
    CHECK(r.unknown[0].test_suite == "r-ghost");
    CHECK(r.model == m);
    CHECK(r.findings.empty());
}

TEST_CASE("results before any export match nothing") {
    const RiskModel m = testing::water_model();
    const std::vector<TestResult> rows{{"r-customer-leak", "s1", "pass", "t"}};
    CHECK(import_cyrus_results(rows, m).unknown.size() == 1);
}

TEST_CASE("the same suite in two sessions keeps both verdicts") {
    const RiskModel m = exported_water();
    const std::vector<TestResult> rows{{"r-customer-leak", "s1", "pass", "t1"},
                                       {"r-customer-leak", "s2", "fail", "t2"},
                                       {"r-customer-leak", "s2", "pass", "t3"}};
    const ResultsImport r = import_cyrus_results(rows, m);
    CHECK(r.model.trace_links.size() == m.trace_links.size() + 2);
    // The last row of a session wins.
    CHECK(r.findings.empty());
}

TEST_CASE("statement count for a small model") {
    RiskModel m;
    m.zones.emplace(id("z1"), Zone{id("z1"), "office", Level(1)});
    m.zones.emplace(id("z2"), Zone{id("z2"), "plant", Level(2)});
    m.conduits.emplace(id("c1"), Conduit{id("c1"), "link", {id("z1"), id("z2")}, "ethernet"});
    m.support_assets.emplace(id("sa1"), SupportAsset{id("sa1"), "pc", SupportCategory::Hardware, id("z1"), {id("v1")}});
    m.support_assets.emplace(id("sa2"), SupportAsset{id("sa2"), "plc", SupportCategory::Hardware, id("z2"), {}});
    m.vulnerabilities.emplace(id("v1"), Vulnerability{id("v1"), "weak", {"CVE-2020-0001"}, Level(2), {id("sa1")}});
    m.business_assets.emplace(id("ba"), BusinessAsset{id("ba"), "service", BusinessAssetKind::Service,
                                                      {{SecurityProperty::Availability, Level(3)}}, {id("sa1"), id("sa2")}});
    m.attackers.emplace(id("att"), Attacker{id("att"), "crew", Level(3), "", std::nullopt});
    m.dreaded_events.emplace(id("de"), DreadedEvent{id("de"), id("att"), id("ba"), SecurityProperty::Availability, Level(3)});
    m.attack_scenarios.emplace(id("s"), AttackScenario{id("s"), id("de"), id("z1"), {{id("sa1"), id("v1")}}});
    m.risks.emplace(id("r"), Risk{id("r"), id("de"), id("s"), Level(3), Level(2), TreatmentStrategy::Mitigate});
    m.controls.emplace(id("ctl"), Control{id("ctl"), "patch", LineOfDefence::Protect, {id("r")}, Level(1), Level(0)});
    REQUIRE_FALSE(has_errors(validate(m)));

    const RelationalExport e = export_cyrus(m);
    std::map<std::string, int> per_table;
    for (const auto& s : e.statements) ++per_table[s.substr(12, s.find(' ', 12) - 12)];
    CHECK(per_table == std::map<std::string, int>{
                           {"component", 2}, {"interface", 1}, {"vulnerability", 1}, {"attack_path", 1}, {"test_suite", 1}});

    // An accepted risk has no suite.
    m.controls.clear();
    m.risks.at(id("r")).strategy = TreatmentStrategy::Accept;
    CHECK(export_cyrus(m).statements.size() == 5);
}
