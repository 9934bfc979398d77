#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "generator.hpp"
#include "oracles.hpp"
#include "rmm/risk_engine.hpp"

using namespace rmm;
using namespace rmm::engine;

namespace {

ElementId id(const char* s) { return ElementId(s); }

std::vector<testing::OraclePath> as_oracle(const std::vector<ZonePath>& paths) {
    std::vector<testing::OraclePath> out;
    for (const auto& p : paths) {
        testing::OraclePath o;
        for (const auto& z : p.zones) o.zones.push_back(z.str());
        for (const auto& c : p.conduits) o.conduits.push_back(c.str());
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace

TEST_CASE("inherent level is the product") {
    for (int i = 0; i <= 4; ++i) {
        for (int f = 0; f <= 4; ++f) CHECK(inherent_level(i, f) == i * f);
    }
    CHECK_THROWS_AS(inherent_level(5, 1), RangeError);
    CHECK_THROWS_AS(inherent_level(1, -1), RangeError);
}

TEST_CASE("scenario feasibility on the fixture") {
    const RiskModel m = testing::water_model();
    CHECK(scenario_feasibility(m.attack_scenarios.at(id("s-remote-dosing")), m) == Level(3));
    CHECK(scenario_feasibility(m.attack_scenarios.at(id("s-historian-pivot")), m) == Level(2));
    CHECK(scenario_feasibility(m.attack_scenarios.at(id("s-erp-exfiltration")), m) == Level(2));
}

TEST_CASE("scenario feasibility reports unresolved references") {
    RiskModel m = testing::water_model();
    AttackScenario s = m.attack_scenarios.at(id("s-remote-dosing"));
    s.steps.push_back({id("sa-plc"), id("v-missing")});
    CHECK_THROWS_AS(scenario_feasibility(s, m), UnresolvedRefError);
    s = m.attack_scenarios.at(id("s-remote-dosing"));
    s.realizes = id("de-missing");
    CHECK_THROWS_AS(scenario_feasibility(s, m), UnresolvedRefError);
}

TEST_CASE("feasibility matches the oracle on random models") {
    for (std::uint64_t seed = 1; seed <= 150; ++seed) {
        const RiskModel m = testing::random_model(seed);
        for (const auto& [sid, s] : m.attack_scenarios) {
            CAPTURE(seed);
            CHECK(scenario_feasibility(s, m).value() == testing::oracle_feasibility(s, m));
        }
    }
}

TEST_CASE("fixture risk matrix") {
    const RiskModel m = testing::water_model();
    const RiskMatrix matrix = build_risk_matrix(m);
    CHECK(matrix.total() == 3);
    CHECK(matrix.cell(4, 3) == std::set<ElementId>{id("r-water-poisoning")});
    CHECK(matrix.cell(3, 2) == std::set<ElementId>{id("r-customer-leak"), id("r-supply-outage")});

    const std::string csv = format_matrix_csv(matrix);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(csv.find("\n4,0,0,0,1,0\n") != std::string::npos);
    CHECK(csv.find("\n3,0,0,2,0,0\n") != std::string::npos);

    const std::string listing = format_matrix_listing(matrix, m);
    CHECK(listing.find("r-water-poisoning,4,3,12,3,mitigate") != std::string::npos);
    CHECK(listing.find("r-supply-outage,3,2,6,3,mitigate") != std::string::npos);

    const json j = to_json(matrix);
    CHECK(j.dump().find("r-water-poisoning") != std::string::npos);
}

TEST_CASE("matrix refuses models with errors") {
    RiskModel m = testing::water_model();
    m.risks.at(id("r-customer-leak")).impact = Level(1);
    CHECK_THROWS_AS(build_risk_matrix(m), ValidationGateError);
    CHECK_THROWS_AS(coverage_report(m), ValidationGateError);
}

TEST_CASE("matrix counts match the oracle on random models") {
    for (std::uint64_t seed = 1; seed <= 150; ++seed) {
        const RiskModel m = testing::random_model(seed);
        const RiskMatrix matrix = build_risk_matrix(m);
        const auto expected = testing::oracle_matrix_counts(m);
        CAPTURE(seed);
        for (int i = 0; i < 5; ++i) {
            for (int f = 0; f < 5; ++f) CHECK(static_cast<int>(matrix.cell(i, f).size()) == expected[i][f]);
        }
        CHECK(matrix.total() == m.risks.size());
    }
}

TEST_CASE("residual level on the fixture and by strategy") {
    RiskModel m = testing::water_model();
    CHECK(residual_level(m.risks.at(id("r-water-poisoning")), m) == 3);
    CHECK(residual_level(m.risks.at(id("r-supply-outage")), m) == 3);
    Risk r = m.risks.at(id("r-water-poisoning"));
    for (auto s : {TreatmentStrategy::Accept, TreatmentStrategy::Transfer, TreatmentStrategy::Avoid}) {
        r.strategy = s;
        CHECK(residual_level(r, m) == 12);
    }
    // Reductions clamp at zero.
    m.controls.at(id("ctl-plc-write-protect")).feasibility_reduction = Level(4);
    CHECK(residual_level(m.risks.at(id("r-water-poisoning")), m) == 0);
}

TEST_CASE("residual level matches the oracle and never exceeds inherent") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> lvl(0, 4);
    for (int round = 0; round < 400; ++round) {
        RiskModel m = testing::water_model();
        Risk r = m.risks.at(id("r-water-poisoning"));
        r.impact = Level(lvl(rng));
        r.feasibility = Level(lvl(rng));
        r.strategy = static_cast<TreatmentStrategy>(lvl(rng) % 4);
        m.controls.clear();
        std::vector<Control> controls;
        const int n = lvl(rng);
        for (int k = 0; k < n; ++k) {
            Control c{ElementId("ctl-" + std::to_string(k)), "c", LineOfDefence::Protect, {}, Level(lvl(rng)),
                      Level(lvl(rng))};
            if (lvl(rng) > 0) c.mitigates.insert(r.id);
            m.controls.emplace(c.id, c);
            controls.push_back(c);
        }
        const int got = residual_level(r, m);
        CHECK(got == testing::oracle_residual(r, controls));
        CHECK(got <= inherent_level(r.impact, r.feasibility));
    }
}

TEST_CASE("attack paths on the fixture") {
    const RiskModel m = testing::water_model();
    const auto paths = attack_paths(m, id("z-enterprise"), id("ba-water-quality"), 6);
    REQUIRE(paths.size() == 3);
    CHECK(paths[0].zones == std::vector<ElementId>{id("z-enterprise"), id("z-dmz")});
    CHECK(paths[0].conduits == std::vector<ElementId>{id("c-ent-dmz")});
    CHECK(paths[2].zones.back() == id("z-field"));
    CHECK(attack_paths(m, id("z-enterprise"), id("ba-water-quality"), 2).size() == 1);
    CHECK(attack_paths(m, id("z-enterprise"), id("ba-water-quality"), 1).empty());
    // Entry zone already holding a supporting asset.
    const auto here = attack_paths(m, id("z-control"), id("ba-water-quality"), 1);
    REQUIRE(here.size() == 1);
    CHECK(here[0].conduits.empty());
    CHECK(to_json(paths[0])["zones"].size() == 2);
}

TEST_CASE("attack paths reject unknown endpoints") {
    const RiskModel m = testing::water_model();
    CHECK_THROWS_AS(attack_paths(m, id("z-nowhere"), id("ba-water-quality"), 4), UnresolvedRefError);
    CHECK_THROWS_AS(attack_paths(m, id("z-dmz"), id("sa-plc"), 4), UnresolvedRefError);
}

TEST_CASE("attack paths match brute-force enumeration") {
    testing::GenOptions opts;
    opts.max_zones = 6;
    opts.max_conduits = 10;
    for (std::uint64_t seed = 1; seed <= 120; ++seed) {
        const RiskModel m = testing::random_model(seed, opts);
        for (const auto& [zid, z] : m.zones) {
            for (const auto& [bid, b] : m.business_assets) {
                CAPTURE(seed);
                const auto got = as_oracle(attack_paths(m, zid, bid, 4));
                CHECK(got == testing::oracle_paths(m, zid.str(), bid.str(), 4));
            }
        }
    }
}

TEST_CASE("topology check") {
    RiskModel m = testing::water_model();
    const auto& s = m.attack_scenarios.at(id("s-remote-dosing"));
    CHECK(check_scenario_topology(s, m).empty());
    m.conduits.erase(id("c-control-field"));
    const auto f = check_scenario_topology(m.attack_scenarios.at(id("s-remote-dosing")), m);
    REQUIRE(f.size() == 1);
    CHECK(f[0].rule_id == "R-TOPOLOGY");
}

TEST_CASE("coverage report") {
    RiskModel m = testing::water_model();
    CHECK(coverage_report(m).empty());

    m.risks.at(id("r-water-poisoning")).strategy = TreatmentStrategy::Accept;
    m.risks.at(id("r-supply-outage")).strategy = TreatmentStrategy::Accept;
    m.risks.at(id("r-customer-leak")).strategy = TreatmentStrategy::Avoid;
    m.controls.clear();
    m.controls.emplace(id("ctl-idle"), Control{id("ctl-idle"), "idle", LineOfDefence::Identify, {}, Level(1), Level(0)});
    m.risks.emplace(id("r-extra"), Risk{id("r-extra"), id("de-customer-leak"), id("s-erp-exfiltration"), Level(3),
                                        Level(2), TreatmentStrategy::Mitigate});
    m.attack_scenarios.erase(id("s-historian-pivot"));
    m.risks.erase(id("r-supply-outage"));

    CoverageReport r = coverage_report(m);
    CHECK(r.risks_without_strategy_rationale == std::set<ElementId>{id("r-water-poisoning")});
    CHECK(r.avoided_risks == std::set<ElementId>{id("r-customer-leak")});
    CHECK(r.controls_unlinked == std::set<ElementId>{id("ctl-idle")});
    CHECK(r.mitigate_risks_without_controls == std::set<ElementId>{id("r-extra")});
    CHECK(r.dreaded_events_without_scenario == std::set<ElementId>{id("de-supply-outage")});

    CHECK(coverage_report(m, 13).risks_without_strategy_rationale.empty());
    CHECK(coverage_report(m, 0).risks_without_strategy_rationale.size() == 1);
    CHECK(to_json(r)["avoided_risks"] == json::array({"r-customer-leak"}));
}

TEST_CASE("consecutive steps two hops apart break topology") {
    RiskModel m;
    for (const char* z : {"z1", "z2", "z3"}) m.zones.emplace(id(z), Zone{id(z), z, Level(1)});
    m.conduits.emplace(id("c12"), Conduit{id("c12"), "c12", {id("z1"), id("z2")}, ""});
    m.conduits.emplace(id("c23"), Conduit{id("c23"), "c23", {id("z2"), id("z3")}, ""});
    m.vulnerabilities.emplace(id("v1"), Vulnerability{id("v1"), "v1", {}, Level(2), {id("sa1")}});
    m.vulnerabilities.emplace(id("v3"), Vulnerability{id("v3"), "v3", {}, Level(2), {id("sa3")}});
    m.support_assets.emplace(id("sa1"), SupportAsset{id("sa1"), "a", SupportCategory::Hardware, id("z1"), {id("v1")}});
    m.support_assets.emplace(id("sa3"), SupportAsset{id("sa3"), "b", SupportCategory::Hardware, id("z3"), {id("v3")}});
    const AttackScenario s{id("s"), id("de"), std::nullopt, {{id("sa1"), id("v1")}, {id("sa3"), id("v3")}}};
    const auto f = check_scenario_topology(s, m);
    REQUIRE(f.size() == 1);
    CHECK(f[0].rule_id == "R-TOPOLOGY");
    // Adjacency oracle: the only consecutive pair has no direct conduit.
    m.conduits.emplace(id("c13"), Conduit{id("c13"), "c13", {id("z3"), id("z1")}, ""});
    CHECK(check_scenario_topology(s, m).empty());
}
