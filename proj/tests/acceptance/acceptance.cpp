// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "defects.hpp"
#include "fixtures.hpp"
#include "generator.hpp"
#include "oracles.hpp"
#include "rmm/adapters/cyrus.hpp"
#include "rmm/adapters/monarc.hpp"
#include "rmm/adapters/pistar.hpp"
#include "rmm/adapters/sync.hpp"
#include "rmm/cli.hpp"
#include "rmm/risk_engine.hpp"
#include "sql_replayer.hpp"

using namespace rmm;
using namespace rmm::testing;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Collects the first few mismatches and counts the rest.
class Tally {
public:
    void check(bool ok, const std::string& what) {
        ++cases_;
        if (ok) return;
        ++failures_;
        if (failures_ <= 3) notes_ << (failures_ > 1 ? "; " : "") << what;
    }
    int cases() const { return cases_; }
    Outcome outcome(const std::string& summary) const {
        if (failures_ == 0) return {true, summary};
        return {false, std::to_string(failures_) + " mismatch(es) in " + std::to_string(cases_) + " case(s): " +
                           notes_.str()};
    }

private:
    int cases_ = 0;
    int failures_ = 0;
    std::ostringstream notes_;
};

std::vector<std::string> table_names() {
    std::vector<std::string> names;
    for (const auto& t : adapters::cyrus_tables()) names.push_back(t.name);
    return names;
}

Outcome canonical_round_trip() {
    Tally t;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const RiskModel m = random_model(seed);
        t.check(m.element_count() <= 50, "seed " + std::to_string(seed) + " over budget");
        t.check(load_model(save_model(m)) == m, "seed " + std::to_string(seed));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    t.check(secs < 10.0, "took " + std::to_string(secs) + " s");
    std::ostringstream summary;
    summary.precision(2);
    summary << std::fixed << "200 models in " << secs << " s";
    return t.outcome(summary.str());
}

Outcome validation_catalogue() {
    Tally t;
    std::set<std::string> rules;
    for (const auto& defect : seeded_defects()) {
        RiskModel m = water_model();
        defect.apply(m);
        std::set<std::string> found;
        for (const auto& f : validate(m)) found.insert(f.rule_id);
        t.check(found == std::set<std::string>{defect.rule_id}, defect.rule_id);
        rules.insert(defect.rule_id);
    }
    t.check(validate(water_model()).empty(), "clean fixture has findings");
    t.check(rules.size() >= 13, "fewer than 13 rules seeded");
    return t.outcome(std::to_string(rules.size()) + " seeded defects");
}

Outcome engine_oracles() {
    GenOptions opts;
    opts.max_zones = 6;
    opts.max_conduits = 8;
    opts.max_steps = 5;
    Tally t;
    int cases = 0;
    for (std::uint64_t seed = 1; cases < 500; ++seed) {
        const RiskModel m = random_model(seed, opts);
        const std::string tag = "seed " + std::to_string(seed);
        for (const auto& [id, s] : m.attack_scenarios) {
            t.check(engine::scenario_feasibility(s, m).value() == oracle_feasibility(s, m), tag + " feasibility");
        }
        const auto matrix = engine::build_risk_matrix(m);
        const auto counts = oracle_matrix_counts(m);
        bool same = true;
        for (int i = 0; i < 5; ++i) {
            for (int f = 0; f < 5; ++f) same = same && static_cast<int>(matrix.cell(i, f).size()) == counts[i][f];
        }
        t.check(same, tag + " matrix");
        for (const auto& [zid, z] : m.zones) {
            for (const auto& [bid, b] : m.business_assets) {
                std::vector<OraclePath> got;
                for (const auto& p : engine::attack_paths(m, zid, bid, 6)) {
                    OraclePath o;
                    for (const auto& x : p.zones) o.zones.push_back(x.str());
                    for (const auto& x : p.conduits) o.conduits.push_back(x.str());
                    got.push_back(std::move(o));
                }
                t.check(got == oracle_paths(m, zid.str(), bid.str(), 6), tag + " paths " + zid.str() + "->" + bid.str());
            }
        }
        ++cases;
    }
    return t.outcome(std::to_string(cases) + " instances, " + std::to_string(t.cases()) + " comparisons");
}

Outcome residual_monotonicity() {
    std::mt19937_64 rng(2026);
    std::uniform_int_distribution<int> lvl(0, 4);
    Tally t;
    const RiskModel base = water_model();
    for (int n = 0; n < 500; ++n) {
        RiskModel m = base;
        m.controls.clear();
        Risk r = m.risks.at(ElementId("r-water-poisoning"));
        r.impact = Level(lvl(rng));
        r.feasibility = Level(lvl(rng));
        r.strategy = static_cast<TreatmentStrategy>(lvl(rng) % 4);
        const int inherent = engine::inherent_level(r.impact, r.feasibility);
        const std::string tag = "case " + std::to_string(n);
        int previous = engine::residual_level(r, m);
        t.check(previous <= inherent, tag + " residual above inherent");
        std::vector<Control> controls;
        for (int k = lvl(rng) + 1; k > 0; --k) {
            Control c{ElementId("ctl-" + std::to_string(k)), "c", LineOfDefence::Protect, {r.id}, Level(lvl(rng)),
                      Level(lvl(rng))};
            m.controls.emplace(c.id, c);
            controls.push_back(c);
            const int now = engine::residual_level(r, m);
            t.check(now <= previous, tag + " control increased residual");
            t.check(now <= inherent, tag + " residual above inherent");
            t.check(now == oracle_residual(r, controls), tag + " residual differs from definition");
            previous = now;
        }
    }
    return t.outcome("500 risk/control sets");
}

Outcome adapter_round_trips() {
    Tally t;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const RiskModel m = random_model(seed);
        const std::string tag = "seed " + std::to_string(seed);
        const auto pe = adapters::export_pistar(m);
        t.check(elements_only(adapters::import_pistar(pe.document).fragment) == pistar_projection(m), tag + " pistar");
        const auto me = adapters::export_monarc(m);
        t.check(elements_only(adapters::import_monarc(me.document).fragment) == monarc_projection(m), tag + " monarc");
        for (const auto* e : {&pe, &me}) {
            std::set<ElementId> linked;
            for (const auto& l : e->links) linked.insert(l.element);
            std::set<ElementId> reported;
            for (const auto& f : e->findings) {
                if (f.rule_id == "W-UNMAPPED" && f.element) reported.insert(*f.element);
            }
            for (const auto& id : all_ids(m)) {
                t.check(linked.contains(id) || reported.contains(id), tag + " silent drop of " + id.str());
            }
        }
    }
    return t.outcome("100 models, both adapters");
}

Outcome relational_idempotence() {
    Tally t;
    auto run = [&](const RiskModel& m, const std::string& tag) {
        const std::string script = adapters::export_cyrus(m).text();
        SqlReplayer once(table_names());
        once.replay(script);
        SqlReplayer twice(table_names());
        twice.replay(script);
        twice.replay(script);
        t.check(once.tables() == twice.tables(), tag);
    };
    run(water_model(), "fixture");
    for (std::uint64_t seed = 1; seed <= 50; ++seed) run(random_model(seed), "seed " + std::to_string(seed));
    return t.outcome("fixture and 50 models");
}

Outcome end_to_end_pipeline() {
    TempDir dir("acceptance");
    const std::string model = dir.file("plant.riskmodel.json");
    Tally t;
    auto step = [&](std::vector<std::string> args) {
        std::ostringstream out;
        std::ostringstream err;
        args.insert(args.begin(), {"-m", model});
        const int code = cli::run(args, out, err);
        t.check(code == 0, "exit " + std::to_string(code) + " at " + args[2] + ": " + err.str());
    };
    step({"init"});
    step({"import", "--from", "pistar", "--in", fixture_path("water_pistar.json")});
    step({"upsert", "--in", fixture_path("water_enrichment.json")});
    step({"validate"});
    step({"export", "--to", "monarc", "--out", dir.file("plant.monarc.json")});
    step({"export", "--to", "cyrus", "--out", dir.file("plant.sql")});
    step({"results", "--from", "cyrus", "--in", fixture_path("water_results.json")});

    const RiskModel m = load_model(read_file(model));
    t.check(!m.risks.empty(), "no risks in the final model");
    auto linked = [&](const ElementId& id, Tool tool, TraceDirection dir, const std::string& prefix) {
        return std::any_of(m.trace_links.begin(), m.trace_links.end(), [&](const TraceLink& l) {
            return l.element == id && l.source_tool == tool && l.direction == dir &&
                   l.external_id.rfind(prefix, 0) == 0;
        });
    };
    for (const auto& [id, r] : m.risks) {
        const bool strategic = linked(id, Tool::Pistar, TraceDirection::Imported, "") ||
                               linked(r.dreaded_event, Tool::Pistar, TraceDirection::Imported, "") ||
                               linked(r.scenario, Tool::Pistar, TraceDirection::Imported, "");
        t.check(strategic, id.str() + " has no strategic-model link");
        t.check(linked(id, Tool::Cyrus, TraceDirection::Exported, "test_suite:" + id.str()),
                id.str() + " has no test suite link");
    }
    return t.outcome(std::to_string(m.risks.size()) + " risks traced");
}

Outcome diff_apply_identity() {
    Tally t;
    for (std::uint64_t n = 1; n <= 200; ++n) {
        const RiskModel base = random_model(n);
        RiskModel other;
        if (n % 2 == 0) {
            other = mutate(base, n * 13);
        } else {
            other = random_model(n + 5000);
            other.revision = base.revision + 1;
        }
        const std::string tag = "pair " + std::to_string(n);
        t.check(other.revision == base.revision + 1, tag + " revision setup");
        t.check(adapters::apply(base, adapters::diff(base, other)) == other, tag);
    }
    return t.outcome("200 pairs");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 canonical round-trip", canonical_round_trip},
        {"2 validation catalogue", validation_catalogue},
        {"3 risk-engine oracles", engine_oracles},
        {"4 residual monotonicity", residual_monotonicity},
        {"5 adapter subset round-trips", adapter_round_trips},
        {"6 relational export idempotence", relational_idempotence},
        {"7 end-to-end pipeline", end_to_end_pipeline},
        {"8 diff/apply identity", diff_apply_identity},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << " (" << o.detail << ")\n";
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
