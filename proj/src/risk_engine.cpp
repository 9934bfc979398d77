#include "rmm/risk_engine.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace rmm::engine {

Level scenario_feasibility(const AttackScenario& scenario, const RiskModel& model) {
    auto de = model.dreaded_events.find(scenario.realizes);
    if (de == model.dreaded_events.end()) {
        throw UnresolvedRefError("scenario '" + scenario.id.str() + "' realizes unknown event '" +
                                 scenario.realizes.str() + "'");
    }
    auto att = model.attackers.find(de->second.attacker);
    if (att == model.attackers.end()) {
        throw UnresolvedRefError("event '" + de->first.str() + "' names unknown attacker '" +
                                 de->second.attacker.str() + "'");
    }
    Level weakest = att->second.capability;
    for (const auto& step : scenario.steps) {
        auto v = model.vulnerabilities.find(step.vulnerability);
        if (v == model.vulnerabilities.end()) {
            throw UnresolvedRefError("scenario '" + scenario.id.str() +
                                     "' exploits unknown vulnerability '" +
                                     step.vulnerability.str() + "'");
        }
        weakest = std::min(weakest, v->second.qualification);
    }
    return weakest;
}

int inherent_level(int impact, int feasibility) {
    if (impact < Level::kMin || impact > Level::kMax || feasibility < Level::kMin ||
        feasibility > Level::kMax) {
        throw RangeError("inherent_level(" + std::to_string(impact) + ", " +
                         std::to_string(feasibility) + "): arguments must lie in [0,4]");
    }
    return impact * feasibility;
}

int residual_level(const Risk& risk, const RiskModel& model) {
    const int inherent = inherent_level(risk.impact, risk.feasibility);
    if (risk.strategy != TreatmentStrategy::Mitigate) {
        return inherent;
    }
    if (!model.dreaded_events.contains(risk.dreaded_event)) {
        throw UnresolvedRefError("risk '" + risk.id.str() + "' refers to unknown event '" +
                                 risk.dreaded_event.str() + "'");
    }
    int impact_cut = 0;
    int feasibility_cut = 0;
    for (const auto& [id, c] : model.controls) {
        if (c.mitigates.contains(risk.id)) {
            impact_cut += c.impact_reduction.value();
            feasibility_cut += c.feasibility_reduction.value();
        }
    }
    const int impact = std::max(0, risk.impact.value() - impact_cut);
    const int feasibility = std::max(0, risk.feasibility.value() - feasibility_cut);
    return impact * feasibility;
}

std::size_t RiskMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : cells) {
        for (const auto& cell : row) {
            n += cell.size();
        }
    }
    return n;
}

RiskMatrix build_risk_matrix(const RiskModel& model) {
    require_no_errors(model, "risk matrix");
    RiskMatrix matrix;
    for (const auto& [id, risk] : model.risks) {
        const Level f = scenario_feasibility(model.attack_scenarios.at(risk.scenario), model);
        matrix.cells[static_cast<std::size_t>(risk.impact.value())][static_cast<std::size_t>(f.value())]
            .insert(id);
    }
    return matrix;
}

std::string format_matrix_csv(const RiskMatrix& matrix) {
    std::ostringstream os;
    os << "impact\\feasibility";
    for (int f = 0; f < kScaleSize; ++f) {
        os << ',' << f;
    }
    os << '\n';
    for (int i = kScaleSize - 1; i >= 0; --i) {
        os << i;
        for (int f = 0; f < kScaleSize; ++f) {
            os << ',' << matrix.cell(i, f).size();
        }
        os << '\n';
    }
    return os.str();
}

std::string format_matrix_listing(const RiskMatrix& matrix, const RiskModel& model) {
    std::ostringstream os;
    os << "risk,impact,feasibility,inherent,residual,strategy\n";
    for (int i = kScaleSize - 1; i >= 0; --i) {
        for (int f = kScaleSize - 1; f >= 0; --f) {
            for (const auto& id : matrix.cell(i, f)) {
                const Risk& r = model.risks.at(id);
                os << id.str() << ',' << i << ',' << f << ',' << inherent_level(i, f) << ','
                   << residual_level(r, model) << ',' << to_string(r.strategy) << '\n';
            }
        }
    }
    return os.str();
}

namespace {

struct Edge {
    ElementId zone;
    ElementId conduit;
};

std::map<ElementId, std::vector<Edge>> adjacency(const RiskModel& model) {
    std::map<ElementId, std::vector<Edge>> adj;
    for (const auto& [id, c] : model.conduits) {
        const auto& [a, b] = c.endpoints;
        if (a == b) {
            continue;
        }
        adj[a].push_back({b, id});
        adj[b].push_back({a, id});
    }
    for (auto& [z, edges] : adj) {
        std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
            return std::tie(x.zone, x.conduit) < std::tie(y.zone, y.conduit);
        });
    }
    return adj;
}

}  // namespace

std::vector<ZonePath> attack_paths(const RiskModel& model, const ElementId& entry,
                                   const ElementId& target, int max_len) {
    if (max_len < 1) {
        throw RangeError("attack_paths: max_len must be at least 1");
    }
    if (!model.zones.contains(entry)) {
        throw UnresolvedRefError("unknown entry zone '" + entry.str() + "'");
    }
    auto ba = model.business_assets.find(target);
    if (ba == model.business_assets.end()) {
        throw UnresolvedRefError("unknown business asset '" + target.str() + "'");
    }

    std::set<ElementId> goal_zones;
    for (const auto& sa_id : ba->second.supported_by) {
        auto sa = model.support_assets.find(sa_id);
        if (sa != model.support_assets.end() && sa->second.zone) {
            goal_zones.insert(*sa->second.zone);
        }
    }

    const auto adj = adjacency(model);
    std::vector<ZonePath> paths;
    ZonePath current;
    std::set<ElementId> on_path;

    std::function<void(const ElementId&)> walk = [&](const ElementId& zone) {
        current.zones.push_back(zone);
        on_path.insert(zone);
        if (goal_zones.contains(zone)) {
            paths.push_back(current);
        }
        if (static_cast<int>(current.zones.size()) < max_len) {
            if (auto it = adj.find(zone); it != adj.end()) {
                for (const auto& edge : it->second) {
                    if (on_path.contains(edge.zone)) {
                        continue;
                    }
                    current.conduits.push_back(edge.conduit);
                    walk(edge.zone);
                    current.conduits.pop_back();
                }
            }
        }
        on_path.erase(zone);
        current.zones.pop_back();
    };
    walk(entry);

    std::sort(paths.begin(), paths.end(), [](const ZonePath& a, const ZonePath& b) {
        return std::forward_as_tuple(a.zones.size(), a.zones, a.conduits) <
               std::forward_as_tuple(b.zones.size(), b.zones, b.conduits);
    });
    return paths;
}

std::vector<Finding> check_scenario_topology(const AttackScenario& scenario, const RiskModel& model) {
    std::vector<Finding> out;
    std::set<std::pair<ElementId, ElementId>> linked;
    for (const auto& [id, c] : model.conduits) {
        linked.insert(std::minmax(c.endpoints.first, c.endpoints.second));
    }
    auto zone_of = [&](const ElementId& asset) -> std::optional<ElementId> {
        auto it = model.support_assets.find(asset);
        return it == model.support_assets.end() ? std::nullopt : it->second.zone;
    };
    for (std::size_t i = 0; i < scenario.steps.size(); ++i) {
        const auto& asset = scenario.steps[i].asset;
        if (model.support_assets.contains(asset) && !zone_of(asset)) {
            out.push_back(make_finding("W-ZONELESS", scenario.id,
                                       "step " + std::to_string(i + 1) + " asset '" + asset.str() +
                                           "' has no zone"));
        }
        if (i == 0) {
            continue;
        }
        auto from = zone_of(scenario.steps[i - 1].asset);
        auto to = zone_of(asset);
        if (!from || !to || *from == *to) {
            continue;
        }
        if (!linked.contains(std::minmax(*from, *to))) {
            out.push_back(make_finding("R-TOPOLOGY", scenario.id,
                                       "steps " + std::to_string(i) + "->" + std::to_string(i + 1) +
                                           " cross from zone '" + from->str() + "' to '" +
                                           to->str() + "' without a conduit"));
        }
    }
    sort_findings(out);
    return out;
}

bool CoverageReport::empty() const {
    return dreaded_events_without_scenario.empty() && risks_without_strategy_rationale.empty() &&
           mitigate_risks_without_controls.empty() && controls_unlinked.empty() &&
           avoided_risks.empty();
}

CoverageReport coverage_report(const RiskModel& model, int accept_threshold) {
    require_no_errors(model, "coverage report");
    CoverageReport report;
    for (const auto& [id, de] : model.dreaded_events) {
        bool realized = std::any_of(model.attack_scenarios.begin(), model.attack_scenarios.end(),
                                    [&](const auto& kv) { return kv.second.realizes == id; });
        if (!realized) {
            report.dreaded_events_without_scenario.insert(id);
        }
    }
    std::set<ElementId> controlled;
    for (const auto& [id, c] : model.controls) {
        if (c.mitigates.empty()) {
            report.controls_unlinked.insert(id);
        }
        controlled.insert(c.mitigates.begin(), c.mitigates.end());
    }
    for (const auto& [id, r] : model.risks) {
        switch (r.strategy) {
            case TreatmentStrategy::Accept:
                if (inherent_level(r.impact, r.feasibility) >= accept_threshold) {
                    report.risks_without_strategy_rationale.insert(id);
                }
                break;
            case TreatmentStrategy::Mitigate:
                if (!controlled.contains(id)) {
                    report.mitigate_risks_without_controls.insert(id);
                }
                break;
            case TreatmentStrategy::Avoid:
                report.avoided_risks.insert(id);
                break;
            case TreatmentStrategy::Transfer:
                break;
        }
    }
    return report;
}

namespace {

json id_list(const std::set<ElementId>& ids) {
    json a = json::array();
    for (const auto& id : ids) {
        a.push_back(id.str());
    }
    return a;
}

json id_list(const std::vector<ElementId>& ids) {
    json a = json::array();
    for (const auto& id : ids) {
        a.push_back(id.str());
    }
    return a;
}

}  // namespace

json to_json(const RiskMatrix& matrix) {
    json cells = json::array();
    json counts = json::array();
    for (int i = 0; i < kScaleSize; ++i) {
        json row = json::array();
        for (int f = 0; f < kScaleSize; ++f) {
            row.push_back(matrix.cell(i, f).size());
            if (!matrix.cell(i, f).empty()) {
                cells.push_back({{"impact", i}, {"feasibility", f}, {"risks", id_list(matrix.cell(i, f))}});
            }
        }
        counts.push_back(std::move(row));
    }
    return {{"counts", counts},
            {"cells", cells},
            {"impact_labels", matrix.impact_labels},
            {"feasibility_labels", matrix.feasibility_labels},
            {"total", matrix.total()}};
}

json to_json(const ZonePath& path) {
    return {{"zones", id_list(path.zones)}, {"conduits", id_list(path.conduits)}};
}

json to_json(const CoverageReport& report) {
    return {{"dreaded_events_without_scenario", id_list(report.dreaded_events_without_scenario)},
            {"risks_without_strategy_rationale", id_list(report.risks_without_strategy_rationale)},
            {"mitigate_risks_without_controls", id_list(report.mitigate_risks_without_controls)},
            {"controls_unlinked", id_list(report.controls_unlinked)},
            {"avoided_risks", id_list(report.avoided_risks)}};
}

}  // namespace rmm::engine
