#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace rmm::testing {

int oracle_feasibility(const AttackScenario& scenario, const RiskModel& model) {
    const auto& de = model.dreaded_events.at(scenario.realizes);
    std::vector<int> parts{model.attackers.at(de.attacker).capability.value()};
    for (const auto& s : scenario.steps) {
        parts.push_back(model.vulnerabilities.at(s.vulnerability).qualification.value());
    }
    for (int level = 4; level > 0; --level) {
        if (std::all_of(parts.begin(), parts.end(), [&](int p) { return p >= level; })) {
            return level;
        }
    }
    return 0;
}

std::array<std::array<int, 5>, 5> oracle_matrix_counts(const RiskModel& model) {
    std::array<std::array<int, 5>, 5> counts{};
    for (int i = 0; i < 5; ++i) {
        for (int f = 0; f < 5; ++f) {
            for (const auto& [id, r] : model.risks) {
                const int feas = oracle_feasibility(model.attack_scenarios.at(r.scenario), model);
                if (r.impact.value() == i && feas == f) {
                    ++counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
                }
            }
        }
    }
    return counts;
}

std::vector<OraclePath> oracle_paths(const RiskModel& model, const std::string& entry, const std::string& target,
                                     int max_len) {
    std::vector<std::string> zones;
    for (const auto& [id, z] : model.zones) {
        zones.push_back(id.str());
    }
    std::set<std::string> goal;
    for (const auto& sa : model.business_assets.at(ElementId(target)).supported_by) {
        if (const auto& z = model.support_assets.at(sa).zone) {
            goal.insert(z->str());
        }
    }
    auto conduits_between = [&](const std::string& a, const std::string& b) {
        std::vector<std::string> out;
        for (const auto& [id, c] : model.conduits) {
            const auto& [x, y] = c.endpoints;
            if ((x.str() == a && y.str() == b) || (x.str() == b && y.str() == a)) {
                out.push_back(id.str());
            }
        }
        return out;
    };

    std::vector<OraclePath> out;
    // Every ordered selection of distinct zones, by length.
    std::vector<std::string> seq;
    std::function<void()> grow = [&] {
        if (!seq.empty() && seq.front() == entry && goal.contains(seq.back())) {
            // Expand by every combination of conduits.
            std::vector<std::vector<std::string>> choices;
            for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
                choices.push_back(conduits_between(seq[i], seq[i + 1]));
            }
            std::vector<std::string> picked;
            std::function<void(std::size_t)> expand = [&](std::size_t i) {
                if (i == choices.size()) {
                    out.push_back({seq, picked});
                    return;
                }
                for (const auto& c : choices[i]) {
                    picked.push_back(c);
                    expand(i + 1);
                    picked.pop_back();
                }
            };
            expand(0);
        }
        if (static_cast<int>(seq.size()) == max_len) {
            return;
        }
        for (const auto& z : zones) {
            if (std::find(seq.begin(), seq.end(), z) == seq.end()) {
                seq.push_back(z);
                grow();
                seq.pop_back();
            }
        }
    };
    grow();
    std::sort(out.begin(), out.end(), [](const OraclePath& a, const OraclePath& b) {
        if (a.zones.size() != b.zones.size()) {
            return a.zones.size() < b.zones.size();
        }
        if (a.zones != b.zones) {
            return a.zones < b.zones;
        }
        return a.conduits < b.conduits;
    });
    return out;
}

std::set<std::set<std::string>> oracle_goal_cycles(const RiskModel& model) {
    std::set<std::set<std::string>> cycles;
    for (const auto& [start, goal] : model.goals) {
        std::set<std::string> chain{start.str()};
        std::optional<ElementId> cur = goal.parent;
        for (std::size_t hop = 0; hop < model.goals.size() && cur; ++hop) {
            if (*cur == start) {
                cycles.insert(chain);
                break;
            }
            auto it = model.goals.find(*cur);
            if (it == model.goals.end()) break;
            chain.insert(cur->str());
            cur = it->second.parent;
        }
    }
    return cycles;
}

int oracle_residual(const Risk& risk, const std::vector<Control>& controls) {
    int impact = risk.impact.value();
    int feas = risk.feasibility.value();
    if (risk.strategy != TreatmentStrategy::Mitigate) {
        return impact * feas;
    }
    for (const auto& c : controls) {
        if (c.mitigates.contains(risk.id)) {
            impact -= c.impact_reduction.value();
            feas -= c.feasibility_reduction.value();
        }
    }
    return std::max(impact, 0) * std::max(feas, 0);
}

RiskModel pistar_projection(const RiskModel& model) {
    RiskModel p;
    p.business_assets = model.business_assets;
    for (const auto& [id, sa] : model.support_assets) {
        SupportAsset s;
        s.id = id;
        s.name = sa.name;
        s.category = sa.category;
        p.support_assets.emplace(id, s);
    }
    p.goals = model.goals;
    p.attackers = model.attackers;
    p.dreaded_events = model.dreaded_events;
    for (const auto& [id, sc] : model.attack_scenarios) {
        AttackScenario s;
        s.id = id;
        s.realizes = sc.realizes;
        p.attack_scenarios.emplace(id, s);
    }
    return p;
}

RiskModel monarc_projection(const RiskModel& model) {
    RiskModel p;
    std::set<ElementId> tree;
    for (const auto& [id, ba] : model.business_assets) {
        p.business_assets.emplace(id, ba);
        tree.insert(ba.supported_by.begin(), ba.supported_by.end());
    }
    for (const auto& id : tree) {
        const auto& sa = model.support_assets.at(id);
        SupportAsset s;
        s.id = id;
        s.name = sa.name;
        s.category = sa.category;
        p.support_assets.emplace(id, s);
    }
    for (const auto& [rid, r] : model.risks) {
        const auto& sc = model.attack_scenarios.at(r.scenario);
        if (sc.steps.empty() || !tree.contains(sc.steps.front().asset)) {
            continue;
        }
        const AttackStep first = sc.steps.front();
        const auto& de = model.dreaded_events.at(r.dreaded_event);
        const auto& a = model.attackers.at(de.attacker);

        Attacker att;
        att.id = a.id;
        att.name = a.name;
        att.capability = a.capability;
        p.attackers.insert_or_assign(a.id, att);

        const auto& v = model.vulnerabilities.at(first.vulnerability);
        auto [vit, fresh] = p.vulnerabilities.try_emplace(v.id);
        if (fresh) {
            vit->second.id = v.id;
            vit->second.name = v.name;
            vit->second.qualification = v.qualification;
            for (const auto& c : v.cve_ids) {
                if (std::find(vit->second.cve_ids.begin(), vit->second.cve_ids.end(), c) == vit->second.cve_ids.end()) {
                    vit->second.cve_ids.push_back(c);
                }
            }
        }
        vit->second.affects.insert(first.asset);
        p.support_assets.at(first.asset).vulnerabilities.insert(v.id);

        p.dreaded_events.insert_or_assign(de.id, de);
        AttackScenario s;
        s.id = sc.id;
        s.realizes = sc.realizes;
        s.steps = {first};
        p.attack_scenarios.insert_or_assign(s.id, s);
        p.risks.emplace(rid, r);
    }
    for (const auto& [cid, c] : model.controls) {
        Control k = c;
        k.mitigates.clear();
        for (const auto& rid : c.mitigates) {
            if (p.risks.contains(rid)) {
                k.mitigates.insert(rid);
            }
        }
        if (!k.mitigates.empty()) {
            p.controls.emplace(cid, k);
        }
    }
    return p;
}

std::vector<ElementId> all_ids(const RiskModel& model) {
    std::vector<ElementId> out;
    for_each_collection(model, [&](const auto& c) {
        for (const auto& [id, e] : c) {
            out.push_back(id);
        }
    });
    return out;
}

RiskModel elements_only(RiskModel model) {
    model.trace_links.clear();
    model.revision = 0;
    return model;
}

}  // namespace rmm::testing
