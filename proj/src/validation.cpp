#include "rmm/validation.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <regex>
#include <sstream>
#include <tuple>

#include "rmm/risk_engine.hpp"

namespace rmm {

ValidationGateError::ValidationGateError(const std::string& what, std::vector<Finding> findings)
    : Error(what), findings_(std::move(findings)) {}
ValidationGateError::~ValidationGateError() = default;
ValidationGateError::ValidationGateError(const ValidationGateError&) = default;
ValidationGateError& ValidationGateError::operator=(const ValidationGateError&) = default;

std::string_view to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

bool finding_less(const Finding& a, const Finding& b) {
    // An absent element sorts before any id.
    auto key = [](const Finding& f) {
        return std::make_tuple(static_cast<int>(f.severity), std::string_view(f.rule_id),
                               f.element.has_value(),
                               f.element ? std::string_view(f.element->str()) : std::string_view(),
                               std::string_view(f.message));
    };
    return key(a) < key(b);
}

void sort_findings(std::vector<Finding>& findings) {
    std::sort(findings.begin(), findings.end(), finding_less);
}

const std::vector<RuleInfo>& rule_catalogue() {
    static const std::vector<RuleInfo> catalogue{
        {"R-ID-UNIQUE", Severity::Error, RuleScope::Model,
         "Element ids are unique across all collections of the model."},
        {"R-REF-DANGLING", Severity::Error, RuleScope::Model,
         "Every reference resolves to an element of the expected kind."},
        {"R-CONDUIT-DISTINCT", Severity::Error, RuleScope::Model,
         "A conduit joins two distinct zones."},
        {"R-CONDUIT-UNIQUE", Severity::Error, RuleScope::Model,
         "At most one conduit per unordered zone pair; extra channels go in the channel text."},
        {"R-GOAL-ACYCLIC", Severity::Error, RuleScope::Model,
         "Goal parent links form a forest (no cycles)."},
        {"R-GOAL-SECURES", Severity::Error, RuleScope::Model,
         "A goal only secures properties declared among the asset's security needs."},
        {"R-NEED-PRESENT", Severity::Error, RuleScope::Model,
         "A business asset declares at least one security need of level 1 or more."},
        {"R-ASSET-VULN-SYNC", Severity::Error, RuleScope::Model,
         "Support-asset vulnerabilities and vulnerability affected assets mirror each other."},
        {"R-VULN-AFFECTS", Severity::Error, RuleScope::Model,
         "A vulnerability affects at least one support asset."},
        {"R-VULN-CVE", Severity::Error, RuleScope::Model,
         "CVE identifiers match CVE-YYYY-NNNN (four or more digits in the sequence part)."},
        {"R-EVENT-PROPERTY", Severity::Error, RuleScope::Model,
         "A dreaded event violates a property listed in its target's security needs."},
        {"R-STEP-VULN", Severity::Error, RuleScope::Model,
         "Each scenario step exploits a vulnerability that affects the step's asset."},
        {"R-STEP-TERMINAL", Severity::Error, RuleScope::Model,
         "A scenario has steps and its last step lands on an asset supporting the attacked "
         "business asset."},
        {"R-TOPOLOGY", Severity::Error, RuleScope::Model,
         "Consecutive scenario steps in different zones require a direct conduit between them."},
        {"R-RISK-ALIGNED", Severity::Error, RuleScope::Model,
         "A risk's scenario realizes the risk's dreaded event."},
        {"R-IMPACT-CACHED", Severity::Error, RuleScope::Model,
         "A risk's impact equals the severity of its dreaded event."},
        {"R-FEASIBILITY-CACHED", Severity::Error, RuleScope::Model,
         "A risk's feasibility equals the weakest-link feasibility of its scenario."},
        {"R-CTRL-MITIGATE", Severity::Error, RuleScope::Model,
         "A control may only mitigate risks whose treatment strategy is mitigate."},
        {"R-CTRL-EFFECT", Severity::Error, RuleScope::Model,
         "A control reduces feasibility or impact by at least one level in total."},
        {"R-TRACE-UNIQUE", Severity::Error, RuleScope::Model,
         "(tool, external id, element) appears at most once per revision among trace links."},
        {"W-SEVERITY-EXCEEDS", Severity::Warning, RuleScope::Model,
         "A dreaded event's severity exceeds the declared need for the violated property."},
        {"W-MITIGATE-EMPTY", Severity::Warning, RuleScope::Model,
         "A risk with the mitigate strategy has no control yet."},
        {"W-ZONELESS", Severity::Warning, RuleScope::Model,
         "A scenario step sits on an asset outside every zone; topology is not checked there."},

        {"W-UNMAPPED", Severity::Warning, RuleScope::Adapter,
         "An element or external concept has no counterpart in the target format."},
        {"W-DANGLING-EXTERNAL", Severity::Warning, RuleScope::Adapter,
         "An external document refers to something it does not define; the item is skipped."},
        {"W-INCOMPLETE-EXTERNAL", Severity::Warning, RuleScope::Adapter,
         "An external element lacks information required by the metamodel; it is skipped or "
         "defaulted as stated."},
        {"W-STRATEGY-UNKNOWN", Severity::Warning, RuleScope::Adapter,
         "An unrecognised treatment strategy string; accept is assumed."},
        {"W-MULTISTEP-LOSS", Severity::Warning, RuleScope::Adapter,
         "A multi-step scenario was flattened to one vulnerability; extra steps went to the "
         "remark field."},
        {"W-CONTROL-UNVERIFIED", Severity::Warning, RuleScope::Adapter,
         "A test session failed on the suite derived from a risk; its controls are unverified."},
    };
    return catalogue;
}

const RuleInfo* find_rule(std::string_view rule_id) {
    for (const auto& r : rule_catalogue()) {
        if (r.rule_id == rule_id) {
            return &r;
        }
    }
    return nullptr;
}

Finding make_finding(std::string_view rule_id, std::optional<ElementId> element, std::string message) {
    const RuleInfo* rule = find_rule(rule_id);
    if (!rule) {
        throw Error("finding raised with uncatalogued rule '" + std::string(rule_id) + "'");
    }
    return Finding{std::string(rule_id), rule->severity, std::move(element), std::move(message)};
}

namespace {

class Validator {
public:
    explicit Validator(const RiskModel& model) : m_(model) {}

    std::vector<Finding> run() {
        check_unique_ids();
        check_references();
        check_conduits();
        check_goals();
        check_business_assets();
        check_vulnerabilities();
        check_dreaded_events();
        check_scenarios();
        check_risks();
        check_controls();
        check_trace_links();
        sort_findings(out_);
        out_.erase(std::unique(out_.begin(), out_.end()), out_.end());
        return std::move(out_);
    }

private:
    void add(std::string_view rule, const ElementId& id, std::string message) {
        out_.push_back(make_finding(rule, id, std::move(message)));
    }

    void check_unique_ids() {
        std::map<ElementId, std::vector<ElementKind>> seen;
        for_each_collection(m_, [&](const auto& c) {
            using T = typename std::decay_t<decltype(c)>::mapped_type;
            for (const auto& [id, e] : c) {
                seen[id].push_back(ElementTraits<T>::kind);
                if (e.id != id) {
                    add("R-ID-UNIQUE", id, "element stored under '" + id.str() + "' carries id '" +
                                               e.id.str() + "'");
                }
            }
        });
        for (const auto& [id, kinds] : seen) {
            if (kinds.size() > 1) {
                std::string names;
                for (auto k : kinds) {
                    names += (names.empty() ? "" : ", ") + std::string(kind_name(k));
                }
                add("R-ID-UNIQUE", id, "id used by several kinds: " + names);
            }
        }
    }

    void check_references() {
        for (const auto& ref : dangling_references(m_)) {
            add("R-REF-DANGLING", ref.from,
                std::string(kind_name(ref.from_kind)) + " field " + ref.field + " refers to missing " +
                    std::string(kind_name(ref.expected)) + " '" + ref.to.str() + "'");
        }
    }

    void check_conduits() {
        std::map<std::pair<ElementId, ElementId>, ElementId> pairs;
        for (const auto& [id, c] : m_.conduits) {
            const auto& [a, b] = c.endpoints;
            if (a == b) {
                add("R-CONDUIT-DISTINCT", id, "both endpoints are zone '" + a.str() + "'");
                continue;
            }
            auto key = std::minmax(a, b);
            auto [it, inserted] = pairs.emplace(std::pair{key.first, key.second}, id);
            if (!inserted) {
                add("R-CONDUIT-UNIQUE", id,
                    "zones '" + key.first.str() + "' and '" + key.second.str() +
                        "' already joined by conduit '" + it->second.str() + "'");
            }
        }
    }

    void check_goals() {
        // Parent links form a functional graph; walk each chain once.
        enum class Mark { Unvisited, OnStack, Done };
        std::map<ElementId, Mark> mark;
        for (const auto& [id, g] : m_.goals) {
            mark[id] = Mark::Unvisited;
        }
        for (const auto& [start, g0] : m_.goals) {
            if (mark[start] != Mark::Unvisited) {
                continue;
            }
            std::vector<ElementId> chain;
            std::optional<ElementId> cur = start;
            while (cur && m_.goals.contains(*cur) && mark[*cur] == Mark::Unvisited) {
                mark[*cur] = Mark::OnStack;
                chain.push_back(*cur);
                cur = m_.goals.at(*cur).parent;
            }
            if (cur && m_.goals.contains(*cur) && mark[*cur] == Mark::OnStack) {
                auto first = std::find(chain.begin(), chain.end(), *cur);
                std::vector<ElementId> cycle(first, chain.end());
                const ElementId smallest = *std::min_element(cycle.begin(), cycle.end());
                std::string text;
                for (const auto& c : cycle) {
                    text += c.str() + " -> ";
                }
                text += cur->str();
                add("R-GOAL-ACYCLIC", smallest, "goal parent cycle: " + text);
            }
            for (const auto& c : chain) {
                mark[c] = Mark::Done;
            }
        }

        for (const auto& [id, g] : m_.goals) {
            for (const auto& s : g.secures) {
                auto it = m_.business_assets.find(s.asset);
                if (it == m_.business_assets.end()) {
                    continue;
                }
                if (!it->second.security_needs.contains(s.property)) {
                    add("R-GOAL-SECURES", id,
                        "secures " + std::string(to_string(s.property)) + " of '" + s.asset.str() +
                            "', which declares no such need");
                }
            }
        }
    }

    void check_business_assets() {
        for (const auto& [id, ba] : m_.business_assets) {
            bool any = std::any_of(ba.security_needs.begin(), ba.security_needs.end(),
                                   [](const auto& kv) { return kv.second.value() >= 1; });
            if (!any) {
                add("R-NEED-PRESENT", id, "no security need of level 1 or more");
            }
        }
    }

    void check_vulnerabilities() {
        static const std::regex cve(R"(CVE-\d{4}-\d{4,})");
        for (const auto& [id, v] : m_.vulnerabilities) {
            if (v.affects.empty()) {
                add("R-VULN-AFFECTS", id, "affects no support asset");
            }
            for (const auto& c : v.cve_ids) {
                if (!std::regex_match(c, cve)) {
                    add("R-VULN-CVE", id, "malformed CVE id '" + c + "'");
                }
            }
            for (const auto& a : v.affects) {
                auto it = m_.support_assets.find(a);
                if (it != m_.support_assets.end() && !it->second.vulnerabilities.contains(id)) {
                    add("R-ASSET-VULN-SYNC", id,
                        "affects '" + a.str() + "' but the asset does not list it");
                }
            }
        }
        for (const auto& [id, sa] : m_.support_assets) {
            for (const auto& v : sa.vulnerabilities) {
                auto it = m_.vulnerabilities.find(v);
                if (it != m_.vulnerabilities.end() && !it->second.affects.contains(id)) {
                    add("R-ASSET-VULN-SYNC", id,
                        "lists vulnerability '" + v.str() + "' which does not affect it");
                }
            }
        }
    }

    void check_dreaded_events() {
        for (const auto& [id, de] : m_.dreaded_events) {
            auto it = m_.business_assets.find(de.target);
            if (it == m_.business_assets.end()) {
                continue;
            }
            auto need = it->second.security_needs.find(de.violates);
            if (need == it->second.security_needs.end()) {
                add("R-EVENT-PROPERTY", id,
                    "violates " + std::string(to_string(de.violates)) + " but '" + de.target.str() +
                        "' declares no such need");
            } else if (de.severity > need->second) {
                add("W-SEVERITY-EXCEEDS", id,
                    "severity " + std::to_string(de.severity.value()) + " exceeds declared need " +
                        std::to_string(need->second.value()));
            }
        }
    }

    void check_scenarios() {
        for (const auto& [id, sc] : m_.attack_scenarios) {
            for (std::size_t i = 0; i < sc.steps.size(); ++i) {
                const auto& step = sc.steps[i];
                auto v = m_.vulnerabilities.find(step.vulnerability);
                if (v != m_.vulnerabilities.end() && m_.support_assets.contains(step.asset) &&
                    !v->second.affects.contains(step.asset)) {
                    add("R-STEP-VULN", id,
                        "step " + std::to_string(i + 1) + ": '" + step.vulnerability.str() +
                            "' does not affect '" + step.asset.str() + "'");
                }
            }
            if (sc.steps.empty()) {
                add("R-STEP-TERMINAL", id, "scenario has no steps");
            } else if (auto de = m_.dreaded_events.find(sc.realizes); de != m_.dreaded_events.end()) {
                auto ba = m_.business_assets.find(de->second.target);
                const auto& last = sc.steps.back().asset;
                if (ba != m_.business_assets.end() && !ba->second.supported_by.contains(last)) {
                    add("R-STEP-TERMINAL", id,
                        "last step asset '" + last.str() + "' does not support '" +
                            de->second.target.str() + "'");
                }
            }
            for (auto& f : engine::check_scenario_topology(sc, m_)) {
                out_.push_back(std::move(f));
            }
        }
    }

    void check_risks() {
        for (const auto& [id, r] : m_.risks) {
            auto sc = m_.attack_scenarios.find(r.scenario);
            if (sc != m_.attack_scenarios.end() && sc->second.realizes != r.dreaded_event) {
                add("R-RISK-ALIGNED", id,
                    "scenario '" + r.scenario.str() + "' realizes '" + sc->second.realizes.str() +
                        "', not '" + r.dreaded_event.str() + "'");
            }
            auto de = m_.dreaded_events.find(r.dreaded_event);
            if (de != m_.dreaded_events.end() && de->second.severity != r.impact) {
                add("R-IMPACT-CACHED", id,
                    "impact " + std::to_string(r.impact.value()) + " differs from event severity " +
                        std::to_string(de->second.severity.value()));
            }
            if (sc != m_.attack_scenarios.end()) {
                try {
                    Level f = engine::scenario_feasibility(sc->second, m_);
                    if (f != r.feasibility) {
                        add("R-FEASIBILITY-CACHED", id,
                            "feasibility " + std::to_string(r.feasibility.value()) +
                                " differs from scenario feasibility " + std::to_string(f.value()));
                    }
                } catch (const UnresolvedRefError&) {
                    // Reported by R-REF-DANGLING.
                }
            }
            if (r.strategy == TreatmentStrategy::Mitigate) {
                bool covered = std::any_of(m_.controls.begin(), m_.controls.end(),
                                           [&](const auto& kv) { return kv.second.mitigates.contains(id); });
                if (!covered) {
                    add("W-MITIGATE-EMPTY", id, "mitigate strategy without any control");
                }
            }
        }
    }

    void check_controls() {
        for (const auto& [id, c] : m_.controls) {
            for (const auto& rid : c.mitigates) {
                auto r = m_.risks.find(rid);
                if (r != m_.risks.end() && r->second.strategy != TreatmentStrategy::Mitigate) {
                    add("R-CTRL-MITIGATE", id,
                        "attached to risk '" + rid.str() + "' whose strategy is " +
                            std::string(to_string(r->second.strategy)));
                }
            }
            if (c.feasibility_reduction.value() + c.impact_reduction.value() < 1) {
                add("R-CTRL-EFFECT", id, "reduces neither feasibility nor impact");
            }
        }
    }

    void check_trace_links() {
        std::map<std::tuple<Tool, std::string, ElementId, std::uint64_t>, int> count;
        for (const auto& t : m_.trace_links) {
            if (++count[{t.source_tool, t.external_id, t.element, t.revision}] == 2) {
                add("R-TRACE-UNIQUE", t.element,
                    std::string(to_string(t.source_tool)) + " id '" + t.external_id +
                        "' linked twice at revision " + std::to_string(t.revision));
            }
        }
    }

    const RiskModel& m_;
    std::vector<Finding> out_;
};

}  // namespace

std::vector<Finding> validate(const RiskModel& model) { return Validator(model).run(); }

bool has_errors(const std::vector<Finding>& findings) {
    return std::any_of(findings.begin(), findings.end(),
                       [](const Finding& f) { return f.severity == Severity::Error; });
}

void require_no_errors(const RiskModel& model, std::string_view operation) {
    auto findings = validate(model);
    if (has_errors(findings)) {
        std::size_t n = static_cast<std::size_t>(
            std::count_if(findings.begin(), findings.end(),
                          [](const Finding& f) { return f.severity == Severity::Error; }));
        throw ValidationGateError(std::string(operation) + " refused: model has " +
                                      std::to_string(n) + " validation error(s)",
                                  std::move(findings));
    }
}

json findings_to_json(const std::vector<Finding>& findings) {
    json arr = json::array();
    for (const auto& f : findings) {
        arr.push_back({{"rule_id", f.rule_id},
                       {"severity", to_string(f.severity)},
                       {"element", f.element ? json(f.element->str()) : json(nullptr)},
                       {"message", f.message}});
    }
    return arr;
}

std::vector<Finding> findings_from_json(const json& j) {
    if (!j.is_array()) {
        throw SchemaError("findings: expected an array");
    }
    std::vector<Finding> out;
    for (const auto& item : j) {
        Finding f;
        f.rule_id = item.at("rule_id").get<std::string>();
        const auto sev = item.at("severity").get<std::string>();
        if (sev != "error" && sev != "warning") {
            throw SchemaError("findings: unknown severity '" + sev + "'");
        }
        f.severity = sev == "error" ? Severity::Error : Severity::Warning;
        if (item.contains("element") && !item["element"].is_null()) {
            f.element = ElementId(item["element"].get<std::string>());
        }
        f.message = item.value("message", "");
        out.push_back(std::move(f));
    }
    return out;
}

std::string format_findings(const std::vector<Finding>& findings) {
    std::ostringstream os;
    if (findings.empty()) {
        os << "no findings\n";
        return os.str();
    }
    std::size_t rule_w = 7;
    std::size_t elem_w = 7;
    for (const auto& f : findings) {
        rule_w = std::max(rule_w, f.rule_id.size());
        elem_w = std::max(elem_w, f.element ? f.element->str().size() : 1);
    }
    os << std::left << std::setw(8) << "SEVERITY" << "  " << std::setw(static_cast<int>(rule_w))
       << "RULE" << "  " << std::setw(static_cast<int>(elem_w)) << "ELEMENT" << "  MESSAGE\n";
    for (const auto& f : findings) {
        os << std::left << std::setw(8) << to_string(f.severity) << "  "
           << std::setw(static_cast<int>(rule_w)) << f.rule_id << "  "
           << std::setw(static_cast<int>(elem_w)) << (f.element ? f.element->str() : "-") << "  "
           << f.message << "\n";
    }
    return os.str();
}

}  // namespace rmm
