#include "rmm/adapters/monarc.hpp"

#include <algorithm>
#include <cctype>

namespace rmm::adapters {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Ids in MONARC documents may be numbers or strings.
std::optional<std::string> id_text(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (it->is_string()) {
        return it->get<std::string>();
    }
    if (it->is_number_integer()) {
        return std::to_string(it->get<long long>());
    }
    return std::nullopt;
}

std::string text(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it != obj.end() && it->is_string() ? it->get<std::string>() : std::string();
}

std::optional<Level> level(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer()) {
        return std::nullopt;
    }
    auto v = it->get<long long>();
    if (v < Level::kMin || v > Level::kMax) {
        return std::nullopt;
    }
    return Level(static_cast<int>(v));
}

struct ThreatParts {
    std::string attacker;
    std::optional<SecurityProperty> property;
};

ThreatParts split_threat(std::string_view threat) {
    auto pos = threat.rfind(" - ");
    if (pos != std::string_view::npos) {
        auto prop = enum_from_string<SecurityProperty>(lower(trim(threat.substr(pos + 3))));
        if (prop) {
            return {std::string(threat.substr(0, pos)), prop};
        }
    }
    return {trim(threat), std::nullopt};
}

struct TreeAsset {
    ElementId id;
    bool top = false;
    std::vector<ElementId> tops;  // enclosing top-level assets, document order
};

class MonarcImporter {
public:
    explicit MonarcImporter(const json& doc) : doc_(doc) {}

    ImportResult run() {
        check_structure();
        for (const auto& top : doc_["assets"]) {
            map_top(top);
        }
        if (auto risks = doc_.find("risks"); risks != doc_.end()) {
            std::size_t n = 0;
            for (const auto& row : *risks) {
                map_row(row, ++n);
            }
        }
        finish();
        for (const auto& [key, link] : links_) {
            result_.links.push_back(link);
        }
        sort_findings(result_.findings);
        return std::move(result_);
    }

private:
    void check_structure() {
        if (!doc_.is_object()) {
            throw SchemaError("MONARC document: expected an object");
        }
        if (auto p = doc_.find("project"); p == doc_.end() || !p->is_object()) {
            throw SchemaError("MONARC document: missing 'project' object");
        }
        if (auto a = doc_.find("assets"); a == doc_.end() || !a->is_array()) {
            throw SchemaError("MONARC document: missing 'assets' array");
        }
        if (auto r = doc_.find("risks"); r != doc_.end() && !r->is_array()) {
            throw SchemaError("MONARC document: 'risks' must be an array");
        }
    }

    void warn(std::string_view rule, std::optional<ElementId> element, std::string message) {
        result_.findings.push_back(make_finding(rule, std::move(element), std::move(message)));
    }

    void link(const std::string& external, const ElementId& id) {
        links_.try_emplace(id, make_link(Tool::Monarc, external, id, TraceDirection::Imported));
    }

    std::string require_id(const json& asset) {
        if (!asset.is_object()) {
            throw SchemaError("MONARC document: asset entries must be objects");
        }
        auto id = id_text(asset, "id");
        if (!id) {
            throw SchemaError("MONARC document: asset '" + text(asset, "name") + "' has no id");
        }
        return *id;
    }

    void map_top(const json& asset) {
        const std::string ext = require_id(asset);
        if (tree_.contains(ext)) {
            warn("W-DANGLING-EXTERNAL", std::nullopt, "asset id '" + ext + "' appears twice; ignored");
            return;
        }
        BusinessAsset ba;
        ba.id = ids_.assign("asset", ext);
        ba.name = text(asset, "name");
        if (auto k = enum_from_string<BusinessAssetKind>(lower(text(asset, "kind")))) {
            ba.kind = *k;
        }
        if (auto needs = asset.find("needs"); needs != asset.end() && needs->is_object()) {
            explicit_needs_.insert(ba.id);
            for (const auto& [k, v] : needs->items()) {
                auto p = enum_from_string<SecurityProperty>(lower(k));
                if (p && v.is_number_integer() && v.get<int>() >= 0 && v.get<int>() <= 4) {
                    ba.security_needs[*p] = Level(v.get<int>());
                } else {
                    warn("W-INCOMPLETE-EXTERNAL", ba.id, "ignored security need '" + k + "'");
                }
            }
        }
        tree_[ext] = TreeAsset{ba.id, true, {ba.id}};
        result_.fragment.business_assets.emplace(ba.id, ba);
        link(ext, ba.id);
        if (auto children = asset.find("children"); children != asset.end() && children->is_array()) {
            for (const auto& child : *children) {
                map_child(child, ba.id, "");
            }
        }
    }

    void map_child(const json& asset, const ElementId& top, const std::string& path) {
        const std::string ext = require_id(asset);
        const std::string name = path.empty() ? text(asset, "name") : path + "/" + text(asset, "name");
        auto it = tree_.find(ext);
        if (it != tree_.end() && it->second.top) {
            warn("W-DANGLING-EXTERNAL", it->second.id,
                 "primary asset '" + ext + "' also nested as a child; nested copy ignored");
            return;
        }
        if (it == tree_.end()) {
            SupportAsset sa;
            sa.id = ids_.assign("asset", ext);
            sa.name = name;
            if (auto c = enum_from_string<SupportCategory>(lower(text(asset, "category")))) {
                sa.category = *c;
            }
            it = tree_.emplace(ext, TreeAsset{sa.id, false, {}}).first;
            result_.fragment.support_assets.emplace(sa.id, sa);
            link(ext, sa.id);
        }
        if (std::find(it->second.tops.begin(), it->second.tops.end(), top) == it->second.tops.end()) {
            it->second.tops.push_back(top);
        }
        result_.fragment.business_assets.at(top).supported_by.insert(it->second.id);
        if (auto children = asset.find("children"); children != asset.end() && children->is_array()) {
            for (const auto& child : *children) {
                map_child(child, top, name);
            }
        }
    }

    void map_row(const json& row, std::size_t n) {
        const std::string row_ext = id_text(row, "id").value_or("row-" + std::to_string(n));
        auto& f = result_.fragment;
        if (!row.is_object()) {
            warn("W-INCOMPLETE-EXTERNAL", std::nullopt, "risk row " + std::to_string(n) + " is not an object");
            return;
        }
        const auto asset_ext = id_text(row, "asset");
        auto asset = asset_ext ? tree_.find(*asset_ext) : tree_.end();
        if (asset == tree_.end()) {
            warn("W-DANGLING-EXTERNAL", std::nullopt,
                 "dangling external asset '" + asset_ext.value_or("") + "' in risk row " + row_ext +
                     "; row skipped");
            return;
        }
        if (asset->second.top) {
            warn("W-INCOMPLETE-EXTERNAL", asset->second.id,
                 "risk row " + row_ext + " sits on a primary asset; no support asset to attack, skipped");
            return;
        }
        const auto likelihood = level(row, "likelihood");
        const auto impact = level(row, "impact");
        const std::string vuln_name = text(row, "vulnerability");
        if (!likelihood || !impact || vuln_name.empty()) {
            warn("W-INCOMPLETE-EXTERNAL", std::nullopt,
                 "risk row " + row_ext + " lacks likelihood, impact (0..4) or vulnerability; skipped");
            return;
        }

        // Target: explicit, else the first enclosing primary asset.
        ElementId target = asset->second.tops.front();
        if (auto t = id_text(row, "target")) {
            auto tt = tree_.find(*t);
            if (tt != tree_.end() && tt->second.top) {
                target = tt->second.id;
            } else {
                warn("W-DANGLING-EXTERNAL", std::nullopt,
                     "risk row " + row_ext + " names unknown target '" + *t + "'; enclosing asset used");
            }
        }

        const std::string threat = text(row, "threat");
        ThreatParts parts = split_threat(threat);
        const auto attacker_ext = id_text(row, "attacker");
        if (parts.attacker.empty() && !attacker_ext) {
            parts.attacker = "unknown threat";
        }
        if (!parts.property) {
            parts.property = SecurityProperty::Integrity;
            warn("W-INCOMPLETE-EXTERNAL", std::nullopt,
                 "threat '" + threat + "' in row " + row_ext + " names no security property; integrity assumed");
        }

        // Attacker synthesized per threat (attacker) name.
        const ElementId attacker_id = attacker_ext ? ids_.assign("attacker", *attacker_ext)
                                                   : ids_.assign("attacker", parts.attacker, "threat-");
        auto [att, new_att] = f.attackers.try_emplace(attacker_id);
        if (new_att) {
            att->second.id = attacker_id;
            att->second.name = parts.attacker;
            att->second.capability = *likelihood;
        } else {
            att->second.capability = std::max(att->second.capability, *likelihood);
        }
        link("threat/" + attacker_ext.value_or(parts.attacker), attacker_id);

        const auto vuln_ext = id_text(row, "vulnerability_id");
        const ElementId vuln_id = vuln_ext ? ids_.assign("vulnerability", *vuln_ext)
                                           : ids_.assign("vulnerability", vuln_name, "vuln-");
        auto [vuln, new_vuln] = f.vulnerabilities.try_emplace(vuln_id);
        const Level qualification = level(row, "qualification").value_or(Level(4));
        if (new_vuln) {
            vuln->second.id = vuln_id;
            vuln->second.name = vuln_name;
            vuln->second.qualification = qualification;
        } else {
            vuln->second.qualification = std::max(vuln->second.qualification, qualification);
        }
        if (auto cves = row.find("cves"); cves != row.end() && cves->is_array()) {
            for (const auto& c : *cves) {
                if (c.is_string() &&
                    std::find(vuln->second.cve_ids.begin(), vuln->second.cve_ids.end(),
                              c.get<std::string>()) == vuln->second.cve_ids.end()) {
                    vuln->second.cve_ids.push_back(c.get<std::string>());
                }
            }
        }
        vuln->second.affects.insert(asset->second.id);
        f.support_assets.at(asset->second.id).vulnerabilities.insert(vuln_id);
        link("vulnerability/" + vuln_ext.value_or(vuln_name), vuln_id);

        const auto de_ext = id_text(row, "dreaded_event");
        const ElementId de_id = de_ext ? ids_.assign("event", *de_ext)
                                       : ids_.assign("event", row_ext, "event-");
        DreadedEvent de{de_id, attacker_id, target, *parts.property, *impact};
        f.dreaded_events.insert_or_assign(de_id, de);
        link(row_ext + "#event", de_id);
        if (!explicit_needs_.contains(target)) {
            auto& need = f.business_assets.at(target).security_needs[*parts.property];
            need = std::max(need, *impact);
        }

        const auto sc_ext = id_text(row, "scenario");
        const ElementId sc_id = sc_ext ? ids_.assign("scenario", *sc_ext)
                                       : ids_.assign("scenario", row_ext, "scenario-");
        AttackScenario sc;
        sc.id = sc_id;
        sc.realizes = de_id;
        sc.steps.push_back(AttackStep{asset->second.id, vuln_id});
        f.attack_scenarios.insert_or_assign(sc_id, sc);
        link(row_ext + "#scenario", sc_id);

        const ElementId risk_id = id_text(row, "id") ? ids_.assign("risk", row_ext)
                                                     : ids_.assign("risk", std::to_string(n), "risk-");
        Risk risk;
        risk.id = risk_id;
        risk.dreaded_event = de_id;
        risk.scenario = sc_id;
        risk.impact = *impact;
        const std::string strategy_text = text(row, "strategy");
        if (auto s = parse_strategy(strategy_text)) {
            risk.strategy = *s;
        } else {
            risk.strategy = TreatmentStrategy::Accept;
            warn("W-STRATEGY-UNKNOWN", risk_id,
                 "strategy '" + strategy_text + "' not recognised; accept assumed");
        }
        if (auto feas = level(row, "feasibility")) {
            risk.feasibility = *feas;
        } else {
            derived_feasibility_.insert(risk_id);
        }
        f.risks.insert_or_assign(risk_id, risk);
        link(row_ext, risk_id);

        map_controls(row, risk, row_ext);
    }

    void map_controls(const json& row, const Risk& risk, const std::string& row_ext) {
        auto& f = result_.fragment;
        const bool mitigate = risk.strategy == TreatmentStrategy::Mitigate;
        std::vector<Control> controls;
        if (auto objs = row.find("controls"); objs != row.end() && objs->is_array()) {
            for (const auto& o : *objs) {
                if (!o.is_object()) {
                    continue;
                }
                Control c;
                const std::string name = text(o, "name");
                auto ext = id_text(o, "id");
                c.id = ext ? ids_.assign("control", *ext) : ids_.assign("control", name, "control-");
                c.name = name;
                if (auto l = enum_from_string<LineOfDefence>(lower(text(o, "line_of_defence")))) {
                    c.line_of_defence = *l;
                }
                c.feasibility_reduction = level(o, "feasibility_reduction").value_or(Level(1));
                c.impact_reduction = level(o, "impact_reduction").value_or(Level(0));
                controls.push_back(std::move(c));
            }
        } else if (auto names = row.find("measures"); names != row.end() && names->is_array()) {
            for (const auto& m : *names) {
                if (!m.is_string() || m.get<std::string>().empty()) {
                    continue;
                }
                Control c;
                c.name = m.get<std::string>();
                c.id = ids_.assign("control", c.name, "control-");
                c.line_of_defence = LineOfDefence::Protect;
                c.feasibility_reduction = Level(1);
                controls.push_back(std::move(c));
            }
        }
        for (auto& c : controls) {
            auto [it, inserted] = f.controls.try_emplace(c.id, c);
            if (mitigate) {
                it->second.mitigates.insert(risk.id);
            } else {
                warn("W-INCOMPLETE-EXTERNAL", c.id,
                     "measure '" + c.name + "' on " + std::string(to_string(risk.strategy)) +
                         " risk row " + row_ext + " left unlinked");
            }
            link("measure/" + c.name, c.id);
        }
    }

    void finish() {
        auto& f = result_.fragment;
        for (const auto& id : derived_feasibility_) {
            Risk& r = f.risks.at(id);
            const auto& sc = f.attack_scenarios.at(r.scenario);
            const auto& de = f.dreaded_events.at(sc.realizes);
            Level feas = f.attackers.at(de.attacker).capability;
            for (const auto& step : sc.steps) {
                feas = std::min(feas, f.vulnerabilities.at(step.vulnerability).qualification);
            }
            r.feasibility = feas;
        }
    }

    const json& doc_;
    ImportResult result_;
    IdAllocator ids_;
    std::map<std::string, TreeAsset> tree_;
    std::set<ElementId> explicit_needs_;
    std::set<ElementId> derived_feasibility_;
    std::map<ElementId, TraceLink> links_;
};

json control_json(const Control& c) {
    return {{"id", c.id.str()},
            {"name", c.name},
            {"line_of_defence", to_string(c.line_of_defence)},
            {"feasibility_reduction", c.feasibility_reduction.value()},
            {"impact_reduction", c.impact_reduction.value()}};
}

}  // namespace

std::optional<TreatmentStrategy> parse_strategy(std::string_view text) {
    const std::string s = lower(trim(text));
    if (s == "accept" || s == "accepted" || s == "acceptance" || s == "retain" || s == "retention") {
        return TreatmentStrategy::Accept;
    }
    if (s == "mitigate" || s == "mitigation" || s == "reduce" || s == "reduction" || s == "modify") {
        return TreatmentStrategy::Mitigate;
    }
    if (s == "transfer" || s == "share" || s == "shared" || s == "sharing") {
        return TreatmentStrategy::Transfer;
    }
    if (s == "avoid" || s == "avoidance" || s == "denied" || s == "deny") {
        return TreatmentStrategy::Avoid;
    }
    return std::nullopt;
}

std::string threat_name(const Attacker& attacker, SecurityProperty property) {
    return attacker.name + " - " + std::string(to_string(property));
}

ImportResult import_monarc(const json& doc) { return MonarcImporter(doc).run(); }

ImportResult import_monarc(std::string_view text) { return import_monarc(parse_json(text)); }

ExportResult export_monarc(const RiskModel& model, std::string_view project_name) {
    require_no_errors(model, "MONARC export");
    ExportResult out;
    std::set<ElementId> exported;
    auto mark = [&](ElementKind kind, const ElementId& id) {
        if (exported.insert(id).second) {
            out.links.push_back(make_link(Tool::Monarc, std::string(kind_name(kind)) + "/" + id.str(),
                                          id, TraceDirection::Exported));
        }
    };

    json assets = json::array();
    std::set<ElementId> in_tree;
    for (const auto& [id, ba] : model.business_assets) {
        json needs = json::object();
        for (const auto& [p, l] : ba.security_needs) {
            needs[std::string(to_string(p))] = l.value();
        }
        json children = json::array();
        for (const auto& sid : ba.supported_by) {
            const SupportAsset& sa = model.support_assets.at(sid);
            children.push_back({{"id", sid.str()},
                                {"name", sa.name},
                                {"category", to_string(sa.category)},
                                {"children", json::array()}});
            in_tree.insert(sid);
            mark(ElementKind::SupportAsset, sid);
        }
        assets.push_back({{"id", id.str()},
                          {"name", ba.name},
                          {"kind", to_string(ba.kind)},
                          {"needs", needs},
                          {"children", std::move(children)}});
        mark(ElementKind::BusinessAsset, id);
    }

    json rows = json::array();
    for (const auto& [rid, risk] : model.risks) {
        const AttackScenario& sc = model.attack_scenarios.at(risk.scenario);
        if (sc.steps.empty() || !in_tree.contains(sc.steps.front().asset)) {
            continue;  // reported as unmapped below
        }
        const DreadedEvent& de = model.dreaded_events.at(risk.dreaded_event);
        const Attacker& att = model.attackers.at(de.attacker);
        const AttackStep& first = sc.steps.front();
        const Vulnerability& v = model.vulnerabilities.at(first.vulnerability);

        std::string remark;
        if (sc.steps.size() > 1) {
            remark = "additional steps:";
            for (std::size_t i = 1; i < sc.steps.size(); ++i) {
                remark += (i == 1 ? " " : ", ") + sc.steps[i].asset.str() + ":" +
                          sc.steps[i].vulnerability.str();
            }
            out.findings.push_back(make_finding(
                "W-MULTISTEP-LOSS", rid,
                "scenario '" + sc.id.str() + "' has " + std::to_string(sc.steps.size()) +
                    " steps; only the first vulnerability is carried, the rest is in the remark"));
        }

        json measures = json::array();
        json controls = json::array();
        for (const auto& [cid, c] : model.controls) {
            if (c.mitigates.contains(rid)) {
                measures.push_back(c.name);
                controls.push_back(control_json(c));
                mark(ElementKind::Control, cid);
            }
        }

        rows.push_back({{"id", rid.str()},
                        {"asset", first.asset.str()},
                        {"target", de.target.str()},
                        {"threat", threat_name(att, de.violates)},
                        {"attacker", att.id.str()},
                        {"dreaded_event", de.id.str()},
                        {"scenario", sc.id.str()},
                        {"vulnerability", v.name},
                        {"vulnerability_id", v.id.str()},
                        {"cves", v.cve_ids},
                        {"qualification", v.qualification.value()},
                        {"likelihood", att.capability.value()},
                        {"impact", risk.impact.value()},
                        {"feasibility", risk.feasibility.value()},
                        {"strategy", to_string(risk.strategy)},
                        {"measures", std::move(measures)},
                        {"controls", std::move(controls)},
                        {"remark", remark}});
        mark(ElementKind::Attacker, att.id);
        mark(ElementKind::Vulnerability, v.id);
        mark(ElementKind::DreadedEvent, de.id);
        mark(ElementKind::AttackScenario, sc.id);
        mark(ElementKind::Risk, rid);
    }

    for_each_collection(model, [&](const auto& c) {
        using T = typename std::decay_t<decltype(c)>::mapped_type;
        for (const auto& [id, e] : c) {
            if (!exported.contains(id)) {
                out.unmapped.push_back(id);
                out.findings.push_back(make_finding(
                    "W-UNMAPPED", id,
                    std::string(kind_name(ElementTraits<T>::kind)) +
                        " has no counterpart in the MONARC project (not reachable from the asset "
                        "tree or a risk row)"));
            }
        }
    });
    std::sort(out.unmapped.begin(), out.unmapped.end());
    sort_findings(out.findings);

    out.document = {{"project", {{"name", std::string(project_name)}}},
                    {"assets", std::move(assets)},
                    {"risks", std::move(rows)}};
    return out;
}

}  // namespace rmm::adapters
