#include "rmm/adapters/pistar.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>

namespace rmm::adapters {

namespace {

constexpr std::string_view kSecurity = "security";

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// "istar.Goal" -> "goal", "istar.AndRefinementLink" -> "andrefinementlink".
std::string normalized_type(const json& node) {
    auto it = node.find("type");
    if (it == node.end() || !it->is_string()) {
        return {};
    }
    std::string t = lower(it->get<std::string>());
    if (t.rfind("istar.", 0) == 0) {
        t.erase(0, 6);
    }
    return t;
}

std::optional<std::string> custom(const json& node, std::string_view key) {
    auto props = node.find("customProperties");
    if (props == node.end() || !props->is_object()) {
        return std::nullopt;
    }
    auto it = props->find(std::string(key));
    if (it == props->end() || it->is_null()) {
        return std::nullopt;
    }
    if (it->is_string()) {
        return it->get<std::string>();
    }
    if (it->is_number_integer()) {
        return std::to_string(it->get<long long>());
    }
    return it->dump();
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        auto b = cur.find_first_not_of(" \t");
        auto e = cur.find_last_not_of(" \t");
        if (b != std::string::npos) {
            out.push_back(cur.substr(b, e - b + 1));
        }
        cur.clear();
    };
    for (char c : text) {
        if (c == sep) {
            flush();
        } else {
            cur.push_back(c);
        }
    }
    flush();
    return out;
}

std::optional<Level> parse_level(const std::optional<std::string>& s) {
    if (!s || s->size() != 1 || (*s)[0] < '0' || (*s)[0] > '4') {
        return std::nullopt;
    }
    return Level((*s)[0] - '0');
}

std::string string_field(const json& node, const char* key) {
    auto it = node.find(key);
    if (it == node.end() || !it->is_string()) {
        return {};
    }
    return it->get<std::string>();
}

struct NodeRef {
    const json* node;
    const json* actor;  // nullptr for orphans
};

enum class ActorRole { Organisation, Role, Attacker };

class PistarImporter {
public:
    explicit PistarImporter(const json& doc) : doc_(doc) {}

    ImportResult run() {
        check_structure();
        collect();
        map_actors();
        map_nodes();
        map_links();
        warn_dependencies();
        resolve_deferred();
        emit();
        sort_findings(result_.findings);
        return std::move(result_);
    }

private:
    void check_structure() {
        if (!doc_.is_object()) {
            throw SchemaError("piStar document: expected an object");
        }
        auto actors = doc_.find("actors");
        if (actors == doc_.end() || !actors->is_array()) {
            throw SchemaError("piStar document: missing 'actors' array");
        }
        for (const char* key : {"links", "orphans", "dependencies"}) {
            auto it = doc_.find(key);
            if (it != doc_.end() && !it->is_array()) {
                throw SchemaError(std::string("piStar document: '") + key + "' must be an array");
            }
        }
        for (const auto& actor : *actors) {
            if (!actor.is_object() || !actor.contains("id") || !actor["id"].is_string()) {
                throw SchemaError("piStar document: actor without string id");
            }
            if (actor.contains("nodes") && !actor["nodes"].is_array()) {
                throw SchemaError("piStar document: actor nodes must be an array");
            }
        }
    }

    void add_finding(std::string_view rule, std::optional<ElementId> element, std::string message) {
        result_.findings.push_back(make_finding(rule, std::move(element), std::move(message)));
    }

    void collect() {
        for (const auto& actor : doc_["actors"]) {
            if (auto nodes = actor.find("nodes"); nodes != actor.end()) {
                for (const auto& n : *nodes) {
                    add_node(n, &actor);
                }
            }
        }
        if (auto orphans = doc_.find("orphans"); orphans != doc_.end()) {
            for (const auto& n : *orphans) {
                add_node(n, nullptr);
            }
        }
    }

    void add_node(const json& n, const json* actor) {
        if (!n.is_object() || !n.contains("id") || !n["id"].is_string()) {
            throw SchemaError("piStar document: node without string id");
        }
        const auto id = n["id"].get<std::string>();
        if (!nodes_.emplace(id, NodeRef{&n, actor}).second) {
            throw SchemaError("piStar document: duplicate node id '" + id + "'");
        }
        node_order_.push_back(id);
    }

    ActorRole role_of(const json& actor) const {
        if (custom(actor, kSecurity) == "attacker") {
            return ActorRole::Attacker;
        }
        return normalized_type(actor) == "role" ? ActorRole::Role : ActorRole::Organisation;
    }

    ElementId id_for(const std::string& external) { return ids_.assign("pistar", external); }

    void map_actors() {
        for (const auto& actor : doc_["actors"]) {
            const std::string ext = actor["id"].get<std::string>();
            const std::string text = string_field(actor, "text");
            switch (role_of(actor)) {
                case ActorRole::Attacker: {
                    Attacker a;
                    a.id = id_for(ext);
                    a.name = text;
                    auto cap = custom(actor, "capability");
                    if (auto lvl = parse_level(cap)) {
                        a.capability = *lvl;
                    } else {
                        a.capability = Level(2);
                        add_finding("W-INCOMPLETE-EXTERNAL", a.id,
                                    "attacker '" + text + "' has no usable capability; 2 assumed");
                    }
                    a.motive = custom(actor, "motive").value_or("");
                    if (auto facet = custom(actor, "cooperative_facet")) {
                        deferred_facets_.emplace_back(a.id, *facet);
                    }
                    attacker_by_actor_[&actor] = a.id;
                    result_.fragment.attackers.emplace(a.id, a);
                    link(ext, a.id);
                    break;
                }
                case ActorRole::Role:
                    add_finding("W-UNMAPPED", std::nullopt,
                                "unmapped: role/person distinction (role actor '" + text +
                                    "' treated as an organisation agent)");
                    break;
                case ActorRole::Organisation:
                    // Recorded as the owner annotation of contained goals.
                    break;
            }
        }
    }

    void map_nodes() {
        for (const auto& ext : node_order_) {
            const NodeRef& ref = nodes_.at(ext);
            const json& n = *ref.node;
            const std::string type = normalized_type(n);
            const auto security = custom(n, kSecurity);
            const std::string text = string_field(n, "text");

            if (type == "goal" && security == "antigoal") {
                map_antigoal(ext, n, ref.actor);
            } else if (type == "goal") {
                Goal g;
                g.id = id_for(ext);
                g.statement = text;
                if (ref.actor && role_of(*ref.actor) != ActorRole::Attacker) {
                    g.owner = string_field(*ref.actor, "text");
                }
                if (auto r = custom(n, "refinement")) {
                    if (auto parsed = enum_from_string<Refinement>(lower(*r))) {
                        g.refinement = *parsed;
                        explicit_refinement_.insert(g.id);
                    }
                }
                if (auto s = custom(n, "secures")) {
                    deferred_secures_.emplace_back(g.id, *s);
                }
                result_.fragment.goals.emplace(g.id, g);
                link(ext, g.id);
            } else if (type == "task" && security == "malicious") {
                AttackScenario sc;
                sc.id = id_for(ext);
                if (auto r = custom(n, "realizes")) {
                    scenario_target_[sc.id] = *r;
                }
                result_.fragment.attack_scenarios.emplace(sc.id, sc);
                link(ext, sc.id);
            } else if (type == "resource" && custom(n, "asset") == "business") {
                BusinessAsset ba;
                ba.id = id_for(ext);
                ba.name = text;
                if (auto k = custom(n, "kind")) {
                    if (auto parsed = enum_from_string<BusinessAssetKind>(lower(*k))) {
                        ba.kind = *parsed;
                    }
                }
                if (auto needs = custom(n, "needs")) {
                    for (const auto& entry : split(*needs, ';')) {
                        auto parts = split(entry, ':');
                        auto prop = parts.size() == 2
                                        ? enum_from_string<SecurityProperty>(lower(parts[0]))
                                        : std::nullopt;
                        auto lvl = parts.size() == 2 ? parse_level(parts[1]) : std::nullopt;
                        if (prop && lvl) {
                            ba.security_needs[*prop] = *lvl;
                        } else {
                            add_finding("W-INCOMPLETE-EXTERNAL", ba.id,
                                        "ignored malformed security need '" + entry + "'");
                        }
                    }
                }
                if (auto sup = custom(n, "supported_by")) {
                    deferred_support_.emplace_back(ba.id, *sup);
                }
                result_.fragment.business_assets.emplace(ba.id, ba);
                link(ext, ba.id);
            } else if (type == "resource") {
                SupportAsset sa;
                sa.id = id_for(ext);
                sa.name = text;
                if (auto c = custom(n, "category")) {
                    if (auto parsed = enum_from_string<SupportCategory>(lower(*c))) {
                        sa.category = *parsed;
                    }
                }
                result_.fragment.support_assets.emplace(sa.id, sa);
                link(ext, sa.id);
            } else {
                add_finding("W-UNMAPPED", std::nullopt,
                            "unmapped " + (type.empty() ? std::string("untyped") : type) +
                                " node '" + text + "' (" + ext + ")");
            }
        }
    }

    void map_antigoal(const std::string& ext, const json& n, const json* actor) {
        const ElementId id = id_for(ext);
        std::optional<ElementId> attacker;
        if (actor) {
            if (auto it = attacker_by_actor_.find(actor); it != attacker_by_actor_.end()) {
                attacker = it->second;
            }
        }
        auto target = custom(n, "target");
        auto violates = custom(n, "violates");
        auto severity = parse_level(custom(n, "severity"));
        auto prop = violates ? enum_from_string<SecurityProperty>(lower(*violates)) : std::nullopt;
        if (!attacker || !target || !prop || !severity) {
            std::string missing;
            if (!attacker) missing += " attacker";
            if (!target) missing += " target";
            if (!prop) missing += " violates";
            if (!severity) missing += " severity";
            add_finding("W-INCOMPLETE-EXTERNAL", id,
                        "anti-goal '" + string_field(n, "text") + "' skipped, missing:" + missing);
            skipped_.insert(ext);
            return;
        }
        DreadedEvent de;
        de.id = id;
        de.attacker = *attacker;
        de.severity = *severity;
        de.violates = *prop;
        result_.fragment.dreaded_events.emplace(id, de);
        deferred_targets_.emplace_back(id, *target);
        link(ext, id);
    }

    void map_links() {
        auto links = doc_.find("links");
        if (links == doc_.end()) {
            return;
        }
        for (const auto& l : *links) {
            const std::string type = normalized_type(l);
            const std::string src = string_field(l, "source");
            const std::string dst = string_field(l, "target");
            const std::string label = type + " " + src + " -> " + dst;
            if (!nodes_.contains(src) || !nodes_.contains(dst)) {
                add_finding("W-DANGLING-EXTERNAL", std::nullopt, "link with unknown endpoint: " + label);
                continue;
            }
            if (skipped_.contains(src) || skipped_.contains(dst)) {
                add_finding("W-DANGLING-EXTERNAL", std::nullopt,
                            "link touches a skipped element: " + label);
                continue;
            }
            const bool refinement = type == "andrefinementlink" || type == "orrefinementlink";
            const ElementId s = id_for(src);
            const ElementId d = id_for(dst);
            auto& f = result_.fragment;
            if (refinement && f.goals.contains(s) && f.goals.contains(d)) {
                Goal& child = f.goals.at(s);
                if (child.parent) {
                    add_finding("W-UNMAPPED", s, "second parent link ignored: " + label);
                    continue;
                }
                child.parent = d;
                if (!explicit_refinement_.contains(d)) {
                    f.goals.at(d).refinement =
                        type == "orrefinementlink" ? Refinement::Or : Refinement::And;
                }
            } else if (refinement && f.attack_scenarios.contains(s) && f.dreaded_events.contains(d)) {
                scenario_target_[s] = dst;
            } else {
                add_finding("W-UNMAPPED", std::nullopt, "unmapped link " + label);
            }
        }
    }

    void warn_dependencies() {
        auto deps = doc_.find("dependencies");
        if (deps == doc_.end()) {
            return;
        }
        for (const auto& d : *deps) {
            add_finding("W-UNMAPPED", std::nullopt,
                        "unmapped dependency '" + string_field(d, "text") + "' (" +
                            string_field(d, "id") + ")");
        }
    }

    // Resolves an external node id to the element it mapped to, if of the wanted kind.
    template <typename T>
    std::optional<ElementId> resolve(const std::string& ext) {
        if (!nodes_.contains(ext) || skipped_.contains(ext)) {
            return std::nullopt;
        }
        ElementId id = id_for(ext);
        if (ElementTraits<T>::of(result_.fragment).contains(id)) {
            return id;
        }
        return std::nullopt;
    }

    void resolve_deferred() {
        auto& f = result_.fragment;
        for (const auto& [attacker, ext] : deferred_facets_) {
            if (auto g = resolve<Goal>(ext)) {
                f.attackers.at(attacker).cooperative_facet = *g;
            } else {
                add_finding("W-DANGLING-EXTERNAL", attacker,
                            "cooperative facet '" + ext + "' is not a goal of the document");
            }
        }
        for (const auto& [goal, listed] : deferred_secures_) {
            for (const auto& entry : split(listed, ';')) {
                auto parts = split(entry, ':');
                auto prop = parts.size() == 2 ? enum_from_string<SecurityProperty>(lower(parts[1]))
                                              : std::nullopt;
                auto asset = parts.size() == 2 ? resolve<BusinessAsset>(parts[0]) : std::nullopt;
                if (prop && asset) {
                    f.goals.at(goal).secures.insert(SecuredProperty{*asset, *prop});
                } else {
                    add_finding("W-DANGLING-EXTERNAL", goal, "ignored secures entry '" + entry + "'");
                }
            }
        }
        for (const auto& [ba, listed] : deferred_support_) {
            for (const auto& ext : split(listed, ';')) {
                if (auto sa = resolve<SupportAsset>(ext)) {
                    f.business_assets.at(ba).supported_by.insert(*sa);
                } else {
                    add_finding("W-DANGLING-EXTERNAL", ba, "supporting asset '" + ext + "' not found");
                }
            }
        }
        for (const auto& [de, ext] : deferred_targets_) {
            if (auto ba = resolve<BusinessAsset>(ext)) {
                f.dreaded_events.at(de).target = *ba;
            } else if (!nodes_.contains(ext) && ElementId::is_valid(ext)) {
                // Not in this document: taken as an asset id of the model the fragment merges into.
                f.dreaded_events.at(de).target = ElementId(ext);
                add_finding("W-DANGLING-EXTERNAL", de,
                            "anti-goal target '" + ext + "' is not in the document; kept as a model reference");
            } else {
                add_finding("W-DANGLING-EXTERNAL", de,
                            "anti-goal target '" + ext + "' is not a business asset; skipped");
                drop(de);
            }
        }
        for (auto it = f.attack_scenarios.begin(); it != f.attack_scenarios.end();) {
            auto target = scenario_target_.find(it->first);
            std::optional<ElementId> de;
            if (target != scenario_target_.end()) {
                de = resolve<DreadedEvent>(target->second);
            }
            if (!de) {
                add_finding("W-INCOMPLETE-EXTERNAL", it->first,
                            "malicious task refines no anti-goal; skipped");
                dropped_.insert(it->first);
                it = f.attack_scenarios.erase(it);
                continue;
            }
            it->second.realizes = *de;
            ++it;
        }
    }

    void drop(const ElementId& id) {
        result_.fragment.dreaded_events.erase(id);
        dropped_.insert(id);
    }

    void link(const std::string& ext, const ElementId& id) { pending_links_.emplace_back(ext, id); }

    void emit() {
        for (const auto& [ext, id] : pending_links_) {
            if (dropped_.contains(id)) {
                continue;
            }
            result_.links.push_back(make_link(Tool::Pistar, ext, id, TraceDirection::Imported));
        }
    }

    const json& doc_;
    ImportResult result_;
    IdAllocator ids_;
    std::map<std::string, NodeRef> nodes_;
    std::vector<std::string> node_order_;
    std::map<const json*, ElementId> attacker_by_actor_;
    std::set<ElementId> explicit_refinement_;
    std::set<std::string> skipped_;
    std::set<ElementId> dropped_;
    std::map<ElementId, std::string> scenario_target_;
    std::vector<std::pair<ElementId, std::string>> deferred_facets_;
    std::vector<std::pair<ElementId, std::string>> deferred_secures_;
    std::vector<std::pair<ElementId, std::string>> deferred_support_;
    std::vector<std::pair<ElementId, std::string>> deferred_targets_;
    std::vector<std::pair<std::string, ElementId>> pending_links_;
};

json node(const std::string& id, const std::string& text, const char* type, json props, int index) {
    return {{"id", id},
            {"text", text},
            {"type", type},
            {"x", 100 + (index % 8) * 150},
            {"y", 100 + (index / 8) * 90},
            {"customProperties", std::move(props)}};
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) {
            out.push_back(sep);
        }
        out += p;
    }
    return out;
}

}  // namespace

ImportResult import_pistar(const json& doc) { return PistarImporter(doc).run(); }

ImportResult import_pistar(std::string_view text) { return import_pistar(parse_json(text)); }

ExportResult export_pistar(const RiskModel& model) {
    require_no_errors(model, "piStar export");
    ExportResult out;
    int index = 0;

    std::set<ElementId> taken;
    for_each_collection(model, [&](const auto& c) {
        for (const auto& [id, e] : c) {
            taken.insert(id);
        }
    });
    IdAllocator actor_ids(taken);

    auto exported = [&](const ElementId& id) {
        out.links.push_back(make_link(Tool::Pistar, id.str(), id, TraceDirection::Exported));
    };

    auto goal_node = [&](const Goal& g) {
        std::vector<std::string> secures;
        for (const auto& s : g.secures) {
            secures.push_back(s.asset.str() + ":" + std::string(to_string(s.property)));
        }
        json props = {{"refinement", to_string(g.refinement)}};
        if (!secures.empty()) {
            props["secures"] = join(secures, ';');
        }
        exported(g.id);
        return node(g.id.str(), g.statement, "istar.Goal", std::move(props), index++);
    };

    json actors = json::array();

    std::map<std::string, std::vector<const Goal*>> by_owner;
    json orphans = json::array();
    for (const auto& [id, g] : model.goals) {
        if (g.owner) {
            by_owner[*g.owner].push_back(&g);
        } else {
            orphans.push_back(goal_node(g));
        }
    }
    for (const auto& [owner, goals] : by_owner) {
        json nodes = json::array();
        for (const Goal* g : goals) {
            nodes.push_back(goal_node(*g));
        }
        actors.push_back({{"id", actor_ids.assign("owner", owner, "agent-").str()},
                          {"text", owner},
                          {"type", "istar.Agent"},
                          {"x", 50},
                          {"y", 50},
                          {"customProperties", json::object()},
                          {"nodes", std::move(nodes)}});
    }

    json links = json::array();
    for (const auto& [id, g] : model.goals) {
        if (g.parent) {
            const Goal& parent = model.goals.at(*g.parent);
            links.push_back({{"id", "link-" + std::to_string(links.size() + 1)},
                             {"type", parent.refinement == Refinement::Or ? "istar.OrRefinementLink"
                                                                          : "istar.AndRefinementLink"},
                             {"source", id.str()},
                             {"target", g.parent->str()}});
        }
    }

    for (const auto& [aid, a] : model.attackers) {
        json props = {{"security", "attacker"},
                      {"capability", std::to_string(a.capability.value())},
                      {"motive", a.motive}};
        if (a.cooperative_facet) {
            props["cooperative_facet"] = a.cooperative_facet->str();
        }
        exported(aid);
        json nodes = json::array();
        for (const auto& [did, de] : model.dreaded_events) {
            if (de.attacker != aid) {
                continue;
            }
            const auto& target = model.business_assets.at(de.target);
            exported(did);
            nodes.push_back(node(did.str(),
                                 std::string(to_string(de.violates)) + " violation of " + target.name,
                                 "istar.Goal",
                                 {{"security", "antigoal"},
                                  {"target", de.target.str()},
                                  {"violates", to_string(de.violates)},
                                  {"severity", std::to_string(de.severity.value())}},
                                 index++));
            for (const auto& [sid, sc] : model.attack_scenarios) {
                if (sc.realizes != did) {
                    continue;
                }
                exported(sid);
                nodes.push_back(node(sid.str(), "attack scenario " + sid.str(), "istar.Task",
                                     {{"security", "malicious"}, {"realizes", did.str()}}, index++));
                links.push_back({{"id", "link-" + std::to_string(links.size() + 1)},
                                 {"type", "istar.AndRefinementLink"},
                                 {"source", sid.str()},
                                 {"target", did.str()}});
            }
        }
        actors.push_back({{"id", aid.str()},
                          {"text", a.name},
                          {"type", "istar.Actor"},
                          {"x", 50},
                          {"y", 400},
                          {"customProperties", std::move(props)},
                          {"nodes", std::move(nodes)}});
    }

    for (const auto& [id, ba] : model.business_assets) {
        std::vector<std::string> needs;
        for (const auto& [p, l] : ba.security_needs) {
            needs.push_back(std::string(to_string(p)) + ":" + std::to_string(l.value()));
        }
        std::vector<std::string> support;
        for (const auto& s : ba.supported_by) {
            support.push_back(s.str());
        }
        exported(id);
        orphans.push_back(node(id.str(), ba.name, "istar.Resource",
                               {{"asset", "business"},
                                {"kind", to_string(ba.kind)},
                                {"needs", join(needs, ';')},
                                {"supported_by", join(support, ';')}},
                               index++));
    }
    for (const auto& [id, sa] : model.support_assets) {
        exported(id);
        orphans.push_back(node(id.str(), sa.name, "istar.Resource",
                               {{"category", to_string(sa.category)}}, index++));
    }

    auto unmapped = [&](const auto& collection) {
        using T = typename std::decay_t<decltype(collection)>::mapped_type;
        for (const auto& [id, e] : collection) {
            out.unmapped.push_back(id);
            out.findings.push_back(make_finding(
                "W-UNMAPPED", id,
                std::string(kind_name(ElementTraits<T>::kind)) + " has no piStar counterpart"));
        }
    };
    unmapped(model.zones);
    unmapped(model.conduits);
    unmapped(model.vulnerabilities);
    unmapped(model.risks);
    unmapped(model.controls);
    std::sort(out.unmapped.begin(), out.unmapped.end());
    sort_findings(out.findings);

    out.document = {{"actors", std::move(actors)},
                    {"orphans", std::move(orphans)},
                    {"dependencies", json::array()},
                    {"links", std::move(links)},
                    {"display", json::object()},
                    {"tool", "pistar.2.1.0"},
                    {"istar", "2.0"},
                    {"diagram",
                     {{"width", 2000}, {"height", 1300}, {"name", "Risk model"},
                      {"customProperties", json::object()}}}};
    return out;
}

}  // namespace rmm::adapters
