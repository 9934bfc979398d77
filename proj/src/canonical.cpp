#include "rmm/canonical.hpp"

#include <array>
#include <fstream>
#include <sstream>

namespace rmm {

namespace {

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

constexpr NameTable<SecurityProperty, 3> kSecurityProperty{{
    {SecurityProperty::Confidentiality, "confidentiality"},
    {SecurityProperty::Integrity, "integrity"},
    {SecurityProperty::Availability, "availability"},
}};

constexpr NameTable<BusinessAssetKind, 3> kBusinessAssetKind{{
    {BusinessAssetKind::Information, "information"},
    {BusinessAssetKind::Service, "service"},
    {BusinessAssetKind::Process, "process"},
}};

constexpr NameTable<SupportCategory, 6> kSupportCategory{{
    {SupportCategory::Hardware, "hardware"},
    {SupportCategory::Software, "software"},
    {SupportCategory::Network, "network"},
    {SupportCategory::Personnel, "personnel"},
    {SupportCategory::Site, "site"},
    {SupportCategory::Organisation, "organisation"},
}};

constexpr NameTable<Refinement, 2> kRefinement{{
    {Refinement::And, "and"},
    {Refinement::Or, "or"},
}};

constexpr NameTable<TreatmentStrategy, 4> kTreatmentStrategy{{
    {TreatmentStrategy::Accept, "accept"},
    {TreatmentStrategy::Transfer, "transfer"},
    {TreatmentStrategy::Mitigate, "mitigate"},
    {TreatmentStrategy::Avoid, "avoid"},
}};

constexpr NameTable<LineOfDefence, 5> kLineOfDefence{{
    {LineOfDefence::Identify, "identify"},
    {LineOfDefence::Protect, "protect"},
    {LineOfDefence::Detect, "detect"},
    {LineOfDefence::Respond, "respond"},
    {LineOfDefence::Recover, "recover"},
}};

constexpr NameTable<Tool, 3> kTool{{
    {Tool::Pistar, "pistar"},
    {Tool::Monarc, "monarc"},
    {Tool::Cyrus, "cyrus"},
}};

constexpr NameTable<TraceDirection, 2> kTraceDirection{{
    {TraceDirection::Imported, "imported"},
    {TraceDirection::Exported, "exported"},
}};

constexpr NameTable<ElementKind, kElementKindCount> kKindNames{{
    {ElementKind::BusinessAsset, "business_asset"},
    {ElementKind::SupportAsset, "support_asset"},
    {ElementKind::Zone, "zone"},
    {ElementKind::Conduit, "conduit"},
    {ElementKind::Goal, "goal"},
    {ElementKind::Attacker, "attacker"},
    {ElementKind::DreadedEvent, "dreaded_event"},
    {ElementKind::Vulnerability, "vulnerability"},
    {ElementKind::AttackScenario, "attack_scenario"},
    {ElementKind::Risk, "risk"},
    {ElementKind::Control, "control"},
}};

template <typename Enum, std::size_t N>
std::string_view lookup(const NameTable<Enum, N>& table, Enum v) {
    for (const auto& [e, name] : table) {
        if (e == v) {
            return name;
        }
    }
    return "?";
}

template <typename Enum, std::size_t N>
std::optional<Enum> reverse(const NameTable<Enum, N>& table, std::string_view s) {
    for (const auto& [e, name] : table) {
        if (name == s) {
            return e;
        }
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(SecurityProperty v) { return lookup(kSecurityProperty, v); }
std::string_view to_string(BusinessAssetKind v) { return lookup(kBusinessAssetKind, v); }
std::string_view to_string(SupportCategory v) { return lookup(kSupportCategory, v); }
std::string_view to_string(Refinement v) { return lookup(kRefinement, v); }
std::string_view to_string(TreatmentStrategy v) { return lookup(kTreatmentStrategy, v); }
std::string_view to_string(LineOfDefence v) { return lookup(kLineOfDefence, v); }
std::string_view to_string(Tool v) { return lookup(kTool, v); }
std::string_view to_string(TraceDirection v) { return lookup(kTraceDirection, v); }
std::string_view to_string(ElementKind v) { return lookup(kKindNames, v); }

std::string_view kind_name(ElementKind v) { return lookup(kKindNames, v); }
std::optional<ElementKind> kind_from_name(std::string_view s) { return reverse(kKindNames, s); }

template <>
std::optional<SecurityProperty> enum_from_string(std::string_view s) {
    return reverse(kSecurityProperty, s);
}
template <>
std::optional<BusinessAssetKind> enum_from_string(std::string_view s) {
    return reverse(kBusinessAssetKind, s);
}
template <>
std::optional<SupportCategory> enum_from_string(std::string_view s) {
    return reverse(kSupportCategory, s);
}
template <>
std::optional<Refinement> enum_from_string(std::string_view s) { return reverse(kRefinement, s); }
template <>
std::optional<TreatmentStrategy> enum_from_string(std::string_view s) {
    return reverse(kTreatmentStrategy, s);
}
template <>
std::optional<LineOfDefence> enum_from_string(std::string_view s) {
    return reverse(kLineOfDefence, s);
}
template <>
std::optional<Tool> enum_from_string(std::string_view s) { return reverse(kTool, s); }
template <>
std::optional<TraceDirection> enum_from_string(std::string_view s) {
    return reverse(kTraceDirection, s);
}

namespace {

// Field readers. `where` names the enclosing object for error messages.
const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object()) {
        throw SchemaError(where + ": expected an object");
    }
    auto it = j.find(key);
    if (it == j.end()) {
        throw SchemaError(where + ": missing required field '" + key + "'");
    }
    return *it;
}

const json* optional_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return nullptr;
    }
    return &*it;
}

std::string read_string(const json& v, const std::string& where) {
    if (!v.is_string()) {
        throw SchemaError(where + ": expected a string");
    }
    return v.get<std::string>();
}

ElementId read_id(const json& v, const std::string& where) {
    auto s = read_string(v, where);
    if (!ElementId::is_valid(s)) {
        throw SchemaError(where + ": invalid element id '" + s + "'");
    }
    return ElementId(std::move(s));
}

Level read_level(const json& v, const std::string& where) {
    if (!v.is_number_integer()) {
        throw SchemaError(where + ": expected an integer level");
    }
    auto n = v.get<long long>();
    if (n < Level::kMin || n > Level::kMax) {
        throw SchemaError(where + ": level " + std::to_string(n) + " outside [0,4]");
    }
    return Level(static_cast<int>(n));
}

template <typename Enum>
Enum read_enum(const json& v, const std::string& where) {
    auto s = read_string(v, where);
    auto e = enum_from_string<Enum>(s);
    if (!e) {
        throw SchemaError(where + ": unknown value '" + s + "'");
    }
    return *e;
}

std::set<ElementId> read_id_set(const json& v, const std::string& where) {
    if (!v.is_array()) {
        throw SchemaError(where + ": expected an array");
    }
    std::set<ElementId> out;
    for (const auto& item : v) {
        out.insert(read_id(item, where));
    }
    return out;
}

std::optional<ElementId> read_optional_id(const json& j, const char* key, const std::string& where) {
    if (const json* v = optional_field(j, key)) {
        return read_id(*v, where + "." + key);
    }
    return std::nullopt;
}

json id_array(const std::set<ElementId>& ids) {
    json a = json::array();
    for (const auto& id : ids) {
        a.push_back(id.str());
    }
    return a;
}

json optional_id(const std::optional<ElementId>& id) { return id ? json(id->str()) : json(nullptr); }

std::string where_of(ElementKind kind, const json& j) {
    std::string where(kind_name(kind));
    if (j.is_object()) {
        if (auto it = j.find("id"); it != j.end() && it->is_string()) {
            where += " '" + it->get<std::string>() + "'";
        }
    }
    return where;
}

struct ToJson {
    json operator()(const BusinessAsset& e) const {
        json needs = json::object();
        for (const auto& [p, l] : e.security_needs) {
            needs[std::string(to_string(p))] = l.value();
        }
        return {{"id", e.id.str()},
                {"name", e.name},
                {"kind", to_string(e.kind)},
                {"security_needs", needs},
                {"supported_by", id_array(e.supported_by)}};
    }
    json operator()(const SupportAsset& e) const {
        return {{"id", e.id.str()},
                {"name", e.name},
                {"category", to_string(e.category)},
                {"zone", optional_id(e.zone)},
                {"vulnerabilities", id_array(e.vulnerabilities)}};
    }
    json operator()(const Zone& e) const {
        return {{"id", e.id.str()},
                {"name", e.name},
                {"target_security_level", e.target_security_level.value()}};
    }
    json operator()(const Conduit& e) const {
        return {{"id", e.id.str()},
                {"name", e.name},
                {"endpoints", json::array({e.endpoints.first.str(), e.endpoints.second.str()})},
                {"channel", e.channel}};
    }
    json operator()(const Goal& e) const {
        json secures = json::array();
        for (const auto& s : e.secures) {
            secures.push_back({{"asset", s.asset.str()}, {"property", to_string(s.property)}});
        }
        return {{"id", e.id.str()},
                {"statement", e.statement},
                {"parent", optional_id(e.parent)},
                {"refinement", to_string(e.refinement)},
                {"secures", secures},
                {"owner", e.owner ? json(*e.owner) : json(nullptr)}};
    }
    json operator()(const Attacker& e) const {
        return {{"id", e.id.str()},
                {"name", e.name},
                {"capability", e.capability.value()},
                {"motive", e.motive},
                {"cooperative_facet", optional_id(e.cooperative_facet)}};
    }
    json operator()(const DreadedEvent& e) const {
        return {{"id", e.id.str()},
                {"attacker", e.attacker.str()},
                {"target", e.target.str()},
                {"violates", to_string(e.violates)},
                {"severity", e.severity.value()}};
    }
    json operator()(const Vulnerability& e) const {
        return {{"id", e.id.str()},
                {"name", e.name},
                {"cve_ids", e.cve_ids},
                {"qualification", e.qualification.value()},
                {"affects", id_array(e.affects)}};
    }
    json operator()(const AttackScenario& e) const {
        json steps = json::array();
        for (const auto& s : e.steps) {
            steps.push_back({{"asset", s.asset.str()}, {"vulnerability", s.vulnerability.str()}});
        }
        return {{"id", e.id.str()},
                {"realizes", e.realizes.str()},
                {"entry_zone", optional_id(e.entry_zone)},
                {"steps", steps}};
    }
    json operator()(const Risk& e) const {
        return {{"id", e.id.str()},
                {"dreaded_event", e.dreaded_event.str()},
                {"scenario", e.scenario.str()},
                {"impact", e.impact.value()},
                {"feasibility", e.feasibility.value()},
                {"strategy", to_string(e.strategy)}};
    }
    json operator()(const Control& e) const {
        return {{"id", e.id.str()},
                {"name", e.name},
                {"line_of_defence", to_string(e.line_of_defence)},
                {"mitigates", id_array(e.mitigates)},
                {"feasibility_reduction", e.feasibility_reduction.value()},
                {"impact_reduction", e.impact_reduction.value()}};
    }
};

BusinessAsset business_asset_from(const json& j, const std::string& w) {
    BusinessAsset e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.name = read_string(field(j, "name", w), w + ".name");
    e.kind = read_enum<BusinessAssetKind>(field(j, "kind", w), w + ".kind");
    const json& needs = field(j, "security_needs", w);
    if (!needs.is_object()) {
        throw SchemaError(w + ".security_needs: expected an object");
    }
    for (const auto& [k, v] : needs.items()) {
        auto p = enum_from_string<SecurityProperty>(k);
        if (!p) {
            throw SchemaError(w + ".security_needs: unknown property '" + k + "'");
        }
        e.security_needs[*p] = read_level(v, w + ".security_needs." + k);
    }
    e.supported_by = read_id_set(field(j, "supported_by", w), w + ".supported_by");
    return e;
}

SupportAsset support_asset_from(const json& j, const std::string& w) {
    SupportAsset e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.name = read_string(field(j, "name", w), w + ".name");
    e.category = read_enum<SupportCategory>(field(j, "category", w), w + ".category");
    e.zone = read_optional_id(j, "zone", w);
    if (const json* v = optional_field(j, "vulnerabilities")) {
        e.vulnerabilities = read_id_set(*v, w + ".vulnerabilities");
    }
    return e;
}

Zone zone_from(const json& j, const std::string& w) {
    Zone e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.name = read_string(field(j, "name", w), w + ".name");
    e.target_security_level =
        read_level(field(j, "target_security_level", w), w + ".target_security_level");
    return e;
}

Conduit conduit_from(const json& j, const std::string& w) {
    Conduit e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.name = read_string(field(j, "name", w), w + ".name");
    const json& ends = field(j, "endpoints", w);
    if (!ends.is_array() || ends.size() != 2) {
        throw SchemaError(w + ".endpoints: expected a pair of zone ids");
    }
    e.endpoints = {read_id(ends[0], w + ".endpoints"), read_id(ends[1], w + ".endpoints")};
    if (const json* v = optional_field(j, "channel")) {
        e.channel = read_string(*v, w + ".channel");
    }
    return e;
}

Goal goal_from(const json& j, const std::string& w) {
    Goal e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.statement = read_string(field(j, "statement", w), w + ".statement");
    e.parent = read_optional_id(j, "parent", w);
    if (const json* v = optional_field(j, "refinement")) {
        e.refinement = read_enum<Refinement>(*v, w + ".refinement");
    }
    if (const json* v = optional_field(j, "secures")) {
        if (!v->is_array()) {
            throw SchemaError(w + ".secures: expected an array");
        }
        for (const auto& s : *v) {
            e.secures.insert(SecuredProperty{
                read_id(field(s, "asset", w + ".secures"), w + ".secures.asset"),
                read_enum<SecurityProperty>(field(s, "property", w + ".secures"),
                                            w + ".secures.property")});
        }
    }
    if (const json* v = optional_field(j, "owner")) {
        e.owner = read_string(*v, w + ".owner");
    }
    return e;
}

Attacker attacker_from(const json& j, const std::string& w) {
    Attacker e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.name = read_string(field(j, "name", w), w + ".name");
    e.capability = read_level(field(j, "capability", w), w + ".capability");
    if (const json* v = optional_field(j, "motive")) {
        e.motive = read_string(*v, w + ".motive");
    }
    e.cooperative_facet = read_optional_id(j, "cooperative_facet", w);
    return e;
}

DreadedEvent dreaded_event_from(const json& j, const std::string& w) {
    DreadedEvent e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.attacker = read_id(field(j, "attacker", w), w + ".attacker");
    e.target = read_id(field(j, "target", w), w + ".target");
    e.violates = read_enum<SecurityProperty>(field(j, "violates", w), w + ".violates");
    e.severity = read_level(field(j, "severity", w), w + ".severity");
    return e;
}

Vulnerability vulnerability_from(const json& j, const std::string& w) {
    Vulnerability e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.name = read_string(field(j, "name", w), w + ".name");
    if (const json* v = optional_field(j, "cve_ids")) {
        if (!v->is_array()) {
            throw SchemaError(w + ".cve_ids: expected an array");
        }
        for (const auto& c : *v) {
            e.cve_ids.push_back(read_string(c, w + ".cve_ids"));
        }
    }
    e.qualification = read_level(field(j, "qualification", w), w + ".qualification");
    e.affects = read_id_set(field(j, "affects", w), w + ".affects");
    return e;
}

AttackScenario attack_scenario_from(const json& j, const std::string& w) {
    AttackScenario e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.realizes = read_id(field(j, "realizes", w), w + ".realizes");
    e.entry_zone = read_optional_id(j, "entry_zone", w);
    const json& steps = field(j, "steps", w);
    if (!steps.is_array()) {
        throw SchemaError(w + ".steps: expected an array");
    }
    for (const auto& s : steps) {
        e.steps.push_back(
            AttackStep{read_id(field(s, "asset", w + ".steps"), w + ".steps.asset"),
                       read_id(field(s, "vulnerability", w + ".steps"), w + ".steps.vulnerability")});
    }
    return e;
}

Risk risk_from(const json& j, const std::string& w) {
    Risk e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.dreaded_event = read_id(field(j, "dreaded_event", w), w + ".dreaded_event");
    e.scenario = read_id(field(j, "scenario", w), w + ".scenario");
    e.impact = read_level(field(j, "impact", w), w + ".impact");
    e.feasibility = read_level(field(j, "feasibility", w), w + ".feasibility");
    e.strategy = read_enum<TreatmentStrategy>(field(j, "strategy", w), w + ".strategy");
    return e;
}

Control control_from(const json& j, const std::string& w) {
    Control e;
    e.id = read_id(field(j, "id", w), w + ".id");
    e.name = read_string(field(j, "name", w), w + ".name");
    e.line_of_defence =
        read_enum<LineOfDefence>(field(j, "line_of_defence", w), w + ".line_of_defence");
    e.mitigates = read_id_set(field(j, "mitigates", w), w + ".mitigates");
    e.feasibility_reduction =
        read_level(field(j, "feasibility_reduction", w), w + ".feasibility_reduction");
    e.impact_reduction = read_level(field(j, "impact_reduction", w), w + ".impact_reduction");
    return e;
}

}  // namespace

json to_json(const Element& element) { return std::visit(ToJson{}, element); }

Element element_from_json(ElementKind kind, const json& j) {
    const std::string w = where_of(kind, j);
    switch (kind) {
        case ElementKind::BusinessAsset: return business_asset_from(j, w);
        case ElementKind::SupportAsset: return support_asset_from(j, w);
        case ElementKind::Zone: return zone_from(j, w);
        case ElementKind::Conduit: return conduit_from(j, w);
        case ElementKind::Goal: return goal_from(j, w);
        case ElementKind::Attacker: return attacker_from(j, w);
        case ElementKind::DreadedEvent: return dreaded_event_from(j, w);
        case ElementKind::Vulnerability: return vulnerability_from(j, w);
        case ElementKind::AttackScenario: return attack_scenario_from(j, w);
        case ElementKind::Risk: return risk_from(j, w);
        case ElementKind::Control: return control_from(j, w);
    }
    throw SchemaError("unknown element kind");
}

json to_json(const TraceLink& link) {
    json meta = json::object();
    for (const auto& [k, v] : link.metadata) {
        meta[k] = v;
    }
    return {{"tool", to_string(link.source_tool)},
            {"external_id", link.external_id},
            {"element", link.element.str()},
            {"direction", to_string(link.direction)},
            {"revision", link.revision},
            {"metadata", meta}};
}

TraceLink trace_link_from_json(const json& j) {
    const std::string w = "trace_link";
    TraceLink t;
    t.source_tool = read_enum<Tool>(field(j, "tool", w), w + ".tool");
    t.external_id = read_string(field(j, "external_id", w), w + ".external_id");
    t.element = read_id(field(j, "element", w), w + ".element");
    t.direction = read_enum<TraceDirection>(field(j, "direction", w), w + ".direction");
    const json& rev = field(j, "revision", w);
    if (!rev.is_number_unsigned() && !(rev.is_number_integer() && rev.get<long long>() >= 0)) {
        throw SchemaError(w + ".revision: expected a non-negative integer");
    }
    t.revision = rev.get<std::uint64_t>();
    if (const json* meta = optional_field(j, "metadata")) {
        if (!meta->is_object()) {
            throw SchemaError(w + ".metadata: expected an object");
        }
        for (const auto& [k, v] : meta->items()) {
            t.metadata[k] = read_string(v, w + ".metadata." + k);
        }
    }
    return t;
}

json model_to_json(const RiskModel& model) {
    json doc = json::object();
    doc["schema_version"] = model.schema_version;
    doc["revision"] = model.revision;
    for_each_collection(model, [&](const auto& c) {
        using T = typename std::decay_t<decltype(c)>::mapped_type;
        json arr = json::array();
        for (const auto& [id, e] : c) {
            arr.push_back(to_json(Element(e)));
        }
        doc[std::string(ElementTraits<T>::collection)] = std::move(arr);
    });
    json links = json::array();
    for (const auto& link : model.trace_links) {
        links.push_back(to_json(link));
    }
    doc["trace_links"] = std::move(links);
    return doc;
}

RiskModel model_from_json(const json& doc) {
    if (!doc.is_object()) {
        throw SchemaError("model document: expected a top-level object");
    }
    RiskModel model;
    model.schema_version = read_string(field(doc, "schema_version", "model"), "schema_version");
    if (model.schema_version != RiskModel::kSchemaVersion) {
        throw SchemaError("unsupported schema_version '" + model.schema_version + "'");
    }
    const json& rev = field(doc, "revision", "model");
    if (!rev.is_number_integer() || rev.get<long long>() < 0) {
        throw SchemaError("revision: expected a non-negative integer");
    }
    model.revision = rev.get<std::uint64_t>();

    for_each_collection(model, [&](auto& c) {
        using T = typename std::decay_t<decltype(c)>::mapped_type;
        const char* key = ElementTraits<T>::collection.data();
        const json* arr = optional_field(doc, key);
        if (!arr) {
            return;
        }
        if (!arr->is_array()) {
            throw SchemaError(std::string(key) + ": expected an array");
        }
        for (const auto& item : *arr) {
            auto e = std::get<T>(element_from_json(ElementTraits<T>::kind, item));
            auto id = e.id;
            if (!c.emplace(id, std::move(e)).second) {
                throw SchemaError(std::string(key) + ": duplicate id '" + id.str() + "'");
            }
        }
    });

    if (const json* links = optional_field(doc, "trace_links")) {
        if (!links->is_array()) {
            throw SchemaError("trace_links: expected an array");
        }
        for (const auto& item : *links) {
            model.trace_links.insert(trace_link_from_json(item));
        }
    }
    return model;
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // byte is 1-based and points just past the offending character.
        std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
        offset = std::min(offset, text.size());
        std::size_t line = 1;
        std::size_t column = 1;
        for (std::size_t i = 0; i < offset; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError("malformed document: " + std::string(e.what()), line, column);
    }
}

RiskModel load_model(std::string_view text) {
    RiskModel model = model_from_json(parse_json(text));
    auto dangling = dangling_references(model);
    if (!dangling.empty()) {
        const auto& d = dangling.front();
        throw DanglingRefError(d.to.str(), std::string(kind_name(d.from_kind)) + " '" +
                                               d.from.str() + "' field " + d.field);
    }
    return model;
}

std::string save_model(const RiskModel& model) { return model_to_json(model).dump(2) + "\n"; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open '" + path + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw Error("failed writing '" + path + "'");
    }
}

}  // namespace rmm
