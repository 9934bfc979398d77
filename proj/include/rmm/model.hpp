#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rmm/errors.hpp"

namespace rmm {

/// Identifier of a model element. Always matches `[a-z0-9-]{1,64}`.
class ElementId {
public:
    ElementId() = default;
    /// Throws InvalidIdError when `value` does not match the id pattern.
    explicit ElementId(std::string value);

    static bool is_valid(std::string_view value) noexcept;

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    auto operator<=>(const ElementId&) const = default;

private:
    std::string value_;
};

/// Ordinal 0 (negligible) .. 4 (critical).
class Level {
public:
    static constexpr int kMin = 0;
    static constexpr int kMax = 4;

    constexpr Level() = default;
    /// Throws RangeError outside [0,4].
    explicit Level(int value);

    constexpr int value() const noexcept { return value_; }

    auto operator<=>(const Level&) const = default;

private:
    int value_ = 0;
};

enum class SecurityProperty { Confidentiality, Integrity, Availability };

enum class BusinessAssetKind { Information, Service, Process };

enum class SupportCategory { Hardware, Software, Network, Personnel, Site, Organisation };

enum class Refinement { And, Or };

enum class TreatmentStrategy { Accept, Transfer, Mitigate, Avoid };

enum class LineOfDefence { Identify, Protect, Detect, Respond, Recover };

enum class Tool { Pistar, Monarc, Cyrus };

enum class TraceDirection { Imported, Exported };

enum class ElementKind {
    BusinessAsset,
    SupportAsset,
    Zone,
    Conduit,
    Goal,
    Attacker,
    DreadedEvent,
    Vulnerability,
    AttackScenario,
    Risk,
    Control,
};

inline constexpr std::size_t kElementKindCount = 11;

struct BusinessAsset {
    ElementId id;
    std::string name;
    BusinessAssetKind kind = BusinessAssetKind::Service;
    std::map<SecurityProperty, Level> security_needs;
    std::set<ElementId> supported_by;

    bool operator==(const BusinessAsset&) const = default;
};

struct SupportAsset {
    ElementId id;
    std::string name;
    SupportCategory category = SupportCategory::Software;
    std::optional<ElementId> zone;
    std::set<ElementId> vulnerabilities;

    bool operator==(const SupportAsset&) const = default;
};

struct Zone {
    ElementId id;
    std::string name;
    Level target_security_level;

    bool operator==(const Zone&) const = default;
};

struct Conduit {
    ElementId id;
    std::string name;
    std::pair<ElementId, ElementId> endpoints;
    std::string channel;

    bool operator==(const Conduit&) const = default;
};

struct SecuredProperty {
    ElementId asset;
    SecurityProperty property = SecurityProperty::Integrity;

    auto operator<=>(const SecuredProperty&) const = default;
};

struct Goal {
    ElementId id;
    std::string statement;
    std::optional<ElementId> parent;
    Refinement refinement = Refinement::And;
    std::set<SecuredProperty> secures;
    // Organisation agent owning the goal in strategic models.
    std::optional<std::string> owner;

    bool operator==(const Goal&) const = default;
};

struct Attacker {
    ElementId id;
    std::string name;
    Level capability;
    std::string motive;
    std::optional<ElementId> cooperative_facet;

    bool operator==(const Attacker&) const = default;
};

struct DreadedEvent {
    ElementId id;
    ElementId attacker;
    ElementId target;
    SecurityProperty violates = SecurityProperty::Integrity;
    Level severity;

    bool operator==(const DreadedEvent&) const = default;
};

struct Vulnerability {
    ElementId id;
    std::string name;
    std::vector<std::string> cve_ids;
    Level qualification;
    std::set<ElementId> affects;

    bool operator==(const Vulnerability&) const = default;
};

struct AttackStep {
    ElementId asset;
    ElementId vulnerability;

    auto operator<=>(const AttackStep&) const = default;
};

struct AttackScenario {
    ElementId id;
    ElementId realizes;
    std::optional<ElementId> entry_zone;
    std::vector<AttackStep> steps;

    bool operator==(const AttackScenario&) const = default;
};

struct Control {
    ElementId id;
    std::string name;
    LineOfDefence line_of_defence = LineOfDefence::Protect;
    std::set<ElementId> mitigates;
    Level feasibility_reduction;
    Level impact_reduction;

    bool operator==(const Control&) const = default;
};

struct Risk {
    ElementId id;
    ElementId dreaded_event;
    ElementId scenario;
    Level impact;
    Level feasibility;
    TreatmentStrategy strategy = TreatmentStrategy::Accept;

    bool operator==(const Risk&) const = default;
};

struct TraceLink {
    Tool source_tool = Tool::Pistar;
    std::string external_id;
    ElementId element;
    TraceDirection direction = TraceDirection::Imported;
    std::uint64_t revision = 0;
    // Free-form annotations, e.g. test verdicts attached to an exported suite.
    std::map<std::string, std::string> metadata;

    // Ordered as the canonical file lists them: (tool, external_id, revision, ...).
    std::strong_ordering operator<=>(const TraceLink& other) const;
    bool operator==(const TraceLink&) const = default;
};

using Element = std::variant<BusinessAsset, SupportAsset, Zone, Conduit, Goal, Attacker,
                             DreadedEvent, Vulnerability, AttackScenario, Risk, Control>;

template <typename T>
using Collection = std::map<ElementId, T>;

struct RiskModel {
    static constexpr std::string_view kSchemaVersion = "1.0";

    std::string schema_version{kSchemaVersion};
    std::uint64_t revision = 0;

    Collection<BusinessAsset> business_assets;
    Collection<SupportAsset> support_assets;
    Collection<Zone> zones;
    Collection<Conduit> conduits;
    Collection<Goal> goals;
    Collection<Attacker> attackers;
    Collection<DreadedEvent> dreaded_events;
    Collection<Vulnerability> vulnerabilities;
    Collection<AttackScenario> attack_scenarios;
    Collection<Risk> risks;
    Collection<Control> controls;

    std::set<TraceLink> trace_links;

    bool operator==(const RiskModel&) const = default;

    std::size_t element_count() const noexcept;
    /// All kinds under which `id` is stored (more than one only in an invalid model).
    std::vector<ElementKind> kinds_of(const ElementId& id) const;
    bool contains(const ElementId& id) const { return !kinds_of(id).empty(); }
    /// Element stored under `id` with the given kind, if any.
    std::optional<Element> find(ElementKind kind, const ElementId& id) const;
};

// Compile-time mapping from element type to its kind and model collection.
template <typename T>
struct ElementTraits;

#define RMM_ELEMENT_TRAITS(Type, Kind, member)                                   \
    template <>                                                                  \
    struct ElementTraits<Type> {                                                 \
        static constexpr ElementKind kind = ElementKind::Kind;                   \
        static constexpr std::string_view collection = #member;                  \
        static Collection<Type>& of(RiskModel& m) { return m.member; }           \
        static const Collection<Type>& of(const RiskModel& m) { return m.member; } \
    };

RMM_ELEMENT_TRAITS(BusinessAsset, BusinessAsset, business_assets)
RMM_ELEMENT_TRAITS(SupportAsset, SupportAsset, support_assets)
RMM_ELEMENT_TRAITS(Zone, Zone, zones)
RMM_ELEMENT_TRAITS(Conduit, Conduit, conduits)
RMM_ELEMENT_TRAITS(Goal, Goal, goals)
RMM_ELEMENT_TRAITS(Attacker, Attacker, attackers)
RMM_ELEMENT_TRAITS(DreadedEvent, DreadedEvent, dreaded_events)
RMM_ELEMENT_TRAITS(Vulnerability, Vulnerability, vulnerabilities)
RMM_ELEMENT_TRAITS(AttackScenario, AttackScenario, attack_scenarios)
RMM_ELEMENT_TRAITS(Risk, Risk, risks)
RMM_ELEMENT_TRAITS(Control, Control, controls)

#undef RMM_ELEMENT_TRAITS

/// Calls `fn(collection)` for every element collection, in canonical file order.
template <typename Model, typename Fn>
void for_each_collection(Model& model, Fn&& fn) {
    fn(model.business_assets);
    fn(model.support_assets);
    fn(model.zones);
    fn(model.conduits);
    fn(model.goals);
    fn(model.attackers);
    fn(model.dreaded_events);
    fn(model.vulnerabilities);
    fn(model.attack_scenarios);
    fn(model.risks);
    fn(model.controls);
}

ElementKind kind_of(const Element& element);
const ElementId& id_of(const Element& element);

/// A typed reference held by one element to another.
struct Reference {
    ElementId from;
    ElementKind from_kind;
    std::string field;
    ElementId to;
    ElementKind expected;
};

/// Every outgoing reference in the model, trace links included (from = linked element,
/// field = "trace_links"). Sorted by (from, field, to).
std::vector<Reference> references(const RiskModel& model);

/// References whose target is not stored under the expected kind.
std::vector<Reference> dangling_references(const RiskModel& model);

/// Inserts or replaces `element` under its id and bumps the revision by one.
/// Throws KindConflictError if the id is already used by another kind.
RiskModel upsert_element(RiskModel model, const Element& element);

/// Removes an element of the given kind; returns false when absent. Revision untouched.
bool erase_element(RiskModel& model, ElementKind kind, const ElementId& id);

}  // namespace rmm
