#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmm/adapters/common.hpp"

namespace rmm::adapters {

struct FieldDelta {
    std::string field;
    json before;
    json after;

    bool operator==(const FieldDelta&) const = default;
};

struct AddedElement {
    ElementKind kind;
    ElementId id;
    Element element;

    bool operator==(const AddedElement&) const = default;
};

struct ModifiedElement {
    ElementKind kind;
    ElementId id;
    std::vector<FieldDelta> deltas;
    // Set when the id moved to another kind; deltas then describe every field.
    std::optional<ElementKind> previous_kind;

    bool operator==(const ModifiedElement&) const = default;
};

struct RemovedElement {
    ElementKind kind;
    ElementId id;

    bool operator==(const RemovedElement&) const = default;
};

struct ChangeSet {
    std::uint64_t base_revision = 0;
    std::vector<AddedElement> added;
    std::vector<ModifiedElement> modified;
    std::vector<RemovedElement> removed;
    std::vector<TraceLink> trace_links_added;
    std::vector<TraceLink> trace_links_removed;

    bool empty() const;
    bool operator==(const ChangeSet&) const = default;
};

/// Field-level differences from `base` to `other`, elements matched by id, lists ordered
/// by (kind, id). Throws SchemaError when the schema versions differ.
ChangeSet diff(const RiskModel& base, const RiskModel& other);

/// Applies `changes` to a copy of `base` and sets revision = base.revision + 1.
/// Throws RevisionMismatchError when base_revision differs, SchemaError (or ConflictError
/// on a stale `before` value) when a change does not fit, and ValidationGateError when
/// the result breaks referential closure. `base` is never modified.
RiskModel apply(const RiskModel& base, const ChangeSet& changes);

json to_json(const ChangeSet& changes);
ChangeSet change_set_from_json(const json& j);
/// One line per change: "+ kind id", "~ kind id field: before -> after", "- kind id".
std::string format_change_set(const ChangeSet& changes);

}  // namespace rmm::adapters
