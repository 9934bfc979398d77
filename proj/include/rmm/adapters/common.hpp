#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rmm/canonical.hpp"
#include "rmm/model.hpp"
#include "rmm/validation.hpp"

namespace rmm::adapters {

/// Output of an importer. Trace links carry revision 0 until merged into a model.
struct ImportResult {
    RiskModel fragment;
    std::vector<TraceLink> links;
    std::vector<Finding> findings;
};

/// Output of an exporter. Trace links carry revision 0 until recorded on the model.
struct ExportResult {
    json document;
    std::vector<TraceLink> links;
    std::vector<Finding> findings;
    // Elements with no counterpart in the target format.
    std::vector<ElementId> unmapped;
};

/// Lower-cases and replaces every character outside [a-z0-9] by '-', trimmed to 64.
/// Empty input becomes "x".
std::string slugify(std::string_view text);

/// Turns external identifiers into unique ElementIds. An external id already matching
/// the id pattern is kept verbatim when free.
class IdAllocator {
public:
    IdAllocator() = default;
    explicit IdAllocator(std::set<ElementId> taken) : taken_(std::move(taken)) {}

    /// Same (scope, external) pair always yields the same id.
    ElementId assign(std::string_view scope, std::string_view external, std::string_view prefix = "");
    void reserve(const ElementId& id) { taken_.insert(id); }
    bool taken(const ElementId& id) const { return taken_.contains(id); }

private:
    std::set<ElementId> taken_;
    std::map<std::pair<std::string, std::string>, ElementId> assigned_;
};

TraceLink make_link(Tool tool, std::string external_id, const ElementId& element,
                    TraceDirection direction);

/// Appends `links` stamped with a fresh revision (model.revision + 1) and bumps the revision.
RiskModel record_links(RiskModel model, const std::vector<TraceLink>& links);

/// Upserts every fragment element (KindConflictError on kind clash), records the import
/// links, and bumps the revision once.
RiskModel merge_import(RiskModel model, const ImportResult& imported);

/// Finding list helper: sorts and returns.
std::vector<Finding> sorted(std::vector<Finding> findings);

}  // namespace rmm::adapters
