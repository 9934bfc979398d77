#include "rmm/adapters/common.hpp"

#include <cctype>

namespace rmm::adapters {

std::string slugify(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool dash = false;
    for (unsigned char c : text) {
        if (std::isalnum(c) && c < 0x80) {
            out.push_back(static_cast<char>(std::tolower(c)));
            dash = false;
        } else if (!dash && !out.empty()) {
            out.push_back('-');
            dash = true;
        }
    }
    while (!out.empty() && out.back() == '-') {
        out.pop_back();
    }
    if (out.size() > 64) {
        out.resize(64);
        while (!out.empty() && out.back() == '-') {
            out.pop_back();
        }
    }
    return out.empty() ? "x" : out;
}

ElementId IdAllocator::assign(std::string_view scope, std::string_view external,
                              std::string_view prefix) {
    auto key = std::pair{std::string(scope), std::string(external)};
    if (auto it = assigned_.find(key); it != assigned_.end()) {
        return it->second;
    }
    std::string base;
    if (prefix.empty() && ElementId::is_valid(external)) {
        base = std::string(external);
    } else {
        base = slugify(std::string(prefix) + std::string(external));
    }
    ElementId candidate(base);
    for (int n = 2; taken_.contains(candidate); ++n) {
        std::string suffix = "-" + std::to_string(n);
        std::string stem = base.substr(0, 64 - suffix.size());
        candidate = ElementId(stem + suffix);
    }
    taken_.insert(candidate);
    assigned_.emplace(std::move(key), candidate);
    return candidate;
}

TraceLink make_link(Tool tool, std::string external_id, const ElementId& element,
                    TraceDirection direction) {
    TraceLink link;
    link.source_tool = tool;
    link.external_id = std::move(external_id);
    link.element = element;
    link.direction = direction;
    return link;
}

RiskModel record_links(RiskModel model, const std::vector<TraceLink>& links) {
    ++model.revision;
    for (TraceLink link : links) {
        link.revision = model.revision;
        model.trace_links.insert(std::move(link));
    }
    return model;
}

RiskModel merge_import(RiskModel model, const ImportResult& imported) {
    const auto start_revision = model.revision;
    for_each_collection(imported.fragment, [&](const auto& c) {
        for (const auto& [id, e] : c) {
            model = upsert_element(std::move(model), e);
        }
    });
    model.revision = start_revision;
    return record_links(std::move(model), imported.links);
}

std::vector<Finding> sorted(std::vector<Finding> findings) {
    sort_findings(findings);
    return findings;
}

}  // namespace rmm::adapters
