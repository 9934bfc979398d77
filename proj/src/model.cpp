#include "rmm/model.hpp"

#include <algorithm>
#include <tuple>

namespace rmm {

ElementId::ElementId(std::string value) : value_(std::move(value)) {
    if (!is_valid(value_)) {
        throw InvalidIdError("invalid element id '" + value_ + "' (expected [a-z0-9-]{1,64})");
    }
}

bool ElementId::is_valid(std::string_view value) noexcept {
    if (value.empty() || value.size() > 64) {
        return false;
    }
    return std::all_of(value.begin(), value.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    });
}

Level::Level(int value) : value_(value) {
    if (value < kMin || value > kMax) {
        throw RangeError("level " + std::to_string(value) + " outside [0,4]");
    }
}

std::strong_ordering TraceLink::operator<=>(const TraceLink& other) const {
    auto key = [](const TraceLink& t) {
        return std::tie(t.source_tool, t.external_id, t.revision, t.element, t.direction);
    };
    if (auto c = key(*this) <=> key(other); c != 0) {
        return c;
    }
    if (metadata == other.metadata) {
        return std::strong_ordering::equal;
    }
    return std::lexicographical_compare(metadata.begin(), metadata.end(),
                                        other.metadata.begin(), other.metadata.end())
               ? std::strong_ordering::less
               : std::strong_ordering::greater;
}

std::size_t RiskModel::element_count() const noexcept {
    std::size_t n = 0;
    for_each_collection(*this, [&](const auto& c) { n += c.size(); });
    return n;
}

std::vector<ElementKind> RiskModel::kinds_of(const ElementId& id) const {
    std::vector<ElementKind> kinds;
    for_each_collection(*this, [&](const auto& c) {
        using T = typename std::decay_t<decltype(c)>::mapped_type;
        if (c.contains(id)) {
            kinds.push_back(ElementTraits<T>::kind);
        }
    });
    return kinds;
}

std::optional<Element> RiskModel::find(ElementKind kind, const ElementId& id) const {
    std::optional<Element> found;
    for_each_collection(*this, [&](const auto& c) {
        using T = typename std::decay_t<decltype(c)>::mapped_type;
        if (ElementTraits<T>::kind != kind) {
            return;
        }
        if (auto it = c.find(id); it != c.end()) {
            found = it->second;
        }
    });
    return found;
}

ElementKind kind_of(const Element& element) {
    return std::visit([](const auto& e) { return ElementTraits<std::decay_t<decltype(e)>>::kind; },
                      element);
}

const ElementId& id_of(const Element& element) {
    return std::visit([](const auto& e) -> const ElementId& { return e.id; }, element);
}

namespace {

struct ReferenceCollector {
    std::vector<Reference>& out;

    void add(const ElementId& from, ElementKind from_kind, std::string field, const ElementId& to,
             ElementKind expected) {
        out.push_back(Reference{from, from_kind, std::move(field), to, expected});
    }

    void operator()(const BusinessAsset& e) {
        for (const auto& s : e.supported_by) {
            add(e.id, ElementKind::BusinessAsset, "supported_by", s, ElementKind::SupportAsset);
        }
    }
    void operator()(const SupportAsset& e) {
        if (e.zone) {
            add(e.id, ElementKind::SupportAsset, "zone", *e.zone, ElementKind::Zone);
        }
        for (const auto& v : e.vulnerabilities) {
            add(e.id, ElementKind::SupportAsset, "vulnerabilities", v, ElementKind::Vulnerability);
        }
    }
    void operator()(const Zone&) {}
    void operator()(const Conduit& e) {
        add(e.id, ElementKind::Conduit, "endpoints", e.endpoints.first, ElementKind::Zone);
        add(e.id, ElementKind::Conduit, "endpoints", e.endpoints.second, ElementKind::Zone);
    }
    void operator()(const Goal& e) {
        if (e.parent) {
            add(e.id, ElementKind::Goal, "parent", *e.parent, ElementKind::Goal);
        }
        for (const auto& s : e.secures) {
            add(e.id, ElementKind::Goal, "secures", s.asset, ElementKind::BusinessAsset);
        }
    }
    void operator()(const Attacker& e) {
        if (e.cooperative_facet) {
            add(e.id, ElementKind::Attacker, "cooperative_facet", *e.cooperative_facet,
                ElementKind::Goal);
        }
    }
    void operator()(const DreadedEvent& e) {
        add(e.id, ElementKind::DreadedEvent, "attacker", e.attacker, ElementKind::Attacker);
        add(e.id, ElementKind::DreadedEvent, "target", e.target, ElementKind::BusinessAsset);
    }
    void operator()(const Vulnerability& e) {
        for (const auto& a : e.affects) {
            add(e.id, ElementKind::Vulnerability, "affects", a, ElementKind::SupportAsset);
        }
    }
    void operator()(const AttackScenario& e) {
        add(e.id, ElementKind::AttackScenario, "realizes", e.realizes, ElementKind::DreadedEvent);
        if (e.entry_zone) {
            add(e.id, ElementKind::AttackScenario, "entry_zone", *e.entry_zone, ElementKind::Zone);
        }
        for (const auto& step : e.steps) {
            add(e.id, ElementKind::AttackScenario, "steps.asset", step.asset,
                ElementKind::SupportAsset);
            add(e.id, ElementKind::AttackScenario, "steps.vulnerability", step.vulnerability,
                ElementKind::Vulnerability);
        }
    }
    void operator()(const Risk& e) {
        add(e.id, ElementKind::Risk, "dreaded_event", e.dreaded_event, ElementKind::DreadedEvent);
        add(e.id, ElementKind::Risk, "scenario", e.scenario, ElementKind::AttackScenario);
    }
    void operator()(const Control& e) {
        for (const auto& r : e.mitigates) {
            add(e.id, ElementKind::Control, "mitigates", r, ElementKind::Risk);
        }
    }
};

bool stored_as(const RiskModel& model, const ElementId& id, ElementKind kind) {
    bool hit = false;
    for_each_collection(model, [&](const auto& c) {
        using T = typename std::decay_t<decltype(c)>::mapped_type;
        if (ElementTraits<T>::kind == kind && c.contains(id)) {
            hit = true;
        }
    });
    return hit;
}

}  // namespace

std::vector<Reference> references(const RiskModel& model) {
    std::vector<Reference> refs;
    ReferenceCollector collect{refs};
    for_each_collection(model, [&](const auto& c) {
        for (const auto& [id, e] : c) {
            collect(e);
        }
    });
    for (const auto& link : model.trace_links) {
        auto kinds = model.kinds_of(link.element);
        // A trace link may point at any kind; it dangles only when nothing carries the id.
        ElementKind expected = kinds.empty() ? ElementKind::BusinessAsset : kinds.front();
        refs.push_back(Reference{link.element, expected, "trace_links", link.element, expected});
    }
    std::stable_sort(refs.begin(), refs.end(), [](const Reference& a, const Reference& b) {
        return std::tie(a.from, a.field, a.to) < std::tie(b.from, b.field, b.to);
    });
    return refs;
}

std::vector<Reference> dangling_references(const RiskModel& model) {
    std::vector<Reference> out;
    for (auto& ref : references(model)) {
        if (ref.field == "trace_links" ? !model.contains(ref.to)
                                       : !stored_as(model, ref.to, ref.expected)) {
            out.push_back(std::move(ref));
        }
    }
    return out;
}

RiskModel upsert_element(RiskModel model, const Element& element) {
    const ElementId& id = id_of(element);
    const ElementKind kind = kind_of(element);
    for (ElementKind existing : model.kinds_of(id)) {
        if (existing != kind) {
            throw KindConflictError("id '" + id.str() + "' already used by another element kind");
        }
    }
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            ElementTraits<T>::of(model).insert_or_assign(e.id, e);
        },
        element);
    ++model.revision;
    return model;
}

bool erase_element(RiskModel& model, ElementKind kind, const ElementId& id) {
    bool erased = false;
    for_each_collection(model, [&](auto& c) {
        using T = typename std::decay_t<decltype(c)>::mapped_type;
        if (ElementTraits<T>::kind == kind) {
            erased = c.erase(id) > 0;
        }
    });
    return erased;
}

}  // namespace rmm
