#include "rmm/adapters/sync.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace rmm::adapters {

bool ChangeSet::empty() const {
    return added.empty() && modified.empty() && removed.empty() && trace_links_added.empty() &&
           trace_links_removed.empty();
}

namespace {

using Key = std::pair<ElementKind, ElementId>;

std::map<Key, Element> elements_of(const RiskModel& model) {
    std::map<Key, Element> out;
    for_each_collection(model, [&](const auto& c) {
        for (const auto& [id, e] : c) {
            out.emplace(Key{kind_of(Element(e)), id}, e);
        }
    });
    return out;
}

// Element fields other than the id, as canonical JSON.
json fields_of(const Element& e) {
    json j = to_json(e);
    j.erase("id");
    return j;
}

std::vector<FieldDelta> field_deltas(const json& before, const json& after) {
    std::vector<FieldDelta> out;
    std::set<std::string> names;
    for (const auto& [k, v] : before.items()) {
        names.insert(k);
    }
    for (const auto& [k, v] : after.items()) {
        names.insert(k);
    }
    for (const auto& name : names) {
        json b = before.contains(name) ? before[name] : json(nullptr);
        json a = after.contains(name) ? after[name] : json(nullptr);
        if (b != a) {
            out.push_back({name, std::move(b), std::move(a)});
        }
    }
    return out;
}

std::map<ElementId, std::vector<ElementKind>> kinds_by_id(const std::map<Key, Element>& elements) {
    std::map<ElementId, std::vector<ElementKind>> out;
    for (const auto& [key, e] : elements) {
        out[key.second].push_back(key.first);
    }
    return out;
}

void put(RiskModel& model, const Element& element) {
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            ElementTraits<T>::of(model).insert_or_assign(e.id, e);
        },
        element);
}

std::string describe(ElementKind kind, const ElementId& id) {
    return std::string(kind_name(kind)) + " '" + id.str() + "'";
}

}  // namespace

ChangeSet diff(const RiskModel& base, const RiskModel& other) {
    if (base.schema_version != other.schema_version) {
        throw SchemaError("cannot diff schema version " + base.schema_version + " against " +
                          other.schema_version);
    }
    ChangeSet cs;
    cs.base_revision = base.revision;

    const auto before = elements_of(base);
    const auto after = elements_of(other);
    const auto before_kinds = kinds_by_id(before);
    const auto after_kinds = kinds_by_id(after);

    // An id stored under exactly one kind on each side, with the kinds differing, moved.
    auto moved_from = [&](const ElementId& id) -> std::optional<ElementKind> {
        auto b = before_kinds.find(id);
        auto a = after_kinds.find(id);
        if (b == before_kinds.end() || a == after_kinds.end() || b->second.size() != 1 ||
            a->second.size() != 1 || b->second.front() == a->second.front()) {
            return std::nullopt;
        }
        return b->second.front();
    };

    for (const auto& [key, e] : after) {
        auto it = before.find(key);
        if (it != before.end()) {
            if (!(it->second == e)) {
                cs.modified.push_back({key.first, key.second, field_deltas(fields_of(it->second), fields_of(e)),
                                       std::nullopt});
            }
        } else if (auto prev = moved_from(key.second)) {
            const Element& old = before.at(Key{*prev, key.second});
            cs.modified.push_back({key.first, key.second, field_deltas(fields_of(old), fields_of(e)), prev});
        } else {
            cs.added.push_back({key.first, key.second, e});
        }
    }
    for (const auto& [key, e] : before) {
        if (!after.contains(key) && !moved_from(key.second)) {
            cs.removed.push_back({key.first, key.second});
        }
    }
    std::set_difference(other.trace_links.begin(), other.trace_links.end(), base.trace_links.begin(),
                        base.trace_links.end(), std::back_inserter(cs.trace_links_added));
    std::set_difference(base.trace_links.begin(), base.trace_links.end(), other.trace_links.begin(),
                        other.trace_links.end(), std::back_inserter(cs.trace_links_removed));
    return cs;
}

RiskModel apply(const RiskModel& base, const ChangeSet& changes) {
    if (changes.base_revision != base.revision) {
        throw RevisionMismatchError("change set is based on revision " + std::to_string(changes.base_revision) +
                                    ", model is at revision " + std::to_string(base.revision));
    }
    RiskModel model = base;

    for (const auto& r : changes.removed) {
        if (!erase_element(model, r.kind, r.id)) {
            throw SchemaError("cannot remove " + describe(r.kind, r.id) + ": not in the model");
        }
    }
    for (const auto& m : changes.modified) {
        const ElementKind from = m.previous_kind.value_or(m.kind);
        auto current = model.find(from, m.id);
        if (!current) {
            throw SchemaError("cannot modify " + describe(from, m.id) + ": not in the model");
        }
        json fields = fields_of(*current);
        for (const auto& d : m.deltas) {
            const json now = fields.contains(d.field) ? fields[d.field] : json(nullptr);
            if (now != d.before) {
                throw ConflictError(describe(from, m.id) + " field '" + d.field + "' is " + now.dump() +
                                    ", change set expects " + d.before.dump());
            }
            if (d.after.is_null()) {
                fields.erase(d.field);
            } else {
                fields[d.field] = d.after;
            }
        }
        fields["id"] = m.id.str();
        Element updated = element_from_json(m.kind, fields);
        if (m.previous_kind) {
            erase_element(model, from, m.id);
        }
        put(model, updated);
    }
    for (const auto& a : changes.added) {
        if (model.find(a.kind, a.id)) {
            throw SchemaError("cannot add " + describe(a.kind, a.id) + ": already in the model");
        }
        put(model, a.element);
    }
    for (const auto& t : changes.trace_links_removed) {
        if (model.trace_links.erase(t) == 0) {
            throw SchemaError("cannot remove trace link '" + t.external_id + "' on '" + t.element.str() +
                              "': not in the model");
        }
    }
    for (const auto& t : changes.trace_links_added) {
        model.trace_links.insert(t);
    }
    model.revision = base.revision + 1;

    std::vector<Finding> closure;
    for (auto& f : validate(model)) {
        if (f.rule_id == "R-REF-DANGLING" || f.rule_id == "R-ID-UNIQUE") {
            closure.push_back(std::move(f));
        }
    }
    if (!closure.empty()) {
        throw ValidationGateError("apply aborted: the result breaks referential closure", std::move(closure));
    }
    return model;
}

json to_json(const ChangeSet& changes) {
    json added = json::array();
    for (const auto& a : changes.added) {
        added.push_back({{"kind", kind_name(a.kind)}, {"id", a.id.str()}, {"element", to_json(a.element)}});
    }
    json modified = json::array();
    for (const auto& m : changes.modified) {
        json deltas = json::array();
        for (const auto& d : m.deltas) {
            deltas.push_back({{"field", d.field}, {"before", d.before}, {"after", d.after}});
        }
        modified.push_back({{"kind", kind_name(m.kind)},
                            {"id", m.id.str()},
                            {"previous_kind", m.previous_kind ? json(kind_name(*m.previous_kind)) : json(nullptr)},
                            {"deltas", std::move(deltas)}});
    }
    json removed = json::array();
    for (const auto& r : changes.removed) {
        removed.push_back({{"kind", kind_name(r.kind)}, {"id", r.id.str()}});
    }
    json links_added = json::array();
    for (const auto& t : changes.trace_links_added) {
        links_added.push_back(to_json(t));
    }
    json links_removed = json::array();
    for (const auto& t : changes.trace_links_removed) {
        links_removed.push_back(to_json(t));
    }
    return {{"base_revision", changes.base_revision},
            {"added", std::move(added)},
            {"modified", std::move(modified)},
            {"removed", std::move(removed)},
            {"trace_links_added", std::move(links_added)},
            {"trace_links_removed", std::move(links_removed)}};
}

ChangeSet change_set_from_json(const json& j) {
    try {
        auto kind = [](const json& v) {
            auto k = kind_from_name(v.get<std::string>());
            if (!k) {
                throw SchemaError("change set: unknown kind '" + v.get<std::string>() + "'");
            }
            return *k;
        };
        ChangeSet cs;
        cs.base_revision = j.at("base_revision").get<std::uint64_t>();
        for (const auto& a : j.at("added")) {
            const ElementKind k = kind(a.at("kind"));
            cs.added.push_back({k, ElementId(a.at("id").get<std::string>()), element_from_json(k, a.at("element"))});
        }
        for (const auto& m : j.at("modified")) {
            ModifiedElement me{kind(m.at("kind")), ElementId(m.at("id").get<std::string>()), {}, std::nullopt};
            if (m.contains("previous_kind") && !m["previous_kind"].is_null()) {
                me.previous_kind = kind(m["previous_kind"]);
            }
            for (const auto& d : m.at("deltas")) {
                me.deltas.push_back({d.at("field").get<std::string>(), d.at("before"), d.at("after")});
            }
            cs.modified.push_back(std::move(me));
        }
        for (const auto& r : j.at("removed")) {
            cs.removed.push_back({kind(r.at("kind")), ElementId(r.at("id").get<std::string>())});
        }
        for (const auto& t : j.value("trace_links_added", json::array())) {
            cs.trace_links_added.push_back(trace_link_from_json(t));
        }
        for (const auto& t : j.value("trace_links_removed", json::array())) {
            cs.trace_links_removed.push_back(trace_link_from_json(t));
        }
        return cs;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("change set: ") + e.what());
    }
}

std::string format_change_set(const ChangeSet& changes) {
    std::ostringstream os;
    for (const auto& a : changes.added) {
        os << "+ " << kind_name(a.kind) << ' ' << a.id.str() << '\n';
    }
    for (const auto& m : changes.modified) {
        if (m.previous_kind) {
            os << "~ " << kind_name(m.kind) << ' ' << m.id.str() << " (was " << kind_name(*m.previous_kind)
               << ")\n";
            continue;
        }
        for (const auto& d : m.deltas) {
            os << "~ " << kind_name(m.kind) << ' ' << m.id.str() << ' ' << d.field << ": " << d.before.dump()
               << " -> " << d.after.dump() << '\n';
        }
    }
    for (const auto& r : changes.removed) {
        os << "- " << kind_name(r.kind) << ' ' << r.id.str() << '\n';
    }
    for (const auto& t : changes.trace_links_added) {
        os << "+ trace " << to_string(t.source_tool) << ' ' << t.external_id << " -> " << t.element.str()
           << " @" << t.revision << '\n';
    }
    for (const auto& t : changes.trace_links_removed) {
        os << "- trace " << to_string(t.source_tool) << ' ' << t.external_id << " -> " << t.element.str()
           << " @" << t.revision << '\n';
    }
    return os.str();
}

}  // namespace rmm::adapters
