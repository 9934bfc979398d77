#include "rmm/adapters/monarc_client.hpp"

#include <filesystem>
#include <thread>

#include <httplib.h>

#include "rmm/adapters/monarc.hpp"

namespace rmm::adapters {

std::string_view to_string(MonarcConcept c) {
    switch (c) {
        case MonarcConcept::Assets: return "assets";
        case MonarcConcept::Threats: return "threats";
        case MonarcConcept::Vulnerabilities: return "vulnerabilities";
        case MonarcConcept::Risks: return "risks";
    }
    return "?";
}

namespace {

std::optional<MonarcConcept> concept_from(std::string_view s) {
    for (auto c : {MonarcConcept::Assets, MonarcConcept::Threats, MonarcConcept::Vulnerabilities,
                   MonarcConcept::Risks}) {
        if (to_string(c) == s) {
            return c;
        }
    }
    return std::nullopt;
}

std::string canonical_id(const json& body) {
    auto it = body.find("id");
    return it != body.end() && it->is_string() ? it->get<std::string>() : std::string();
}

}  // namespace

// ---------------------------------------------------------------------------
// FakeMonarcClient
// ---------------------------------------------------------------------------

FakeMonarcClient::FakeMonarcClient(std::string state_file) : state_file_(std::move(state_file)) {
    if (!std::filesystem::exists(*state_file_)) {
        return;
    }
    const json state = parse_json(read_file(*state_file_));
    next_id_ = state.value("next_id", 1L);
    if (auto recs = state.find("records"); recs != state.end() && recs->is_object()) {
        for (const auto& [name, by_ext] : recs->items()) {
            auto c = concept_from(name);
            if (!c) {
                throw SchemaError("fake MONARC state: unknown concept '" + name + "'");
            }
            for (const auto& [ext, body] : by_ext.items()) {
                records_[*c][ext] = body;
            }
        }
    }
    auto read_seeds = [&](const char* key, auto& target) {
        if (auto seeds = state.find(key); seeds != state.end() && seeds->is_array()) {
            for (const auto& s : *seeds) {
                auto c = concept_from(s.value("endpoint", ""));
                if (!c) {
                    throw SchemaError(std::string("fake MONARC state: bad ") + key + " entry");
                }
                target.emplace(*c, s.value("id", ""));
            }
        }
    };
    read_seeds("conflicts", conflicts_);
    read_seeds("transport_failures", transport_failures_);
}

PushResponse FakeMonarcClient::create_or_update(MonarcConcept endpoint,
                                                const std::optional<std::string>& external_id,
                                                const json& body) {
    requests_.push_back(Request{endpoint, external_id, body});
    const std::string id = canonical_id(body);
    const std::string where = "fake:" + std::string(to_string(endpoint));
    if (transport_failures_.contains({endpoint, id})) {
        throw TransportError("simulated connection failure for '" + id + "'", where);
    }
    if (conflicts_.contains({endpoint, id})) {
        throw ConflictError("remote " + std::string(to_string(endpoint)) + " record for '" + id +
                            "' was modified after our last sync");
    }
    auto& store = records_[endpoint];
    if (external_id) {
        auto it = store.find(*external_id);
        if (it != store.end() &&
            it->second.value("source_revision", 0UL) > body.value("source_revision", 0UL)) {
            throw ConflictError("remote record '" + *external_id + "' has a newer revision");
        }
        store[*external_id] = body;
        return {*external_id, false};
    }
    std::string ext = std::string(to_string(endpoint)) + "-" + std::to_string(next_id_++);
    store[ext] = body;
    return {ext, true};
}

void FakeMonarcClient::seed_conflict(MonarcConcept endpoint, std::string canonical_id) {
    conflicts_.emplace(endpoint, std::move(canonical_id));
}

void FakeMonarcClient::seed_transport_failure(MonarcConcept endpoint, std::string canonical_id) {
    transport_failures_.emplace(endpoint, std::move(canonical_id));
}

const std::map<std::string, json>& FakeMonarcClient::records(MonarcConcept endpoint) const {
    static const std::map<std::string, json> none;
    auto it = records_.find(endpoint);
    return it == records_.end() ? none : it->second;
}

void FakeMonarcClient::save() const {
    if (!state_file_) {
        return;
    }
    json recs = json::object();
    for (const auto& [c, by_ext] : records_) {
        json m = json::object();
        for (const auto& [ext, body] : by_ext) {
            m[ext] = body;
        }
        recs[std::string(to_string(c))] = std::move(m);
    }
    auto seeds = [](const auto& set) {
        json a = json::array();
        for (const auto& [c, id] : set) {
            a.push_back({{"endpoint", to_string(c)}, {"id", id}});
        }
        return a;
    };
    json state = {{"next_id", next_id_},
                  {"records", std::move(recs)},
                  {"conflicts", seeds(conflicts_)},
                  {"transport_failures", seeds(transport_failures_)}};
    write_file(*state_file_, state.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// HttpMonarcClient
// ---------------------------------------------------------------------------

HttpMonarcClient::HttpMonarcClient(HttpClientConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw Error("MONARC client: empty base URL");
    }
}

PushResponse HttpMonarcClient::create_or_update(MonarcConcept endpoint,
                                                const std::optional<std::string>& external_id,
                                                const json& body) {
    std::string path = "/api/client-anr/" + config_.project + "/" + std::string(to_string(endpoint));
    if (external_id) {
        path += "/" + *external_id;
    }
    const std::string where = config_.base_url + path;

    httplib::Client http(config_.base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    http.set_connection_timeout(secs.count(), usecs.count());
    http.set_read_timeout(secs.count(), usecs.count());
    http.set_write_timeout(secs.count(), usecs.count());
    const httplib::Headers headers{{"token", config_.token}, {"Accept", "application/json"}};
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        }
        auto res = external_id ? http.Put(path, headers, payload, "application/json")
                               : http.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 409) {
            throw ConflictError("remote " + std::string(to_string(endpoint)) + " record for '" +
                                canonical_id(body) + "' is newer: " + res->body);
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw TransportError("request rejected with status " + std::to_string(res->status) +
                                     " for '" + canonical_id(body) + "'",
                                 where);
        }
        std::string ext = external_id.value_or("");
        if (!res->body.empty()) {
            try {
                const json reply = json::parse(res->body);
                if (auto it = reply.find("id"); it != reply.end()) {
                    ext = it->is_string() ? it->get<std::string>() : it->dump();
                }
            } catch (const json::parse_error&) {
                throw TransportError("unreadable response body", where);
            }
        }
        if (ext.empty()) {
            throw TransportError("response carries no id", where);
        }
        return {ext, !external_id};
    }
    throw TransportError(last_error + " after " + std::to_string(config_.retries + 1) +
                             " attempt(s) for '" + canonical_id(body) + "'",
                         where);
}

// ---------------------------------------------------------------------------
// monarc_push
// ---------------------------------------------------------------------------

bool PushReport::transport_failed() const {
    return std::any_of(failed.begin(), failed.end(), [](const PushFailure& f) { return !f.conflict; });
}

namespace {

std::optional<std::string> previous_external_id(const RiskModel& model, MonarcConcept endpoint,
                                                const ElementId& id) {
    const TraceLink* best = nullptr;
    for (const auto& t : model.trace_links) {
        if (t.source_tool != Tool::Monarc || t.direction != TraceDirection::Exported || t.element != id) {
            continue;
        }
        auto ep = t.metadata.find("endpoint");
        if (ep == t.metadata.end() || ep->second != to_string(endpoint)) {
            continue;
        }
        if (!best || t.revision >= best->revision) {
            best = &t;
        }
    }
    return best ? std::optional<std::string>(best->external_id) : std::nullopt;
}

class Pusher {
public:
    Pusher(MonarcClient& client, const RiskModel& model) : client_(client), model_(model) {}

    PushReport run() {
        const json doc = export_monarc(model_).document;
        push_assets(doc);
        push_threats_and_vulnerabilities(doc);
        push_risks(doc);
        return std::move(report_);
    }

private:
    std::optional<std::string> push(MonarcConcept endpoint, const ElementId& id, json body) {
        body["id"] = id.str();
        body["source_revision"] = model_.revision;
        const auto known = previous_external_id(model_, endpoint, id);
        try {
            PushResponse r = client_.create_or_update(endpoint, known, body);
            (r.created ? report_.created : report_.updated) += 1;
            TraceLink link = make_link(Tool::Monarc, r.external_id, id, TraceDirection::Exported);
            link.metadata["endpoint"] = std::string(to_string(endpoint));
            report_.links.push_back(std::move(link));
            external_[{endpoint, id}] = r.external_id;
            return r.external_id;
        } catch (const ConflictError& e) {
            report_.failed.push_back(PushFailure{endpoint, id, e.what(), true});
        } catch (const TransportError& e) {
            report_.failed.push_back(PushFailure{endpoint, id, e.what(), false});
        }
        return std::nullopt;
    }

    json external_ref(MonarcConcept endpoint, const std::string& id) const {
        auto it = external_.find({endpoint, ElementId(id)});
        return it == external_.end() ? json(nullptr) : json(it->second);
    }

    void push_assets(const json& doc) {
        std::map<ElementId, std::vector<std::string>> parents;
        for (const auto& top : doc["assets"]) {
            const ElementId id(top["id"].get<std::string>());
            json body = {{"label", top["name"]},
                         {"type", "primary"},
                         {"kind", top["kind"]},
                         {"needs", top["needs"]}};
            if (auto ext = push(MonarcConcept::Assets, id, std::move(body))) {
                for (const auto& child : top["children"]) {
                    parents[ElementId(child["id"].get<std::string>())].push_back(*ext);
                }
            }
        }
        std::set<ElementId> done;
        for (const auto& top : doc["assets"]) {
            for (const auto& child : top["children"]) {
                const ElementId id(child["id"].get<std::string>());
                if (!done.insert(id).second) {
                    continue;
                }
                json body = {{"label", child["name"]},
                             {"type", "secondary"},
                             {"category", child["category"]},
                             {"parents", parents[id]}};
                push(MonarcConcept::Assets, id, std::move(body));
            }
        }
    }

    void push_threats_and_vulnerabilities(const json& doc) {
        std::map<ElementId, json> threats;
        std::map<ElementId, json> vulns;
        for (const auto& row : doc["risks"]) {
            const ElementId att(row["attacker"].get<std::string>());
            const auto& a = model_.attackers.at(att);
            threats.emplace(att, json{{"label", a.name}, {"likelihood", a.capability.value()}});
            const ElementId v(row["vulnerability_id"].get<std::string>());
            vulns.emplace(v, json{{"label", row["vulnerability"]},
                                  {"cves", row["cves"]},
                                  {"qualification", row["qualification"]}});
        }
        for (auto& [id, body] : threats) {
            push(MonarcConcept::Threats, id, std::move(body));
        }
        for (auto& [id, body] : vulns) {
            push(MonarcConcept::Vulnerabilities, id, std::move(body));
        }
    }

    void push_risks(const json& doc) {
        for (const auto& row : doc["risks"]) {
            json body = row;
            body.erase("id");
            body["asset_ref"] = external_ref(MonarcConcept::Assets, row["asset"].get<std::string>());
            body["threat_ref"] = external_ref(MonarcConcept::Threats, row["attacker"].get<std::string>());
            body["vulnerability_ref"] =
                external_ref(MonarcConcept::Vulnerabilities, row["vulnerability_id"].get<std::string>());
            push(MonarcConcept::Risks, ElementId(row["id"].get<std::string>()), std::move(body));
        }
    }

    MonarcClient& client_;
    const RiskModel& model_;
    PushReport report_;
    std::map<std::pair<MonarcConcept, ElementId>, std::string> external_;
};

}  // namespace

PushReport monarc_push(MonarcClient& client, const RiskModel& model) {
    return Pusher(client, model).run();
}

json to_json(const PushReport& report) {
    json failed = json::array();
    for (const auto& f : report.failed) {
        failed.push_back({{"endpoint", to_string(f.endpoint)},
                          {"element", f.element.str()},
                          {"reason", f.reason},
                          {"kind", f.conflict ? "conflict" : "transport"}});
    }
    return {{"created", report.created},
            {"updated", report.updated},
            {"failed", std::move(failed)},
            {"failed_count", report.failed.size()}};
}

}  // namespace rmm::adapters
