#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rmm/adapters/common.hpp"

namespace rmm::adapters {

/// Concept endpoints under a MONARC project path, in push (dependency) order.
enum class MonarcConcept { Assets, Threats, Vulnerabilities, Risks };

std::string_view to_string(MonarcConcept c);

struct PushResponse {
    std::string external_id;
    bool created = false;
};

/// Create-or-update access to the concept endpoints.
/// Implementations are used from one thread at a time.
class MonarcClient {
public:
    virtual ~MonarcClient() = default;

    /// Creates when `external_id` is empty, updates otherwise. `body["id"]` holds the
    /// canonical element id and `body["source_revision"]` the model revision.
    /// Throws TransportError (after the client's own retries) or ConflictError.
    virtual PushResponse create_or_update(MonarcConcept endpoint,
                                          const std::optional<std::string>& external_id,
                                          const json& body) = 0;
};

/// In-memory stand-in for a MONARC server, optionally persisted to a JSON file so that
/// successive CLI runs see the same remote state. Conflicts and transport failures can
/// be seeded per (concept, canonical id).
class FakeMonarcClient final : public MonarcClient {
public:
    struct Request {
        MonarcConcept endpoint;
        std::optional<std::string> external_id;
        json body;
    };

    FakeMonarcClient() = default;
    /// Loads state from `state_file` when it exists; `save()` writes it back.
    explicit FakeMonarcClient(std::string state_file);

    PushResponse create_or_update(MonarcConcept endpoint, const std::optional<std::string>& external_id,
                                  const json& body) override;

    void seed_conflict(MonarcConcept endpoint, std::string canonical_id);
    void seed_transport_failure(MonarcConcept endpoint, std::string canonical_id);

    const std::vector<Request>& requests() const noexcept { return requests_; }
    /// Stored records of one concept, keyed by external id.
    const std::map<std::string, json>& records(MonarcConcept endpoint) const;
    void save() const;

private:
    std::optional<std::string> state_file_;
    std::map<MonarcConcept, std::map<std::string, json>> records_;
    std::set<std::pair<MonarcConcept, std::string>> conflicts_;
    std::set<std::pair<MonarcConcept, std::string>> transport_failures_;
    std::vector<Request> requests_;
    long next_id_ = 1;
};

struct HttpClientConfig {
    std::string base_url;  // scheme://host[:port]
    std::string project;   // project (anr) id
    std::string token;
    std::chrono::milliseconds timeout{5000};
    int retries = 2;
};

/// REST client: POST {base}/api/client-anr/{project}/{concept} to create,
/// PUT .../{concept}/{external_id} to update; token sent in the `token` header.
/// 409 maps to ConflictError; connection failures and 5xx are retried, then TransportError.
class HttpMonarcClient final : public MonarcClient {
public:
    explicit HttpMonarcClient(HttpClientConfig config);

    PushResponse create_or_update(MonarcConcept endpoint, const std::optional<std::string>& external_id,
                                  const json& body) override;

private:
    HttpClientConfig config_;
};

struct PushFailure {
    MonarcConcept endpoint;
    ElementId element;
    std::string reason;
    bool conflict = false;  // true: left for manual sync; false: transport failure
};

struct PushReport {
    int created = 0;
    int updated = 0;
    std::vector<PushFailure> failed;
    // Exported links for every successful call, revision 0 until recorded.
    std::vector<TraceLink> links;

    bool transport_failed() const;
};

/// Pushes the MONARC-mapped part of the model in dependency order (assets, threats,
/// vulnerabilities, risks). Updates go to the external id of the latest link from a
/// previous push. Throws ValidationGateError on a model with Error findings.
PushReport monarc_push(MonarcClient& client, const RiskModel& model);

json to_json(const PushReport& report);

}  // namespace rmm::adapters
