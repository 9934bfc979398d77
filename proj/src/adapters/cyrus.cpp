#include "rmm/adapters/cyrus.hpp"

#include <optional>
#include <sstream>

namespace rmm::adapters {

const std::vector<TableSchema>& cyrus_tables() {
    static const std::vector<TableSchema> tables{
        {"component", {"id", "name", "category", "zone"}},
        {"interface", {"id", "name", "zone_a", "zone_b", "channel"}},
        {"vulnerability", {"id", "name", "cves", "qualification", "affects"}},
        {"attack_path", {"id", "dreaded_event", "steps"}},
        {"test_suite", {"id", "name", "attack_path", "risk"}},
    };
    return tables;
}

std::string RelationalExport::text() const {
    std::string out;
    for (const auto& s : statements) {
        out += s;
        out += '\n';
    }
    return out;
}

std::string sql_quote(std::string_view text) {
    std::string out = "'";
    for (char c : text) {
        if (c == '\'') {
            out += "''";
        } else if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
            out += ' ';
        } else {
            out += c;
        }
    }
    out += '\'';
    return out;
}

namespace {

// A column value already rendered as SQL.
using Value = std::string;

Value text(std::string_view s) { return sql_quote(s); }
Value number(int n) { return std::to_string(n); }
Value nullable(const std::optional<ElementId>& id) { return id ? sql_quote(id->str()) : "NULL"; }

template <typename Range, typename Fn>
std::string join(const Range& items, std::string_view sep, Fn&& fn) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) {
            out += sep;
        }
        out += fn(item);
    }
    return out;
}

std::string upsert(const TableSchema& table, const std::vector<Value>& values) {
    std::ostringstream os;
    os << "INSERT INTO " << table.name << " (" << join(table.columns, ", ", [](auto& c) { return c; })
       << ") VALUES (" << join(values, ", ", [](auto& v) { return v; }) << ") ON CONFLICT ("
       << table.columns.front() << ") DO UPDATE SET ";
    for (std::size_t i = 1; i < table.columns.size(); ++i) {
        if (i > 1) {
            os << ", ";
        }
        os << table.columns[i] << " = excluded." << table.columns[i];
    }
    os << ';';
    return os.str();
}

class Exporter {
public:
    explicit Exporter(const RiskModel& model) : model_(model) {}

    RelationalExport run() {
        const auto& t = cyrus_tables();
        for (const auto& [id, sa] : model_.support_assets) {
            emit(t[0], id, {text(id.str()), text(sa.name), text(to_string(sa.category)), nullable(sa.zone)});
        }
        for (const auto& [id, c] : model_.conduits) {
            emit(t[1], id,
                 {text(id.str()), text(c.name), text(c.endpoints.first.str()),
                  text(c.endpoints.second.str()), text(c.channel)});
        }
        for (const auto& [id, v] : model_.vulnerabilities) {
            emit(t[2], id,
                 {text(id.str()), text(v.name), text(join(v.cve_ids, ",", [](auto& s) { return s; })),
                  number(v.qualification.value()),
                  text(join(v.affects, ",", [](auto& a) { return a.str(); }))});
        }
        for (const auto& [id, s] : model_.attack_scenarios) {
            auto step = [](const AttackStep& st) { return st.asset.str() + ":" + st.vulnerability.str(); };
            emit(t[3], id, {text(id.str()), text(s.realizes.str()), text(join(s.steps, ">", step))});
        }
        for (const auto& [id, r] : model_.risks) {
            if (r.strategy != TreatmentStrategy::Mitigate) {
                continue;
            }
            emit(t[4], id, {text(id.str()), text(id.str()), text(r.scenario.str()), text(id.str())});
        }
        for (const auto& table : t) {
            out_.tables.push_back(table.name);
        }
        return std::move(out_);
    }

private:
    void emit(const TableSchema& table, const ElementId& id, const std::vector<Value>& values) {
        out_.statements.push_back(upsert(table, values));
        out_.links.push_back(make_link(Tool::Cyrus, table.name + ":" + id.str(), id, TraceDirection::Exported));
    }

    const RiskModel& model_;
    RelationalExport out_;
};

}  // namespace

RelationalExport export_cyrus(const RiskModel& model) {
    require_no_errors(model, "export to relational test framework");
    return Exporter(model).run();
}

std::vector<TestResult> parse_test_results(const json& rows) {
    if (!rows.is_array()) {
        throw SchemaError("test results: expected a JSON array");
    }
    std::vector<TestResult> out;
    std::size_t index = 0;
    for (const auto& row : rows) {
        auto field = [&](const char* key) {
            auto it = row.find(key);
            if (!row.is_object() || it == row.end() || !it->is_string()) {
                throw SchemaError("test results: row " + std::to_string(index) + " lacks string field '" +
                                  key + "'");
            }
            return it->get<std::string>();
        };
        TestResult r{field("test_suite"), field("session"), field("verdict"), field("timestamp")};
        if (r.verdict != "pass" && r.verdict != "fail") {
            throw SchemaError("test results: row " + std::to_string(index) + " has verdict '" + r.verdict +
                              "' (expected pass or fail)");
        }
        out.push_back(std::move(r));
        ++index;
    }
    return out;
}

ResultsImport import_cyrus_results(const std::vector<TestResult>& rows, const RiskModel& model) {
    ResultsImport out{model, {}, {}};
    std::map<std::string, ElementId> suites;
    for (const auto& t : model.trace_links) {
        if (t.source_tool == Tool::Cyrus && t.direction == TraceDirection::Exported &&
            t.external_id.rfind("test_suite:", 0) == 0 && model.risks.contains(t.element)) {
            suites.emplace(t.external_id.substr(11), t.element);
        }
    }
    // One link per (suite, session); a repeated session keeps its last verdict.
    std::map<std::string, TraceLink> links;
    for (const auto& row : rows) {
        auto it = suites.find(row.test_suite);
        if (it == suites.end()) {
            out.unknown.push_back({row.test_suite, row.session,
                                   "unknown test suite '" + row.test_suite + "' (session " + row.session + ")"});
            continue;
        }
        const ElementId& risk = it->second;
        const std::string ext = "test_suite:" + row.test_suite + "@" + row.session;
        TraceLink link = make_link(Tool::Cyrus, ext, risk, TraceDirection::Imported);
        link.metadata = {{"session", row.session}, {"verdict", row.verdict}, {"timestamp", row.timestamp}};
        links.insert_or_assign(ext, std::move(link));
    }
    for (const auto& [ext, link] : links) {
        if (link.metadata.at("verdict") != "fail") {
            continue;
        }
        std::vector<ElementId> controls;
        for (const auto& [cid, c] : model.controls) {
            if (c.mitigates.contains(link.element)) {
                controls.push_back(cid);
            }
        }
        std::string listed = controls.empty() ? "none" : join(controls, ", ", [](auto& c) { return c.str(); });
        out.findings.push_back(make_finding("W-CONTROL-UNVERIFIED", link.element,
                                            "session " + link.metadata.at("session") +
                                                " failed; controls not verified: " + listed));
    }
    if (!links.empty()) {
        std::vector<TraceLink> stamped;
        for (auto& [ext, link] : links) {
            stamped.push_back(std::move(link));
        }
        out.model = record_links(std::move(out.model), stamped);
    }
    out.findings = sorted(std::move(out.findings));
    out.findings.erase(std::unique(out.findings.begin(), out.findings.end()), out.findings.end());
    return out;
}

}  // namespace rmm::adapters
