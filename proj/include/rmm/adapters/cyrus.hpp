#pragma once

// Relational test-framework interchange.
//
// Export: one idempotent upsert per line, in foreign-key order
//   component -> interface -> vulnerability -> attack_path -> test_suite
// Results: [{test_suite, session, verdict, timestamp}, ...]

#include <string>
#include <string_view>
#include <vector>

#include "rmm/adapters/common.hpp"

namespace rmm::adapters {

struct TableSchema {
    std::string name;
    std::vector<std::string> columns;  // first column is the primary key "id"
};

/// Covered tables in dependency order.
const std::vector<TableSchema>& cyrus_tables();

struct RelationalExport {
    std::vector<std::string> statements;
    std::vector<std::string> tables;
    std::vector<TraceLink> links;

    /// Statement file text: one statement per line, trailing newline.
    std::string text() const;
};

/// Throws ValidationGateError when the model has Error findings.
RelationalExport export_cyrus(const RiskModel& model);

/// SQL string literal with doubled quotes; control characters become spaces.
std::string sql_quote(std::string_view text);

struct TestResult {
    std::string test_suite;
    std::string session;
    std::string verdict;  // pass | fail
    std::string timestamp;
};

/// Throws SchemaError on malformed rows (missing fields, verdict not pass/fail).
std::vector<TestResult> parse_test_results(const json& rows);

/// A result row whose suite no exported trace link knows.
struct UnknownSuiteError {
    std::string test_suite;
    std::string session;
    std::string message;
};

struct ResultsImport {
    RiskModel model;
    std::vector<Finding> findings;
    std::vector<UnknownSuiteError> unknown;
};

/// Attaches each matched verdict as an Imported link "test_suite:<suite>@<session>"
/// (metadata session/verdict/timestamp)
/// at revision+1. Failing verdicts raise W-CONTROL-UNVERIFIED on the risk. Unmatched rows
/// are collected; when nothing matched the model comes back unchanged.
ResultsImport import_cyrus_results(const std::vector<TestResult>& rows, const RiskModel& model);

}  // namespace rmm::adapters
