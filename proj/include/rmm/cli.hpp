#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rmm::cli {

enum ExitCode : int {
    kOk = 0,
    kValidationErrors = 1,
    kUsage = 2,
    kIoError = 3,
};

enum class OutputFormat { Human, Structured };

/// Runs one subcommand. `args` excludes the program name. Data goes to `out`,
/// diagnostics to `err`.
///
/// Environment: RMM_MONARC_URL (http[s]://host[:port], or file://PATH for a file-backed
/// fake server), RMM_MONARC_TOKEN, RMM_MONARC_PROJECT, RMM_CONFIG (config file path,
/// default ./rmm.ini).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rmm::cli
