#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "rmm/canonical.hpp"

namespace rmm::testing {

inline std::string fixture_path(const std::string& name) { return std::string(RMM_FIXTURE_DIR) + "/" + name; }

inline std::string fixture_text(const std::string& name) { return read_file(fixture_path(name)); }

inline RiskModel water_model() { return load_model(fixture_text("water_treatment.riskmodel.json")); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("rmm-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace rmm::testing
