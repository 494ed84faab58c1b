#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshdet/config.hpp"
#include "meshdet/experiment.hpp"

namespace meshdet {

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Writes report.csv, aggregate.csv, the table CSVs, roc.csv (when present),
// topology dumps and config_echo.txt into dir. Returns the files written.
std::vector<std::filesystem::path> emit_outputs(const std::vector<ConfigResult>& results,
                                                const RunConfig& cfg,
                                                const std::filesystem::path& dir);

}  // namespace meshdet
