#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshdet/detectors.hpp"
#include "meshdet/mesh.hpp"
#include "meshdet/signal_model.hpp"

namespace meshdet {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConfigEntry {
    int n_nodes = 10;
    double snr_db = 18.0;
    std::string name() const;  // e.g. "10n_18dB"
};

struct RunConfig {
    std::vector<ConfigEntry> configurations{{10, 18.0}, {10, 12.0}};
    double duration_hr = 24.0;
    int replicates = 5;
    std::uint64_t master_seed = 20240417;
    std::vector<DetectorKind> detectors{DetectorKind::Tsnfa, DetectorKind::Lipski,
                                        DetectorKind::CaCfar, DetectorKind::OsCfar,
                                        DetectorKind::Cusum};
    SignalParams signal;
    MacParams mac;
    Routing routing = Routing::Flood;
    double radio_range_m = 200.0;
    bool roc_enabled = false;
    std::vector<double> lipski_k_sweep{3.0, 5.0, 8.0};
    std::string output_dir = "results";
    bool parallel = true;
    bool delivery_log = false;

    void validate() const;
};

// Applies one key = value assignment. Throws ConfigError on unknown keys or
// malformed values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// Parses the plain-text format: one "key = value" per line, '#' starts a comment.
RunConfig parse_run_config(std::istream& in, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});

// Writes every resolved setting in the same format parse_run_config reads.
void write_run_config(std::ostream& os, const RunConfig& cfg);

std::vector<DetectorKind> parse_detector_list(const std::string& csv);
std::vector<double> parse_double_list(const std::string& csv);

}  // namespace meshdet
