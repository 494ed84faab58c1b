#include "meshdet/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace meshdet {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + ": not a number: '" + v + "'");
    }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
    std::int64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config: " + key + ": not an integer: '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config: " + key + ": not an unsigned integer: '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config: " + key + ": not a boolean: '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string fmt(double d) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, r.ptr);
}

std::string join(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
    return out;
}

// Numeric fields reachable as signal.<name> / mac.<name>.
struct DoubleField {
    const char* name;
    std::function<double&(RunConfig&)> ref;
};

const std::vector<DoubleField>& double_fields() {
    static const std::vector<DoubleField> fields = {
        {"signal.base_noise_power", [](RunConfig& c) -> double& { return c.signal.base_noise_power; }},
        {"signal.drift_excursion_db", [](RunConfig& c) -> double& { return c.signal.drift_excursion_db; }},
        {"signal.drift_period_s", [](RunConfig& c) -> double& { return c.signal.drift_period_s; }},
        {"signal.mains_freq_hz", [](RunConfig& c) -> double& { return c.signal.mains_freq_hz; }},
        {"signal.mains_amp_factor", [](RunConfig& c) -> double& { return c.signal.mains_amp_factor; }},
        {"signal.surge_rate_per_hr", [](RunConfig& c) -> double& { return c.signal.surge_rate_per_hr; }},
        {"signal.surge_amp_min", [](RunConfig& c) -> double& { return c.signal.surge_amp_min; }},
        {"signal.surge_amp_max", [](RunConfig& c) -> double& { return c.signal.surge_amp_max; }},
        {"signal.surge_dur_min_s", [](RunConfig& c) -> double& { return c.signal.surge_dur_min_s; }},
        {"signal.surge_dur_max_s", [](RunConfig& c) -> double& { return c.signal.surge_dur_max_s; }},
        {"signal.burst_rate_per_hr", [](RunConfig& c) -> double& { return c.signal.burst_rate_per_hr; }},
        {"signal.burst_freq_lo_hz", [](RunConfig& c) -> double& { return c.signal.burst_freq_lo_hz; }},
        {"signal.burst_freq_hi_hz", [](RunConfig& c) -> double& { return c.signal.burst_freq_hi_hz; }},
        {"signal.burst_amp_min", [](RunConfig& c) -> double& { return c.signal.burst_amp_min; }},
        {"signal.burst_amp_max", [](RunConfig& c) -> double& { return c.signal.burst_amp_max; }},
        {"signal.burst_dur_min_s", [](RunConfig& c) -> double& { return c.signal.burst_dur_min_s; }},
        {"signal.burst_dur_max_s", [](RunConfig& c) -> double& { return c.signal.burst_dur_max_s; }},
        {"signal.event_rate_per_hr", [](RunConfig& c) -> double& { return c.signal.event_rate_per_hr; }},
        {"signal.event_band_lo_hz", [](RunConfig& c) -> double& { return c.signal.event_band_lo_hz; }},
        {"signal.event_band_hi_hz", [](RunConfig& c) -> double& { return c.signal.event_band_hi_hz; }},
        {"signal.event_duration_s", [](RunConfig& c) -> double& { return c.signal.event_duration_s; }},
        {"signal.event_decay_tau_s", [](RunConfig& c) -> double& { return c.signal.event_decay_tau_s; }},
        {"signal.snr_jitter_db", [](RunConfig& c) -> double& { return c.signal.snr_jitter_db; }},
        {"signal.warmup_s", [](RunConfig& c) -> double& { return c.signal.warmup_s; }},
        {"mac.slot_s", [](RunConfig& c) -> double& { return c.mac.slot_s; }},
        {"mac.phy_bitrate_bps", [](RunConfig& c) -> double& { return c.mac.phy_bitrate_bps; }},
        {"mac.max_collision_prob", [](RunConfig& c) -> double& { return c.mac.max_collision_prob; }},
        {"radio_range_m", [](RunConfig& c) -> double& { return c.radio_range_m; }},
    };
    return fields;
}

struct IntField {
    const char* name;
    std::function<int&(RunConfig&)> ref;
};

const std::vector<IntField>& int_fields() {
    static const std::vector<IntField> fields = {
        {"mac.cw_min", [](RunConfig& c) -> int& { return c.mac.cw_min; }},
        {"mac.cw_max", [](RunConfig& c) -> int& { return c.mac.cw_max; }},
        {"mac.max_retries", [](RunConfig& c) -> int& { return c.mac.max_retries; }},
        {"mac.payload_bytes", [](RunConfig& c) -> int& { return c.mac.payload_bytes; }},
        {"mac.header_bytes", [](RunConfig& c) -> int& { return c.mac.header_bytes; }},
    };
    return fields;
}

struct BoolField {
    const char* name;
    std::function<bool&(RunConfig&)> ref;
};

const std::vector<BoolField>& bool_fields() {
    static const std::vector<BoolField> fields = {
        {"signal.thermal_enabled", [](RunConfig& c) -> bool& { return c.signal.thermal_enabled; }},
        {"signal.drift_enabled", [](RunConfig& c) -> bool& { return c.signal.drift_enabled; }},
        {"signal.mains_enabled", [](RunConfig& c) -> bool& { return c.signal.mains_enabled; }},
        {"signal.bursts_enabled", [](RunConfig& c) -> bool& { return c.signal.bursts_enabled; }},
        {"signal.surges_enabled", [](RunConfig& c) -> bool& { return c.signal.surges_enabled; }},
        {"roc", [](RunConfig& c) -> bool& { return c.roc_enabled; }},
        {"parallel", [](RunConfig& c) -> bool& { return c.parallel; }},
        {"delivery_log", [](RunConfig& c) -> bool& { return c.delivery_log; }},
    };
    return fields;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& csv) {
    std::vector<int> out;
    for (const auto& s : split(csv, ',')) out.push_back(static_cast<int>(to_int(key, s)));
    return out;
}

}  // namespace

std::string ConfigEntry::name() const {
    std::ostringstream os;
    os << n_nodes << "n_" << snr_db << "dB";
    return os.str();
}

std::vector<DetectorKind> parse_detector_list(const std::string& csv) {
    std::vector<DetectorKind> out;
    for (const auto& s : split(csv, ',')) {
        const auto k = parse_detector_kind(s);
        if (!k) throw ConfigError("unknown detector '" + s + "'");
        if (std::find(out.begin(), out.end(), *k) == out.end()) out.push_back(*k);
    }
    if (out.empty()) throw ConfigError("detector list is empty");
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    for (const auto& s : split(csv, ',')) out.push_back(to_double("list", s));
    return out;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& f : double_fields())
        if (key == f.name) {
            f.ref(cfg) = to_double(key, value);
            return;
        }
    for (const auto& f : int_fields())
        if (key == f.name) {
            f.ref(cfg) = static_cast<int>(to_int(key, value));
            return;
        }
    for (const auto& f : bool_fields())
        if (key == f.name) {
            f.ref(cfg) = to_bool(key, value);
            return;
        }
    if (key == "configurations") {
        // list of NxSNR pairs, e.g. 10x18,10x12
        cfg.configurations.clear();
        for (const auto& item : split(value, ',')) {
            const auto x = item.find('x');
            if (x == std::string::npos) throw ConfigError("config: configurations: expected NxSNR, got '" + item + "'");
            cfg.configurations.push_back({static_cast<int>(to_int(key, trim(item.substr(0, x)))),
                                          to_double(key, trim(item.substr(x + 1)))});
        }
    } else if (key == "nodes") {
        const auto ns = parse_int_list(key, value);
        std::vector<double> snrs;
        for (const auto& c : cfg.configurations)
            if (std::find(snrs.begin(), snrs.end(), c.snr_db) == snrs.end()) snrs.push_back(c.snr_db);
        cfg.configurations.clear();
        for (int n : ns)
            for (double s : snrs) cfg.configurations.push_back({n, s});
    } else if (key == "snr_db") {
        const auto snrs = parse_double_list(value);
        std::vector<int> ns;
        for (const auto& c : cfg.configurations)
            if (std::find(ns.begin(), ns.end(), c.n_nodes) == ns.end()) ns.push_back(c.n_nodes);
        cfg.configurations.clear();
        for (int n : ns)
            for (double s : snrs) cfg.configurations.push_back({n, s});
    } else if (key == "duration_hr") {
        cfg.duration_hr = to_double(key, value);
    } else if (key == "replicates") {
        cfg.replicates = static_cast<int>(to_int(key, value));
    } else if (key == "seed") {
        cfg.master_seed = to_u64(key, value);
    } else if (key == "detectors") {
        cfg.detectors = parse_detector_list(value);
    } else if (key == "k_sweep") {
        cfg.lipski_k_sweep = parse_double_list(value);
    } else if (key == "out") {
        cfg.output_dir = value;
    } else if (key == "signal.snr_reference") {
        if (value == "onset") cfg.signal.snr_reference = SnrReference::AtOnset;
        else if (value == "nominal") cfg.signal.snr_reference = SnrReference::Nominal;
        else throw ConfigError("config: signal.snr_reference must be onset or nominal");
    } else if (key == "mesh.routing") {
        if (value == "flood") cfg.routing = Routing::Flood;
        else if (value == "unicast") cfg.routing = Routing::Unicast;
        else throw ConfigError("config: mesh.routing must be flood or unicast");
    } else if (key == "signal.amplitude_mode") {
        if (value == "rms") cfg.signal.amplitude_mode = AmplitudeMode::Rms;
        else if (value == "peak") cfg.signal.amplitude_mode = AmplitudeMode::Peak;
        else throw ConfigError("config: signal.amplitude_mode must be rms or peak");
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

RunConfig parse_run_config(std::istream& in, RunConfig cfg) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        try {
            apply_setting(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_run_config(in, std::move(base));
}

void RunConfig::validate() const {
    if (configurations.empty()) throw ConfigError("no configurations");
    for (const auto& c : configurations) {
        if (c.n_nodes < 2) throw ConfigError("n_nodes must be at least 2");
        if (!std::isfinite(c.snr_db)) throw ConfigError("snr_db must be finite");
    }
    if (!(duration_hr > 0.0) || duration_hr * 3600.0 <= signal.warmup_s + signal.event_duration_s)
        throw ConfigError("duration_hr must leave time after the warmup window");
    if (replicates < 1) throw ConfigError("replicates must be at least 1");
    if (detectors.empty()) throw ConfigError("no detectors enabled");
    for (double k : lipski_k_sweep)
        if (!(k > 0.0)) throw ConfigError("k_sweep values must be positive");
    if (!(radio_range_m > 0.0)) throw ConfigError("radio_range_m must be positive");
    try {
        signal.validate();
        mac.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void write_run_config(std::ostream& os, const RunConfig& cfg) {
    os << "configurations = ";
    for (std::size_t i = 0; i < cfg.configurations.size(); ++i)
        os << (i ? "," : "") << cfg.configurations[i].n_nodes << 'x' << fmt(cfg.configurations[i].snr_db);
    os << "\nduration_hr = " << fmt(cfg.duration_hr) << "\nreplicates = " << cfg.replicates
       << "\nseed = " << cfg.master_seed << "\ndetectors = ";
    for (std::size_t i = 0; i < cfg.detectors.size(); ++i)
        os << (i ? "," : "") << to_string(cfg.detectors[i]);
    os << "\nk_sweep = " << join(cfg.lipski_k_sweep) << "\nout = " << cfg.output_dir << '\n';
    RunConfig copy = cfg;
    for (const auto& f : double_fields()) os << f.name << " = " << fmt(f.ref(copy)) << '\n';
    for (const auto& f : int_fields()) os << f.name << " = " << f.ref(copy) << '\n';
    for (const auto& f : bool_fields()) os << f.name << " = " << (f.ref(copy) ? "true" : "false") << '\n';
    os << "mesh.routing = " << (cfg.routing == Routing::Flood ? "flood" : "unicast") << '\n';
    os << "signal.snr_reference = "
       << (cfg.signal.snr_reference == SnrReference::AtOnset ? "onset" : "nominal") << '\n'
       << "signal.amplitude_mode = " << (cfg.signal.amplitude_mode == AmplitudeMode::Rms ? "rms" : "peak")
       << '\n';
}

}  // namespace meshdet
