#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "meshdet/fft.hpp"
#include "meshdet/ring_buffer.hpp"
#include "meshdet/signal_model.hpp"

namespace meshdet {

enum class DetectorKind { Tsnfa, Lipski, CaCfar, OsCfar, Cusum };

std::string_view to_string(DetectorKind kind);
// Accepts the CLI spellings: tsnfa, lipski, ca, os, cusum (and ca_cfar, os_cfar).
std::optional<DetectorKind> parse_detector_kind(std::string_view name);

// Strength is normalized so the canonical threshold sits at 1.0, and
// trigger == (strength >= 1.0) for every detector.
struct DetectorOutput {
    bool trigger = false;
    double strength = 0.0;
    DetectorKind detector = DetectorKind::Tsnfa;
    std::int64_t frame_index = 0;
    int node_id = 0;
};

// Per-frame quantities shared by all detectors, computed once per frame.
struct FrameFeatures {
    const Frame* frame = nullptr;
    Magnitudes raw{};   // unwindowed |X_k|
    Magnitudes hann{};  // Hann-windowed |X_k|
    double energy = 0.0;

    static FrameFeatures compute(const Frame& frame);
};

// ---------------------------------------------------------------- TSNFA

struct TsnfaParams {
    std::size_t stage1_depth = 3;
    std::size_t stage2_depth = 64;
    double zeta = 6.0;
    std::size_t bin_lo = 1;
    std::size_t bin_hi = 6;
};

struct TsnfaState {
    TsnfaParams params;
    std::vector<RingBuffer> stage1;  // one per bin
    std::vector<RingBuffer> stage2;
    std::vector<double> noise_floor;  // last N_hat per bin, 0 until stage 2 is full

    TsnfaState() : TsnfaState(TsnfaParams{}) {}
    explicit TsnfaState(const TsnfaParams& p);
    bool warmed_up() const;
};

DetectorOutput tsnfa_process(TsnfaState& state, const Frame& frame);
DetectorOutput tsnfa_update(TsnfaState& state, const Magnitudes& mags, std::int64_t frame_index,
                            int node_id);

// ---------------------------------------------------------------- Lipski

struct LipskiParams {
    double k = 3.0;
    std::size_t min_adjacent = 3;
    std::int64_t calibration_frames = 100;
    double ema_alpha = 0.01;
    std::size_t bin_lo = 1;
    std::size_t bin_hi = 6;
};

struct LipskiState {
    LipskiParams params;
    std::int64_t frames_seen = 0;
    std::vector<double> mean;      // per bin 0..63; bin 0 unused
    std::vector<double> variance;  // during calibration holds the Welford M2 sum

    LipskiState() : LipskiState(LipskiParams{}) {}
    explicit LipskiState(const LipskiParams& p);
    bool calibrated() const { return frames_seen >= params.calibration_frames; }
    double sigma(std::size_t bin) const;
};

DetectorOutput lipski_process(LipskiState& state, const Frame& frame);
// mags must be Hann-windowed magnitudes.
DetectorOutput lipski_update(LipskiState& state, const Magnitudes& mags, std::int64_t frame_index,
                             int node_id);

// ---------------------------------------------------------------- CFAR

// Finn-Johnson cell-averaging multiplier, N (P_fa^(-1/N) - 1).
double cfar_alpha_ca(int n_ref, double p_fa);

inline constexpr double kOsCfarAlpha = 6.09;

enum class CfarVariant { CellAveraging, OrderStatistic };

struct CfarParams {
    CfarVariant variant = CfarVariant::CellAveraging;
    std::size_t n_ref = 32;
    std::size_t guard = 1;
    std::size_t os_rank = 24;  // 1-based, 3N/4
    double alpha = 0.0;

    static CfarParams cell_averaging(std::size_t n_ref = 32, double p_fa = 1e-3);
    static CfarParams order_statistic(std::size_t n_ref = 32, double alpha = kOsCfarAlpha);
};

struct CfarState {
    CfarParams params;
    RingBuffer history;  // last n_ref + guard frame statistics, newest = guard

    CfarState() : CfarState(CfarParams::cell_averaging()) {}
    explicit CfarState(const CfarParams& p);
    bool warmed_up() const { return history.full(); }
    // Noise estimate Z from the reference cells (frames m-33 .. m-2).
    double reference_level() const;
};

DetectorOutput cfar_update(CfarState& state, double frame_statistic, std::int64_t frame_index,
                           int node_id);
DetectorOutput ca_cfar_process(CfarState& state, const Frame& frame);
DetectorOutput os_cfar_process(CfarState& state, const Frame& frame);

// ---------------------------------------------------------------- CUSUM

struct CusumParams {
    std::int64_t calibration_frames = 512;
    double alpha_fa = 1e-5;
    double snr_factor = 3.0;     // mu1 = mu0 + snr_factor * sigma
    double k_end_factor = 2.0;   // K_end = k_end_factor * h
    std::int64_t refractory_frames = 1;

    double threshold() const;  // h = ln(1/alpha_fa)
    double k_end() const { return k_end_factor * threshold(); }
};

struct CusumState {
    CusumParams params;
    std::int64_t frames_seen = 0;
    double cal_mean = 0.0;
    double cal_m2 = 0.0;
    double mu0 = 0.0;
    double sigma2 = 0.0;
    double mu1 = 0.0;
    double score = 0.0;
    std::int64_t refractory_left = 0;

    CusumState() : CusumState(CusumParams{}) {}
    explicit CusumState(const CusumParams& p) : params(p) {}
    bool calibrated() const { return frames_seen >= params.calibration_frames; }
};

// Per-frame log-likelihood-ratio increment.
double cusum_increment(const CusumState& state, double frame_statistic);
DetectorOutput cusum_update(CusumState& state, double frame_statistic, std::int64_t frame_index,
                            int node_id);
DetectorOutput cusum_process(CusumState& state, const Frame& frame);

// ---------------------------------------------------------------- serialization

void to_json(nlohmann::json& j, const RingBuffer& b);
void from_json(const nlohmann::json& j, RingBuffer& b);
void to_json(nlohmann::json& j, const TsnfaState& s);
void from_json(const nlohmann::json& j, TsnfaState& s);
void to_json(nlohmann::json& j, const LipskiState& s);
void from_json(const nlohmann::json& j, LipskiState& s);
void to_json(nlohmann::json& j, const CfarState& s);
void from_json(const nlohmann::json& j, CfarState& s);
void to_json(nlohmann::json& j, const CusumState& s);
void from_json(const nlohmann::json& j, CusumState& s);

// ---------------------------------------------------------------- runtime dispatch

struct DetectorConfig {
    std::string label;  // e.g. "lipski" or "lipski_k5"
    DetectorKind kind = DetectorKind::Tsnfa;
    TsnfaParams tsnfa;
    LipskiParams lipski;
    CfarParams cfar = CfarParams::cell_averaging();
    CusumParams cusum;
};

DetectorConfig default_detector_config(DetectorKind kind);

class Detector {
public:
    virtual ~Detector() = default;
    virtual DetectorOutput process(const FrameFeatures& features) = 0;
    virtual nlohmann::json save_state() const = 0;
    virtual void load_state(const nlohmann::json& j) = 0;
    virtual std::unique_ptr<Detector> clone() const = 0;
    virtual DetectorKind kind() const = 0;
};

std::unique_ptr<Detector> make_detector(const DetectorConfig& config);

}  // namespace meshdet
