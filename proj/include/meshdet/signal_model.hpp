#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "meshdet/rng.hpp"

namespace meshdet {

inline constexpr std::size_t kFrameLen = 128;
inline constexpr double kSampleRateHz = 100.0;
inline constexpr double kFramePeriodS = static_cast<double>(kFrameLen) / kSampleRateHz;  // 1.28 s
inline constexpr std::int64_t kWarmupFrames = 512;  // longest calibration (CUSUM)
inline constexpr double kWarmupS = kWarmupFrames * kFramePeriodS;

// Which noise power the event SNR is referenced to.
enum class SnrReference {
    AtOnset,  // drifting noise power P(t) at the event onset
    Nominal,  // base power P0
};

// Whether the SNR ratio fixes the event RMS or its peak amplitude.
enum class AmplitudeMode { Rms, Peak };

struct SignalParams {
    double base_noise_power = 1.0;  // P0, variance units
    double drift_excursion_db = 6.0;
    double drift_period_s = 3600.0;

    double mains_freq_hz = 50.0;
    double mains_amp_factor = 0.3;  // x sqrt(P(t))

    // Intermittent mains surges: the 50 Hz line component jumps to a
    // log-uniform multiple of sqrt(P(t)) for a few seconds.
    double surge_rate_per_hr = 40.0;
    double surge_amp_min = 4.0;
    double surge_amp_max = 14.0;
    double surge_dur_min_s = 0.1;
    double surge_dur_max_s = 0.6;

    double burst_rate_per_hr = 60.0;
    double burst_freq_lo_hz = 800.0;
    double burst_freq_hi_hz = 2000.0;
    double burst_amp_min = 0.5;  // x sqrt(P(t))
    double burst_amp_max = 2.0;
    double burst_dur_min_s = 0.02;
    double burst_dur_max_s = 0.2;

    double snr_db = 18.0;  // nominal event SNR of the configuration
    double event_rate_per_hr = 1.0;
    double event_band_lo_hz = 1.0;
    double event_band_hi_hz = 5.0;
    double event_duration_s = 5.0;
    double event_decay_tau_s = 2.5;
    double snr_jitter_db = 1.5;
    SnrReference snr_reference = SnrReference::AtOnset;
    AmplitudeMode amplitude_mode = AmplitudeMode::Rms;

    double warmup_s = kWarmupS;

    bool thermal_enabled = true;
    bool drift_enabled = true;
    bool mains_enabled = true;
    bool bursts_enabled = true;
    bool surges_enabled = true;

    // Throws std::invalid_argument on an inconsistent parameter set.
    void validate() const;
};

struct GroundTruthEvent {
    int node_id = 0;
    double onset_s = 0.0;
    double duration_s = 5.0;
    double carrier_hz = 1.0;
    double snr_db = 0.0;
    int event_index = 0;
};

struct DigitalBurst {
    double start_s = 0.0;
    double duration_s = 0.0;
    double carrier_hz = 0.0;
    double amp_factor = 0.0;
    double phase = 0.0;
};

struct Frame {
    int node_id = 0;
    std::int64_t index = 0;
    double start_time_s = 0.0;
    std::array<double, kFrameLen> samples{};
};

// Instantaneous thermal noise power P(t).
double drift_power(double t_s, const SignalParams& params);

// Poisson event schedule for one node over [warmup, run_duration].
std::vector<GroundTruthEvent> schedule_events(int node_id, double run_duration_s,
                                              const SignalParams& params, Rng& rng);

std::vector<DigitalBurst> schedule_bursts(double run_duration_s, const SignalParams& params,
                                          Rng& rng);

// Mains surges, as bursts at the mains frequency.
std::vector<DigitalBurst> schedule_surges(double run_duration_s, const SignalParams& params,
                                          Rng& rng);

// RMS of exp(-t/tau) sin(2 pi f t) over [0, duration], unit amplitude.
double damped_sine_rms(double carrier_hz, double tau_s, double duration_s);

// Event amplitude A such that the SNR ratio 10^(snr/20) holds against noise_std.
double event_amplitude(const GroundTruthEvent& event, double noise_std, const SignalParams& params);

// Event waveform at time t_rel_s after onset; zero outside [0, duration].
double event_waveform(double t_rel_s, const GroundTruthEvent& event, double noise_std,
                      const SignalParams& params);

// Noise std an event is referenced to, per params.snr_reference.
double event_reference_std(const GroundTruthEvent& event, const SignalParams& params);

// Everything needed to synthesize any frame of one node independently.
class NodeSignal {
public:
    NodeSignal(int node_id, double run_duration_s, const SignalParams& params,
               std::uint64_t node_seed);
    NodeSignal(int node_id, const SignalParams& params, std::uint64_t node_seed,
               std::vector<GroundTruthEvent> events, std::vector<DigitalBurst> bursts,
               double mains_phase);

    Frame frame(std::int64_t m) const;
    void fill_frame(std::int64_t m, Frame& out) const;

    int node_id() const { return node_id_; }
    const std::vector<GroundTruthEvent>& events() const { return events_; }
    const std::vector<DigitalBurst>& bursts() const { return bursts_; }
    const std::vector<DigitalBurst>& surges() const { return surges_; }
    double mains_phase() const { return mains_phase_; }

private:
    static void add_tones(const std::vector<DigitalBurst>& bursts, double max_duration_s,
                          std::int64_t first_sample, const std::array<double, kFrameLen>& sqrt_p,
                          Frame& out);

    struct ActiveEvent {
        GroundTruthEvent event;
        double amplitude;
    };

    int node_id_;
    SignalParams params_;
    std::uint64_t noise_seed_;
    std::vector<GroundTruthEvent> events_;
    std::vector<ActiveEvent> active_;
    std::vector<DigitalBurst> bursts_;
    std::vector<DigitalBurst> surges_;
    double mains_phase_;
};

// Frame m of a node; see NodeSignal.
Frame synth_frame(const NodeSignal& node, std::int64_t m);

// Sum of squared samples, the broadband frame statistic X(m).
double frame_energy(std::span<const double> samples);

}  // namespace meshdet
