#include "meshdet/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace meshdet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("signal params: ") + what);
}

}  // namespace

void SignalParams::validate() const {
    require(base_noise_power > 0.0, "base_noise_power must be positive");
    require(drift_period_s > 0.0, "drift_period_s must be positive");
    require(drift_excursion_db >= 0.0, "drift_excursion_db must be non-negative");
    require(mains_amp_factor >= 0.0, "mains_amp_factor must be non-negative");
    require(burst_rate_per_hr >= 0.0, "burst_rate_per_hr must be non-negative");
    require(burst_freq_lo_hz <= burst_freq_hi_hz, "burst frequency range inverted");
    require(burst_freq_lo_hz > kSampleRateHz / 2.0,
            "burst frequencies must lie above Nyquist (bursts enter by aliasing)");
    require(burst_amp_min >= 0.0 && burst_amp_min <= burst_amp_max, "burst amplitude range");
    require(burst_dur_min_s > 0.0 && burst_dur_min_s <= burst_dur_max_s, "burst duration range");
    require(surge_rate_per_hr >= 0.0, "surge_rate_per_hr must be non-negative");
    require(surge_amp_min > 0.0 && surge_amp_min <= surge_amp_max, "surge amplitude range");
    require(surge_dur_min_s > 0.0 && surge_dur_min_s <= surge_dur_max_s, "surge duration range");
    require(event_rate_per_hr >= 0.0, "event_rate_per_hr must be non-negative");
    require(event_band_lo_hz > 0.0 && event_band_lo_hz <= event_band_hi_hz, "event band");
    require(event_band_hi_hz < kSampleRateHz / 2.0, "event band must lie below Nyquist");
    require(event_duration_s > 0.0, "event_duration_s must be positive");
    require(event_decay_tau_s > 0.0, "event_decay_tau_s must be positive");
    require(snr_jitter_db >= 0.0, "snr_jitter_db must be non-negative");
    require(warmup_s >= 0.0, "warmup_s must be non-negative");
}

double drift_power(double t_s, const SignalParams& params) {
    if (!params.drift_enabled) return params.base_noise_power;
    const double db = params.drift_excursion_db * std::sin(kTwoPi * t_s / params.drift_period_s);
    return params.base_noise_power * std::pow(10.0, db / 10.0);
}

std::vector<GroundTruthEvent> schedule_events(int node_id, double run_duration_s,
                                              const SignalParams& params, Rng& rng) {
    if (run_duration_s <= params.warmup_s)
        throw std::invalid_argument("run duration must exceed the warmup window");
    std::vector<GroundTruthEvent> events;
    if (params.event_rate_per_hr <= 0.0) return events;

    const double rate_per_s = params.event_rate_per_hr / 3600.0;
    double t = params.warmup_s;
    double last_end = -1.0;
    int index = 0;
    while (true) {
        t += rng.exponential(rate_per_s);
        // Marks are drawn for every arrival so dropped arrivals do not shift the stream.
        const double carrier = rng.uniform(params.event_band_lo_hz, params.event_band_hi_hz);
        const double jitter = rng.uniform(-params.snr_jitter_db, params.snr_jitter_db);
        if (t + params.event_duration_s > run_duration_s) break;
        if (t <= last_end) continue;  // would overlap the previous event on this node
        GroundTruthEvent ev;
        ev.node_id = node_id;
        ev.onset_s = t;
        ev.duration_s = params.event_duration_s;
        ev.carrier_hz = carrier;
        ev.snr_db = params.snr_db + jitter;
        ev.event_index = index++;
        events.push_back(ev);
        last_end = t + params.event_duration_s;
    }
    return events;
}

std::vector<DigitalBurst> schedule_bursts(double run_duration_s, const SignalParams& params,
                                          Rng& rng) {
    std::vector<DigitalBurst> bursts;
    if (params.burst_rate_per_hr <= 0.0) return bursts;
    const double rate_per_s = params.burst_rate_per_hr / 3600.0;
    double t = 0.0;
    while (true) {
        t += rng.exponential(rate_per_s);
        if (t >= run_duration_s) break;
        DigitalBurst b;
        b.start_s = t;
        b.duration_s = rng.uniform(params.burst_dur_min_s, params.burst_dur_max_s);
        b.carrier_hz = rng.uniform(params.burst_freq_lo_hz, params.burst_freq_hi_hz);
        b.amp_factor = rng.uniform(params.burst_amp_min, params.burst_amp_max);
        b.phase = rng.uniform(0.0, kTwoPi);
        bursts.push_back(b);
    }
    return bursts;
}

std::vector<DigitalBurst> schedule_surges(double run_duration_s, const SignalParams& params,
                                          Rng& rng) {
    std::vector<DigitalBurst> surges;
    if (params.surge_rate_per_hr <= 0.0) return surges;
    const double rate_per_s = params.surge_rate_per_hr / 3600.0;
    const double log_lo = std::log(params.surge_amp_min);
    const double log_hi = std::log(params.surge_amp_max);
    double t = 0.0;
    while (true) {
        t += rng.exponential(rate_per_s);
        if (t >= run_duration_s) break;
        DigitalBurst s;
        s.start_s = t;
        s.duration_s = rng.uniform(params.surge_dur_min_s, params.surge_dur_max_s);
        s.carrier_hz = params.mains_freq_hz;
        s.amp_factor = std::exp(rng.uniform(log_lo, log_hi));
        s.phase = rng.uniform(0.0, kTwoPi);
        surges.push_back(s);
    }
    return surges;
}

double damped_sine_rms(double carrier_hz, double tau_s, double duration_s) {
    // mean of exp(-a t) (1 - cos(b t)) / 2 over [0, D], a = 2/tau, b = 4 pi f
    const double a = 2.0 / tau_s;
    const double b = 2.0 * kTwoPi * carrier_hz;
    const double d = duration_s;
    const double ead = std::exp(-a * d);
    const double i0 = (1.0 - ead) / a;
    const double ic = (a - ead * (a * std::cos(b * d) - b * std::sin(b * d))) / (a * a + b * b);
    return std::sqrt(0.5 * (i0 - ic) / d);
}

double event_amplitude(const GroundTruthEvent& event, double noise_std,
                       const SignalParams& params) {
    const double ratio = std::pow(10.0, event.snr_db / 20.0);
    if (params.amplitude_mode == AmplitudeMode::Peak) return ratio * noise_std;
    return ratio * noise_std /
           damped_sine_rms(event.carrier_hz, params.event_decay_tau_s, event.duration_s);
}

double event_waveform(double t_rel_s, const GroundTruthEvent& event, double noise_std,
                      const SignalParams& params) {
    if (t_rel_s < 0.0 || t_rel_s > event.duration_s) return 0.0;
    const double amp = event_amplitude(event, noise_std, params);
    return amp * std::exp(-t_rel_s / params.event_decay_tau_s) *
           std::sin(kTwoPi * event.carrier_hz * t_rel_s);
}

double event_reference_std(const GroundTruthEvent& event, const SignalParams& params) {
    const double p = params.snr_reference == SnrReference::AtOnset
                         ? drift_power(event.onset_s, params)
                         : params.base_noise_power;
    return std::sqrt(p);
}

NodeSignal::NodeSignal(int node_id, double run_duration_s, const SignalParams& params,
                       std::uint64_t node_seed)
    : node_id_(node_id), params_(params), noise_seed_(derive_seed(node_seed, {1})) {
    params_.validate();
    Rng event_rng(derive_seed(node_seed, {2}));
    events_ = schedule_events(node_id, run_duration_s, params_, event_rng);
    if (params_.bursts_enabled) {
        Rng burst_rng(derive_seed(node_seed, {3}));
        bursts_ = schedule_bursts(run_duration_s, params_, burst_rng);
    }
    Rng phase_rng(derive_seed(node_seed, {4}));
    mains_phase_ = phase_rng.uniform(0.0, kTwoPi);
    if (params_.surges_enabled) {
        Rng surge_rng(derive_seed(node_seed, {5}));
        surges_ = schedule_surges(run_duration_s, params_, surge_rng);
    }
    for (const auto& ev : events_)
        active_.push_back({ev, event_amplitude(ev, event_reference_std(ev, params_), params_)});
}

NodeSignal::NodeSignal(int node_id, const SignalParams& params, std::uint64_t node_seed,
                       std::vector<GroundTruthEvent> events, std::vector<DigitalBurst> bursts,
                       double mains_phase)
    : node_id_(node_id),
      params_(params),
      noise_seed_(derive_seed(node_seed, {1})),
      events_(std::move(events)),
      bursts_(std::move(bursts)),
      mains_phase_(mains_phase) {
    params_.validate();
    std::sort(bursts_.begin(), bursts_.end(),
              [](const DigitalBurst& a, const DigitalBurst& b) { return a.start_s < b.start_s; });
    for (const auto& ev : events_)
        active_.push_back({ev, event_amplitude(ev, event_reference_std(ev, params_), params_)});
}

// Adds every tone burst overlapping the frame. Bursts live on a 6.4 kHz grid
// and reach the 100 Hz stream by plain decimation; evaluating them at the
// output instants is the same thing. bursts must be sorted by start time.
void NodeSignal::add_tones(const std::vector<DigitalBurst>& bursts, double max_duration_s,
                           std::int64_t first_sample, const std::array<double, kFrameLen>& sqrt_p,
                           Frame& out) {
    if (bursts.empty()) return;
    const double t0 = out.start_time_s;
    const double t1 = t0 + kFramePeriodS;
    auto it = std::lower_bound(bursts.begin(), bursts.end(), t0 - max_duration_s,
                               [](const DigitalBurst& b, double t) { return b.start_s < t; });
    for (; it != bursts.end() && it->start_s < t1; ++it) {
        const double end = it->start_s + it->duration_s;
        if (end <= t0) continue;
        for (std::size_t n = 0; n < kFrameLen; ++n) {
            const double t =
                static_cast<double>(first_sample + static_cast<std::int64_t>(n)) / kSampleRateHz;
            if (t < it->start_s || t >= end) continue;
            const double rel = t - it->start_s;
            out.samples[n] +=
                it->amp_factor * sqrt_p[n] * std::sin(kTwoPi * it->carrier_hz * rel + it->phase);
        }
    }
}

Frame NodeSignal::frame(std::int64_t m) const {
    Frame f;
    fill_frame(m, f);
    return f;
}

void NodeSignal::fill_frame(std::int64_t m, Frame& out) const {
    out.node_id = node_id_;
    out.index = m;
    out.start_time_s = static_cast<double>(m) * kFramePeriodS;

    const std::int64_t first_sample = m * static_cast<std::int64_t>(kFrameLen);
    std::array<double, kFrameLen> sqrt_p;
    for (std::size_t n = 0; n < kFrameLen; ++n) {
        const double t = static_cast<double>(first_sample + static_cast<std::int64_t>(n)) /
                         kSampleRateHz;
        sqrt_p[n] = std::sqrt(drift_power(t, params_));
        out.samples[n] = 0.0;
    }

    if (params_.thermal_enabled) {
        Rng rng(derive_seed(noise_seed_, {static_cast<std::uint64_t>(m)}));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t n = 0; n < kFrameLen; ++n) out.samples[n] += sqrt_p[n] * gauss(rng);
    }

    if (params_.mains_enabled && params_.mains_amp_factor > 0.0) {
        for (std::size_t n = 0; n < kFrameLen; ++n) {
            const auto g = static_cast<double>(first_sample + static_cast<std::int64_t>(n));
            // Reduce to cycles first so the phase stays exact over long runs.
            const double cycles = std::fmod(params_.mains_freq_hz * g / kSampleRateHz, 1.0);
            out.samples[n] +=
                params_.mains_amp_factor * sqrt_p[n] * std::cos(kTwoPi * cycles + mains_phase_);
        }
    }

    const double t0 = out.start_time_s;
    const double t1 = t0 + kFramePeriodS;

    if (params_.bursts_enabled)
        add_tones(bursts_, params_.burst_dur_max_s, first_sample, sqrt_p, out);
    if (params_.surges_enabled)
        add_tones(surges_, params_.surge_dur_max_s, first_sample, sqrt_p, out);

    for (const auto& a : active_) {
        const double onset = a.event.onset_s;
        const double end = onset + a.event.duration_s;
        if (end < t0 || onset >= t1) continue;
        for (std::size_t n = 0; n < kFrameLen; ++n) {
            const double t = static_cast<double>(first_sample + static_cast<std::int64_t>(n)) /
                             kSampleRateHz;
            const double rel = t - onset;
            if (rel < 0.0 || rel > a.event.duration_s) continue;
            out.samples[n] += a.amplitude * std::exp(-rel / params_.event_decay_tau_s) *
                              std::sin(kTwoPi * a.event.carrier_hz * rel);
        }
    }
}

Frame synth_frame(const NodeSignal& node, std::int64_t m) { return node.frame(m); }

double frame_energy(std::span<const double> samples) {
    double acc = 0.0;
    for (double x : samples) acc += x * x;
    return acc;
}

}  // namespace meshdet
