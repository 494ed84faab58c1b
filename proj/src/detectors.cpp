#include "meshdet/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace meshdet {

namespace {

constexpr double kHuge = std::numeric_limits<double>::max();

// x / threshold with the degenerate zero-threshold case kept finite.
double ratio(double x, double threshold) {
    if (threshold > 0.0) return x / threshold;
    return x > 0.0 ? kHuge : 0.0;
}

DetectorOutput make_output(DetectorKind kind, double strength, std::int64_t frame_index,
                           int node_id) {
    DetectorOutput out;
    out.detector = kind;
    out.strength = std::max(0.0, strength);
    out.trigger = out.strength >= 1.0;
    out.frame_index = frame_index;
    out.node_id = node_id;
    return out;
}

}  // namespace

std::string_view to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::Tsnfa: return "tsnfa";
        case DetectorKind::Lipski: return "lipski";
        case DetectorKind::CaCfar: return "ca_cfar";
        case DetectorKind::OsCfar: return "os_cfar";
        case DetectorKind::Cusum: return "cusum";
    }
    return "unknown";
}

std::optional<DetectorKind> parse_detector_kind(std::string_view name) {
    if (name == "tsnfa") return DetectorKind::Tsnfa;
    if (name == "lipski") return DetectorKind::Lipski;
    if (name == "ca" || name == "ca_cfar") return DetectorKind::CaCfar;
    if (name == "os" || name == "os_cfar") return DetectorKind::OsCfar;
    if (name == "cusum") return DetectorKind::Cusum;
    return std::nullopt;
}

FrameFeatures FrameFeatures::compute(const Frame& frame) {
    FrameFeatures f;
    f.frame = &frame;
    f.raw = fft128_magnitudes(frame.samples);
    f.hann = fft128_magnitudes(frame.samples, &hann_window());
    f.energy = frame_energy(frame.samples);
    return f;
}

// ---------------------------------------------------------------- TSNFA

TsnfaState::TsnfaState(const TsnfaParams& p) : params(p) {
    if (p.bin_lo < 1 || p.bin_hi < p.bin_lo || p.bin_hi >= kNumBins)
        throw std::invalid_argument("tsnfa: bin range must lie within 1..63");
    if (p.zeta <= 0.0) throw std::invalid_argument("tsnfa: zeta must be positive");
    const std::size_t nbins = p.bin_hi - p.bin_lo + 1;
    stage1.assign(nbins, RingBuffer(p.stage1_depth));
    stage2.assign(nbins, RingBuffer(p.stage2_depth));
    noise_floor.assign(nbins, 0.0);
}

bool TsnfaState::warmed_up() const {
    return std::all_of(stage2.begin(), stage2.end(), [](const RingBuffer& b) { return b.full(); });
}

DetectorOutput tsnfa_update(TsnfaState& state, const Magnitudes& mags, std::int64_t frame_index,
                            int node_id) {
    const auto& p = state.params;
    double strength = 0.0;
    for (std::size_t b = p.bin_lo; b <= p.bin_hi; ++b) {
        const std::size_t i = b - p.bin_lo;
        state.stage1[i].push(mags[b]);
        if (!state.stage1[i].full()) continue;
        state.stage2[i].push(state.stage1[i].median());
        if (!state.stage2[i].full()) continue;
        state.noise_floor[i] = state.stage2[i].median();
        strength = std::max(strength, ratio(mags[b], p.zeta * state.noise_floor[i]));
    }
    if (!state.warmed_up()) strength = 0.0;
    return make_output(DetectorKind::Tsnfa, strength, frame_index, node_id);
}

DetectorOutput tsnfa_process(TsnfaState& state, const Frame& frame) {
    return tsnfa_update(state, fft128_magnitudes(frame.samples), frame.index, frame.node_id);
}

// ---------------------------------------------------------------- Lipski

LipskiState::LipskiState(const LipskiParams& p) : params(p) {
    if (p.bin_lo < 1 || p.bin_hi < p.bin_lo || p.bin_hi >= kNumBins)
        throw std::invalid_argument("lipski: bin range must lie within 1..63");
    if (p.calibration_frames < 2) throw std::invalid_argument("lipski: calibration needs 2+ frames");
    if (p.min_adjacent < 1) throw std::invalid_argument("lipski: min_adjacent must be positive");
    mean.assign(kNumBins, 0.0);
    variance.assign(kNumBins, 0.0);
}

double LipskiState::sigma(std::size_t bin) const { return std::sqrt(std::max(variance[bin], 0.0)); }

DetectorOutput lipski_update(LipskiState& state, const Magnitudes& mags, std::int64_t frame_index,
                             int node_id) {
    const auto& p = state.params;
    if (!state.calibrated()) {
        const double n = static_cast<double>(state.frames_seen + 1);
        for (std::size_t b = 1; b < kNumBins; ++b) {
            const double delta = mags[b] - state.mean[b];
            state.mean[b] += delta / n;
            state.variance[b] += delta * (mags[b] - state.mean[b]);
        }
        ++state.frames_seen;
        if (state.calibrated())
            for (std::size_t b = 1; b < kNumBins; ++b) state.variance[b] /= (n - 1.0);
        return make_output(DetectorKind::Lipski, 0.0, frame_index, node_id);
    }

    // Normalized exceedance per in-band bin: 1.0 exactly at mu + k sigma.
    std::vector<double> z;
    z.reserve(p.bin_hi - p.bin_lo + 1);
    for (std::size_t b = p.bin_lo; b <= p.bin_hi; ++b)
        z.push_back(ratio(mags[b] - state.mean[b], p.k * state.sigma(b)));

    // Best run of min_adjacent bins, scored by its weakest member.
    double strength = 0.0;
    if (z.size() >= p.min_adjacent) {
        strength = -kHuge;
        for (std::size_t s = 0; s + p.min_adjacent <= z.size(); ++s) {
            const double weakest = *std::min_element(z.begin() + static_cast<std::ptrdiff_t>(s),
                                                     z.begin() + static_cast<std::ptrdiff_t>(s + p.min_adjacent));
            strength = std::max(strength, weakest);
        }
    }
    auto out = make_output(DetectorKind::Lipski, strength, frame_index, node_id);

    if (!out.trigger) {
        for (std::size_t b = 1; b < kNumBins; ++b) {
            const double diff = mags[b] - state.mean[b];
            const double incr = p.ema_alpha * diff;
            state.mean[b] += incr;
            state.variance[b] = (1.0 - p.ema_alpha) * (state.variance[b] + diff * incr);
        }
    }
    ++state.frames_seen;
    return out;
}

DetectorOutput lipski_process(LipskiState& state, const Frame& frame) {
    return lipski_update(state, fft128_magnitudes(frame.samples, &hann_window()), frame.index,
                         frame.node_id);
}

// ---------------------------------------------------------------- CFAR

double cfar_alpha_ca(int n_ref, double p_fa) {
    if (n_ref < 1) throw std::invalid_argument("cfar_alpha_ca: n_ref must be >= 1");
    if (!(p_fa > 0.0 && p_fa < 1.0)) throw std::invalid_argument("cfar_alpha_ca: p_fa in (0,1)");
    const double n = static_cast<double>(n_ref);
    return n * (std::pow(p_fa, -1.0 / n) - 1.0);
}

CfarParams CfarParams::cell_averaging(std::size_t n_ref, double p_fa) {
    CfarParams p;
    p.variant = CfarVariant::CellAveraging;
    p.n_ref = n_ref;
    p.alpha = cfar_alpha_ca(static_cast<int>(n_ref), p_fa);
    p.os_rank = 3 * n_ref / 4;
    return p;
}

CfarParams CfarParams::order_statistic(std::size_t n_ref, double alpha) {
    CfarParams p;
    p.variant = CfarVariant::OrderStatistic;
    p.n_ref = n_ref;
    p.alpha = alpha;
    p.os_rank = 3 * n_ref / 4;
    return p;
}

CfarState::CfarState(const CfarParams& p) : params(p), history(p.n_ref + p.guard) {
    if (p.n_ref == 0) throw std::invalid_argument("cfar: n_ref must be positive");
    if (p.alpha <= 0.0) throw std::invalid_argument("cfar: alpha must be positive");
    if (p.variant == CfarVariant::OrderStatistic && (p.os_rank < 1 || p.os_rank > p.n_ref))
        throw std::invalid_argument("cfar: os_rank must lie in 1..n_ref");
}

double CfarState::reference_level() const {
    auto cells = history.values();
    cells.resize(params.n_ref);  // drop the guard cells (newest)
    if (params.variant == CfarVariant::CellAveraging) {
        double acc = 0.0;
        for (double c : cells) acc += c;
        return acc / static_cast<double>(cells.size());
    }
    auto nth = cells.begin() + static_cast<std::ptrdiff_t>(params.os_rank - 1);
    std::nth_element(cells.begin(), nth, cells.end());
    return *nth;
}

DetectorOutput cfar_update(CfarState& state, double frame_statistic, std::int64_t frame_index,
                           int node_id) {
    const DetectorKind kind = state.params.variant == CfarVariant::CellAveraging
                                  ? DetectorKind::CaCfar
                                  : DetectorKind::OsCfar;
    double strength = 0.0;
    if (state.warmed_up())
        strength = ratio(frame_statistic, state.params.alpha * state.reference_level());
    // The cell under test enters the window only after its own decision.
    state.history.push(frame_statistic);
    return make_output(kind, strength, frame_index, node_id);
}

DetectorOutput ca_cfar_process(CfarState& state, const Frame& frame) {
    if (state.params.variant != CfarVariant::CellAveraging)
        throw std::logic_error("ca_cfar_process needs a cell-averaging state");
    return cfar_update(state, frame_energy(frame.samples), frame.index, frame.node_id);
}

DetectorOutput os_cfar_process(CfarState& state, const Frame& frame) {
    if (state.params.variant != CfarVariant::OrderStatistic)
        throw std::logic_error("os_cfar_process needs an order-statistic state");
    return cfar_update(state, frame_energy(frame.samples), frame.index, frame.node_id);
}

// ---------------------------------------------------------------- CUSUM

double CusumParams::threshold() const {
    if (!(alpha_fa > 0.0 && alpha_fa < 1.0)) throw std::invalid_argument("cusum: alpha_fa in (0,1)");
    return std::log(1.0 / alpha_fa);
}

double cusum_increment(const CusumState& state, double frame_statistic) {
    const double s2 = std::max(state.sigma2, std::numeric_limits<double>::min());
    const double d = frame_statistic - state.mu0;
    const double shift = state.mu1 - state.mu0;
    return d * d / (2.0 * s2) - shift * shift / (4.0 * s2);
}

DetectorOutput cusum_update(CusumState& state, double frame_statistic, std::int64_t frame_index,
                            int node_id) {
    const auto& p = state.params;
    if (!state.calibrated()) {
        const double n = static_cast<double>(state.frames_seen + 1);
        const double delta = frame_statistic - state.cal_mean;
        state.cal_mean += delta / n;
        state.cal_m2 += delta * (frame_statistic - state.cal_mean);
        ++state.frames_seen;
        if (state.calibrated()) {
            state.mu0 = state.cal_mean;
            state.sigma2 = n > 1.0 ? state.cal_m2 / (n - 1.0) : 0.0;
            state.mu1 = state.mu0 + p.snr_factor * std::sqrt(state.sigma2);
        }
        return make_output(DetectorKind::Cusum, 0.0, frame_index, node_id);
    }

    const double h = p.threshold();
    state.score = std::clamp(state.score + cusum_increment(state, frame_statistic), 0.0, p.k_end());
    ++state.frames_seen;

    if (state.refractory_left > 0) {
        --state.refractory_left;
        return make_output(DetectorKind::Cusum, 0.0, frame_index, node_id);
    }
    auto out = make_output(DetectorKind::Cusum, state.score / h, frame_index, node_id);
    if (out.trigger) {
        state.score = 0.0;
        state.refractory_left = p.refractory_frames;
    }
    return out;
}

DetectorOutput cusum_process(CusumState& state, const Frame& frame) {
    return cusum_update(state, frame_energy(frame.samples), frame.index, frame.node_id);
}

// ---------------------------------------------------------------- serialization

void to_json(nlohmann::json& j, const RingBuffer& b) {
    j = {{"data", b.raw()}, {"head", b.head()}, {"size", b.size()}};
}

void from_json(const nlohmann::json& j, RingBuffer& b) {
    b.restore(j.at("data").get<std::vector<double>>(), j.at("head").get<std::size_t>(),
              j.at("size").get<std::size_t>());
}

void to_json(nlohmann::json& j, const TsnfaState& s) {
    j = {{"stage1_depth", s.params.stage1_depth},
         {"stage2_depth", s.params.stage2_depth},
         {"zeta", s.params.zeta},
         {"bin_lo", s.params.bin_lo},
         {"bin_hi", s.params.bin_hi},
         {"stage1", s.stage1},
         {"stage2", s.stage2},
         {"noise_floor", s.noise_floor}};
}

void from_json(const nlohmann::json& j, TsnfaState& s) {
    TsnfaParams p;
    j.at("stage1_depth").get_to(p.stage1_depth);
    j.at("stage2_depth").get_to(p.stage2_depth);
    j.at("zeta").get_to(p.zeta);
    j.at("bin_lo").get_to(p.bin_lo);
    j.at("bin_hi").get_to(p.bin_hi);
    s = TsnfaState(p);
    j.at("stage1").get_to(s.stage1);
    j.at("stage2").get_to(s.stage2);
    j.at("noise_floor").get_to(s.noise_floor);
}

void to_json(nlohmann::json& j, const LipskiState& s) {
    j = {{"k", s.params.k},
         {"min_adjacent", s.params.min_adjacent},
         {"calibration_frames", s.params.calibration_frames},
         {"ema_alpha", s.params.ema_alpha},
         {"bin_lo", s.params.bin_lo},
         {"bin_hi", s.params.bin_hi},
         {"frames_seen", s.frames_seen},
         {"mean", s.mean},
         {"variance", s.variance}};
}

void from_json(const nlohmann::json& j, LipskiState& s) {
    LipskiParams p;
    j.at("k").get_to(p.k);
    j.at("min_adjacent").get_to(p.min_adjacent);
    j.at("calibration_frames").get_to(p.calibration_frames);
    j.at("ema_alpha").get_to(p.ema_alpha);
    j.at("bin_lo").get_to(p.bin_lo);
    j.at("bin_hi").get_to(p.bin_hi);
    s = LipskiState(p);
    j.at("frames_seen").get_to(s.frames_seen);
    j.at("mean").get_to(s.mean);
    j.at("variance").get_to(s.variance);
}

void to_json(nlohmann::json& j, const CfarState& s) {
    j = {{"variant", s.params.variant == CfarVariant::CellAveraging ? "ca" : "os"},
         {"n_ref", s.params.n_ref},
         {"guard", s.params.guard},
         {"os_rank", s.params.os_rank},
         {"alpha", s.params.alpha},
         {"history", s.history}};
}

void from_json(const nlohmann::json& j, CfarState& s) {
    CfarParams p;
    p.variant = j.at("variant").get<std::string>() == "ca" ? CfarVariant::CellAveraging
                                                           : CfarVariant::OrderStatistic;
    j.at("n_ref").get_to(p.n_ref);
    j.at("guard").get_to(p.guard);
    j.at("os_rank").get_to(p.os_rank);
    j.at("alpha").get_to(p.alpha);
    s = CfarState(p);
    j.at("history").get_to(s.history);
}

void to_json(nlohmann::json& j, const CusumState& s) {
    j = {{"calibration_frames", s.params.calibration_frames},
         {"alpha_fa", s.params.alpha_fa},
         {"snr_factor", s.params.snr_factor},
         {"k_end_factor", s.params.k_end_factor},
         {"refractory_frames", s.params.refractory_frames},
         {"frames_seen", s.frames_seen},
         {"cal_mean", s.cal_mean},
         {"cal_m2", s.cal_m2},
         {"mu0", s.mu0},
         {"sigma2", s.sigma2},
         {"mu1", s.mu1},
         {"score", s.score},
         {"refractory_left", s.refractory_left}};
}

void from_json(const nlohmann::json& j, CusumState& s) {
    CusumParams p;
    j.at("calibration_frames").get_to(p.calibration_frames);
    j.at("alpha_fa").get_to(p.alpha_fa);
    j.at("snr_factor").get_to(p.snr_factor);
    j.at("k_end_factor").get_to(p.k_end_factor);
    j.at("refractory_frames").get_to(p.refractory_frames);
    s = CusumState(p);
    j.at("frames_seen").get_to(s.frames_seen);
    j.at("cal_mean").get_to(s.cal_mean);
    j.at("cal_m2").get_to(s.cal_m2);
    j.at("mu0").get_to(s.mu0);
    j.at("sigma2").get_to(s.sigma2);
    j.at("mu1").get_to(s.mu1);
    j.at("score").get_to(s.score);
    j.at("refractory_left").get_to(s.refractory_left);
}

// ---------------------------------------------------------------- runtime dispatch

DetectorConfig default_detector_config(DetectorKind kind) {
    DetectorConfig c;
    c.kind = kind;
    c.label = std::string(to_string(kind));
    if (kind == DetectorKind::OsCfar) c.cfar = CfarParams::order_statistic();
    return c;
}

namespace {

template <class State, DetectorOutput (*Step)(State&, const FrameFeatures&)>
class StatefulDetector final : public Detector {
public:
    StatefulDetector(State state, DetectorKind kind) : state_(std::move(state)), kind_(kind) {}

    DetectorOutput process(const FrameFeatures& f) override { return Step(state_, f); }
    nlohmann::json save_state() const override { return state_; }
    void load_state(const nlohmann::json& j) override { state_ = j.get<State>(); }
    std::unique_ptr<Detector> clone() const override {
        return std::make_unique<StatefulDetector>(*this);
    }
    DetectorKind kind() const override { return kind_; }

private:
    State state_;
    DetectorKind kind_;
};

DetectorOutput step_tsnfa(TsnfaState& s, const FrameFeatures& f) {
    return tsnfa_update(s, f.raw, f.frame->index, f.frame->node_id);
}
DetectorOutput step_lipski(LipskiState& s, const FrameFeatures& f) {
    return lipski_update(s, f.hann, f.frame->index, f.frame->node_id);
}
DetectorOutput step_cfar(CfarState& s, const FrameFeatures& f) {
    return cfar_update(s, f.energy, f.frame->index, f.frame->node_id);
}
DetectorOutput step_cusum(CusumState& s, const FrameFeatures& f) {
    return cusum_update(s, f.energy, f.frame->index, f.frame->node_id);
}

}  // namespace

std::unique_ptr<Detector> make_detector(const DetectorConfig& config) {
    switch (config.kind) {
        case DetectorKind::Tsnfa:
            return std::make_unique<StatefulDetector<TsnfaState, step_tsnfa>>(
                TsnfaState(config.tsnfa), config.kind);
        case DetectorKind::Lipski:
            return std::make_unique<StatefulDetector<LipskiState, step_lipski>>(
                LipskiState(config.lipski), config.kind);
        case DetectorKind::CaCfar:
        case DetectorKind::OsCfar: {
            CfarParams p = config.cfar;
            p.variant = config.kind == DetectorKind::CaCfar ? CfarVariant::CellAveraging
                                                            : CfarVariant::OrderStatistic;
            return std::make_unique<StatefulDetector<CfarState, step_cfar>>(CfarState(p),
                                                                            config.kind);
        }
        case DetectorKind::Cusum:
            return std::make_unique<StatefulDetector<CusumState, step_cusum>>(
                CusumState(config.cusum), config.kind);
    }
    throw std::invalid_argument("unknown detector kind");
}

}  // namespace meshdet
