// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Usage: meshdet_acceptance [--skip-scaling]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "meshdet/detectors.hpp"
#include "meshdet/experiment.hpp"
#include "meshdet/fft.hpp"
#include "meshdet/ring_buffer.hpp"
#include "meshdet/signal_model.hpp"
#include "oracles.hpp"

using namespace meshdet;

namespace {

// Tolerances.
constexpr double kAlphaWant = 7.712, kAlphaTol = 0.001;
constexpr double kHWant = 11.513, kHTol = 0.001;
constexpr double kMeanTol = 0.02, kStdTol = 0.05;
constexpr double kExpRatioLo = 0.95, kExpRatioHi = 1.05;
constexpr double kGaussFrameFaMax = 1e-5;
constexpr double kLipskiDrMin = 99.5;
constexpr double kComparatorFarMin = 10.0;
constexpr double kApprox = 1.3;     // "a is about b": max/min <= 1.3
constexpr double kMuchMore = 3.0;   // "a >> b": a >= 3 b
constexpr double kLipskiOverTsnfaMin = 100.0;
constexpr double kPrecisionGainMin = 10.0;
constexpr double kLoadRatioLo = 3.5, kLoadRatioHi = 6.5;
constexpr double kLatencyRatioLo = 1.4, kLatencyRatioHi = 2.5;
constexpr double kInvariantPp = 0.1;
constexpr double kFftRelTol = 1e-9;

struct Verdict {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) ok = false;
        if (detail.tellp() > 0) detail << "; ";
        detail << (cond ? "" : "!") << what;
    }
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

int failures = 0;

void report(int n, const std::string& title, Verdict& v, double seconds) {
    std::printf("CRITERION %2d %s  %s  [%.1f s]\n    %s\n", n, v.ok ? "PASS" : "FAIL", title.c_str(), seconds,
                v.detail.str().c_str());
    std::fflush(stdout);
    if (!v.ok) ++failures;
}

double mean_of(const ConfigResult& r, const std::string& label, const std::string& metric) {
    for (const auto& row : r.aggregates)
        if (row.label == label) return row.at(metric).mean;
    throw std::runtime_error("missing " + label);
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

SignalParams noise_only() {
    SignalParams p;
    p.drift_enabled = false;
    p.mains_enabled = false;
    p.bursts_enabled = false;
    p.surges_enabled = false;
    p.event_rate_per_hr = 0.0;
    return p;
}

void criterion1() {
    Timer t;
    Verdict v;
    const double alpha = cfar_alpha_ca(32, 1e-3);
    const double h = CusumParams{}.threshold();
    const auto rank = CfarParams::order_statistic(32).os_rank;
    v.require(std::abs(alpha - kAlphaWant) <= kAlphaTol,
              "alpha_ca(32,1e-3)=" + fmt(alpha, 7) + " want " + fmt(kAlphaWant, 6) + "+-" + fmt(kAlphaTol));
    v.require(std::abs(h - kHWant) <= kHTol, "h=" + fmt(h, 7) + " want " + fmt(kHWant, 6) + "+-" + fmt(kHTol));
    v.require(rank == 24, "os rank=" + std::to_string(rank));
    report(1, "threshold formulas", v, t.seconds());
}

void criterion2() {
    Timer t;
    Verdict v;
    const int frames = 100000;
    NodeSignal sig(0, 1e9, noise_only(), 2024);
    double s1 = 0.0, s2 = 0.0;
    std::vector<double> b1(kNumBins, 0.0), b2(kNumBins, 0.0);
    Frame f;
    for (int m = 0; m < frames; ++m) {
        sig.fill_frame(m, f);
        const double x = frame_energy(f.samples);
        s1 += x;
        s2 += x * x;
        const auto mags = fft128_magnitudes(f.samples);
        for (std::size_t k = 1; k < kNumBins; ++k) {
            const double p = mags[k] * mags[k];
            b1[k] += p;
            b2[k] += p * p;
        }
    }
    const double mean = s1 / frames;
    const double sd = std::sqrt(s2 / frames - mean * mean);
    v.require(std::abs(mean / 128.0 - 1.0) <= kMeanTol, "frame mean=" + fmt(mean) + " (128P)");
    v.require(std::abs(sd / 16.0 - 1.0) <= kStdTol, "frame std=" + fmt(sd) + " (16P)");
    double lo = 1e9, hi = 0.0;
    for (std::size_t k = 1; k < kNumBins; ++k) {
        const double m = b1[k] / frames;
        const double s = std::sqrt(b2[k] / frames - m * m);
        lo = std::min(lo, m / s);
        hi = std::max(hi, m / s);
    }
    v.require(lo >= kExpRatioLo && hi <= kExpRatioHi,
              "per-bin |X_k|^2 mean/std in [" + fmt(lo) + ", " + fmt(hi) + "] over k=1..63");
    report(2, "noise-only distributions, 1e5 frames", v, t.seconds());
}

void criterion3() {
    Timer t;
    Verdict v;
    {
        std::mt19937_64 gen(31);
        std::exponential_distribution<double> e(1.0);
        CfarState s(CfarParams::cell_averaging());
        const long trials = 1000000;
        long alarms = 0;
        for (long m = 0; m < trials + 33; ++m) {
            const auto out = cfar_update(s, e(gen), m, 0);
            if (m >= 33) alarms += out.trigger;
        }
        const double p = 1e-3;
        const double rate = static_cast<double>(alarms) / trials;
        const double sigma = std::sqrt(p * (1 - p) / trials);
        v.require(std::abs(rate - p) <= 3 * sigma,
                  "exponential cells: rate=" + fmt(rate) + " (1e-3 +- " + fmt(3 * sigma, 3) + ", 1e6 trials)");
    }
    {
        auto p = noise_only();
        p.drift_enabled = true;
        NodeSignal sig(0, 1e9, p, 77);
        CfarState s(CfarParams::cell_averaging());
        const long frames = 1000000;
        long alarms = 0;
        Frame f;
        for (long m = 0; m < frames; ++m) {
            sig.fill_frame(m, f);
            alarms += cfar_update(s, frame_energy(f.samples), m, 0).trigger;
        }
        const double rate = static_cast<double>(alarms) / static_cast<double>(frames - 33);
        v.require(rate < kGaussFrameFaMax, "gaussian frames: " + std::to_string(alarms) + " alarms in " +
                                               std::to_string(frames) + " frames, rate=" + fmt(rate));
    }
    report(3, "CA-CFAR native-regime calibration", v, t.seconds());
}

void criterion4(const std::vector<ConfigResult>& res) {
    Timer t;
    Verdict v;
    std::map<double, double> cusum;
    for (const auto& r : res) {
        const auto name = r.entry.name();
        double tsnfa_clusters = 0.0;
        bool tsnfa_all = true;
        for (const auto& rep : r.replicates) {
            const auto& m = rep.find("tsnfa").report;
            tsnfa_all &= m.detection_rate_pct.value_or(0.0) == 100.0 && m.event_precision_pct.value_or(0.0) == 100.0;
            tsnfa_clusters += static_cast<double>(m.fp_cluster_count);
        }
        v.require(tsnfa_all && tsnfa_clusters == 0.0,
                  name + " tsnfa DR=" + fmt(mean_of(r, "tsnfa", "detection_rate_pct"), 6) +
                      " prec=" + fmt(mean_of(r, "tsnfa", "event_precision_pct"), 6) +
                      " FPcl=" + fmt(tsnfa_clusters));
        for (const char* d : {"ca_cfar", "os_cfar"}) {
            const double dr = mean_of(r, d, "detection_rate_pct");
            v.require(dr == 100.0, name + " " + d + " DR=" + fmt(dr, 6));
        }
        const double lip = mean_of(r, "lipski", "detection_rate_pct");
        v.require(lip >= kLipskiDrMin, name + " lipski DR=" + fmt(lip, 5));
        cusum[r.entry.snr_db] = mean_of(r, "cusum", "detection_rate_pct");
    }
    const double c18 = cusum.at(18.0), c12 = cusum.at(12.0);
    v.require(c18 >= 60.0 && c18 <= 80.0, "cusum 18dB DR=" + fmt(c18) + " want [60,80]");
    v.require(c12 >= 40.0 && c12 <= 60.0, "cusum 12dB DR=" + fmt(c12) + " want [40,60]");
    v.require(c18 - c12 >= 10.0, "cusum drop=" + fmt(c18 - c12) + "pp want >=10");
    report(4, "headline reproduction, 10 nodes, 24 h x 5", v, t.seconds());
}

void criterion5(const std::vector<ConfigResult>& res) {
    Timer t;
    Verdict v;
    for (const auto& r : res) {
        const auto name = r.entry.name();
        auto far = [&](const char* d) { return mean_of(r, d, "far_clusters_per_hr_per_node"); };
        auto bw = [&](const char* d) { return mean_of(r, d, "per_node_load_bytes_per_hr"); };
        for (const char* d : {"lipski", "ca_cfar", "os_cfar"})
            v.require(far(d) >= kComparatorFarMin, name + " " + d + " FAR=" + fmt(far(d)));
        v.require(mean_of(r, "tsnfa", "fp_cluster_count") == 0.0,
                  name + " tsnfa FPcl=" + fmt(mean_of(r, "tsnfa", "fp_cluster_count")));
        const double ca = far("ca_cfar"), os = far("os_cfar");
        v.require(std::max(ca, os) / std::min(ca, os) <= kApprox,
                  name + " CA/OS FAR ratio=" + fmt(std::max(ca, os) / std::min(ca, os)));
        const double l = bw("lipski"), o = bw("os_cfar"), c = bw("ca_cfar"), cu = bw("cusum"), ts = bw("tsnfa");
        v.require(l > o && l > c, name + " B/h lipski=" + fmt(l) + " > os=" + fmt(o) + ", ca=" + fmt(c));
        v.require(std::max(o, c) / std::min(o, c) <= kApprox, name + " os~ca ratio=" + fmt(std::max(o, c) / std::min(o, c)));
        v.require(std::min(o, c) >= kMuchMore * cu, name + " min(os,ca)/cusum=" + fmt(std::min(o, c) / cu));
        v.require(cu >= kMuchMore * ts, name + " cusum/tsnfa=" + fmt(cu / ts));
        v.require(l / ts >= kLipskiOverTsnfaMin, name + " lipski/tsnfa=" + fmt(l / ts));
    }
    report(5, "comparator failure-mode ordering", v, t.seconds());
}

void criterion6(const std::vector<ConfigResult>& res) {
    Timer t;
    Verdict v;
    for (const auto& r : res) {
        const auto name = r.entry.name();
        const char* labels[] = {"lipski", "lipski_k5", "lipski_k8"};
        double dr[3], fp[3], prec[3];
        for (int i = 0; i < 3; ++i) {
            dr[i] = mean_of(r, labels[i], "detection_rate_pct");
            fp[i] = mean_of(r, labels[i], "fp_cluster_count");
            prec[i] = mean_of(r, labels[i], "event_precision_pct");
        }
        v.require(dr[0] >= dr[1] && dr[1] >= dr[2],
                  name + " DR k3/5/8=" + fmt(dr[0]) + "/" + fmt(dr[1]) + "/" + fmt(dr[2]));
        v.require(fp[0] > fp[1] && fp[1] > fp[2],
                  name + " FPcl k3/5/8=" + fmt(fp[0]) + "/" + fmt(fp[1]) + "/" + fmt(fp[2]));
        v.require(prec[2] >= kPrecisionGainMin * prec[0],
                  name + " precision k8/k3=" + fmt(prec[2]) + "/" + fmt(prec[0]));
    }
    report(6, "Lipski k-sweep", v, t.seconds());
}

void criterion7(const std::vector<ConfigResult>& res) {
    Timer t;
    Verdict v;
    std::map<std::string, int> dr_breaks, far_breaks, live_breaks;
    std::map<std::string, std::string> worst;
    for (const auto& r : res)
        for (const auto& rep : r.replicates)
            for (const auto& d : rep.detectors) {
                const auto& label = d.config.label;
                dr_breaks[label] += 0;
                far_breaks[label] += 0;
                live_breaks[label] += 0;
                if (d.roc.size() != 25) {
                    ++live_breaks[label];
                    continue;
                }
                for (std::size_t i = 1; i < d.roc.size(); ++i) {
                    if (d.roc[i].detection_rate_pct > d.roc[i - 1].detection_rate_pct) ++dr_breaks[label];
                    if (d.roc[i].far_clusters_per_hr_per_node > d.roc[i - 1].far_clusters_per_hr_per_node) {
                        if (!far_breaks[label])
                            worst[label] = "tau " + fmt(d.roc[i - 1].multiplier) + "->" + fmt(d.roc[i].multiplier) +
                                           " FAR " + fmt(d.roc[i - 1].far_clusters_per_hr_per_node) + "->" +
                                           fmt(d.roc[i].far_clusters_per_hr_per_node) + " (" + r.entry.name() + ")";
                        ++far_breaks[label];
                    }
                }
                const auto& mid = d.roc[12];
                if (mid.multiplier != 1.0 || mid.detection_rate_pct != d.report.detection_rate_pct.value_or(0.0) ||
                    mid.far_clusters_per_hr_per_node != d.report.far_clusters_per_hr_per_node)
                    ++live_breaks[label];
            }
    for (const auto& [label, n] : dr_breaks) {
        const bool ok = n == 0 && far_breaks[label] == 0 && live_breaks[label] == 0;
        std::string msg = label + ": DR breaks=" + std::to_string(n) + " FAR breaks=" + std::to_string(far_breaks[label]) +
                          " tau=1 mismatches=" + std::to_string(live_breaks[label]);
        if (far_breaks[label]) msg += " first " + worst[label];
        v.require(ok, msg);
    }
    report(7, "ROC monotonicity and tau=1 equivalence", v, t.seconds());
}

void criterion8() {
    Timer t;
    Verdict v;
    {
        SignalParams p;
        p.warmup_s = 100.0;
        p.event_rate_per_hr = 30.0;
        p.burst_rate_per_hr = 3000.0;
        const int frames = 6000;
        NodeSignal sig(0, frames * kFramePeriodS, p, 8080);
        std::vector<Frame> base(frames);
        for (int m = 0; m < frames; ++m) base[m] = sig.frame(m);
        for (double gain : {1e-4, 0.37, 3.0, 1e5}) {
            TsnfaState a, b;
            int mismatches = 0, triggers = 0;
            for (int m = 0; m < frames; ++m) {
                Frame g = base[m];
                for (auto& s : g.samples) s *= gain;
                const auto oa = tsnfa_process(a, base[m]);
                const auto ob = tsnfa_process(b, g);
                if (!a.warmed_up()) continue;
                mismatches += oa.trigger != ob.trigger;
                triggers += oa.trigger;
            }
            v.require(mismatches == 0 && triggers > 0, "gain " + fmt(gain) + ": " + std::to_string(mismatches) +
                                                             " mismatches over " + std::to_string(triggers) + " triggers");
        }
    }
    {
        auto flat = [](double x) {
            Magnitudes m;
            m.fill(x);
            return m;
        };
        double floor_after[2] = {0, 0};
        for (int i = 0; i < 2; ++i) {
            const int contaminated = 31 + i;
            TsnfaState s;
            for (int m = 0; m < 200; ++m) tsnfa_update(s, flat(1.0), m, 0);
            auto dirty = flat(1.0);
            for (std::size_t k = 1; k <= 6; ++k) dirty[k] = 1000.0;
            // n dirty frames make n - 1 dirty stage-1 medians
            for (int m = 0; m <= contaminated; ++m) tsnfa_update(s, dirty, 200 + m, 0);
            floor_after[i] = *std::max_element(s.noise_floor.begin(), s.noise_floor.end());
        }
        v.require(floor_after[0] == 1.0, "31 contaminated: floor=" + fmt(floor_after[0]));
        v.require(floor_after[1] != 1.0, "32 contaminated: floor=" + fmt(floor_after[1]));
    }
    report(8, "TSNFA scale invariance and 31/32 breakdown", v, t.seconds());
}

void criterion9(const ConfigResult& small, const ConfigResult& large) {
    Timer t;
    Verdict v;
    const double load = mean_of(large, "tsnfa", "per_node_load_bytes_per_hr") /
                        mean_of(small, "tsnfa", "per_node_load_bytes_per_hr");
    const double lat = mean_of(large, "tsnfa", "mean_latency_s") / mean_of(small, "tsnfa", "mean_latency_s");
    const double ddr = mean_of(large, "tsnfa", "detection_rate_pct") - mean_of(small, "tsnfa", "detection_rate_pct");
    const double dprec =
        mean_of(large, "tsnfa", "event_precision_pct") - mean_of(small, "tsnfa", "event_precision_pct");
    v.require(load >= kLoadRatioLo && load <= kLoadRatioHi, "load ratio 50n/10n=" + fmt(load));
    v.require(lat >= kLatencyRatioLo && lat <= kLatencyRatioHi, "latency ratio=" + fmt(lat));
    v.require(std::abs(ddr) <= kInvariantPp, "DR diff=" + fmt(ddr) + "pp");
    v.require(std::abs(dprec) <= kInvariantPp, "precision diff=" + fmt(dprec) + "pp");
    report(9, "scaling, TSNFA 50n vs 10n at 12 dB", v, t.seconds());
}

void criterion10() {
    Timer t;
    Verdict v;
    std::mt19937_64 gen(10);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> x(kFrameLen);
        for (auto& s : x) s = g(gen);
        const auto fast = fft128(x);
        const auto slow = oracle::naive_dft(x);
        double err = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < kFrameLen; ++k) {
            err = std::max(err, std::abs(fast[k] - slow[k]));
            scale = std::max(scale, std::abs(slow[k]));
        }
        worst = std::max(worst, err / scale);
    }
    v.require(worst <= kFftRelTol, "fft vs dft worst relative error=" + fmt(worst, 3));

    std::uniform_real_distribution<double> u(0.0, 1.0);
    int median_bad = 0, os_bad = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        RingBuffer b3(3), b64(64);
        const int pushes = 64 + trial % 50;  // exercise wrap-around
        for (int i = 0; i < pushes; ++i) {
            const double x = u(gen);
            b3.push(x);
            b64.push(x);
        }
        median_bad += b3.median() != oracle::sorted_median(b3.values());
        median_bad += b64.median() != oracle::sorted_median(b64.values());

        CfarState s(CfarParams::order_statistic());
        std::vector<double> hist;
        for (int i = 0; i < 33 + trial % 7; ++i) {
            const double x = u(gen);
            hist.push_back(x);
            cfar_update(s, x, i, 0);
        }
        const std::vector<double> ref(hist.end() - 33, hist.end() - 1);
        os_bad += s.reference_level() != oracle::sorted_rank(ref, 24);
    }
    v.require(median_bad == 0, "median mismatches=" + std::to_string(median_bad) + " / 20000");
    v.require(os_bad == 0, "order-statistic mismatches=" + std::to_string(os_bad) + " / 10000");
    report(10, "oracle equivalence", v, t.seconds());
}

}  // namespace

int main(int argc, char** argv) {
    bool skip_scaling = false;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--skip-scaling") == 0) skip_scaling = true;

    criterion1();
    criterion2();
    criterion3();

    Timer t;
    RunConfig cfg;  // defaults: 10x18 and 10x12, 24 h, 5 replicates, all detectors, k in {3,5,8}
    cfg.roc_enabled = true;
    const auto headline = run_experiment(cfg);
    std::printf("    (headline run: %.1f s)\n", t.seconds());
    criterion4(headline);
    criterion5(headline);
    criterion6(headline);
    criterion7(headline);
    criterion8();

    if (skip_scaling) {
        std::printf("CRITERION  9 SKIP  scaling (--skip-scaling)\n");
    } else {
        Timer t9;
        RunConfig big;
        big.detectors = {DetectorKind::Tsnfa};
        big.configurations = {{50, 12.0}};
        const auto large = run_experiment(big);
        std::printf("    (50-node run: %.1f s)\n", t9.seconds());
        criterion9(headline.at(1), large.front());
    }
    criterion10();

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
