#include "meshdet/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace meshdet {

namespace {

struct FftTables {
    std::array<std::size_t, kFrameLen> bitrev{};
    std::array<std::complex<double>, kFrameLen / 2> twiddle{};

    FftTables() {
        constexpr int bits = 7;
        for (std::size_t i = 0; i < kFrameLen; ++i) {
            std::size_t r = 0;
            for (int b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            bitrev[i] = r;
        }
        for (std::size_t k = 0; k < kFrameLen / 2; ++k) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) /
                               static_cast<double>(kFrameLen);
            twiddle[k] = {std::cos(ang), std::sin(ang)};
        }
    }
};

const FftTables& tables() {
    static const FftTables t;
    return t;
}

}  // namespace

Spectrum fft128(std::span<const double> samples, const Window* window) {
    if (samples.size() != kFrameLen)
        throw std::invalid_argument("fft128 requires exactly 128 samples");
    const auto& t = tables();
    Spectrum a;
    for (std::size_t i = 0; i < kFrameLen; ++i) {
        const double w = window ? (*window)[i] : 1.0;
        a[t.bitrev[i]] = {samples[i] * w, 0.0};
    }
    for (std::size_t len = 2; len <= kFrameLen; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = kFrameLen / len;
        for (std::size_t start = 0; start < kFrameLen; start += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const auto u = a[start + j];
                const auto b = a[start + j + half];
                const auto w = t.twiddle[j * stride];
                const std::complex<double> v(b.real() * w.real() - b.imag() * w.imag(),
                                             b.real() * w.imag() + b.imag() * w.real());
                a[start + j] = u + v;
                a[start + j + half] = u - v;
            }
        }
    }
    return a;
}

Magnitudes fft128_magnitudes(std::span<const double> samples, const Window* window) {
    const Spectrum x = fft128(samples, window);
    Magnitudes mag;
    for (std::size_t k = 0; k < kNumBins; ++k)
        mag[k] = std::sqrt(x[k].real() * x[k].real() + x[k].imag() * x[k].imag());
    return mag;
}

const Window& hann_window() {
    static const Window w = [] {
        Window h;
        for (std::size_t n = 0; n < kFrameLen; ++n)
            h[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                        static_cast<double>(kFrameLen));
        return h;
    }();
    return w;
}

}  // namespace meshdet
