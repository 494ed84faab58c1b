#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>

#include "meshdet/signal_model.hpp"

namespace meshdet {

inline constexpr std::size_t kNumBins = kFrameLen / 2;  // k = 0..63

using Spectrum = std::array<std::complex<double>, kFrameLen>;
using Magnitudes = std::array<double, kNumBins>;
using Window = std::array<double, kFrameLen>;

// In-order radix-2 decimation-in-time transform of a 128-sample real frame.
// Throws std::invalid_argument unless samples.size() == 128.
Spectrum fft128(std::span<const double> samples, const Window* window = nullptr);

// |X_k| for k = 0..63.
Magnitudes fft128_magnitudes(std::span<const double> samples, const Window* window = nullptr);

// Periodic Hann window, w[n] = 0.5 - 0.5 cos(2 pi n / 128).
const Window& hann_window();

}  // namespace meshdet
