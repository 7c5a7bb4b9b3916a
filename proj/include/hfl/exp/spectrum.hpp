#pragma once

#include <span>
#include <vector>

namespace hfl {

struct Spectrum {
  std::vector<double> frequency;  // Hz
  std::vector<double> amplitude;  // same unit as the signal
};

/// Welch-averaged one-sided amplitude spectrum: Hann window, 50 % overlap,
/// mean removed per segment. Throws std::invalid_argument when the signal is
/// shorter than one segment.
Spectrum welch_amplitude(std::span<const double> signal, double sample_hz, int segment = 512);

/// Amplitudes with frequency in [lo, hi].
std::vector<double> band(const Spectrum& s, double lo, double hi);

}  // namespace hfl
