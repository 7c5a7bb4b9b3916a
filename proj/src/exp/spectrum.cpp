#include "hfl/exp/spectrum.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace hfl {

Spectrum welch_amplitude(std::span<const double> signal, double sample_hz, int segment) {
  if (segment < 4 || segment % 2 != 0) throw std::invalid_argument("segment must be even and >= 4");
  if (!(sample_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");
  const auto n = static_cast<std::size_t>(segment);
  if (signal.size() < n) throw std::invalid_argument("signal shorter than one segment");

  std::vector<double> window(n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    wsum += window[i];
  }

  Eigen::FFT<double> fft;
  const std::size_t bins = n / 2 + 1;
  std::vector<double> power(bins, 0.0);
  std::vector<double> buf(n);
  std::vector<std::complex<double>> out;
  int segments = 0;
  for (std::size_t start = 0; start + n <= signal.size(); start += n / 2) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += signal[start + i];
    mean /= n;
    for (std::size_t i = 0; i < n; ++i) buf[i] = (signal[start + i] - mean) * window[i];
    fft.fwd(out, buf);
    for (std::size_t k = 0; k < bins; ++k) power[k] += std::norm(out[k]);
    ++segments;
  }

  Spectrum s;
  s.frequency.resize(bins);
  s.amplitude.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    s.frequency[k] = k * sample_hz / n;
    // sinusoid of amplitude A shows up as A at its bin
    const double scale = (k == 0 || k == n / 2) ? 1.0 : 2.0;
    s.amplitude[k] = scale * std::sqrt(power[k] / segments) / wsum;
  }
  return s;
}

std::vector<double> band(const Spectrum& s, double lo, double hi) {
  std::vector<double> out;
  for (std::size_t k = 0; k < s.frequency.size(); ++k) {
    if (s.frequency[k] >= lo && s.frequency[k] <= hi) out.push_back(s.amplitude[k]);
  }
  return out;
}

}  // namespace hfl
