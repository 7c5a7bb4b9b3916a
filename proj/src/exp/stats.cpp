#include "hfl/exp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hfl {

double percentile(std::span<const double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile rank must be in [0, 100]");
  std::vector<double> sorted(samples.begin(), samples.end());
  if (!std::all_of(sorted.begin(), sorted.end(), [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("percentile of non-finite samples");
  }
  std::sort(sorted.begin(), sorted.end());
  const double rank = static_cast<double>(sorted.size() - 1) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double spread(std::span<const double> samples) {
  return percentile(samples, 95.0) - percentile(samples, 5.0);
}

std::vector<double> steady_samples(const SimTrace& trace, TraceMetric metric, double start) {
  std::vector<double> out;
  out.reserve(trace.rows.size());
  for (const auto& row : trace.rows) {
    if (row.t < start) continue;
    double v = 0.0;
    switch (metric) {
      case TraceMetric::kPositionError: v = row.pos_err; break;
      case TraceMetric::kVelocityError: v = row.vel_err; break;
      case TraceMetric::kFootSpeed: v = row.pdot.norm(); break;
    }
    if (std::isfinite(v)) out.push_back(v);
  }
  return out;
}

}  // namespace hfl
