#pragma once

#include <span>
#include <vector>

#include "hfl/sim/executor.hpp"

namespace hfl {

/// Linear-interpolation quantile at rank (len − 1) p / 100 of the sorted
/// samples. Throws std::invalid_argument for empty input, non-finite samples
/// or p outside [0, 100].
double percentile(std::span<const double> samples, double p);

/// p95 − p5.
double spread(std::span<const double> samples);

enum class TraceMetric { kPositionError, kVelocityError, kFootSpeed };

/// Finite metric samples with t >= start (s).
std::vector<double> steady_samples(const SimTrace& trace, TraceMetric metric, double start);

}  // namespace hfl
