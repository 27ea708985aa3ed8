#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tetrodiff/mesh.hpp"

namespace tetrodiff {

/// Fixed-width histogram; values outside [lo, hi) are clamped into the end bins so
/// the counts always sum to the number of samples.
struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;

  std::size_t total() const;
  double bin_center(std::size_t i) const;
};

Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

/// V^e / V0 for every element.
std::vector<double> volume_ratios(const Mesh& mesh, double target_volume);
/// L / h0 for every edge, in edge key order.
std::vector<double> edge_length_ratios(const Mesh& mesh, double target_edge);

/// Fraction of values inside [lo, hi].
double fraction_within(std::span<const double> values, double lo, double hi);

}  // namespace tetrodiff
