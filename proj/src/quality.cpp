#include "tetrodiff/quality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tetrodiff {

std::size_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

double Histogram::bin_center(std::size_t i) const {
  const double w = (hi - lo) / static_cast<double>(counts.size());
  return lo + (static_cast<double>(i) + 0.5) * w;
}

Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  const double w = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    long idx = std::isfinite(v) ? static_cast<long>(std::floor((v - lo) / w)) : 0;
    idx = std::clamp(idx, 0L, static_cast<long>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(idx)];
  }
  return h;
}

std::vector<double> volume_ratios(const Mesh& mesh, double target_volume) {
  std::vector<double> out;
  out.reserve(mesh.element_count());
  for (const auto& el : mesh.elements()) out.push_back(el.volume / target_volume);
  return out;
}

std::vector<double> edge_length_ratios(const Mesh& mesh, double target_edge) {
  std::vector<double> out;
  for (const auto& e : mesh.edges())
    out.push_back((mesh.node(e.lo).position - mesh.node(e.hi).position).norm() / target_edge);
  return out;
}

double fraction_within(std::span<const double> values, double lo, double hi) {
  if (values.empty()) return 0.0;
  const auto n = std::count_if(values.begin(), values.end(),
                               [&](double v) { return v >= lo && v <= hi; });
  return static_cast<double>(n) / static_cast<double>(values.size());
}

}  // namespace tetrodiff
