#pragma once

// Frontal-collision risk derived from a fly population.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "flyswarm/error.hpp"
#include "flyswarm/fly.hpp"
#include "flyswarm/geometry.hpp"

namespace flyswarm {

struct WarningParams {
  double max_height_m = 2.0;
  double min_height_m = 0.10;
  double max_range_m = 16.0;
  double x_clamp_m = 0.5;
  double z_clamp_m = 1.0;

  void validate() const {
    if (!(min_height_m >= 0.0 && min_height_m < max_height_m))
      throw InvalidInput("warning params: need 0 <= min_height_m < max_height_m");
    if (!(x_clamp_m > 0.0) || !(z_clamp_m > 0.0)) throw InvalidInput("warning params: clamps must be positive");
    if (!(max_range_m > z_clamp_m)) throw InvalidInput("warning params: max_range_m must exceed z_clamp_m");
  }
};

struct WarningReport {
  std::vector<double> per_fly;
  double global = 0.0;
};

/// Flies too high, hugging the road, or beyond the useful range. Height is
/// measured from the road plane, camera_height_m below the optical centres.
inline bool is_useless(const Fly& fly, const StereoRig& rig, const WarningParams& wp) {
  const double height = fly.position.y + rig.camera_height_m;
  return height > wp.max_height_m || height < wp.min_height_m || fly.position.z > wp.max_range_m;
}

inline void mark_useless(std::vector<Fly>& flies, const StereoRig& rig, const WarningParams& wp) {
  for (auto& f : flies) f.penalized = is_useless(f, rig, wp);
}

/// raw_fitness / (x'^2 * z') with x' = max(|x|, x_clamp) and z' = max(z, z_clamp);
/// penalized flies score 0.
inline double warning_value(const Fly& fly, const WarningParams& wp) {
  if (fly.penalized) return 0.0;
  const double x = std::max(std::abs(fly.position.x), wp.x_clamp_m);
  const double z = std::max(fly.position.z, wp.z_clamp_m);
  return fly.raw_fitness / (x * x * z);
}

inline WarningReport global_warning(const Population& pop, const WarningParams& wp) {
  if (pop.flies.empty()) throw InvalidInput("global_warning: empty population");
  WarningReport report;
  report.per_fly.reserve(pop.flies.size());
  for (const auto& f : pop.flies) report.per_fly.push_back(warning_value(f, wp));
  report.global = std::accumulate(report.per_fly.begin(), report.per_fly.end(), 0.0) /
                  static_cast<double>(report.per_fly.size());
  return report;
}

/// Strict ranking: higher shared fitness first, lower index on ties.
struct SharedFitnessRank {
  const std::vector<Fly>* flies;
  bool operator()(std::size_t a, std::size_t b) const {
    const double fa = (*flies)[a].shared_fitness;
    const double fb = (*flies)[b].shared_fitness;
    if (fa != fb) return fa > fb;
    return a < b;
  }
};

/// Indices of the k best flies by shared fitness, best first.
inline std::vector<std::size_t> top_k(const Population& pop, std::size_t k) {
  if (k > pop.flies.size()) throw PreconditionViolation("top_k: k exceeds population size");
  std::vector<std::size_t> idx(pop.flies.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const SharedFitnessRank rank{&pop.flies};
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), rank);
  idx.resize(k);
  return idx;
}

}  // namespace flyswarm
