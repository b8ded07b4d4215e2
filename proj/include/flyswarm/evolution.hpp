#pragma once

// Parisian evolution of a fly population against one stereo frame:
// evaluate -> penalize + share -> select -> refill.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "flyswarm/error.hpp"
#include "flyswarm/fly.hpp"
#include "flyswarm/geometry.hpp"
#include "flyswarm/image.hpp"
#include "flyswarm/warning.hpp"

namespace flyswarm {

struct EvolutionParams {
  std::size_t population_size = 5000;
  double selection_ratio = 0.40;
  // Shares of the slots vacated by selection; they must sum to 1.
  double mutation_fraction = 0.40;
  double crossover_fraction = 0.50;
  double immigration_fraction = 0.10;
  /// Per-axis Gaussian std-dev in metres. Unset: 2% of the search-volume box extent.
  std::optional<Vec3> mutation_sigma;
  int neighborhood_radius = 2;
  int sharing_cell_px = 8;
  double sharing_exponent = 1.0;
  double fitness_epsilon = 1.0;
  std::uint64_t rng_seed = 1;

  void validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (population_size < 2) throw InvalidInput("population_size must be at least 2");
    if (!(selection_ratio > 0.0 && selection_ratio <= 1.0)) throw InvalidInput("selection_ratio must be in (0, 1]");
    if (!in_unit(mutation_fraction) || !in_unit(crossover_fraction) || !in_unit(immigration_fraction))
      throw InvalidInput("operator fractions must lie in [0, 1]");
    if (std::abs(mutation_fraction + crossover_fraction + immigration_fraction - 1.0) > 1e-9)
      throw InvalidInput("mutation, crossover and immigration fractions must sum to 1");
    if (mutation_sigma && (!(mutation_sigma->x >= 0.0) || !(mutation_sigma->y >= 0.0) || !(mutation_sigma->z >= 0.0)))
      throw InvalidInput("mutation_sigma components must be non-negative");
    if (neighborhood_radius < 0) throw InvalidInput("neighborhood_radius must be non-negative");
    if (sharing_cell_px < 1) throw InvalidInput("sharing_cell_px must be at least 1");
    if (!(sharing_exponent >= 0.0)) throw InvalidInput("sharing_exponent must be non-negative");
    if (!(fitness_epsilon > 0.0)) throw InvalidInput("fitness_epsilon must be positive");
  }

  Vec3 resolved_sigma(const SearchVolume& volume) const {
    if (mutation_sigma) return *mutation_sigma;
    return 0.02 * volume.bounding_box().extent();
  }
};

/// A stereo pair with its gradient maps computed once per frame.
struct StereoFrame {
  Image left;
  Image right;
  GradientMap grad_left;
  GradientMap grad_right;

  StereoFrame() = default;
  StereoFrame(Image l, Image r) : left(std::move(l)), right(std::move(r)) {
    if (left.width() != right.width() || left.height() != right.height() || left.channels() != right.channels())
      throw InvalidInput("stereo pair images differ in shape");
    grad_left = sobel_norm_map(left);
    grad_right = sobel_norm_map(right);
  }

  void check_matches(const StereoRig& rig) const {
    if (left.width() != rig.intrinsics.image_width || left.height() != rig.intrinsics.image_height)
      throw ConfigError("stereo pair is " + std::to_string(left.width()) + "x" + std::to_string(left.height()) +
                        " but the rig expects " + std::to_string(rig.intrinsics.image_width) + "x" +
                        std::to_string(rig.intrinsics.image_height));
  }
};

/// gradL(pL) * gradR(pR) / (epsilon + SSD over the window); 0 when either
/// window leaves its image.
inline double evaluate_fitness(const Fly& fly, const StereoFrame& frame, const StereoRig& rig,
                               const EvolutionParams& params) {
  if (!fly.position.finite()) return 0.0;
  const Projection proj = project(rig, fly.position, params.neighborhood_radius);
  if (!proj.visible) return 0.0;
  const Pixel pl = to_pixel(proj.left);
  const Pixel pr = to_pixel(proj.right);
  const double numerator = frame.grad_left.at(pl.col, pl.row) * frame.grad_right.at(pr.col, pr.row);
  if (numerator == 0.0) return 0.0;
  return numerator / (params.fitness_epsilon +
                      neighborhood_ssd(frame.left, frame.right, pl, pr, params.neighborhood_radius));
}

/// Fills raw_fitness for every fly. Each fly is independent, so work is split
/// into contiguous chunks over `threads` workers.
inline void evaluate_population(Population& pop, const StereoFrame& frame, const StereoRig& rig,
                                const EvolutionParams& params, unsigned threads = 1) {
  frame.check_matches(rig);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) pop.flies[i].raw_fitness = evaluate_fitness(pop.flies[i], frame, rig, params);
  };
  const std::size_t n = pop.flies.size();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n / 256 + 1)));
  if (threads == 1) {
    run(0, n);
    return;
  }
  std::vector<std::jthread> workers;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b < e) workers.emplace_back(run, b, e);
  }
}

/// Divides raw fitness by (flies sharing the same left-image grid cell)^exponent,
/// then zeroes penalized flies.
inline void apply_sharing(Population& pop, const StereoRig& rig, const EvolutionParams& params) {
  const int cell = params.sharing_cell_px;
  const int cols = (rig.intrinsics.image_width + cell - 1) / cell;
  const int rows = (rig.intrinsics.image_height + cell - 1) / cell;
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(cols) * rows, 0);
  std::vector<std::size_t> cell_of(pop.flies.size());

  for (std::size_t i = 0; i < pop.flies.size(); ++i) {
    const Vec3& p = pop.flies[i].position;
    Pixel px{0, 0};
    if (p.finite()) px = to_pixel(project(rig, p).left);
    const int cx = std::clamp(px.col, 0, rig.intrinsics.image_width - 1) / cell;
    const int cy = std::clamp(px.row, 0, rig.intrinsics.image_height - 1) / cell;
    cell_of[i] = static_cast<std::size_t>(cy) * cols + cx;
    ++counts[cell_of[i]];
  }
  for (std::size_t i = 0; i < pop.flies.size(); ++i) {
    Fly& f = pop.flies[i];
    if (f.penalized) {
      f.shared_fitness = 0.0;
      continue;
    }
    const double count = counts[cell_of[i]];
    f.shared_fitness = params.sharing_exponent == 1.0 ? f.raw_fitness / count
                                                      : f.raw_fitness / std::pow(count, params.sharing_exponent);
  }
}

inline std::size_t survivor_count(const EvolutionParams& params, std::size_t population_size) {
  const double n = std::ceil(params.selection_ratio * static_cast<double>(population_size) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(n), 1, population_size);
}

/// Elitist deterministic selection: the ceil(ratio * N) highest shared
/// fitness flies, best first, ties to the lower index.
inline std::vector<std::size_t> select(const Population& pop, const EvolutionParams& params) {
  return top_k(pop, survivor_count(params, pop.flies.size()));
}

/// Barycentric crossover: lambda * p1 + (1 - lambda) * p2.
inline Vec3 crossover(const Vec3& p1, const Vec3& p2, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw PreconditionViolation("crossover: lambda must lie in [0, 1]");
  if (lambda == 1.0) return p1;
  if (lambda == 0.0) return p2;
  return {lambda * p1.x + (1.0 - lambda) * p2.x, lambda * p1.y + (1.0 - lambda) * p2.y,
          lambda * p1.z + (1.0 - lambda) * p2.z};
}

inline constexpr int kMutationRetries = 8;

/// Adds independent N(0, sigma_axis) noise to each coordinate. Draws that
/// leave the volume are retried, and the last one is clamped back in.
inline Vec3 mutate(const Vec3& parent, const Vec3& sigma, const SearchVolume& volume, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  Vec3 child = parent;
  for (int attempt = 0; attempt <= kMutationRetries; ++attempt) {
    child = {parent.x + sigma.x * unit(rng), parent.y + sigma.y * unit(rng), parent.z + sigma.z * unit(rng)};
    if (volume.contains(child)) return child;
  }
  return volume.clamp(child);
}

inline Vec3 immigrate(const SearchVolume& volume, Rng& rng) { return volume.sample(rng); }

inline Population initialize_population(const SearchVolume& volume, const EvolutionParams& params, Rng& rng) {
  Population pop;
  pop.flies.resize(params.population_size);
  for (auto& f : pop.flies) f.position = volume.sample(rng);
  return pop;
}

/// Scores of the evaluated population, taken before selection replaced anyone.
struct GenerationSummary {
  double global_warning = 0.0;
  double best_raw_fitness = 0.0;
  std::size_t penalized = 0;
};

/// Raw fitness, penalty flags and shared fitness for the current frame.
inline void score_population(Population& pop, const StereoFrame& frame, const StereoRig& rig,
                             const EvolutionParams& params, const WarningParams& wp, unsigned threads = 1) {
  evaluate_population(pop, frame, rig, params, threads);
  mark_useless(pop.flies, rig, wp);
  apply_sharing(pop, rig, params);
}

/// One synchronous generation. Survivors keep their slots' scores; offspring
/// are placed after them with zeroed scores until the next evaluation.
inline GenerationSummary step_generation(Population& pop, const StereoFrame& frame, const SearchVolume& volume,
                                         const EvolutionParams& params, const WarningParams& wp, Rng& rng,
                                         unsigned threads = 1) {
  const StereoRig& rig = volume.rig();
  score_population(pop, frame, rig, params, wp, threads);

  GenerationSummary summary;
  summary.global_warning = global_warning(pop, wp).global;
  for (const auto& f : pop.flies) {
    summary.best_raw_fitness = std::max(summary.best_raw_fitness, f.raw_fitness);
    summary.penalized += f.penalized ? 1 : 0;
  }

  const std::vector<std::size_t> survivors = select(pop, params);
  const std::size_t n = pop.flies.size();
  const std::size_t s = survivors.size();
  const std::size_t vacated = n - s;

  std::size_t n_cross = static_cast<std::size_t>(std::llround(params.crossover_fraction * static_cast<double>(vacated)));
  std::size_t n_mut = static_cast<std::size_t>(std::llround(params.mutation_fraction * static_cast<double>(vacated)));
  n_cross = std::min(n_cross, vacated);
  n_mut = std::min(n_mut, vacated - n_cross);
  if (s < 2) {
    n_mut += n_cross;
    n_cross = 0;
  }
  const std::size_t n_imm = vacated - n_cross - n_mut;

  std::vector<Fly> next;
  next.reserve(n);
  for (std::size_t idx : survivors) next.push_back(pop.flies[idx]);

  const Vec3 sigma = params.resolved_sigma(volume);
  std::uniform_int_distribution<std::size_t> pick(0, s - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto offspring = [](Vec3 p) { return Fly{p, 0.0, 0.0, false}; };

  for (std::size_t i = 0; i < n_cross; ++i) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    const Vec3 child = crossover(next[a].position, next[b].position, unit(rng));
    next.push_back(offspring(volume.clamp(child)));
  }
  for (std::size_t i = 0; i < n_mut; ++i) next.push_back(offspring(mutate(next[pick(rng)].position, sigma, volume, rng)));
  for (std::size_t i = 0; i < n_imm; ++i) next.push_back(offspring(immigrate(volume, rng)));

  pop.flies = std::move(next);
  ++pop.generation_index;
  return summary;
}

}  // namespace flyswarm
