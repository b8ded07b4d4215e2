#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

#include "flyswarm/evolution.hpp"
#include "flyswarm/synth.hpp"
#include "oracles.hpp"

using namespace flyswarm;

namespace {

/// One textured plane filling the view at `depth`.
Scene plane_scene(double depth) {
  Scene s;
  TexturedRect wall;
  wall.center = {0, 0, depth};
  wall.width_m = 40;
  wall.height_m = 30;
  wall.texture_seed = 3;
  wall.texture_cell_m = 0.05;
  s.obstacles.push_back(wall);
  return s;
}

StereoFrame render(const Scene& scene, const StereoRig& rig) {
  auto [l, r] = render_stereo_pair(scene, rig);
  return StereoFrame(std::move(l), std::move(r));
}

Population population_with_fitness(const std::vector<double>& shared) {
  Population pop;
  for (double f : shared) pop.flies.push_back(Fly{{0, 0, 5}, f, f, false});
  return pop;
}

}  // namespace

TEST(EvolutionParams, DefaultsAndValidation) {
  EvolutionParams p;
  EXPECT_EQ(p.population_size, 5000u);
  EXPECT_DOUBLE_EQ(p.selection_ratio, 0.40);
  EXPECT_DOUBLE_EQ(p.mutation_fraction, 0.40);
  EXPECT_EQ(p.neighborhood_radius, 2);
  EXPECT_NO_THROW(p.validate());
  p.crossover_fraction = 0.6;
  EXPECT_THROW(p.validate(), InvalidInput);
  p = EvolutionParams{};
  p.fitness_epsilon = 0;
  EXPECT_THROW(p.validate(), InvalidInput);
  p = EvolutionParams{};
  p.population_size = 1;
  EXPECT_THROW(p.validate(), InvalidInput);
}

TEST(EvolutionParams, DefaultSigmaIsTwoPercentOfBoxExtent) {
  const SearchVolume vol(StereoRig{}, 2);
  const Vec3 s = EvolutionParams{}.resolved_sigma(vol);
  const Vec3 e = vol.bounding_box().extent();
  EXPECT_DOUBLE_EQ(s.x, 0.02 * e.x);
  EXPECT_DOUBLE_EQ(s.y, 0.02 * e.y);
  EXPECT_DOUBLE_EQ(s.z, 0.02 * e.z);
}

TEST(Fitness, UniformRegionScoresZero) {
  const StereoRig rig;
  Scene sky;  // nothing to hit
  const StereoFrame frame = render(sky, rig);
  const EvolutionParams params;
  EXPECT_EQ(evaluate_fitness(Fly{{0, 1, 6}}, frame, rig, params), 0.0);
}

TEST(Fitness, InvisibleFlyScoresZero) {
  const StereoRig rig;
  const StereoFrame frame = render(plane_scene(5), rig);
  const EvolutionParams params;
  EXPECT_EQ(evaluate_fitness(Fly{{100, 0, 5}}, frame, rig, params), 0.0);
  EXPECT_EQ(evaluate_fitness(Fly{{0, 0, -3}}, frame, rig, params), 0.0);
}

TEST(Fitness, MatchedWindowsReduceToGradientProductOverEpsilon) {
  const StereoRig rig;
  const StereoFrame frame = render(plane_scene(5), rig);
  EvolutionParams params;
  params.fitness_epsilon = 2.5;
  // Disparity at 5 m is exactly 40 px, so both windows sample the same surface points.
  int checked = 0;
  for (double x = -1.0; x <= 1.0; x += 0.013) {
    const Fly fly{{x, 0.1, 5.0}};
    const Projection p = project(rig, fly.position, 2);
    const Pixel pl = to_pixel(p.left), pr = to_pixel(p.right);
    if (neighborhood_ssd(frame.left, frame.right, pl, pr, 2) != 0.0) continue;
    const double g1 = frame.grad_left.at(pl.col, pl.row), g2 = frame.grad_right.at(pr.col, pr.row);
    EXPECT_DOUBLE_EQ(evaluate_fitness(fly, frame, rig, params), g1 * g2 / 2.5);
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Fitness, OnSurfaceBeatsDisplacedFly) {
  const StereoRig rig;
  const StereoFrame frame = render(plane_scene(5), rig);
  const EvolutionParams params;
  int compared = 0;
  Rng rng(2);
  std::uniform_real_distribution<double> ux(-1.5, 1.5), uy(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 on{ux(rng), uy(rng), 5.0};
    const Vec3 off{on.x, on.y, 6.0};
    const double f_on = oracle::fitness(frame.left, frame.right, rig, on, 2, 1.0);
    if (f_on == 0.0) continue;  // window on a texture-cell interior
    const double f_off = oracle::fitness(frame.left, frame.right, rig, off, 2, 1.0);
    EXPECT_GT(f_on, f_off);
    EXPECT_DOUBLE_EQ(evaluate_fitness(Fly{on}, frame, rig, params), f_on);
    ++compared;
  }
  EXPECT_GT(compared, 100);
}

TEST(Fitness, MatchesStraightLoopOracle) {
  const StereoRig rig;
  const StereoFrame frame = render(make_preset(Preset::Pedestrian4m, rig), rig);
  const EvolutionParams params;
  const SearchVolume vol(rig, 2);
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p = vol.sample(rng);
    const double got = evaluate_fitness(Fly{p}, frame, rig, params);
    ASSERT_LE(oracle::relative_error(got, oracle::fitness(frame.left, frame.right, rig, p, 2, 1.0)), 1e-9);
  }
}

TEST(Sharing, LoneFlyKeepsRawFitness) {
  const StereoRig rig;
  Population pop;
  pop.flies.push_back(Fly{{0, 0, 5}, 7.0, 0, false});
  pop.flies.push_back(Fly{{2, 1, 5}, 3.0, 0, false});
  apply_sharing(pop, rig, EvolutionParams{});
  EXPECT_EQ(pop.flies[0].shared_fitness, 7.0);
  EXPECT_EQ(pop.flies[1].shared_fitness, 3.0);
}

TEST(Sharing, FourFliesInOneCellShareByFour) {
  const StereoRig rig;
  Population pop;
  // Left projections at columns 324..327 of row 240 fall into one 8 px cell (320..327).
  for (int i = 0; i < 4; ++i) {
    const double col = 324 + i;
    pop.flies.push_back(Fly{{(col - 320) * 5 / 500.0 - 0.2, 0, 5}, 8.0, 0, false});
  }
  apply_sharing(pop, rig, EvolutionParams{});
  for (const auto& f : pop.flies) EXPECT_DOUBLE_EQ(f.shared_fitness, 2.0);
}

TEST(Sharing, PenalizedFliesAreZeroed) {
  const StereoRig rig;
  Population pop;
  pop.flies.push_back(Fly{{0, 0, 5}, 7.0, 0, true});
  apply_sharing(pop, rig, EvolutionParams{});
  EXPECT_EQ(pop.flies[0].shared_fitness, 0.0);
}

TEST(Sharing, ExponentAppliesToCount) {
  const StereoRig rig;
  EvolutionParams params;
  params.sharing_exponent = 2.0;
  Population pop;
  for (int i = 0; i < 3; ++i) pop.flies.push_back(Fly{{0, 0, 5}, 9.0, 0, false});
  apply_sharing(pop, rig, params);
  for (const auto& f : pop.flies) EXPECT_DOUBLE_EQ(f.shared_fitness, 1.0);
}

TEST(Sharing, EqualRawCellsConserveTotalFitness) {
  const StereoRig rig;
  const EvolutionParams params;
  const SearchVolume vol(rig, 2);
  Rng rng(4);
  Population pop;
  for (int i = 0; i < 3000; ++i) pop.flies.push_back(Fly{vol.sample(rng)});
  // Give every fly in a cell the same raw fitness (a function of its cell).
  auto cell_of = [&](const Fly& f) {
    const Pixel p = to_pixel(project(rig, f.position).left);
    return std::pair{p.col / 8, p.row / 8};
  };
  for (auto& f : pop.flies) {
    const auto [cx, cy] = cell_of(f);
    f.raw_fitness = 1.0 + cx * 0.37 + cy * 1.91;
  }
  apply_sharing(pop, rig, params);
  // Each cell's flies split that cell's raw fitness between them.
  std::map<std::pair<int, int>, double> cell_raw;
  double shared_total = 0;
  for (const auto& f : pop.flies) {
    cell_raw[cell_of(f)] = f.raw_fitness;
    shared_total += f.shared_fitness;
    ASSERT_LE(f.shared_fitness, f.raw_fitness);
  }
  double raw_total = 0;
  for (const auto& [cell, raw] : cell_raw) raw_total += raw;
  EXPECT_GT(cell_raw.size(), 100u);
  EXPECT_LT(cell_raw.size(), pop.size());
  EXPECT_NEAR(shared_total / raw_total, 1.0, 1e-9);
}

TEST(Select, KeepsTopFortyPercent) {
  Population pop = population_with_fitness({5, 1, 9, 3, 7, 2, 8, 0, 6, 4});
  const auto s = select(pop, EvolutionParams{});
  EXPECT_EQ(s, (std::vector<std::size_t>{2, 6, 4, 8}));
}

TEST(Select, TiesGoToLowerIndex) {
  Population pop = population_with_fitness(std::vector<double>(10, 1.0));
  EXPECT_EQ(select(pop, EvolutionParams{}), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Select, SurvivorCountRoundsUp) {
  EvolutionParams p;
  EXPECT_EQ(survivor_count(p, 5000), 2000u);
  EXPECT_EQ(survivor_count(p, 11), 5u);
  EXPECT_EQ(survivor_count(p, 2), 1u);
}

TEST(Crossover, EndpointsAndMidpoints) {
  const Vec3 a{0, 0, 2}, b{2, 4, 6};
  EXPECT_EQ(crossover(a, b, 1.0), a);
  EXPECT_EQ(crossover(a, b, 0.0), b);
  EXPECT_EQ(crossover(a, b, 0.5), (Vec3{1, 2, 4}));
  EXPECT_EQ(crossover({4, 0, 8}, {0, 8, 4}, 0.25), (Vec3{1, 6, 5}));
}

TEST(Crossover, LambdaOutsideUnitIntervalIsRejected) {
  EXPECT_THROW(crossover({}, {}, -0.01), PreconditionViolation);
  EXPECT_THROW(crossover({}, {}, 1.01), PreconditionViolation);
  EXPECT_THROW(crossover({}, {}, std::nan("")), PreconditionViolation);
}

TEST(Mutate, ZeroSigmaIsIdentity) {
  const SearchVolume vol(StereoRig{}, 2);
  Rng rng(1);
  const Vec3 p{0.3, -0.2, 7};
  EXPECT_EQ(mutate(p, {0, 0, 0}, vol, rng), p);
}

TEST(Mutate, GaussianMomentsAwayFromBoundaries) {
  const SearchVolume vol(StereoRig{}, 2);
  Rng rng(8);
  const Vec3 parent{0, 0, 10};  // slice at 10 m spans several metres; no boundary hits
  const int n = 100000;
  const double sigma = 0.1;
  double s[3] = {0, 0, 0}, s2[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const Vec3 c = mutate(parent, {sigma, sigma, sigma}, vol, rng);
    const double d[3] = {c.x - parent.x, c.y - parent.y, c.z - parent.z};
    for (int k = 0; k < 3; ++k) s[k] += d[k], s2[k] += d[k] * d[k];
  }
  for (int k = 0; k < 3; ++k) {
    const double mean = s[k] / n;
    const double sd = std::sqrt(s2[k] / n - mean * mean);
    EXPECT_LT(std::abs(mean), 3 * sigma / std::sqrt(double(n)));
    EXPECT_NEAR(sd / sigma, 1.0, 0.02);
  }
}

TEST(Mutate, OutputAlwaysInsideVolume) {
  const SearchVolume vol(StereoRig{}, 2);
  Rng rng(12);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 parent = vol.sample(rng);
    ASSERT_TRUE(vol.contains(mutate(parent, {3, 3, 5}, vol, rng)));
  }
}

TEST(Immigrate, DelegatesToVolumeSampling) {
  const SearchVolume vol(StereoRig{}, 2);
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(immigrate(vol, a), vol.sample(b));
}

TEST(StepGeneration, ConservesSizeAndCountsGenerations) {
  const StereoRig rig;
  const StereoFrame frame = render(make_preset(Preset::Pedestrian4m, rig), rig);
  EvolutionParams params;
  params.population_size = 501;
  const SearchVolume vol(rig, 2);
  Rng rng(3);
  Population pop = initialize_population(vol, params, rng);
  for (int g = 0; g < 5; ++g) {
    step_generation(pop, frame, vol, params, WarningParams{}, rng);
    EXPECT_EQ(pop.size(), 501u);
    EXPECT_EQ(pop.generation_index, std::uint64_t(g + 1));
    for (const auto& f : pop.flies) ASSERT_TRUE(vol.contains(f.position));
  }
}

TEST(StepGeneration, DeterministicForFixedSeed) {
  const StereoRig rig;
  const StereoFrame frame = render(make_preset(Preset::Pedestrian4m, rig), rig);
  EvolutionParams params;
  params.population_size = 1000;
  const SearchVolume vol(rig, 2);
  auto run = [&] {
    Rng rng(99);
    Population pop = initialize_population(vol, params, rng);
    for (int g = 0; g < 50; ++g) step_generation(pop, frame, vol, params, WarningParams{}, rng);
    return pop;
  };
  const Population a = run();
  const Population b = run();
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(std::memcmp(a.flies.data(), b.flies.data(), a.size() * sizeof(Fly)), 0);
}

TEST(StepGeneration, ThreadedEvaluationMatchesSerial) {
  const StereoRig rig;
  const StereoFrame frame = render(make_preset(Preset::Pedestrian4m, rig), rig);
  const EvolutionParams params;
  const SearchVolume vol(rig, 2);
  Rng rng(6);
  Population a = initialize_population(vol, params, rng);
  Population b = a;
  evaluate_population(a, frame, rig, params, 1);
  evaluate_population(b, frame, rig, params, 4);
  EXPECT_EQ(a, b);
}

TEST(StepGeneration, TwoFlyPopulationFallsBackToMutation) {
  const StereoRig rig;
  const StereoFrame frame = render(plane_scene(5), rig);
  EvolutionParams params;
  params.population_size = 2;
  const SearchVolume vol(rig, 2);
  Rng rng(1);
  Population pop = initialize_population(vol, params, rng);
  for (int g = 0; g < 10; ++g) step_generation(pop, frame, vol, params, WarningParams{}, rng);
  EXPECT_EQ(pop.size(), 2u);
}

TEST(StepGeneration, RejectsFrameOfWrongSize) {
  StereoRig rig;
  const StereoFrame frame(Image(100, 80, 1), Image(100, 80, 1));
  const SearchVolume vol(rig, 2);
  Rng rng(1);
  EvolutionParams params;
  params.population_size = 10;
  Population pop = initialize_population(vol, params, rng);
  EXPECT_THROW(step_generation(pop, frame, vol, params, WarningParams{}, rng), ConfigError);
}

TEST(StepGeneration, FlyConcentratesOnPlane) {
  const StereoRig rig;
  const StereoFrame frame = render(plane_scene(6), rig);
  EvolutionParams params;
  params.population_size = 2000;
  const SearchVolume vol(rig, 2);
  Rng rng(21);
  Population pop = initialize_population(vol, params, rng);
  for (int g = 0; g < 60; ++g) step_generation(pop, frame, vol, params, WarningParams{}, rng);
  score_population(pop, frame, rig, params, WarningParams{});
  const auto best = top_k(pop, 100);
  int on = 0;
  for (auto i : best) on += std::abs(pop.flies[i].position.z - 6.0) <= 0.3;
  EXPECT_GE(on, 70);
}
