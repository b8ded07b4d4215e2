#pragma once

#include <cstdint>
#include <vector>

#include "flyswarm/geometry.hpp"

namespace flyswarm {

/// One individual: a 3-D point in the rig frame plus its scores.
struct Fly {
  Vec3 position;
  double raw_fitness = 0.0;
  double shared_fitness = 0.0;
  bool penalized = false;

  friend bool operator==(const Fly&, const Fly&) = default;
};

struct Population {
  std::vector<Fly> flies;
  std::uint64_t generation_index = 0;

  std::size_t size() const { return flies.size(); }
  friend bool operator==(const Population&, const Population&) = default;
};

}  // namespace flyswarm
