#pragma once

#include "convflow/types.hpp"

#include <cstdint>

namespace convflow {

// Stateless counter-based generator: draw i of stream s under seed k is a pure
// function of (k, s, i), so sample ranges can be split across workers.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t at(std::uint64_t counter) const;
  std::uint64_t next() { return at(counter_++); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  Vector uniform_box(const Vector& center, double radius);
  Vector normal_vector(Eigen::Index n);

  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace convflow
