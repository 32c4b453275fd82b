#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace kinlab {

// Counter-based stream: output n is a pure function of (seed, worker, tag, n),
// so results never depend on scheduling.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t worker, std::uint64_t tag);
  CounterRng(std::uint64_t seed, std::uint64_t worker, std::string_view tag);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // (0, 1], never exactly zero so log() is safe.
  double uniform();
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t hash_tag(std::string_view tag);
std::uint64_t mix64(std::uint64_t x);

}  // namespace kinlab
