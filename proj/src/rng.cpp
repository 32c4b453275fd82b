#include "kinlab/rng.hpp"

#include <cmath>

namespace kinlab {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t worker, std::uint64_t tag)
    : key_(mix64(mix64(mix64(seed) ^ worker) ^ tag)) {}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t worker, std::string_view tag)
    : CounterRng(seed, worker, hash_tag(tag)) {}

CounterRng::result_type CounterRng::operator()() {
  return mix64(key_ ^ mix64(counter_++));
}

double CounterRng::uniform() {
  return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53;
}

double CounterRng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace kinlab
