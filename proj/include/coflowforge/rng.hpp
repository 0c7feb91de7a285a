#pragma once

// Seeded RNG with hand-rolled distributions.  std::* distributions are
// implementation-defined, so identical seeds would not give identical streams
// across standard libraries; these do.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cf {

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  // [0, 1), 53-bit resolution
  double uniform01() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // [0, n)
  int uniform_int(int n) {
    using u128 = unsigned __int128;
    return static_cast<int>((u128(gen_()) * static_cast<uint64_t>(n)) >> 64);
  }

  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

  // Knuth's method; fine for the small means used here.
  int poisson(double mean) {
    double limit = std::exp(-mean);
    double p = 1.0;
    int k = 0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  // Box-Muller, zero mean
  double normal(double stddev) {
    if (has_spare_) {
      has_spare_ = false;
      return stddev * spare_;
    }
    double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return stddev * r * std::cos(theta);
  }

  // Fisher-Yates
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[i], v[static_cast<size_t>(j)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cf
