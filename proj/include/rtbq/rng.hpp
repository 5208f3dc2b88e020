#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace rtbq {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based random field. Every draw is a pure function of
// (seed, domain, stream, key words), so independent concerns never share
// draws and two runs that consume different numbers of samples in one stream
// stay aligned in all the others. That is what lets a baseline and a policy
// run see identical opportunity/click/install randomness.
class RandomField {
 public:
  enum class Stream : std::uint64_t {
    kOpportunities = 1,
    kWins = 2,
    kClicks = 3,
    kInstalls = 4,
    kDelays = 5,
    kExploration = 6,
    kScenario = 7,
  };

  // Domains separate simulated periods that must not share randomness.
  static constexpr std::uint64_t kTrainDomain = 0;
  static constexpr std::uint64_t kTestDomain = 1;
  static constexpr std::uint64_t kWarmupDomain = 2;

  explicit RandomField(std::uint64_t seed, std::uint64_t domain = kTrainDomain)
      : seed_(seed), domain_(domain) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t domain() const { return domain_; }

  std::uint64_t bits(Stream s, std::uint64_t a = 0, std::uint64_t b = 0,
                     std::uint64_t c = 0, std::uint64_t d = 0) const {
    std::uint64_t h = splitmix64(seed_ ^ 0x6a09e667f3bcc908ULL);
    h = splitmix64(h ^ domain_);
    h = splitmix64(h ^ static_cast<std::uint64_t>(s));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    h = splitmix64(h ^ d);
    return h;
  }

  static double to_u01(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
  }

  double uniform(Stream s, std::uint64_t a = 0, std::uint64_t b = 0,
                 std::uint64_t c = 0, std::uint64_t d = 0) const {
    return to_u01(bits(s, a, b, c, d));
  }

  double uniform_range(double lo, double hi, Stream s, std::uint64_t a = 0,
                       std::uint64_t b = 0, std::uint64_t c = 0) const {
    if (lo > hi) throw std::invalid_argument("uniform_range: lo > hi");
    return lo + (hi - lo) * uniform(s, a, b, c);
  }

  // Poisson count via inversion-by-products, chunked so that the product
  // never underflows for large means. Sub-draws use the trailing key word.
  std::int64_t poisson(double mean, Stream s, std::uint64_t a = 0,
                       std::uint64_t b = 0, std::uint64_t c = 0) const {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    std::int64_t total = 0;
    std::uint64_t draw = 0;
    double left = mean;
    while (left > 0.0) {
      const double chunk = left > 16.0 ? 16.0 : left;
      left -= chunk;
      const double limit = std::exp(-chunk);
      double p = 1.0;
      std::int64_t k = 0;
      do {
        ++k;
        p *= uniform(s, a, b, c, draw++);
      } while (p > limit);
      total += k - 1;
    }
    return total;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t domain_;
};

}  // namespace rtbq
