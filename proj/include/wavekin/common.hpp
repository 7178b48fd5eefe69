#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wk {

using cplx = std::complex<double>;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Violation of an invariant the library is supposed to uphold by theory.
// CLI maps this to exit code 2; anything else nonzero is exit 1.
struct theory_violation : std::runtime_error {
  std::string trace;
  explicit theory_violation(const std::string& msg, std::string tr = {})
      : std::runtime_error(msg), trace(std::move(tr)) {}
};

inline uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic per-stream RNG. Gaussians are generated by explicit
// Box-Muller so results are identical across standard libraries.
class RngStream {
 public:
  RngStream(uint64_t seed_base, uint64_t stream_id) {
    uint64_t s = seed_base;
    (void)splitmix64(s);
    s ^= 0x6a09e667f3bcc909ull * (stream_id + 1);
    std::seed_seq seq{uint32_t(s), uint32_t(s >> 32), uint32_t(stream_id),
                      uint32_t(stream_id >> 32)};
    eng_.seed(seq);
  }

  uint64_t bits() { return eng_(); }

  double uniform01() {  // in (0,1]
    return (bits() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  uint64_t below(uint64_t n) {  // unbiased in [0,n)
    uint64_t lim = ~uint64_t(0) - ~uint64_t(0) % n;
    uint64_t v;
    do v = bits();
    while (v >= lim);
    return v % n;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = uniform01(), v = uniform01();
    double r = std::sqrt(-2.0 * std::log(u));
    double a = 2.0 * M_PI * v;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // standard complex Gaussian, E|g|^2 = 1
  cplx cgaussian() {
    return {gaussian() * M_SQRT1_2, gaussian() * M_SQRT1_2};
  }

  // uniform on the unit circle
  cplx cphase() {
    double a = 2.0 * M_PI * uniform01();
    return {std::cos(a), std::sin(a)};
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0;
};

struct Hash128 {
  uint64_t lo = 0xcbf29ce484222325ull, hi = 0x100000001b3ull;
  void mix(uint64_t v) {
    lo ^= v;
    lo *= 0x100000001b3ull;
    uint64_t s = hi ^ (v * 0x9e3779b97f4a7c15ull);
    hi = splitmix64(s);
  }
  bool operator==(const Hash128&) const = default;
};

struct Hash128Hasher {
  size_t operator()(const Hash128& h) const { return h.lo ^ (h.hi * 31); }
};

// Dispersion relation |k|^sigma; sigma==2 kept exact on rationals.
inline double omega_of(double k, double sigma) {
  double a = std::abs(k);
  if (sigma == 2.0) return a * a;
  if (sigma == 0.5) return std::sqrt(a);
  return std::pow(a, sigma);
}

inline void parallel_for(int jobs, int64_t n,
                         const std::function<void(int64_t, int64_t)>& body) {
  if (jobs <= 1 || n < 2) {
    body(0, n);
    return;
  }
  jobs = int(std::min<int64_t>(jobs, n));
  std::vector<std::thread> ts;
  int64_t chunk = (n + jobs - 1) / jobs;
  for (int j = 0; j < jobs; j++) {
    int64_t lo = j * chunk, hi = std::min<int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    ts.emplace_back(body, lo, hi);
  }
  for (auto& t : ts) t.join();
}

}  // namespace wk
