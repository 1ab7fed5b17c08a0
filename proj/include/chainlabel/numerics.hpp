#ifndef CHAINLABEL_NUMERICS_HPP
#define CHAINLABEL_NUMERICS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace chainlabel {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Elementwise max(0, x). Accepts any dense expression, returns a plain vector.
template <typename Derived>
Vec relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(0.0);
}

/// Elementwise logistic 1/(1+e^-x), evaluated tail-stably.
template <typename Derived>
Vec sigmoid(const Eigen::MatrixBase<Derived>& x) {
  Vec v = x;
  for (Index i = 0; i < v.size(); ++i) {
    const double z = v[i];
    if (z >= 0.0) {
      v[i] = 1.0 / (1.0 + std::exp(-z));
    } else {
      const double e = std::exp(z);
      v[i] = e / (1.0 + e);
    }
  }
  return v;
}

/// Max-shifted softmax. Entries of -inf are treated as masked and map to
/// exactly 0. Throws std::invalid_argument("empty support") when every entry
/// is masked, and rejects NaN/+inf inputs.
Vec softmax(const Vec& scores);

/// Log-space companion of softmax: masked entries stay -inf.
Vec log_softmax(const Vec& scores);

/// Deterministic stream of pseudo-random draws.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard, so identical seeds give identical draws on every platform.
/// All derived draws (uniform, normal, shuffle) are built here from the raw
/// 64-bit stream instead of std:: distributions, which are not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) from the top 53 bits of one engine draw.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool bernoulli(double p) { return next_double() < p; }

  /// Standard normal via Box-Muller; two engine draws per call, no caching.
  double normal(double mean = 0.0, double sd = 1.0) {
    const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform integer in [0, n). Plain modulo; bias is negligible for the
  /// desk-scale ranges used here.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Fisher-Yates using this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64-style combiner for deriving independent sub-stream seeds.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

/// Glorot-uniform matrix on [-a, a], a = sqrt(6/(rows+cols)), drawn in
/// row-major entry order.
Mat glorot_init(Index rows, Index cols, Rng& rng);

/// Optional runtime verification that probability vectors sum to 1 (+-1e-9
/// over unmasked entries). Off by default; the acceptance suite switches it
/// on for a full pipeline run.
void set_prob_checks(bool enabled);
bool prob_checks_enabled();

/// Throws std::logic_error if checks are enabled and p does not sum to 1
/// within 1e-9 (masked entries are exact zeros, so the full sum applies).
void check_prob_vector(const Vec& p);

}  // namespace chainlabel

#endif  // CHAINLABEL_NUMERICS_HPP
