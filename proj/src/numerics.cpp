#include "chainlabel/numerics.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace chainlabel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_scores_sane(const Vec& scores) {
  if (scores.size() < 1) {
    throw std::invalid_argument("softmax: empty input");
  }
  for (Index i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (std::isnan(s) || (std::isinf(s) && s > 0.0)) {
      throw std::invalid_argument("softmax: scores must be finite or -inf");
    }
  }
}

}  // namespace

Vec softmax(const Vec& scores) {
  require_scores_sane(scores);
  const double m = scores.maxCoeff();
  if (m == kNegInf) {
    throw std::invalid_argument("empty support");
  }
  Vec p(scores.size());
  double sum = 0.0;
  for (Index i = 0; i < scores.size(); ++i) {
    p[i] = scores[i] == kNegInf ? 0.0 : std::exp(scores[i] - m);
    sum += p[i];
  }
  p /= sum;
  return p;
}

Vec log_softmax(const Vec& scores) {
  require_scores_sane(scores);
  const double m = scores.maxCoeff();
  if (m == kNegInf) {
    throw std::invalid_argument("empty support");
  }
  double sum = 0.0;
  for (Index i = 0; i < scores.size(); ++i) {
    if (scores[i] != kNegInf) sum += std::exp(scores[i] - m);
  }
  const double lse = m + std::log(sum);
  Vec out(scores.size());
  for (Index i = 0; i < scores.size(); ++i) {
    out[i] = scores[i] == kNegInf ? kNegInf : scores[i] - lse;
  }
  return out;
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Mat glorot_init(Index rows, Index cols, Rng& rng) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("glorot_init: rows and cols must be >= 1");
  }
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = rng.uniform(-a, a);
    }
  }
  return m;
}

namespace {
std::atomic<bool> g_prob_checks{false};
}

void set_prob_checks(bool enabled) { g_prob_checks.store(enabled); }

bool prob_checks_enabled() { return g_prob_checks.load(); }

void check_prob_vector(const Vec& p) {
  if (!prob_checks_enabled()) return;
  const double sum = p.sum();
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::logic_error("probability vector does not sum to 1");
  }
}

}  // namespace chainlabel
