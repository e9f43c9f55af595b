#include "pacconf/binom_ci.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pacconf {

namespace {

constexpr double kTiny = 1e-300;
constexpr double kCfEps = 1e-16;
constexpr double kQuantileTol = 1e-14;
constexpr int kQuantileMaxIter = 200;
constexpr double kStirlingMin = 10.0;

void require_shape(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("beta shape parameters must be positive and finite");
  }
}

void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
  }
}

// Remainder of Stirling's series for log Gamma(z), valid for z >= 10.
double stirling_tail(double z) {
  const double r = 1.0 / z;
  const double r2 = r * r;
  return r * (1.0 / 12.0 -
              r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))));
}

// log( x^a (1-x)^b / B(a,b) ). The lgamma differences lose about
// log(a+b) * eps when a+b is large, so large shapes go through Stirling's
// series with the leading terms cancelled analytically.
double log_beta_front(double x, double a, double b) {
  const double lx = std::log(x);
  const double l1x = std::log1p(-x);
  if (a >= kStirlingMin && b >= kStirlingMin) {
    const double ab = a + b;
    const double x0 = a / ab;
    const double dev = a * std::log1p((x - x0) / x0) + b * std::log1p((x0 - x) / (1.0 - x0));
    return dev + 0.5 * std::log(a / ab * b / (2.0 * std::numbers::pi)) + stirling_tail(ab) -
           stirling_tail(a) - stirling_tail(b);
  }
  if (b >= kStirlingMin) {
    // lgamma(b) - lgamma(a+b) via Stirling, lgamma(a) directly.
    const double ab = a + b;
    return a * lx + b * l1x - std::lgamma(a) + (b - 0.5) * std::log1p(a / b) + a * std::log(ab) -
           a + stirling_tail(ab) - stirling_tail(b);
  }
  if (a >= kStirlingMin) {
    const double ab = a + b;
    return a * lx + b * l1x - std::lgamma(b) + (a - 0.5) * std::log1p(b / a) + b * std::log(ab) -
           b + stirling_tail(ab) - stirling_tail(a);
  }
  return a * lx + b * l1x - (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

// Modified Lentz evaluation of the continued fraction for I_x(a,b).
// y = 1 - x is passed separately because the mirrored call only knows x to the
// rounding of 1 - x, and the leading denominator cancels badly near x = 1.
double beta_continued_fraction(double x, double y, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  const int max_iter = 1000 + static_cast<int>(20.0 * std::sqrt(std::max(a, b)));
  double c = 1.0;
  double d = (x > 0.5 ? (1.0 - b) + qab * y : qap - qab * x) / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double step = d * c;
    h *= step;
    if (std::fabs(step - 1.0) < kCfEps) break;
  }
  return h;
}

double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double log_theta, double log_1m_theta,
                        double log_n_fact) {
  const double kd = static_cast<double>(k);
  const double nk = static_cast<double>(n - k);
  double term = log_n_fact - std::lgamma(kd + 1.0) - std::lgamma(nk + 1.0);
  if (k > 0) term += kd * log_theta;
  if (n > k) term += nk * log_1m_theta;
  return term;
}

// Sum of pmf(k) for k in [first, last], log-sum-exp over the terms.
double binomial_range_sum(std::uint64_t first, std::uint64_t last, std::uint64_t n, double theta) {
  if (first > last) return 0.0;
  const double lt = std::log(theta);
  const double l1t = std::log1p(-theta);
  const double lnf = std::lgamma(static_cast<double>(n) + 1.0);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::uint64_t k = first; k <= last; ++k) {
    peak = std::max(peak, log_binomial_pmf(k, n, lt, l1t, lnf));
  }
  double acc = 0.0;
  for (std::uint64_t k = first; k <= last; ++k) {
    acc += std::exp(log_binomial_pmf(k, n, lt, l1t, lnf) - peak);
  }
  return std::min(1.0, std::exp(peak + std::log(acc)));
}

// Root of a monotone function on [0,1] by plain bisection. `increasing` gives
// the direction; returns the boundary point where the sign flips.
template <typename F>
double bisect_unit(F&& f, bool increasing) {
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const bool above = f(mid) >= 0.0;
    if (above == increasing) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

BernoulliCounts::BernoulliCounts(std::uint64_t successes, std::uint64_t trials)
    : successes_(successes), trials_(trials) {
  if (successes > trials) {
    throw std::invalid_argument("successes exceed trials");
  }
}

double regularized_incomplete_beta(double x, double a, double b) {
  require_unit(x, "x");
  require_shape(a, b);
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(log_beta_front(x, a, b));
  double result;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    result = front * beta_continued_fraction(x, 1.0 - x, a, b) / a;
  } else {
    result = 1.0 - front * beta_continued_fraction(1.0 - x, x, b, a) / b;
  }
  return std::clamp(result, 0.0, 1.0);
}

double beta_pdf(double x, double a, double b) {
  require_unit(x, "x");
  require_shape(a, b);
  if (x == 0.0 || x == 1.0) {
    const double shape = x == 0.0 ? a : b;
    const double other = x == 0.0 ? b : a;
    if (shape < 1.0) return std::numeric_limits<double>::infinity();
    if (shape > 1.0) return 0.0;
    return other;  // 1 / B(1, other)
  }
  return std::exp(log_beta_front(x, a, b)) / (x * (1.0 - x));
}

double beta_quantile(double p, double a, double b) {
  require_unit(p, "p");
  require_shape(a, b);
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;

  double lo = 0.0;
  double hi = 1.0;
  double x = a / (a + b);
  for (int iter = 0; iter < kQuantileMaxIter; ++iter) {
    const double f = regularized_incomplete_beta(x, a, b) - p;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (std::fabs(f) <= kQuantileTol) return x;

    const double density = beta_pdf(x, a, b);
    double next = (density > 0.0 && std::isfinite(density)) ? x - f / density : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x || next <= lo || next >= hi) return x;
    x = next;
  }
  return x;
}

ConfidenceInterval clopper_pearson(const BernoulliCounts& counts, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  const std::uint64_t s = counts.successes();
  const std::uint64_t n = counts.trials();
  if (n == 0) return ConfidenceInterval::vacuous();

  const double sd = static_cast<double>(s);
  const double nd = static_cast<double>(n);
  const double tail = alpha / 2.0;
  ConfidenceInterval ci;
  ci.lo = s == 0 ? 0.0 : beta_quantile(tail, sd, nd - sd + 1.0);
  // Upper endpoint through the mirror identity so that
  // interval(s, n) == 1 - reversed(interval(n - s, n)) holds exactly.
  ci.hi = s == n ? 1.0 : 1.0 - beta_quantile(tail, nd - sd, sd + 1.0);
  return ci;
}

double binomial_upper_tail(std::uint64_t s, std::uint64_t n, double theta) {
  require_unit(theta, "theta");
  if (s == 0) return 1.0;
  if (s > n) return 0.0;
  if (theta == 0.0) return 0.0;
  if (theta == 1.0) return 1.0;
  return binomial_range_sum(s, n, n, theta);
}

double binomial_lower_tail(std::uint64_t s, std::uint64_t n, double theta) {
  require_unit(theta, "theta");
  if (s >= n) return 1.0;
  if (theta == 0.0) return 1.0;
  if (theta == 1.0) return 0.0;
  return binomial_range_sum(0, s, n, theta);
}

ConfidenceInterval clopper_pearson_tail_oracle(const BernoulliCounts& counts, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  const std::uint64_t s = counts.successes();
  const std::uint64_t n = counts.trials();
  if (n == 0) return ConfidenceInterval::vacuous();
  const double tail = alpha / 2.0;

  ConfidenceInterval ci;
  // inf { theta : P_theta[S >= s] >= alpha/2 }, the tail grows with theta.
  ci.lo = s == 0 ? 0.0
                 : bisect_unit([&](double t) { return binomial_upper_tail(s, n, t) - tail; }, true);
  // sup { theta : P_theta[S <= s] >= alpha/2 }, the tail shrinks with theta.
  ci.hi = s == n ? 1.0
                 : bisect_unit([&](double t) { return binomial_lower_tail(s, n, t) - tail; },
                               false);
  return ci;
}

}  // namespace pacconf
