#pragma once

// Certified tails of positive series.
//
// Two certificates are available:
//  * ratio test: if the term ratio stays below r < 1 from index N on,
//    the tail after N is at most term_N * r / (1 - r);
//  * Euler-Maclaurin with two Bernoulli corrections; the remainder is at
//    most (1/720) * integral of |G''''| over [N, inf), which is |G'''(N)| / 720
//    when G'''' keeps one sign there.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace emp {

/// Enclosure [center - radius, center + radius] of a nonnegative quantity.
struct TailEstimate {
  double center = 0.0;
  double radius = 0.0;

  double upper() const { return center + radius; }
  double lower() const { return std::max(0.0, center - radius); }

  static TailEstimate from_bounds(double lo, double hi) {
    return {0.5 * (lo + hi), 0.5 * (hi - lo)};
  }
};

/// Compensated (Neumaier) summation.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace summation {

/// Upper incomplete gamma Gamma(a, z) for real a and z > 0.
inline double upper_incomplete_gamma(double a, double z) {
  if (a > 0.0) return boost::math::tgamma(a, z);
  // Recur down from a + k > 0 (or from Gamma(0,z) = E1(z) when a is an integer):
  // Gamma(b, z) = (Gamma(b + 1, z) - z^b e^{-z}) / b
  const double k = std::ceil(-a);
  const bool integral = (a == -k);
  double b = integral ? 0.0 : a + k;
  double g = integral ? boost::math::expint(1, z) : boost::math::tgamma(b, z);
  if (b == 0.0 && !integral) g = boost::math::expint(1, z);
  const double lz = std::log(z);
  while (b > a + 0.5) {
    b -= 1.0;
    g = (g - std::exp(b * lz - z)) / b;
  }
  return g;
}

struct Monomial {
  double coef;
  double power;
};

/// G(x) = e^{t x} * sum_k coef_k x^{power_k}, t <= 0.
struct ExpPowerFunction {
  double t = 0.0;
  std::vector<Monomial> terms;

  ExpPowerFunction derivative() const {
    std::map<double, double> acc;
    for (const auto& m : terms) {
      if (t != 0.0) acc[m.power] += m.coef * t;
      if (m.power != 0.0) acc[m.power - 1.0] += m.coef * m.power;
    }
    ExpPowerFunction d{t, {}};
    for (const auto& [p, c] : acc)
      if (c != 0.0) d.terms.push_back({c, p});
    return d;
  }

  /// sum_k coef_k x^{power_k}, i.e. G(x) without the exponential factor.
  double polynomial_part(double x) const {
    double s = 0.0;
    for (const auto& m : terms) s += m.coef * std::pow(x, m.power);
    return s;
  }
};

namespace detail {

// True when sum_k c_k x^{e_k} keeps one strict sign on [x0, inf).
inline bool one_sign_beyond(const std::vector<Monomial>& terms, double x0) {
  if (terms.empty()) return true;
  bool pos = false, neg = false;
  for (const auto& m : terms) (m.coef > 0 ? pos : neg) = true;
  if (!(pos && neg)) return true;  // Descartes: no sign change, no positive root
  const auto top = std::max_element(terms.begin(), terms.end(),
                                    [](const Monomial& a, const Monomial& b) { return a.power < b.power; });
  double rest = 0.0;
  for (const auto& m : terms)
    if (&m != &*top) rest += std::fabs(m.coef) * std::pow(x0, m.power - top->power);
  return rest < std::fabs(top->coef);
}

}  // namespace detail

/// Sum_{n > N} e^{log_scale} G(n) by Euler-Maclaurin; nullopt when t > 0 or
/// the tail integral diverges.
inline std::optional<TailEstimate> euler_maclaurin_exp_power(const ExpPowerFunction& g, double log_scale,
                                                             double N) {
  if (g.t > 0.0 || N < 1.0) return std::nullopt;
  const ExpPowerFunction d1 = g.derivative();
  const ExpPowerFunction d2 = d1.derivative();
  const ExpPowerFunction d3 = d2.derivative();
  const ExpPowerFunction d4 = d3.derivative();
  if (g.t == 0.0) {
    for (const auto& m : g.terms)
      if (!(m.power < -1.0)) return std::nullopt;
  }

  const double at = std::fabs(g.t);
  const double z = at * N;
  // scale * integral of n^power e^{tn} over [N, inf)
  auto piece = [&](double power) {
    if (g.t == 0.0) {
      const double e1 = power + 1.0;
      return std::exp(log_scale + e1 * std::log(N) - std::log(-e1));
    }
    const double gam = upper_incomplete_gamma(power + 1.0, z);
    return gam > 0.0 ? std::exp(log_scale - (power + 1.0) * std::log(at) + std::log(gam)) : 0.0;
  };
  NeumaierSum integral;
  for (const auto& m : g.terms) integral.add(m.coef * piece(m.power));
  const double ex = std::exp(log_scale + g.t * N);
  const double g0 = ex * g.polynomial_part(N);
  const double g1 = ex * d1.polynomial_part(N);
  const double g3 = ex * d3.polynomial_part(N);

  const double center = integral.value() - 0.5 * g0 - g1 / 12.0 + g3 / 720.0;
  // remainder <= int |G''''| / 720, which is |G'''(N)| / 720 when G'''' keeps one sign
  double rem = std::fabs(g3);
  if (!detail::one_sign_beyond(d4.terms, N)) {
    rem = 0.0;
    for (const auto& m : d4.terms) rem += std::fabs(m.coef) * piece(m.power);
  }
  const double radius = rem / 720.0 + 1e-15 * (std::fabs(integral.value()) + std::fabs(g0));
  return TailEstimate{center, radius};
}

/// G(z) = z^{-mu} * sum_i coef_i (ln z)^i with mu > 1.
struct LogPowerFunction {
  double mu = 2.0;
  std::vector<double> coef;

  LogPowerFunction derivative() const {
    LogPowerFunction d{mu + 1.0, std::vector<double>(coef.size(), 0.0)};
    for (std::size_t i = 0; i < coef.size(); ++i) {
      d.coef[i] += -mu * coef[i];
      if (i > 0) d.coef[i - 1] += static_cast<double>(i) * coef[i];
    }
    return d;
  }

  double value(double z) const {
    const double L = std::log(z);
    double s = 0.0, Lp = 1.0;
    for (double c : coef) {
      s += c * Lp;
      Lp *= L;
    }
    return std::pow(z, -mu) * s;
  }
};

/// Sum_{z > Z} e^{log_scale} G(z) over integers z.
inline std::optional<TailEstimate> euler_maclaurin_log_power(const LogPowerFunction& g, double log_scale,
                                                             double Z) {
  if (!(g.mu > 1.0) || Z < 2.0) return std::nullopt;
  const LogPowerFunction d1 = g.derivative();
  const LogPowerFunction d2 = d1.derivative();
  const LogPowerFunction d3 = d2.derivative();
  const LogPowerFunction d4 = d3.derivative();
  const double L = std::log(Z);
  {
    std::vector<Monomial> poly;
    for (std::size_t i = 0; i < d4.coef.size(); ++i)
      if (d4.coef[i] != 0.0) poly.push_back({d4.coef[i], static_cast<double>(i)});
    if (!detail::one_sign_beyond(poly, std::max(L, 1.0)) || L < 1.0) {
      bool same = true;
      for (const auto& m : poly) same = same && (m.coef > 0) == (poly.front().coef > 0);
      if (!same) return std::nullopt;
    }
  }
  // int_Z^inf z^{-mu} L^i dz = Z^{-nu} sum_k i!/(i-k)! L^{i-k} / nu^{k+1}
  const double nu = g.mu - 1.0;
  NeumaierSum integral;
  for (std::size_t i = 0; i < g.coef.size(); ++i) {
    double falling = 1.0, s = 0.0;
    for (std::size_t k = 0; k <= i; ++k) {
      s += falling * std::pow(L, static_cast<double>(i - k)) / std::pow(nu, static_cast<double>(k + 1));
      falling *= static_cast<double>(i - k);
    }
    integral.add(g.coef[i] * s);
  }
  const double sc = std::exp(log_scale);
  const double I = sc * std::exp(-nu * L) * integral.value();
  const double g0 = sc * g.value(Z);
  const double g1 = sc * d1.value(Z);
  const double g3 = sc * d3.value(Z);
  const double center = I - 0.5 * g0 - g1 / 12.0 + g3 / 720.0;
  const double radius = std::fabs(g3) / 720.0 + 1e-15 * (std::fabs(I) + std::fabs(g0));
  return TailEstimate{center, radius};
}

/// Ratio-test enclosure of sum_{n > N} a_n from ln a_N, ln a_{N+1} and a
/// certified bound r >= sup_{n >= N} a_{n+1}/a_n.
inline std::optional<TailEstimate> ratio_tail(double log_term_N, double log_term_next, double r) {
  if (!(r < 1.0) || !(r >= 0.0)) return std::nullopt;
  const double hi = std::exp(log_term_N) * r / (1.0 - r);
  const double lo = std::min(hi, std::exp(log_term_next));
  return TailEstimate::from_bounds(lo, hi);
}

}  // namespace summation
}  // namespace emp
