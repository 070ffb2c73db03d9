#pragma once

// Weight/level data (p_n, sigma_n), n >= 1, as finitely described families.
//
// A family is either rule based (an explicit prefix followed by a closed
// form tail) or the 3-D particle-in-a-box lattice, whose levels are
// scale * (a^2 + b^2 + c^2) over positive triples with their degeneracies.
//
// Rule tails, for n past the prefix:
//   sigma_n = offset + slope * g(n)
//   p_n     = weight * exp(lambda * g(n)) * n^{-q}
// with g(n) = n (Linear), n^s (Power), ln(n + 1) (Log) or 0 (Constant).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "emp/errors.hpp"
#include "emp/summation.hpp"

namespace emp {

enum class FamilyKind { ExplicitPrefixWithTailRule, Arithmetic, PowerLaw, LogLevels, WeightedGeometric, Lattice3D };

enum class TailShape { Linear, Power, Log, Constant };

enum class FamilyStructure { Regular, ConstantSigma, AllDivergent };

enum class BoundaryCase { OpenDomain, ClosedGammaInfinite, ClosedGammaFinite };

struct TailRule {
  TailShape shape = TailShape::Linear;
  double offset = 0.0;
  double slope = 1.0;
  double exponent = 1.0;  // s, Power only
  double weight = 1.0;
  double lambda = 0.0;
  double q = 0.0;

  friend bool operator==(const TailRule&, const TailRule&) = default;
};

struct PrefixStats {
  long n = 0;
  double rho_n = 0.0;
  double eta1_n = 0.0;
  double eta2_n = 0.0;
};

struct SigmaMinSet {
  double theta1 = 0.0;
  std::vector<long> indices;
  double p_sum = 0.0;
};

struct LatticeLevel {
  long degeneracy = 0;
  double level = 0.0;

  friend bool operator==(const LatticeLevel&, const LatticeLevel&) = default;
};

namespace detail {

inline constexpr long kLatticeMaxRadius2 = 1L << 20;

// Distinct values k = a^2+b^2+c^2 <= kmax (a,b,c >= 1) with their counts.
inline std::vector<std::pair<long, long>> lattice_counts(long kmax) {
  std::vector<std::uint32_t> cnt(static_cast<std::size_t>(kmax) + 1, 0);
  for (long a = 1; a * a + 2 <= kmax; ++a)
    for (long b = 1; a * a + b * b + 1 <= kmax; ++b)
      for (long c = 1; a * a + b * b + c * c <= kmax; ++c) ++cnt[static_cast<std::size_t>(a * a + b * b + c * c)];
  std::vector<std::pair<long, long>> out;
  for (long k = 0; k <= kmax; ++k)
    if (cnt[static_cast<std::size_t>(k)]) out.emplace_back(k, cnt[static_cast<std::size_t>(k)]);
  return out;
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Grows the lattice level table on demand; readers get immutable snapshots.
class LatticeCache {
 public:
  std::shared_ptr<const std::vector<std::pair<long, long>>> at_least(long count) {
    std::lock_guard<std::mutex> lock(mu_);
    while (!table_ || static_cast<long>(table_->size()) < count) {
      kmax_ = kmax_ == 0 ? 64 : kmax_ * 2;
      if (kmax_ > kLatticeMaxRadius2)
        throw BudgetError("lattice level table exceeds " + std::to_string(kLatticeMaxRadius2) + " in n^2");
      table_ = std::make_shared<const std::vector<std::pair<long, long>>>(lattice_counts(kmax_));
    }
    return table_;
  }

 private:
  std::mutex mu_;
  long kmax_ = 0;
  std::shared_ptr<const std::vector<std::pair<long, long>>> table_;
};

}  // namespace detail

/// The first `count` distinct lattice levels scale*(a^2+b^2+c^2), ascending,
/// with degeneracies.
inline std::vector<LatticeLevel> lattice_levels(double scale, long count) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigurationError("lattice scale must be positive");
  if (count < 1) throw ConfigurationError("lattice level count must be >= 1");
  detail::LatticeCache cache;
  auto t = cache.at_least(count);
  std::vector<LatticeLevel> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) out.push_back({(*t)[i].second, scale * static_cast<double>((*t)[i].first)});
  return out;
}

/// Sum of a theta-like series with a certified bound on what was left out.
struct ThetaSum {
  double value = 0.0;
  double radius = 0.0;
};

class SequenceFamily {
 public:
  // --- factories ---------------------------------------------------------

  /// p_n = 1, sigma_n = n.
  static SequenceFamily geometric() { return arithmetic(0.0, 1.0); }

  /// sigma_n = a + b n, p_n = weight.
  static SequenceFamily arithmetic(double a, double b, double weight = 1.0) {
    TailRule r;
    r.shape = b == 0.0 ? TailShape::Constant : TailShape::Linear;
    r.offset = a;
    r.slope = b;
    r.weight = weight;
    return SequenceFamily(FamilyKind::Arithmetic, {}, {}, r);
  }

  /// sigma_n = c n^s (s >= 1), p_n = weight * exp(lambda n^s) n^{-q}.
  static SequenceFamily power_law(double c, double s, double weight = 1.0, double lambda = 0.0, double q = 0.0) {
    TailRule r;
    r.shape = TailShape::Power;
    r.slope = c;
    r.exponent = s;
    r.weight = weight;
    r.lambda = lambda;
    r.q = q;
    return SequenceFamily(FamilyKind::PowerLaw, {}, {}, r);
  }

  /// sigma_n = c ln(n+1), p_n = weight * (n+1)^lambda.
  static SequenceFamily log_levels(double c, double weight = 1.0, double lambda = 0.0) {
    TailRule r;
    r.shape = TailShape::Log;
    r.slope = c;
    r.weight = weight;
    r.lambda = lambda;
    return SequenceFamily(FamilyKind::LogLevels, {}, {}, r);
  }

  /// sigma_n = n, p_n = e^{alpha0 n} / n^q.
  static SequenceFamily weighted_geometric(double alpha0, double q) {
    TailRule r;
    r.shape = TailShape::Linear;
    r.lambda = alpha0;
    r.q = q;
    return SequenceFamily(FamilyKind::WeightedGeometric, {}, {}, r);
  }

  static SequenceFamily lattice3d(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigurationError("lattice scale must be positive");
    SequenceFamily f;
    f.kind_ = FamilyKind::Lattice3D;
    f.scale_ = scale;
    f.lattice_ = std::make_shared<detail::LatticeCache>();
    return f;
  }

  /// Explicit first m terms, then `tail` for n > m (indices are absolute).
  static SequenceFamily explicit_prefix(std::vector<double> p, std::vector<double> sigma, TailRule tail) {
    return SequenceFamily(FamilyKind::ExplicitPrefixWithTailRule, std::move(p), std::move(sigma), tail);
  }

  // --- accessors ---------------------------------------------------------

  FamilyKind kind() const { return kind_; }
  bool is_lattice() const { return kind_ == FamilyKind::Lattice3D; }
  double lattice_scale() const { return scale_; }
  const TailRule& tail() const { return rule_; }
  long prefix_length() const { return static_cast<long>(prefix_p_.size()); }
  const std::vector<double>& prefix_p() const { return prefix_p_; }
  const std::vector<double>& prefix_sigma() const { return prefix_sigma_; }

  double log_p(long n) const {
    check_index(n);
    if (is_lattice()) return std::log(static_cast<double>(lattice_entry(n).second));
    if (n <= prefix_length()) return std::log(prefix_p_[static_cast<std::size_t>(n - 1)]);
    return rule_log_p(static_cast<double>(n));
  }

  double p(long n) const { return std::exp(log_p(n)); }

  double sigma(long n) const {
    check_index(n);
    if (is_lattice()) return scale_ * static_cast<double>(lattice_entry(n).first) - lattice_shift_;
    if (n <= prefix_length()) return prefix_sigma_[static_cast<std::size_t>(n - 1)];
    return rule_sigma(static_cast<double>(n));
  }

  std::pair<double, double> generate(long n) const { return {p(n), sigma(n)}; }

  /// Lattice levels (k, degeneracy) with at least `count` entries.
  std::shared_ptr<const std::vector<std::pair<long, long>>> lattice_table(long count) const {
    return lattice_->at_least(count);
  }

  FamilyStructure structure() const {
    if (is_lattice() || rule_.shape != TailShape::Constant) return FamilyStructure::Regular;
    for (double s : prefix_sigma_)
      if (s != rule_.offset) return FamilyStructure::AllDivergent;
    return FamilyStructure::ConstantSigma;
  }

  /// +1 if sigma_n -> +inf, -1 if sigma_n -> -inf, 0 for a constant tail.
  int direction() const {
    if (is_lattice()) return 1;
    if (rule_.shape == TailShape::Constant) return 0;
    return rule_.slope > 0.0 ? 1 : -1;
  }

  /// min over all sigma_n; needs direction() == +1.
  double sigma_infimum() const {
    if (direction() != 1) throw UnsupportedFamilyError("sigma has no minimum: tail is not increasing");
    if (is_lattice()) return sigma(1);
    double m = rule_sigma(static_cast<double>(prefix_length() + 1));
    for (double s : prefix_sigma_) m = std::min(m, s);
    return m;
  }

  /// The family with sigma'_n = sign * sigma_n - shift and the same weights.
  SequenceFamily transformed(int sign, double shift) const {
    SequenceFamily f = *this;
    if (is_lattice()) {
      if (sign != 1) throw PreconditionError("lattice levels cannot be reflected");
      f.lattice_shift_ += shift;
      return f;
    }
    for (double& s : f.prefix_sigma_) s = sign * s - shift;
    f.rule_.offset = sign * rule_.offset - shift;
    f.rule_.slope = sign * rule_.slope;
    return f;
  }

  // --- analytic metadata (increasing families) -----------------------------

  /// alpha with dom f = (-inf, -alpha) up to closure; needs direction() == +1.
  double analytic_alpha() const {
    if (direction() != 1) throw UnsupportedFamilyError("analytic alpha needs an increasing sigma tail");
    if (is_lattice()) return 0.0;
    return rule_alpha();
  }

  BoundaryCase analytic_case() const {
    if (direction() != 1) throw UnsupportedFamilyError("boundary case needs an increasing sigma tail");
    if (is_lattice()) return BoundaryCase::OpenDomain;
    const double q = rule_.q;
    switch (rule_.shape) {
      case TailShape::Linear:
        if (rule_.lambda == 0.0 || q <= 1.0) return BoundaryCase::OpenDomain;
        return q <= 2.0 ? BoundaryCase::ClosedGammaInfinite : BoundaryCase::ClosedGammaFinite;
      case TailShape::Power:
        if (rule_.lambda == 0.0 || q <= 1.0) return BoundaryCase::OpenDomain;
        return q <= rule_.exponent + 1.0 ? BoundaryCase::ClosedGammaInfinite : BoundaryCase::ClosedGammaFinite;
      default:
        return BoundaryCase::OpenDomain;
    }
  }

  /// Advisory limsup of ln p_n / sigma_n over (n/2, n]; never used to certify.
  double alpha_estimate(long n) const {
    double best = -kHugeVal();
    for (long k = std::max(1L, n / 2); k <= n; ++k) {
      const double s = sigma(k);
      if (s > 0.0) best = std::max(best, log_p(k) / s);
    }
    return std::max(0.0, best);
  }

  // --- prefix statistics ---------------------------------------------------

  PrefixStats prefix_stats(long n) const {
    check_index(n);
    NeumaierSum rho;
    double lo = sigma(1), hi = lo;
    for (long k = 1; k <= n; ++k) {
      rho.add(p(k));
      const double s = sigma(k);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    return {n, rho.value(), lo, hi};
  }

  SigmaMinSet sigma_min_set(double tie_tol = 1e-12) const {
    if (direction() != 1) throw UnsupportedFamilyError("sigma_min_set needs sigma_n -> +inf");
    const double theta = sigma_infimum();
    const double band = tie_tol * std::max(1.0, std::fabs(theta));
    SigmaMinSet out;
    out.theta1 = theta;
    NeumaierSum ps;
    const long stop = is_lattice() ? 1 : prefix_length() + 1;
    for (long k = 1;; ++k) {
      const double s = sigma(k);
      if (k > stop && s > theta + band) break;  // the tail is increasing from here on
      if (s <= theta + band) {
        out.indices.push_back(k);
        ps.add(p(k));
      }
    }
    out.p_sum = ps.value();
    return out;
  }

  // --- tails ---------------------------------------------------------------

  /// Ratio-test upper bound on sum_{n>N} p_n e^{sigma_n y}; nullopt if the
  /// certificate is unavailable at N.
  std::optional<double> tail_bound(double y, long N) const {
    auto t = ratio_moment_tail(0, y, N, 0.0);
    if (!t) return std::nullopt;
    return t->upper();
  }

  /// Enclosure of sum_{n>N} p_n sigma_n^j e^{sigma_n y - shift} for a rule
  /// family with increasing positive tail and N >= prefix length. Uses the
  /// tighter of the ratio and Euler-Maclaurin certificates.
  std::optional<TailEstimate> moment_tail(int j, double y, long N, double shift = 0.0) const {
    if (is_lattice() || direction() != 1 || N < std::max(1L, prefix_length())) return std::nullopt;
    std::optional<TailEstimate> best = ratio_moment_tail(j, y, N, shift);
    auto consider = [&best](std::optional<TailEstimate> c) {
      if (c && c->center >= 0.0 && (!best || c->radius < best->radius)) best = c;
    };
    consider(euler_maclaurin_moment_tail(j, y, N, shift));
    return best;
  }

  /// Snapped exponent t = lambda + slope*y of the rule tail (0 at the boundary).
  double rule_exponent(double y) const {
    const double a = rule_alpha_raw();
    if (std::fabs(y + a) <= 1e-14 * std::max(1.0, std::fabs(a))) y = -a;
    if (rule_.shape == TailShape::Log) return rule_.lambda + rule_.slope * y;
    const double t = rule_.lambda + rule_.slope * y;
    return y == -a ? 0.0 : t;
  }

  /// Lattice moment totals: sum over all levels of d * sigma^j e^{sigma y - shift},
  /// j in {0,1,2}, via products of one-dimensional theta sums.
  ThetaSum lattice_moment_total(int j, double y, double shift = 0.0) const {
    if (!is_lattice()) throw PreconditionError("lattice_moment_total on a rule family");
    if (!(y < 0.0)) throw DivergenceError("lattice series diverges for y >= 0");
    const double sh = (shift + lattice_shift_ * y) / 3.0;
    ThetaSum th[3];
    for (int i = 0; i <= j; ++i) th[i] = theta_sum(i, y, sh);
    const double t0 = th[0].value, t1 = j >= 1 ? th[1].value : 0.0, t2 = j >= 2 ? th[2].value : 0.0;
    double v = 0.0, rel = 0.0;
    auto r = [&](int i) { return th[i].value > 0.0 ? th[i].radius / th[i].value : 0.0; };
    const double s = lattice_shift_;
    // sigma = scale*k - s, so moments mix in lower orders of the unshifted sums
    const double m0 = t0 * t0 * t0;
    const double m1 = j >= 1 ? 3.0 * t0 * t0 * t1 : 0.0;
    const double m2 = j >= 2 ? 3.0 * t0 * t0 * t2 + 6.0 * t0 * t1 * t1 : 0.0;
    switch (j) {
      case 0:
        v = m0;
        rel = 3.0 * r(0);
        break;
      case 1:
        v = m1 - s * m0;
        rel = 3.0 * (r(0) + r(1)) * (m1 + std::fabs(s) * m0) / std::max(v, 1e-300);
        break;
      case 2:
        v = m2 - 2.0 * s * m1 + s * s * m0;
        rel = 4.0 * (r(0) + r(1) + r(2)) * (m2 + 2.0 * std::fabs(s) * m1 + s * s * m0) / std::max(v, 1e-300);
        break;
      default:
        throw PreconditionError("lattice moments are available for j <= 2");
    }
    return {v, v * (rel + 1e-15)};
  }

  friend bool operator==(const SequenceFamily& a, const SequenceFamily& b) {
    return a.kind_ == b.kind_ && a.rule_ == b.rule_ && a.prefix_p_ == b.prefix_p_ &&
           a.prefix_sigma_ == b.prefix_sigma_ && a.scale_ == b.scale_ && a.lattice_shift_ == b.lattice_shift_;
  }

  // --- rule tail on real n ------------------------------------------------

  double rule_g(double n) const {
    switch (rule_.shape) {
      case TailShape::Linear:
        return n;
      case TailShape::Power:
        return std::pow(n, rule_.exponent);
      case TailShape::Log:
        return std::log1p(n);
      case TailShape::Constant:
        return 0.0;
    }
    return 0.0;
  }
  double rule_sigma(double n) const { return rule_.offset + rule_.slope * rule_g(n); }
  double rule_log_p(double n) const {
    return std::log(rule_.weight) + rule_.lambda * rule_g(n) - rule_.q * std::log(n);
  }

 private:
  SequenceFamily() = default;

  SequenceFamily(FamilyKind kind, std::vector<double> p, std::vector<double> sigma, TailRule rule)
      : kind_(kind), rule_(rule), prefix_p_(std::move(p)), prefix_sigma_(std::move(sigma)) {
    validate();
  }

  static double kHugeVal() { return std::numeric_limits<double>::infinity(); }

  static void check_index(long n) {
    if (n < 1) throw PreconditionError("sequence index must be >= 1");
  }

  std::pair<long, long> lattice_entry(long n) const {
    auto t = lattice_->at_least(n);
    return (*t)[static_cast<std::size_t>(n - 1)];
  }

  double rule_alpha_raw() const {
    if (rule_.slope == 0.0) return kHugeVal();
    if (rule_.shape == TailShape::Log) return (rule_.lambda + 1.0) / rule_.slope;
    return rule_.lambda / rule_.slope;
  }

  double rule_alpha() const { return rule_alpha_raw(); }

  void validate() {
    if (prefix_p_.size() != prefix_sigma_.size())
      throw ConfigurationError("prefix p and sigma lengths differ");
    for (std::size_t i = 0; i < prefix_p_.size(); ++i) {
      if (!(prefix_p_[i] > 0.0) || !std::isfinite(prefix_p_[i]))
        throw ConfigurationError("p_" + std::to_string(i + 1) + " = " + std::to_string(prefix_p_[i]) +
                                 " is not a positive weight");
      if (!std::isfinite(prefix_sigma_[i]))
        throw ConfigurationError("sigma_" + std::to_string(i + 1) + " is not finite");
    }
    const TailRule& r = rule_;
    for (double v : {r.offset, r.slope, r.exponent, r.weight, r.lambda, r.q})
      if (!std::isfinite(v)) throw ConfigurationError("tail parameters must be finite");
    if (!(r.weight > 0.0)) throw ConfigurationError("tail weight must be positive");
    if (r.shape == TailShape::Power && r.exponent < 1.0)
      throw ConfigurationError("power-law exponent s must be >= 1");
    if (r.shape == TailShape::Log && r.q != 0.0) throw ConfigurationError("log-levels tail takes q = 0");
    if ((r.shape == TailShape::Constant) != (r.slope == 0.0))
      throw ConfigurationError("constant tail shape and zero slope go together");

    // Weights must be positive and eventually >= 1 (so that f(0) = inf and
    // a constant-level tail cannot converge anywhere).
    const bool grows = r.shape == TailShape::Constant ? false : r.lambda > 0.0;
    if (r.lambda < 0.0 && r.shape != TailShape::Constant)
      throw ConfigurationError("negative lambda makes tail weights tend to 0, violating p_n >= 1");
    if (!grows && !(r.q < 0.0 || (r.q == 0.0 && r.weight >= 1.0)))
      throw ConfigurationError("tail weights stay below 1 (weight = " + std::to_string(r.weight) +
                               ", q = " + std::to_string(r.q) + "), violating p_n >= 1");
  }

  double log_rule_term(int j, double y, double n, double shift) const {
    const double s = rule_sigma(n);
    return rule_log_p(n) + s * y - shift + (j > 0 ? j * std::log(s) : 0.0);
  }

  std::optional<TailEstimate> ratio_moment_tail(int j, double y, long N, double shift) const {
    if (is_lattice() || direction() != 1 || N < std::max(1L, prefix_length())) return std::nullopt;
    if (rule_.shape != TailShape::Linear && rule_.shape != TailShape::Power) return std::nullopt;
    const double t = rule_exponent(y);
    if (!(t < 0.0)) return std::nullopt;
    const double Nd = static_cast<double>(N);
    const double o = rule_.offset / rule_.slope;
    const double gN = rule_g(Nd), gN1 = rule_g(Nd + 1.0);
    if (j > 0 && !(gN + o > 0.0)) return std::nullopt;
    double log_r = t * (gN1 - gN) + std::max(0.0, -rule_.q) * std::log1p(1.0 / Nd);
    if (j > 0) log_r += j * (std::log(gN1 / gN) + std::max(0.0, std::log(gN / (gN + o))));
    const double r = std::exp(log_r);
    return summation::ratio_tail(log_rule_term(j, y, Nd, shift), log_rule_term(j, y, Nd + 1.0, shift), r);
  }

  std::optional<TailEstimate> euler_maclaurin_moment_tail(int j, double y, long N, double shift) const {
    const double t = rule_exponent(y);
    const double Nd = static_cast<double>(N);
    const double off = rule_.offset, c = rule_.slope;
    const double log_scale = std::log(rule_.weight) + off * y - shift;
    if (rule_.shape == TailShape::Log) {
      summation::LogPowerFunction g;
      g.mu = -t;
      for (int i = 0; i <= j; ++i) g.coef.push_back(detail::binomial(j, i) * std::pow(off, j - i) * std::pow(c, i));
      return summation::euler_maclaurin_log_power(g, log_scale, Nd + 1.0);
    }
    if (t > 0.0) return std::nullopt;
    summation::ExpPowerFunction g;
    if (rule_.shape == TailShape::Linear) {
      if (-t * Nd > 40.0) return std::nullopt;
      g.t = t;
      for (int i = 0; i <= j; ++i) {
        const double cf = detail::binomial(j, i) * std::pow(off, j - i) * std::pow(c, i);
        if (cf != 0.0) g.terms.push_back({cf, i - rule_.q});
      }
    } else if (rule_.shape == TailShape::Power && t == 0.0) {
      g.t = 0.0;
      for (int i = 0; i <= j; ++i) {
        const double cf = detail::binomial(j, i) * std::pow(off, j - i) * std::pow(c, i);
        if (cf != 0.0) g.terms.push_back({cf, rule_.exponent * i - rule_.q});
      }
    } else {
      return std::nullopt;
    }
    return summation::euler_maclaurin_exp_power(g, log_scale, Nd);
  }

  // sum_k (scale k^2)^i e^{scale k^2 y - sh}, k >= 1
  ThetaSum theta_sum(int i, double y, double sh) const {
    NeumaierSum acc;
    const double s = scale_;
    for (long k = 1;; ++k) {
      const double kk = static_cast<double>(k) * static_cast<double>(k);
      const double lt = s * kk * y - sh + (i > 0 ? i * std::log(s * kk) : 0.0);
      acc.add(std::exp(lt));
      if (k >= 2) {
        const double kd = static_cast<double>(k);
        const double log_r = s * y * (2.0 * kd + 1.0) + 2.0 * i * std::log1p(1.0 / kd);
        if (log_r < 0.0) {
          const double r = std::exp(log_r);
          const double bound = std::exp(lt) * r / (1.0 - r);
          if (bound <= 1e-17 * acc.value() || (acc.value() == 0.0 && bound == 0.0)) return {acc.value(), bound};
        }
      }
      if (k > 20000000) throw BudgetError("lattice theta sum did not converge within 2e7 terms");
    }
  }

  FamilyKind kind_ = FamilyKind::Arithmetic;
  TailRule rule_;
  std::vector<double> prefix_p_;
  std::vector<double> prefix_sigma_;
  double scale_ = 0.0;
  double lattice_shift_ = 0.0;
  std::shared_ptr<detail::LatticeCache> lattice_;
};

}  // namespace emp
