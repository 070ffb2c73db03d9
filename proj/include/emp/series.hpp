#pragma once

// f(y) = sum p_n e^{sigma_n y} and h_W(x,y) = sum p_n W*(x + sigma_n y) for a
// family with sigma_n > 0 increasing to infinity.

#include <array>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <utility>

#include "emp/entropy.hpp"
#include "emp/errors.hpp"
#include "emp/root.hpp"
#include "emp/sequence.hpp"
#include "emp/summation.hpp"

namespace emp {

inline constexpr double kDefaultTol = 1e-13;
inline constexpr long kTermBudget = 1L << 22;

struct SeriesEval {
  double value = 0.0;
  long truncation_n = 0;
  double tail_bound_used = 0.0;
};

struct SeriesProfile {
  double alpha = 0.0;
  BoundaryCase boundary_case = BoundaryCase::OpenDomain;
  std::optional<double> f_at_boundary;
  std::optional<double> gamma;
  double theta1 = 0.0;
  double theta2 = kInf;
  SigmaMinSet sigma_min;
};

inline const char* to_string(BoundaryCase c) {
  switch (c) {
    case BoundaryCase::OpenDomain:
      return "a";
    case BoundaryCase::ClosedGammaInfinite:
      return "b";
    case BoundaryCase::ClosedGammaFinite:
      return "c";
  }
  return "?";
}

class PartitionSeries {
 public:
  explicit PartitionSeries(SequenceFamily family) : family_(std::move(family)) {
    if (family_.structure() != FamilyStructure::Regular || family_.direction() != 1)
      throw UnsupportedFamilyError("partition series needs sigma_n increasing to +inf");
    if (!(family_.sigma_infimum() > 0.0))
      throw PreconditionError("partition series needs min sigma_n > 0 (normalize the family first)");
  }

  PartitionSeries(const PartitionSeries& o) : family_(o.family_) {}

  const SequenceFamily& family() const { return family_; }

  /// Analytic profile, computed once; concurrent callers share one result.
  const SeriesProfile& profile() const {
    std::call_once(once_, [this] { profile_ = compute_profile(); });
    return profile_;
  }

  double alpha() const { return family_.analytic_alpha(); }

  /// y belongs to dom f: y < -alpha, or y = -alpha in cases b and c.
  bool in_domain(double y) const {
    const double a = alpha();
    if (y < -a && !at_boundary(y)) return true;
    return at_boundary(y) && family_.analytic_case() != BoundaryCase::OpenDomain;
  }

  bool at_boundary(double y) const {
    const double a = alpha();
    return std::fabs(y + a) <= 1e-14 * std::max(1.0, a);
  }

  // --- MB moments ----------------------------------------------------------

  /// sum_n p_n sigma_n^j e^{sigma_n y - shift}.
  SeriesEval moment(int j, double y, double shift = 0.0, double tol = kDefaultTol) const {
    require_domain(y);
    if (family_.is_lattice()) {
      const ThetaSum t = family_.lattice_moment_total(j, y, shift);
      return {t.value, 0, t.radius};
    }
    auto term = [&](long n) {
      const double s = family_.sigma(n);
      return std::exp(family_.log_p(n) + s * y - shift) * ipow(s, j);
    };
    auto tail = [&](long N) { return family_.moment_tail(j, y, N, shift); };
    return run_sum(term, tail, tol);
  }

  SeriesEval eval_f(double y, double tol = kDefaultTol) const { return moment(0, y, 0.0, tol); }

  /// (f, f', f'') at y < -alpha.
  std::array<double, 3> eval_f_derivatives(double y, double tol = kDefaultTol) const {
    require_interior(y);
    return {moment(0, y, 0.0, tol).value, moment(1, y, 0.0, tol).value, moment(2, y, 0.0, tol).value};
  }

  /// ln f(y), evaluated with the e^{theta1 y} factor pulled out.
  double log_f(double y, double tol = kDefaultTol) const {
    const double th = profile().theta1;
    return std::log(moment(0, y, th * y, tol).value) + th * y;
  }

  /// phi = f'/f on y < -alpha.
  double phi(double y, double tol = kDefaultTol) const {
    require_interior(y);
    const double th = profile().theta1;
    return moment(1, y, th * y, tol).value / moment(0, y, th * y, tol).value;
  }

  /// The unique y < -alpha with phi(y) = w, for theta1 < w < theta2.
  double phi_inverse(double w, double tol = kDefaultTol) const {
    const SeriesProfile& pr = profile();
    if (!(w > pr.theta1) || !(w < pr.theta2))
      throw RangeError("phi_inverse needs theta1 < w < theta2 (theta1 = " + fmt(pr.theta1) +
                       ", theta2 = " + fmt(pr.theta2) + ", w = " + fmt(w) + ")");
    const double a = pr.alpha;
    auto g = [&](double y) { return phi(y, tol) - w; };
    double lo = -a - 1.0, glo = g(lo);
    double hi, ghi;
    if (glo < 0.0) {
      hi = lo;
      ghi = glo;
      for (int k = 1;; ++k) {
        if (k > 200) throw BudgetError("phi_inverse: no right bracket near -alpha");
        const double y = -a - std::ldexp(1.0, -k);
        if (y >= -a) throw BudgetError("phi_inverse: right bracket collapsed onto -alpha");
        const double gy = g(y);
        if (gy >= 0.0) {
          hi = y;
          ghi = gy;
          break;
        }
        lo = y;
        glo = gy;
      }
    } else {
      hi = lo;
      ghi = glo;
      for (int k = 0;; ++k) {
        if (k > 200) throw BudgetError("phi_inverse: no left bracket");
        const double y = -a - 1.0 - std::ldexp(1.0, k);
        const double gy = g(y);
        if (gy <= 0.0) {
          lo = y;
          glo = gy;
          break;
        }
        hi = y;
        ghi = gy;
      }
    }
    const double xtol = std::max(1e-12, 4e-16 * std::fabs(hi));
    return find_root_increasing(g, lo, hi, glo, ghi, xtol).x;
  }

  /// (ln f)*(w), all four branches.
  double lnf_conjugate(double w, double tol = kDefaultTol) const {
    const SeriesProfile& pr = profile();
    if (w < pr.theta1) return kInf;
    if (w == pr.theta1) return -std::log(pr.sigma_min.p_sum);
    if (w >= pr.theta2) return -pr.alpha * w - std::log(*pr.f_at_boundary);
    const double y = phi_inverse(w, tol);
    // w y - ln f(y) = (w - theta1) y - ln(sum p e^{(sigma - theta1) y})
    return (w - pr.theta1) * y - std::log(moment(0, y, pr.theta1 * y, tol).value);
  }

  // --- h_W -----------------------------------------------------------------

  /// sum_n p_n sigma_n^j (W*)^{(order)}(x + sigma_n y) for (x,y) in dom h_W.
  SeriesEval kernel_sum(EntropyKind kind, int order, int j, double x, double y, double tol = kDefaultTol) const {
    require_domain(y);
    if (kind.is_mb()) return moment(j, y, -x, tol);
    if (kind.is_be() && !(x + profile().theta1 * y < 0.0))
      throw DomainError("BE kernel needs x + theta1 y < 0");
    const bool lattice = family_.is_lattice();
    std::optional<ThetaSum> total;
    if (lattice) total = family_.lattice_moment_total(j, y, -x);
    NeumaierSum mb_partial;
    std::shared_ptr<const std::vector<std::pair<long, long>>> table;
    auto sigma_at = [&](long n) {
      if (!lattice) return family_.sigma(n);
      return family_.lattice_scale() * static_cast<double>((*table)[static_cast<std::size_t>(n - 1)].first);
    };
    auto logp_at = [&](long n) {
      if (!lattice) return family_.log_p(n);
      return std::log(static_cast<double>((*table)[static_cast<std::size_t>(n - 1)].second));
    };
    auto term = [&](long n) {
      const double s = sigma_at(n);
      const double t = x + s * y;
      if (lattice) mb_partial.add(std::exp(logp_at(n) + t) * ipow(s, j));
      return std::exp(logp_at(n) + log_conjugate_kernel(kind, order, t)) * ipow(s, j);
    };
    auto tail = [&](long N) -> std::optional<TailEstimate> {
      const double sN = std::exp(x + sigma_at(N + 1) * y);
      if (kind.is_be() && !(sN < 1.0)) return std::nullopt;
      double mlo, mhi;
      if (lattice) {
        const double rest = total->value - mb_partial.value();
        const double rad = total->radius + 1e-15 * total->value;
        mlo = std::max(0.0, rest - rad);
        mhi = rest + rad;
      } else {
        auto mt = family_.moment_tail(j, y, N, -x);
        if (!mt) return std::nullopt;
        mlo = mt->lower();
        mhi = mt->upper();
      }
      const auto [rlo, rhi] = kernel_ratio(kind, order, sN);
      return TailEstimate::from_bounds(mlo * rlo, mhi * rhi);
    };
    if (lattice) {
      return run_sum(term, tail, tol, [&](long need) { table = family_.lattice_table(need + 1); });
    }
    return run_sum(term, tail, tol);
  }

  /// h_W(x,y); +inf outside dom h_W.
  double eval_h(EntropyKind kind, double x, double y, double tol = kDefaultTol) const {
    if (!in_domain(y)) return kInf;
    if (kind.is_be() && !(x + profile().theta1 * y < 0.0)) return kInf;
    return kernel_sum(kind, 0, 0, x, y, tol).value;
  }

  /// (u, v) = grad h_W(x,y) at interior points.
  std::pair<double, double> grad_h(EntropyKind kind, double x, double y, double tol = kDefaultTol) const {
    require_interior(y);
    if (kind.is_be() && !(x + profile().theta1 * y < 0.0)) throw DomainError("BE gradient needs x + theta1 y < 0");
    return {kernel_sum(kind, 1, 0, x, y, tol).value, kernel_sum(kind, 1, 1, x, y, tol).value};
  }

  /// (h_xx, h_xy, h_yy) at interior points.
  std::array<double, 3> hess_h(EntropyKind kind, double x, double y, double tol = kDefaultTol) const {
    require_interior(y);
    if (kind.is_be() && !(x + profile().theta1 * y < 0.0)) throw DomainError("BE Hessian needs x + theta1 y < 0");
    return {kernel_sum(kind, 2, 0, x, y, tol).value, kernel_sum(kind, 2, 1, x, y, tol).value,
            kernel_sum(kind, 2, 2, x, y, tol).value};
  }

  /// {u_bar} x [v_bar, inf) at (x, -alpha); nullopt is the empty set (case b).
  std::optional<std::pair<double, double>> boundary_subdifferential(EntropyKind kind, double x,
                                                                    double tol = kDefaultTol) const {
    const SeriesProfile& pr = profile();
    if (pr.boundary_case == BoundaryCase::OpenDomain)
      throw PreconditionError("(x, -alpha) is outside dom h: dom f is open (case a)");
    const double y = -pr.alpha;
    if (kind.is_be() && !(x + pr.theta1 * y < 0.0)) throw PreconditionError("(x, -alpha) is outside dom h_BE");
    if (pr.boundary_case == BoundaryCase::ClosedGammaInfinite) return std::nullopt;
    return std::make_pair(kernel_sum(kind, 1, 0, x, y, tol).value, kernel_sum(kind, 1, 1, x, y, tol).value);
  }

 private:
  static double ipow(double s, int j) {
    double r = 1.0;
    for (int i = 0; i < j; ++i) r *= s;
    return r;
  }

  static std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  // Bracket of (W*)^{(order)}(t) / e^t over 0 < e^t <= sN.
  static std::pair<double, double> kernel_ratio(EntropyKind kind, int order, double sN) {
    if (kind.is_fd()) {
      const double inv = 1.0 / (1.0 + sN);
      switch (order) {
        case 0:
          return {std::log1p(sN) / sN, 1.0};
        case 1:
          return {inv, 1.0};
        default:
          return {inv * inv, 1.0};
      }
    }
    if (kind.is_be()) {
      const double inv = 1.0 / (1.0 - sN);
      switch (order) {
        case 0:
          return {1.0, -std::log1p(-sN) / sN};
        case 1:
          return {1.0, inv};
        default:
          return {1.0, inv * inv};
      }
    }
    return {1.0, 1.0};
  }

  void require_domain(double y) const {
    if (!in_domain(y))
      throw DivergenceError("f diverges at y = " + fmt(y) + " (dom f ends at -alpha = " + fmt(-alpha()) +
                            ", case " + to_string(family_.analytic_case()) + ")");
  }

  void require_interior(double y) const {
    if (!(y < -alpha()) || at_boundary(y))
      throw DomainError("y = " + fmt(y) + " is not in the interior (-inf, " + fmt(-alpha()) + ")");
  }

  template <class Term, class Tail>
  SeriesEval run_sum(Term&& term, Tail&& tail, double tol,
                     const std::function<void(long)>& prepare = {}) const {
    NeumaierSum s;
    long n = 0;
    long check = std::max(32L, family_.prefix_length());
    for (;;) {
      if (prepare) prepare(check);
      while (n < check) s.add(term(++n));
      if (auto t = tail(n)) {
        const double value = s.value() + t->center;
        if (t->radius <= tol * std::fabs(value) || t->radius == 0.0)
          return {value, n, t->radius};
      }
      if (check >= kTermBudget)
        throw BudgetError("series did not reach tolerance " + fmt(tol) + " within " + std::to_string(kTermBudget) +
                          " terms");
      check *= 2;
    }
  }

  SeriesProfile compute_profile() const {
    SeriesProfile pr;
    pr.alpha = family_.analytic_alpha();
    pr.boundary_case = family_.analytic_case();
    pr.sigma_min = family_.sigma_min_set();
    pr.theta1 = pr.sigma_min.theta1;
    // spot check: the series must converge strictly inside the claimed domain
    const double f_in = moment(0, -pr.alpha - 1.0).value;
    if (!std::isfinite(f_in) || !(f_in > 0.0))
      throw ConfigurationError("declared alpha inconsistent: f(-alpha-1) is not a positive finite number");
    if (pr.boundary_case != BoundaryCase::OpenDomain) pr.f_at_boundary = moment(0, -pr.alpha).value;
    if (pr.boundary_case == BoundaryCase::ClosedGammaFinite) {
      pr.gamma = moment(1, -pr.alpha).value;
      pr.theta2 = *pr.gamma / *pr.f_at_boundary;
    }
    return pr;
  }

  SequenceFamily family_;
  mutable std::once_flag once_;
  mutable SeriesProfile profile_;
};

}  // namespace emp
