#pragma once

// Finite-n entropy minimization: one constraint (closed form), two
// constraints via KKT multipliers, the FD zonotope test, and a brute-force
// grid oracle used as an independent check.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "emp/entropy.hpp"
#include "emp/errors.hpp"
#include "emp/root.hpp"
#include "emp/summation.hpp"

namespace emp {

struct FiniteProblem {
  EntropyKind kind;
  std::vector<double> p;
  std::vector<double> sigma;
  double u = 0.0;
  std::optional<double> v;
};

enum class BoundaryFlag { InteriorKKT, LowerEdge, UpperEdge, SingleConstraint, Origin, ZonotopeBoundary, OracleFallback };

inline const char* to_string(BoundaryFlag f) {
  switch (f) {
    case BoundaryFlag::InteriorKKT:
      return "InteriorKKT";
    case BoundaryFlag::LowerEdge:
      return "LowerEdge";
    case BoundaryFlag::UpperEdge:
      return "UpperEdge";
    case BoundaryFlag::SingleConstraint:
      return "SingleConstraint";
    case BoundaryFlag::Origin:
      return "Origin";
    case BoundaryFlag::ZonotopeBoundary:
      return "ZonotopeBoundary";
    case BoundaryFlag::OracleFallback:
      return "OracleFallback";
  }
  return "?";
}

struct Multipliers {
  double alpha = 0.0;
  double beta = 0.0;
};

struct FiniteSolution {
  std::vector<double> u_bar;
  double value = 0.0;
  std::optional<Multipliers> multipliers;
  BoundaryFlag boundary_flag = BoundaryFlag::InteriorKKT;
};

enum class FdFeasibility { Interior, Boundary, Infeasible };

inline const char* to_string(FdFeasibility f) {
  switch (f) {
    case FdFeasibility::Interior:
      return "Interior";
    case FdFeasibility::Boundary:
      return "Boundary";
    case FdFeasibility::Infeasible:
      return "Infeasible";
  }
  return "?";
}

namespace detail {

inline void check_data(const std::vector<double>& p, const std::vector<double>& sigma) {
  if (p.empty()) throw PreconditionError("finite problem needs n >= 1");
  if (p.size() != sigma.size()) throw PreconditionError("p and sigma lengths differ");
  for (double x : p)
    if (!(x > 0.0) || !std::isfinite(x)) throw PreconditionError("finite weights must be positive");
  for (double s : sigma)
    if (!std::isfinite(s)) throw PreconditionError("finite levels must be finite");
}

inline bool near(double a, double b, double rel = 1e-12) {
  return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// ln sum_k exp(lp_k + sigma_k t) and the weighted mean of sigma.
struct LogSum {
  double log_sum;
  double mean;
};

inline LogSum log_sum_exp(const std::vector<double>& lp, const std::vector<double>& sigma, double t) {
  double m = -kInf;
  for (std::size_t k = 0; k < lp.size(); ++k) m = std::max(m, lp[k] + sigma[k] * t);
  NeumaierSum s0, s1;
  for (std::size_t k = 0; k < lp.size(); ++k) {
    const double e = std::exp(lp[k] + sigma[k] * t - m);
    s0.add(e);
    s1.add(sigma[k] * e);
  }
  return {m + std::log(s0.value()), s1.value() / s0.value()};
}

inline std::vector<double> logs(const std::vector<double>& p) {
  std::vector<double> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = std::log(p[k]);
  return out;
}

// phi_n from log weights.
inline double phi_n_log(const std::vector<double>& lp, const std::vector<double>& sigma, double t) {
  return log_sum_exp(lp, sigma, t).mean;
}

inline double phi_n_inverse_log(const std::vector<double>& lp, const std::vector<double>& sigma, double w,
                                double xtol = 1e-13) {
  const auto [lo_it, hi_it] = std::minmax_element(sigma.begin(), sigma.end());
  if (!(w > *lo_it) || !(w < *hi_it))
    throw RangeError("phi_n inverse needs eta1 < w < eta2 (w = " + std::to_string(w) + ")");
  auto g = [&](double t) { return phi_n_log(lp, sigma, t) - w; };
  double lo = -1.0, hi = 1.0, glo = g(lo), ghi = g(hi);
  for (int k = 0; glo > 0.0; ++k) {
    if (k > 1100) throw BudgetError("phi_n inverse: no left bracket");
    hi = lo;
    ghi = glo;
    lo *= 2.0;
    glo = g(lo);
  }
  for (int k = 0; ghi < 0.0; ++k) {
    if (k > 1100) throw BudgetError("phi_n inverse: no right bracket");
    lo = hi;
    glo = ghi;
    hi *= 2.0;
    ghi = g(hi);
  }
  return find_root_increasing(g, lo, hi, glo, ghi, std::max(xtol, 4e-16 * std::max(std::fabs(lo), std::fabs(hi))))
      .x;
}

}  // namespace detail

/// sum_k p_k W(u_k / p_k); +inf if any u_k leaves dom W.
inline double finite_objective(EntropyKind kind, const std::vector<double>& p, const std::vector<double>& u) {
  NeumaierSum s;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double w = entropy_value(kind, u[k] / p[k]);
    if (w == kInf) return kInf;
    s.add(p[k] * w);
  }
  return s.value();
}

/// Minimize sum p_k W(u_k/p_k) subject to sum u_k = u.
inline FiniteSolution solve_single(EntropyKind kind, const std::vector<double>& p, double u) {
  detail::check_data(p, p);
  if (!(u >= 0.0)) throw InfeasibleError("single-constraint problem needs u >= 0");
  FiniteSolution sol;
  sol.boundary_flag = BoundaryFlag::SingleConstraint;
  sol.u_bar.assign(p.size(), 0.0);
  if (u == 0.0) {
    sol.boundary_flag = BoundaryFlag::Origin;
    return sol;
  }
  NeumaierSum r;
  for (double x : p) r.add(x);
  const double rho = r.value();
  if (kind.is_fd() && u > rho) throw InfeasibleError("FD needs u <= rho_n = " + std::to_string(rho));
  for (std::size_t k = 0; k < p.size(); ++k) sol.u_bar[k] = u * p[k] / rho;
  sol.value = rho * entropy_value(kind, u / rho);
  return sol;
}

/// phi_n(t) = sum p sigma e^{sigma t} / sum p e^{sigma t}.
inline double phi_n(const std::vector<double>& p, const std::vector<double>& sigma, double t) {
  detail::check_data(p, sigma);
  return detail::phi_n_log(detail::logs(p), sigma, t);
}

inline double phi_n_inverse(const std::vector<double>& p, const std::vector<double>& sigma, double w,
                            double tol = 1e-13) {
  detail::check_data(p, sigma);
  return detail::phi_n_inverse_log(detail::logs(p), sigma, w, tol);
}

/// Membership of (u,v) in the zonotope sum_k [0,p_k] (1, sigma_k).
inline FdFeasibility fd_feasible(const std::vector<double>& p, const std::vector<double>& sigma, double u, double v) {
  detail::check_data(p, sigma);
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return sigma[a] < sigma[b]; });
  NeumaierSum r;
  for (double x : p) r.add(x);
  const double rho = r.value();
  auto envelope = [&](bool lowest_first) {
    double left = u;
    NeumaierSum acc;
    for (std::size_t i = 0; i < idx.size() && left > 0.0; ++i) {
      const std::size_t k = lowest_first ? idx[i] : idx[idx.size() - 1 - i];
      const double take = std::min(left, p[k]);
      acc.add(take * sigma[k]);
      left -= take;
    }
    return acc.value();
  };
  if (u < 0.0 || (u > rho && !detail::near(u, rho))) return FdFeasibility::Infeasible;
  const double vmin = envelope(true), vmax = envelope(false);
  const double scale = std::max({1.0, std::fabs(vmin), std::fabs(vmax)});
  const double eps = 1e-12 * scale;
  if (v < vmin - eps || v > vmax + eps) return FdFeasibility::Infeasible;
  if (u == 0.0 || detail::near(u, rho) || std::fabs(v - vmin) <= eps || std::fabs(v - vmax) <= eps)
    return FdFeasibility::Boundary;
  return FdFeasibility::Interior;
}

struct OracleResult {
  double value = kInf;
  std::vector<double> u_bar;
};

/// Grid-refinement minimizer of sum p_k W(u_k/p_k) under both constraints,
/// for n <= 4, with its best grid point. value is +inf when no feasible grid
/// point exists.
inline OracleResult brute_force_oracle_point(EntropyKind kind, const std::vector<double>& p,
                                             const std::vector<double>& sigma, double u, double v,
                                             long grid = 10000) {
  detail::check_data(p, sigma);
  const std::size_t n = p.size();
  if (n > 4) throw PreconditionError("brute_force_oracle supports n <= 4");
  if (n == 1) {
    if (!detail::near(v, sigma[0] * u)) return {};
    return {p[0] * entropy_value(kind, u / p[0]), {u}};
  }
  // dependent pair: the two indices with the most separated levels
  std::size_t di = 0, dj = 1;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (std::fabs(sigma[a] - sigma[b]) > std::fabs(sigma[di] - sigma[dj])) {
        di = a;
        dj = b;
      }
  if (sigma[di] == sigma[dj]) {
    if (!detail::near(v, sigma[0] * u)) return {};
    FiniteSolution s = solve_single(kind, p, u);
    return {s.value, s.u_bar};
  }
  std::vector<std::size_t> free_idx;
  for (std::size_t k = 0; k < n; ++k)
    if (k != di && k != dj) free_idx.push_back(k);

  std::vector<double> x(n, 0.0);
  auto evaluate = [&](const std::vector<double>& z) {
    double U = u, V = v;
    for (std::size_t i = 0; i < free_idx.size(); ++i) {
      x[free_idx[i]] = z[i];
      U -= z[i];
      V -= sigma[free_idx[i]] * z[i];
    }
    x[di] = (V - sigma[dj] * U) / (sigma[di] - sigma[dj]);
    x[dj] = U - x[di];
    const double slack = 1e-13 * std::max(1.0, std::fabs(u));
    for (std::size_t k = 0; k < n; ++k) {
      if (x[k] < 0.0) {
        if (x[k] < -slack) return kInf;
        x[k] = 0.0;
      }
      if (kind.is_fd() && x[k] > p[k]) {
        if (x[k] > p[k] + slack) return kInf;
        x[k] = p[k];
      }
    }
    return finite_objective(kind, p, x);
  };
  if (free_idx.empty()) {
    const double val = evaluate({});
    return {val, val == kInf ? std::vector<double>{} : x};
  }

  const std::size_t dim = free_idx.size();
  const long per = std::max(3L, static_cast<long>(std::ceil(std::pow(static_cast<double>(grid), 1.0 / dim))));
  std::vector<double> lo(dim, 0.0), hi(dim);
  for (std::size_t i = 0; i < dim; ++i) hi[i] = kind.is_fd() ? std::min(u, p[free_idx[i]]) : u;

  double best = kInf;
  std::vector<double> best_z(dim, 0.0), best_x;
  for (int round = 0; round < 60; ++round) {
    std::vector<double> step(dim);
    for (std::size_t i = 0; i < dim; ++i) step[i] = (hi[i] - lo[i]) / static_cast<double>(per - 1);
    std::vector<long> ix(dim, 0);
    std::vector<double> z(dim);
    for (;;) {
      for (std::size_t i = 0; i < dim; ++i) z[i] = lo[i] + step[i] * static_cast<double>(ix[i]);
      const double val = evaluate(z);
      if (val < best) {  // strict: ties keep the lexicographically first point
        best = val;
        best_z = z;
        best_x = x;
      }
      std::size_t d = dim;
      while (d > 0) {
        --d;
        if (++ix[d] < per) break;
        ix[d] = 0;
        if (d == 0) {
          d = dim + 1;
          break;
        }
      }
      if (d == dim + 1) break;
    }
    if (best == kInf) return {};
    bool tiny = true;
    for (std::size_t i = 0; i < dim; ++i) {
      const double c = best_z[i];
      lo[i] = std::max(0.0, c - 2.0 * step[i]);
      const double cap = kind.is_fd() ? std::min(u, p[free_idx[i]]) : u;
      hi[i] = std::min(cap, c + 2.0 * step[i]);
      if (hi[i] - lo[i] > 1e-14 * std::max(1.0, u)) tiny = false;
    }
    if (tiny) break;
  }
  return {best, best_x};
}

inline double brute_force_oracle(EntropyKind kind, const std::vector<double>& p, const std::vector<double>& sigma,
                                 double u, double v, long grid = 10000) {
  return brute_force_oracle_point(kind, p, sigma, u, v, grid).value;
}

namespace detail {

// Newton on the convex dual D(a,b) = sum p W*(a + b sigma) - a u - b v.
inline std::optional<Multipliers> dual_newton(EntropyKind kind, const std::vector<double>& p,
                                              const std::vector<double>& sigma, double u, double v, Multipliers start,
                                              int budget = 100) {
  const std::size_t n = p.size();
  auto feasible = [&](double a, double b) {
    if (!kind.is_be()) return true;
    for (std::size_t k = 0; k < n; ++k)
      if (!(a + b * sigma[k] < 0.0)) return false;
    return true;
  };
  auto dual = [&](double a, double b) {
    NeumaierSum s;
    for (std::size_t k = 0; k < n; ++k) s.add(p[k] * entropy_conjugate(kind, a + b * sigma[k]));
    return s.value() - a * u - b * v;
  };
  double a = start.alpha, b = start.beta;
  if (!feasible(a, b)) return std::nullopt;
  double D = dual(a, b);
  const double scale_u = std::max(1.0, std::fabs(u)), scale_v = std::max(1.0, std::fabs(v));
  for (int it = 0; it < budget; ++it) {
    NeumaierSum g0, g1;
    double h00 = 0, h01 = 0, h11 = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double t = a + b * sigma[k];
      const double d1 = p[k] * entropy_conjugate_derivative(kind, t);
      const double d2 = p[k] * entropy_conjugate_second_derivative(kind, t);
      g0.add(d1);
      g1.add(d1 * sigma[k]);
      h00 += d2;
      h01 += d2 * sigma[k];
      h11 += d2 * sigma[k] * sigma[k];
    }
    const double r0 = g0.value() - u, r1 = g1.value() - v;
    if (std::fabs(r0) <= 1e-13 * scale_u && std::fabs(r1) <= 1e-13 * scale_v) return Multipliers{a, b};
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0) || !std::isfinite(det)) return std::nullopt;
    const double da = -(h11 * r0 - h01 * r1) / det;
    const double db = -(-h01 * r0 + h00 * r1) / det;
    const double slope = r0 * da + r1 * db;
    // once the Newton decrement is below what D can resolve, the line search
    // only sees rounding; take the full step
    if (-slope <= 1e-12 * std::max(1.0, std::fabs(D)) && feasible(a + da, b + db)) {
      a += da;
      b += db;
      D = dual(a, b);
      continue;
    }
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const double na = a + step * da, nb = b + step * db;
      if (!feasible(na, nb)) continue;
      const double nD = dual(na, nb);
      if (nD <= D + 1e-4 * step * slope || (step < 1e-3 && nD <= D)) {
        a = na;
        b = nb;
        D = nD;
        moved = true;
        break;
      }
    }
    if (!moved) {
      // at machine precision the line search cannot decrease D; accept a full
      // feasible Newton step if it shrinks the residual
      const double na = a + da, nb = b + db;
      if (!feasible(na, nb)) return std::nullopt;
      a = na;
      b = nb;
      D = dual(a, b);
    }
  }
  return std::nullopt;
}

inline FiniteSolution from_multipliers(EntropyKind kind, const std::vector<double>& p, const std::vector<double>& sigma,
                                       Multipliers m) {
  FiniteSolution sol;
  sol.u_bar.resize(p.size());
  for (std::size_t k = 0; k < p.size(); ++k)
    sol.u_bar[k] = p[k] * entropy_conjugate_derivative(kind, m.alpha + m.beta * sigma[k]);
  sol.value = finite_objective(kind, p, sol.u_bar);
  sol.multipliers = m;
  sol.boundary_flag = BoundaryFlag::InteriorKKT;
  return sol;
}

inline FiniteSolution edge_solution(EntropyKind kind, const std::vector<double>& p, const std::vector<double>& sigma,
                                    double u, double level, BoundaryFlag flag) {
  std::vector<double> sub;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (sigma[k] == level) sub.push_back(p[k]);
  FiniteSolution single = solve_single(kind, sub, u);
  FiniteSolution sol;
  sol.u_bar.assign(p.size(), 0.0);
  for (std::size_t k = 0, i = 0; k < p.size(); ++k)
    if (sigma[k] == level) sol.u_bar[k] = single.u_bar[i++];
  sol.value = single.value;
  sol.boundary_flag = flag;
  return sol;
}

// MB multipliers for an interior point (used directly and as a Newton start).
inline Multipliers mb_multipliers(const std::vector<double>& lp, const std::vector<double>& sigma, double u, double v) {
  const double beta = phi_n_inverse_log(lp, sigma, v / u);
  const double alpha = std::log(u) - log_sum_exp(lp, sigma, beta).log_sum;
  return {alpha, beta};
}

}  // namespace detail

/// Two constraints, MB or BE: KKT point u_k = p_k (W*)'(alpha + beta sigma_k).
inline FiniteSolution solve_two_mb_be(EntropyKind kind, const std::vector<double>& p, const std::vector<double>& sigma,
                                      double u, double v) {
  detail::check_data(p, sigma);
  if (kind.is_fd()) throw PreconditionError("solve_two_mb_be handles MB and BE only");
  const auto [lo_it, hi_it] = std::minmax_element(sigma.begin(), sigma.end());
  const double eta1 = *lo_it, eta2 = *hi_it;
  if (u == 0.0 && v == 0.0) {
    FiniteSolution s;
    s.u_bar.assign(p.size(), 0.0);
    s.boundary_flag = BoundaryFlag::Origin;
    return s;
  }
  if (!(u > 0.0)) throw InfeasibleError("two-constraint problem needs u > 0 or (u,v) = (0,0)");
  if (eta1 == eta2) {
    if (!detail::near(v, eta1 * u)) throw InfeasibleError("constant levels force v = sigma_1 u");
    FiniteSolution s = solve_single(kind, p, u);
    return s;
  }
  if (detail::near(v, eta1 * u)) return detail::edge_solution(kind, p, sigma, u, eta1, BoundaryFlag::LowerEdge);
  if (detail::near(v, eta2 * u)) return detail::edge_solution(kind, p, sigma, u, eta2, BoundaryFlag::UpperEdge);
  if (v < eta1 * u || v > eta2 * u) throw InfeasibleError("(u,v) lies outside the cone eta1 u <= v <= eta2 u");

  const std::vector<double> lp = detail::logs(p);
  const Multipliers mb = detail::mb_multipliers(lp, sigma, u, v);
  if (kind.is_mb()) {
    FiniteSolution sol;
    sol.u_bar.resize(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) sol.u_bar[k] = std::exp(lp[k] + mb.alpha + mb.beta * sigma[k]);
    sol.value = finite_objective(kind, p, sol.u_bar);
    sol.multipliers = mb;
    return sol;
  }
  // BE: shift alpha so every argument is negative, then Newton on the dual
  Multipliers start = mb;
  double tmax = -kInf;
  for (double s : sigma) tmax = std::max(tmax, start.alpha + start.beta * s);
  start.alpha -= std::log1p(std::exp(tmax));
  if (tmax - std::log1p(std::exp(tmax)) >= 0.0) start.alpha -= 1.0;
  auto m = detail::dual_newton(kind, p, sigma, u, v, start);
  if (!m) {
    Multipliers alt{start.alpha - 1.0 - std::fabs(tmax), start.beta};
    m = detail::dual_newton(kind, p, sigma, u, v, alt, 200);
  }
  if (!m) throw BudgetError("BE multiplier Newton did not converge within its budget");
  return detail::from_multipliers(kind, p, sigma, *m);
}

/// Two constraints, FD: logistic KKT point; falls back to the oracle on
/// the zonotope boundary or when Newton fails.
inline FiniteSolution solve_two_fd(const std::vector<double>& p, const std::vector<double>& sigma, double u, double v,
                                   long oracle_grid = 10000) {
  detail::check_data(p, sigma);
  const EntropyKind kind = EntropyKind::fermi_dirac();
  const FdFeasibility feas = fd_feasible(p, sigma, u, v);
  if (feas == FdFeasibility::Infeasible) throw InfeasibleError("(u,v) is outside the FD zonotope");
  if (u == 0.0) {
    FiniteSolution s;
    s.u_bar.assign(p.size(), 0.0);
    s.boundary_flag = BoundaryFlag::Origin;
    return s;
  }
  if (feas == FdFeasibility::Interior) {
    const std::vector<double> lp = detail::logs(p);
    Multipliers start{0.0, 0.0};
    try {
      start = detail::mb_multipliers(lp, sigma, u, v);
    } catch (const Error&) {
    }
    auto m = detail::dual_newton(kind, p, sigma, u, v, start);
    if (!m) m = detail::dual_newton(kind, p, sigma, u, v, Multipliers{0.0, 0.0}, 200);
    if (m) return detail::from_multipliers(kind, p, sigma, *m);
  }
  FiniteSolution sol;
  OracleResult o = brute_force_oracle_point(kind, p, sigma, u, v, oracle_grid);
  sol.value = o.value;
  sol.u_bar = std::move(o.u_bar);
  sol.boundary_flag = feas == FdFeasibility::Boundary ? BoundaryFlag::ZonotopeBoundary : BoundaryFlag::OracleFallback;
  return sol;
}

/// Dispatch on the entropy kind.
inline FiniteSolution solve_two(EntropyKind kind, const std::vector<double>& p, const std::vector<double>& sigma,
                                double u, double v) {
  if (kind.is_fd()) return solve_two_fd(p, sigma, u, v);
  return solve_two_mb_be(kind, p, sigma, u, v);
}

}  // namespace emp
