// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "emp/emp.hpp"

using namespace emp;

namespace {

const EntropyKind kBE = EntropyKind::bose_einstein();
const EntropyKind kMB = EntropyKind::maxwell_boltzmann();
const EntropyKind kFD = EntropyKind::fermi_dirac();
const EntropyKind kAll[] = {kBE, kMB, kFD};

// Tracks the worst observation of one measured quantity against its limit.
struct Worst {
  double value = 0.0;
  std::string where;
  void see(double v, const std::string& w) {
    if (!(v <= value)) {  // NaN sticks
      value = v;
      where = w;
    }
  }
};

struct Report {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[" << what << "] ";
    }
  }
  void limit(const char* name, const Worst& w, double tol) {
    detail << name << "=" << w.value;
    if (!(w.value <= tol)) {
      pass = false;
      detail << " > " << tol << " at " << w.where;
    }
    detail << "; ";
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// zeta(s), s > 1: long double partial sum plus the integral tail with the
// first two Euler-Maclaurin corrections.
double zeta_oracle(double s) {
  const long N = 100000;
  long double acc = 0.0L;
  for (long n = N - 1; n >= 1; --n) acc += std::pow(static_cast<long double>(n), -static_cast<long double>(s));
  const long double Nl = N;
  acc += std::pow(Nl, 1 - s) / (s - 1) + 0.5L * std::pow(Nl, -s) + s / 12.0L * std::pow(Nl, -s - 1);
  return static_cast<double>(acc);
}

std::string pt(double a, double b) {
  std::ostringstream o;
  o.precision(6);
  o << "(" << a << "," << b << ")";
  return o.str();
}

std::vector<double> first_p(const SequenceFamily& f, long n) {
  std::vector<double> out;
  for (long k = 1; k <= n; ++k) out.push_back(f.p(k));
  return out;
}
std::vector<double> first_sigma(const SequenceFamily& f, long n) {
  std::vector<double> out;
  for (long k = 1; k <= n; ++k) out.push_back(f.sigma(k));
  return out;
}

Report geometric_fixture() {
  Report r;
  const auto t0 = std::chrono::steady_clock::now();
  const EmpSolver g(SequenceFamily::geometric());
  const EmpSolution s = g.solve_mb(1.0, 2.0);
  r.require(s.attained && s.solution.has_value(), "solution attained");
  if (!s.solution) return r;
  Worst val, term, sums, trunc;
  val.see(std::fabs(s.value - (-1 - 2 * std::log(2.0))), "value");
  for (long n = 1; n <= 20; ++n)
    term.see(std::fabs(g.sequence_term(*s.solution, n) - std::ldexp(1.0, -n)), "n=" + std::to_string(n));
  const auto [su, sv] = g.sequence_sums(*s.solution);
  sums.see(std::max(std::fabs(su - 1.0), std::fabs(sv - 2.0)), "sums");
  const FiniteSolution f = solve_two_mb_be(kMB, first_p(g.family(), 60), first_sigma(g.family(), 60), 1.0, 2.0);
  trunc.see(std::fabs(f.value - s.value), "n=60");
  const double secs = seconds_since(t0);
  r.limit("value_err", val, 1e-9);
  r.limit("term_err", term, 1e-12);
  r.limit("resum_err", sums, 1e-10);
  r.limit("trunc60_err", trunc, 1e-9);
  r.detail << "runtime=" << secs << "s";
  r.require(secs < 1.0, "runtime < 1 s");
  return r;
}

Report zeta_fixture() {
  Report r;
  const auto t0 = std::chrono::steady_clock::now();
  SolverOptions o;
  o.epsilon = 1e-3;
  const EmpSolver z(SequenceFamily::weighted_geometric(1.0, 3.0), o);
  const SeriesProfile& pr = z.profile();
  const double z2 = zeta_oracle(2.0), z3 = zeta_oracle(3.0);
  r.require(pr.alpha == 1.0, "alpha = 1");
  r.require(pr.theta1 == 1.0, "theta1 = 1");
  Worst th, term, val, eps;
  th.see(std::fabs(pr.theta2 - z2 / z3), "theta2");
  const EmpSolution b = z.solve_mb(1.0, pr.theta2);
  r.require(b.attained && b.solution.has_value(), "attained at (1, theta2)");
  if (b.solution)
    for (long n = 1; n <= 2000; ++n)
      term.see(std::fabs(z.sequence_term(*b.solution, n) - std::pow(static_cast<double>(n), -3.0) / z3),
               "n=" + std::to_string(n));
  const EmpSolution c = z.solve_mb(1.0, 2.0);
  r.require(!c.attained, "(1,2) not attained");
  val.see(std::fabs(c.value - (-3.0 - std::log(z3))), "value");
  r.require(c.epsilon_family.has_value() && !c.epsilon_family->members.empty(), "epsilon family present");
  if (c.epsilon_family && !c.epsilon_family->members.empty()) {
    const EpsilonMember& m = c.epsilon_family->members.back();
    eps.see(std::fabs(m.objective - c.value), "n=" + std::to_string(m.n));
    r.require(m.n <= (1L << 15), "truncation n <= 2^15");
    r.detail << "eps_n=" << m.n << "; ";
  }
  const double secs = seconds_since(t0);
  r.limit("theta2_err", th, 1e-8);
  r.limit("term_err", term, 1e-10);
  r.limit("value_err", val, 1e-9);
  r.limit("eps_gap", eps, 1e-3);
  r.detail << "runtime=" << secs << "s";
  r.require(secs < 10.0, "runtime < 10 s");
  return r;
}

Report oracle_equivalence() {
  Report r;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(314159);
  std::uniform_real_distribution<double> P(0.5, 3.0), S(0.0, 4.0), F(0.1, 0.9);
  Worst gap, kkt, resum;
  int solves = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 3);
    std::vector<double> p(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = P(rng);
      s[i] = S(rng) + 1.5 * static_cast<double>(i);
    }
    // strictly interior target, feasible for all three entropies
    double u = 0.0, v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = F(rng) * p[i];
      u += c;
      v += c * s[i];
    }
    for (EntropyKind k : kAll) {
      const std::string where = std::string(k.token()) + " trial " + std::to_string(trial);
      const FiniteSolution sol = solve_two(k, p, s, u, v);
      ++solves;
      gap.see(std::fabs(sol.value - brute_force_oracle(k, p, s, u, v)), where);
      if (sol.boundary_flag != BoundaryFlag::InteriorKKT || !sol.multipliers) {
        kkt.see(kInf, where + " no multipliers");
        continue;
      }
      double su = 0.0, sv = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        kkt.see(std::fabs(entropy_derivative(k, sol.u_bar[i] / p[i]) - sol.multipliers->alpha -
                          sol.multipliers->beta * s[i]),
                where);
        su += sol.u_bar[i];
        sv += sol.u_bar[i] * s[i];
      }
      resum.see(std::max(std::fabs(su - u), std::fabs(sv - v)), where);
    }
  }
  const double secs = seconds_since(t0);
  r.detail << "solves=" << solves << "; ";
  r.limit("oracle_gap", gap, 1e-4);
  r.limit("kkt_residual", kkt, 1e-8);
  r.limit("constraint_residual", resum, 1e-8);
  r.detail << "runtime=" << secs << "s";
  r.require(secs < 60.0, "runtime < 60 s");
  return r;
}

Report fenchel_young() {
  Report r;
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Worst eq_scalar, eq_series, ineq_scalar, ineq_series;

  // scalar integrands: W(u) + W*(W'(u)) = u W'(u)
  for (EntropyKind k : kAll)
    for (int i = 0; i < 1000; ++i) {
      const double u = k.is_fd() ? 0.001 + 0.998 * U(rng) : 0.001 + 20 * U(rng);
      const double t = entropy_derivative(k, u);
      eq_scalar.see(std::fabs(entropy_value(k, u) + entropy_conjugate(k, t) - u * t), std::string(k.token()) + " u=" + std::to_string(u));
    }
  for (EntropyKind k : kAll)
    for (int i = 0; i < 10000; ++i) {
      const double u = k.is_fd() ? U(rng) : 5 * U(rng);
      const double t = k.is_be() ? -5 * U(rng) - 1e-3 : 10 * U(rng) - 5;
      ineq_scalar.see(-(entropy_value(k, u) + entropy_conjugate(k, t) - u * t), std::string(k.token()) + " " + pt(u, t));
    }

  // value function against the dual series: H(grad h(x,y)) + h(x,y) = <(x,y), grad h>
  const EmpSolver g(SequenceFamily::geometric());
  const PartitionSeries& ser = g.series();
  for (int i = 0; i < 1000; ++i) {
    const double x = 6 * U(rng) - 3, y = -0.05 - 3 * U(rng);
    const auto [u, v] = ser.grad_h(kMB, x, y);
    const double H = g.value_mb(u, v), h = ser.eval_h(kMB, x, y);
    eq_series.see(std::fabs(H + h - x * u - y * v), pt(x, y));
  }
  for (int i = 0; i < 10000; ++i) {
    const double x = 6 * U(rng) - 3, y = -0.05 - 3 * U(rng);
    const double u = 0.01 + 3 * U(rng), v = u * (1 + 8 * U(rng));
    const double H = g.value_mb(u, v), h = ser.eval_h(kMB, x, y);
    ineq_series.see(-(H + h - x * u - y * v), pt(x, y) + " vs " + pt(u, v));
  }
  r.limit("scalar_equality", eq_scalar, 1e-10);
  r.limit("series_equality", eq_series, 1e-10);
  r.limit("scalar_violation", ineq_scalar, 1e-12);
  r.limit("series_violation", ineq_series, 1e-12);
  return r;
}

Report round_trips() {
  Report r;
  std::mt19937_64 rng(1618);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Worst mb, inv;
  int interior = 0;
  for (const auto& [name, fam] : {std::pair{"geometric", SequenceFamily::geometric()},
                                  std::pair{"lattice", SequenceFamily::lattice3d(1.0)}}) {
    const EmpSolver s(fam);
    for (int i = 0; i < 100; ++i) {
      const double x = 6 * U(rng) - 3, y = -0.05 - 3 * U(rng);
      const auto [u, v] = s.series().grad_h(kMB, x, y);
      const EmpSolution sol = s.solve_mb(u, v);
      if (sol.region == Region::Interior) ++interior;
      if (!sol.multipliers) {
        mb.see(kInf, std::string(name) + " " + pt(x, y) + " no multipliers");
        continue;
      }
      mb.see(std::max(std::fabs(sol.multipliers->first - x), std::fabs(sol.multipliers->second - y)),
             std::string(name) + " " + pt(x, y));
    }
  }
  r.require(interior == 200, "all MB points interior");
  const EmpSolver g(SequenceFamily::geometric());
  for (EntropyKind k : {kBE, kFD})
    for (int i = 0; i < 50; ++i) {
      const double y = -0.1 - 1.9 * U(rng);
      const double x = k.is_be() ? -y - 0.2 - 2.8 * U(rng) : 6 * U(rng) - 3;  // BE needs x + y < 0
      const EmpSolution fw = g.forward_solve(k, x, y);
      const InverseResult inv_r = g.inverse_solve_bf(k, fw.targets->first, fw.targets->second);
      if (!inv_r.converged) {
        inv.see(kInf, std::string(k.token()) + " " + pt(x, y) + " " + inv_r.reason);
        continue;
      }
      inv.see(std::max(std::fabs(inv_r.x - x), std::fabs(inv_r.y - y)), std::string(k.token()) + " " + pt(x, y));
    }
  r.limit("mb_multiplier_err", mb, 1e-8);
  r.limit("bf_multiplier_err", inv, 1e-8);
  return r;
}

Report weak_duality() {
  Report r;
  std::mt19937_64 rng(577);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Worst viol;
  int count = 0;
  for (const auto& [name, fam] : {std::pair{"geometric", SequenceFamily::geometric()},
                                  std::pair{"zeta", SequenceFamily::weighted_geometric(1.0, 3.0)},
                                  std::pair{"lattice", SequenceFamily::lattice3d(1.0)}}) {
    const EmpSolver s(fam);
    for (int i = 0; i < 1000;) {
      const std::size_t n = 1 + static_cast<std::size_t>(U(rng) * 40);
      std::vector<double> vals(n);
      double u = 0.0, v = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        vals[k] = U(rng) < 0.3 ? 0.0 : std::exp(4 * U(rng) - 2);
        u += vals[k];
        v += s.family().sigma(static_cast<long>(k + 1)) * vals[k];
      }
      if (u == 0.0) continue;
      ++i;
      ++count;
      const double obj = s.objective_value(kMB, SequenceDescription::prefix(vals));
      viol.see(s.value_mb(u, v) - obj, std::string(name) + " " + pt(u, v));
    }
  }
  r.detail << "sequences=" << count << "; ";
  r.limit("max(value - objective)", viol, 1e-8);
  return r;
}

Report degenerate() {
  Report r;
  const EmpSolver c(SequenceFamily::arithmetic(5.0, 0.0));
  r.require(c.structure() == FamilyStructure::ConstantSigma, "constant sigma detected");
  for (double u : {0.5, 1.0, 3.0}) {
    r.require(c.classify(u, 5 * u) == Region::DegenerateConstantSigma, "constant-sigma region at " + pt(u, 5 * u));
    r.require(c.value_mb(u, 5 * u) == -kInf, "H = -inf at " + pt(u, 5 * u));
  }
  r.require(c.biconjugate_check(0.0, -1.0).rhs == kInf, "constant-sigma biconjugate rhs = +inf");

  const EmpSolver d(SequenceFamily::explicit_prefix({1, 1}, {1, 7}, TailRule{TailShape::Constant, 4.0, 0.0}));
  r.require(d.structure() == FamilyStructure::AllDivergent, "empty domain detected");
  for (auto [u, v] : {std::pair{1.0, 2.0}, std::pair{1.0, 4.0}, std::pair{2.0, 13.0}}) {
    r.require(d.classify(u, v) == Region::DegenerateAllDivergent, "all-divergent region at " + pt(u, v));
    r.require(d.value_mb(u, v) == -kInf, "H = -inf at " + pt(u, v));
  }
  for (auto [x, y] : {std::pair{0.0, -1.0}, std::pair{1.0, -5.0}})
    r.require(d.biconjugate_check(x, y).rhs == kInf, "all-divergent biconjugate rhs = +inf at " + pt(x, y));
  r.detail << (r.pass ? "both families -inf on their regions, rhs = +inf" : "");
  return r;
}

Report convexity() {
  Report r;
  const EmpSolver g(SequenceFamily::geometric());
  std::mt19937_64 rng(8128);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Worst viol;
  for (int i = 0; i < 1000; ++i) {
    const double u1 = 0.05 + 5 * U(rng), u2 = 0.05 + 5 * U(rng);
    const double v1 = u1 * (1 + 10 * U(rng)), v2 = u2 * (1 + 10 * U(rng));
    const double mid = g.value_mb(0.5 * (u1 + u2), 0.5 * (v1 + v2));
    viol.see(mid - 0.5 * (g.value_mb(u1, v1) + g.value_mb(u2, v2)), pt(u1, v1) + " " + pt(u2, v2));
  }
  r.limit("midpoint_violation", viol, 1e-9);
  return r;
}

Report lattice_ingestion() {
  Report r;
  std::map<long, long> brute;
  for (long a = 1; a * a <= 100; ++a)
    for (long b = 1; b * b <= 100; ++b)
      for (long c = 1; c * c <= 100; ++c)
        if (a * a + b * b + c * c <= 100) ++brute[a * a + b * b + c * c];
  const auto levels = lattice_levels(1.0, 12);
  auto it = brute.begin();
  for (std::size_t i = 0; i < 12; ++i, ++it) {
    const bool ok = i < levels.size() && levels[i].level == static_cast<double>(it->first) &&
                    levels[i].degeneracy == it->second;
    r.require(ok, "level " + std::to_string(i + 1));
  }
  const EmpSolver l(SequenceFamily::lattice3d(1.0));
  const EmpSolution s = l.solve_mb(1.0, 5.0);
  r.require(s.region == Region::Interior && s.attained, "interior solve at (1,5)");
  const FiniteSolution f = solve_two_mb_be(kMB, first_p(l.family(), 200), first_sigma(l.family(), 200), 1.0, 5.0);
  Worst trunc;
  trunc.see(std::fabs(f.value - s.value), "n=200");
  r.require(f.value >= s.value - 1e-12, "truncation value bounds the series value from above");
  r.detail << "levels 1..12 exact; ";
  r.limit("trunc200_err", trunc, 1e-9);
  return r;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Report()>> criteria[] = {
      {"1 geometric fixture", geometric_fixture},
      {"2 zeta boundary fixture", zeta_fixture},
      {"3 finite oracle equivalence", oracle_equivalence},
      {"4 Fenchel-Young suites", fenchel_young},
      {"5 forward/inverse round trips", round_trips},
      {"6 weak duality", weak_duality},
      {"7 degenerate families", degenerate},
      {"8 midpoint convexity", convexity},
      {"9 lattice ingestion", lattice_ingestion},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Report rep;
    try {
      rep = run();
    } catch (const std::exception& e) {
      rep.pass = false;
      rep.detail << "exception: " << e.what();
    }
    if (!rep.pass) ++failed;
    std::printf("%s criterion %s: %s\n", rep.pass ? "PASS" : "FAIL", name, rep.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
