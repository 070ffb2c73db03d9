#pragma once

// Command implementations behind the emp executable. Each command takes a
// parsed spec, prints a human-readable report to `out` and returns a
// machine-readable record; run() wires flags, files and exit codes.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emp/solver.hpp"
#include "emp/spec_file.hpp"

namespace emp::cli {

enum ExitCode : int { kOk = 0, kParseError = 2, kInfeasible = 3, kNumericalFailure = 4 };

struct Options {
  std::string spec_path;
  std::string out_path;
  std::string format;  // csv | json; empty means the command's default
  int terms = 10;
  int workers = 1;
  bool strict_feasible = false;
  int log_level = 0;
};

struct Outcome {
  int code = kOk;
  nlohmann::json record;
  std::string csv;
};

/// EMP_LOG: unset/0/off, 1/info, 2/debug.
inline int log_level_from_env() {
  const char* s = std::getenv("EMP_LOG");
  if (!s) return 0;
  const std::string v(s);
  if (v == "1" || v == "info") return 1;
  if (v == "2" || v == "debug") return 2;
  return 0;
}

namespace detail {

inline std::string num(double x) { return emp::detail::format_number(x); }

inline std::string short_num(double x) {
  if (!std::isfinite(x)) return num(x);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline nlohmann::json jnum(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}

inline bool infeasible(Region r) {
  return r == Region::InfeasibleNegative || r == Region::ZeroWithPositiveV || r == Region::BelowCone ||
         r == Region::OutsideDomain;
}

inline std::string describe(Region r) {
  switch (r) {
    case Region::InfeasibleNegative:
      return "infeasible (u < 0, or u = 0 with v on the wrong side)";
    case Region::OriginPoint:
      return "origin (value 0, zero sequence)";
    case Region::ZeroWithPositiveV:
      return "infeasible (u = 0 with v != 0); h* = -alpha v there";
    case Region::LowerBoundary:
      return "lower boundary v = theta1 u (mass on the minimal levels)";
    case Region::Interior:
      return "interior (attained, closed form)";
    case Region::UpperBoundaryTheta2:
      return "upper boundary v = theta2 u (attained at y = -alpha)";
    case Region::BeyondTheta2:
      return "beyond theta2 (finite value, not attained)";
    case Region::BelowCone:
      return "infeasible (below cone v >= theta1 u)";
    case Region::DegenerateConstantSigma:
      return "degenerate constant-sigma family (value -inf on the ray)";
    case Region::DegenerateAllDivergent:
      return "degenerate family with dom f empty (value -inf inside the cone)";
    case Region::DegenerateEdge:
      return "edge ray of a degenerate family";
    case Region::OutsideDomain:
      return "infeasible (outside the degenerate family's cone)";
  }
  return "?";
}

inline double need(const ProblemSpec& s, const char* key) {
  auto v = s.target(key);
  if (!v) throw ConfigurationError(std::string("mode ") + s.mode + " needs '" + key + "' in [problem]");
  return *v;
}

inline SolverOptions solver_options(const ProblemSpec& s) {
  SolverOptions o;
  o.tol = s.tol;
  o.epsilon = s.epsilon;
  return o;
}

inline void print_terms(std::ostream& out, nlohmann::json& rec, const EmpSolver& solver,
                        const SequenceDescription& d, int k) {
  out << "terms:";
  nlohmann::json arr = nlohmann::json::array();
  for (long n = 1; n <= k; ++n) {
    const double t = solver.sequence_term(d, n);
    out << (n == 1 ? " " : ", ") << short_num(t);
    arr.push_back(jnum(t));
  }
  out << (k > 0 ? ", ...\n" : " (none requested)\n");
  rec["terms"] = arr;
}

inline void report_solution(std::ostream& out, nlohmann::json& rec, const EmpSolver& solver, const EmpSolution& s,
                            int k) {
  out << "region: " << to_string(s.region) << ": " << describe(s.region) << "\n";
  out << "value: " << short_num(s.value) << "\n";
  out << "attained: " << (s.attained ? "yes" : "no") << "\n";
  rec["region"] = to_string(s.region);
  rec["value"] = jnum(s.value);
  rec["attained"] = s.attained;
  if (s.conjugate_value) {
    out << "conjugate value h*: " << short_num(*s.conjugate_value) << "\n";
    rec["conjugate_value"] = jnum(*s.conjugate_value);
  }
  if (s.multipliers) {
    out << "multipliers: x = " << short_num(s.multipliers->first) << ", y = " << short_num(s.multipliers->second)
        << "\n";
    rec["multipliers"] = {jnum(s.multipliers->first), jnum(s.multipliers->second)};
  }
  if (s.solution) print_terms(out, rec, solver, *s.solution, k);
  if (s.epsilon_family) {
    const EpsilonTrace& tr = *s.epsilon_family;
    out << "epsilon family (no minimizer; objectives approach the value):\n";
    nlohmann::json arr = nlohmann::json::array();
    for (const EpsilonMember& m : tr.members) {
      out << "  n = " << m.n << "  objective = " << short_num(m.objective) << "  gap = " << short_num(m.gap) << "\n";
      arr.push_back({{"n", m.n}, {"objective", jnum(m.objective)}, {"gap", jnum(m.gap)}});
    }
    out << "  target gap " << short_num(tr.epsilon) << (tr.reached ? " reached" : " not reached by the term limit")
        << "\n";
    rec["epsilon_family"] = {{"members", arr}, {"epsilon", tr.epsilon}, {"reached", tr.reached}};
  }
}

// Feasible truncated MB sequence with exact totals (u, v): a random
// distribution on the first m levels mixed with one level on the other
// side of v/u.
inline std::vector<double> random_feasible(const EmpSolver& solver, double u, double v, long m, std::mt19937_64& rng) {
  const SequenceFamily& f = solver.family();
  const double w = v / u;
  std::uniform_real_distribution<double> U(0.05, 1.0);
  std::vector<double> q(static_cast<std::size_t>(m));
  double tot = 0.0, mean = 0.0;
  for (long k = 1; k <= m; ++k) {
    q[static_cast<std::size_t>(k - 1)] = U(rng);
    tot += q[static_cast<std::size_t>(k - 1)];
  }
  for (long k = 1; k <= m; ++k) {
    q[static_cast<std::size_t>(k - 1)] /= tot;
    mean += q[static_cast<std::size_t>(k - 1)] * f.sigma(k);
  }
  long anchor = 0;
  for (long k = 1; k <= m; ++k) {
    const double s = f.sigma(k);
    if ((mean < w && s > w) || (mean > w && s < w)) {
      if (anchor == 0 || std::fabs(s - w) > std::fabs(f.sigma(anchor) - w)) anchor = k;
    }
  }
  if (anchor == 0 && mean != w) return {};
  std::vector<double> seq(static_cast<std::size_t>(m));
  const double sa = anchor ? f.sigma(anchor) : 0.0;
  const double t = anchor ? (sa - w) / (sa - mean) : 1.0;
  for (long k = 1; k <= m; ++k) seq[static_cast<std::size_t>(k - 1)] = u * t * q[static_cast<std::size_t>(k - 1)];
  if (anchor) seq[static_cast<std::size_t>(anchor - 1)] += u * (1.0 - t);
  return seq;
}

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline std::vector<Check> verify_suite(const EmpSolver& solver, const ProblemSpec& spec, std::ostream& log) {
  std::vector<Check> checks;
  auto add = [&](std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  };
  const EntropyKind mb = EntropyKind::maxwell_boltzmann();
  std::mt19937_64 rng(20240601);

  if (solver.degenerate()) {
    // a point inside the documented -inf region
    const SequenceFamily& f = solver.family();
    double lo = f.tail().offset, hi = lo;
    for (double s : f.prefix_sigma()) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    const double v = solver.structure() == FamilyStructure::ConstantSigma ? lo : 0.5 * (lo + hi);
    const double val = solver.value_mb(1.0, v);
    add("degenerate_value", val == -kInf, "H(1, " + short_num(v) + ") = " + short_num(val));
    const BiconjugateResult b = solver.biconjugate_check(0.0, -1.0);
    add("biconjugate", b.rhs == kInf, "h(0,-1) = " + short_num(b.rhs));
    return checks;
  }

  const SeriesProfile& pr = solver.profile();
  double u = 1.0, v;
  if (spec.target("u") && spec.target("v")) {
    u = *spec.target("u");
    v = *spec.target("v");
  } else {
    const double w = std::isfinite(pr.theta2) && pr.theta2 < pr.theta1 + 1.0 ? 0.5 * (pr.theta1 + pr.theta2)
                                                                             : pr.theta1 + 1.0;
    v = solver.from_normalized_v(u, w * u);
  }
  const EmpSolution sol = solver.solve_mb(u, v);
  log << "verify target (u, v) = (" << short_num(u) << ", " << short_num(v) << "), region "
      << to_string(sol.region) << "\n";
  if (infeasible(sol.region) || sol.region == Region::OriginPoint) {
    add("target_region", true, std::string("no further checks for region ") + to_string(sol.region));
    return checks;
  }
  const double H = sol.value;

  // truncated problems approach the value
  if (sol.region == Region::Interior || sol.region == Region::BeyondTheta2 ||
      sol.region == Region::UpperBoundaryTheta2) {
    const double target = sol.region == Region::Interior ? 1e-6 * std::max(1.0, std::fabs(H)) : 1e-3;
    double prev = kInf, last = kInf;
    bool monotone = true;
    long n_last = 0;
    for (long n = 16; n <= (1L << 15); n *= 2) {
      EpsilonMember m;
      try {
        m = solver.epsilon_member(u, v, n);
      } catch (const RangeError&) {
        continue;
      }
      if (m.objective > prev + 1e-12 * std::max(1.0, std::fabs(prev))) monotone = false;
      prev = m.objective;
      last = m.objective - H;
      n_last = n;
      if (last <= target) break;
    }
    add("truncation", monotone && last >= -1e-9 && last <= target,
        "gap " + short_num(last) + " at n = " + std::to_string(n_last) + (monotone ? "" : ", not monotone"));
  }

  // Fenchel-Young: equality at the multipliers, inequality elsewhere
  if (sol.multipliers) {
    const auto [x, y] = *sol.multipliers;
    const auto [xn, yn] = solver.to_normalized_xy(x, y);
    const double h = solver.series().eval_h(mb, xn, yn, spec.tol);
    const double gap = H + h - (x * u + y * v);
    add("fenchel_young_equality", std::fabs(gap) <= 1e-9 * std::max(1.0, std::fabs(H) + std::fabs(h)),
        "H + h - <(x,y),(u,v)> = " + short_num(gap));
  }
  {
    std::uniform_real_distribution<double> X(-3.0, 3.0), Y(0.05, 3.0);
    double worst = kInf;
    for (int i = 0; i < 50; ++i) {
      const double xn = X(rng), yn = -pr.alpha - Y(rng);
      const auto [x, y] = solver.from_normalized_xy(xn, yn);
      const double h = solver.series().eval_h(mb, xn, yn, spec.tol);
      worst = std::min(worst, H + h - (x * u + y * v));
    }
    add("fenchel_young_inequality", worst >= -1e-10 * std::max(1.0, std::fabs(H)),
        "min of H + h - <(x,y),(u,v)> over 50 points = " + short_num(worst));
  }

  // forward/inverse round trip
  if (sol.region == Region::Interior) {
    const auto [x, y] = *sol.multipliers;
    const EmpSolution fw = solver.forward_solve(mb, x, y);
    const double du = std::fabs(fw.targets->first - u), dv = std::fabs(fw.targets->second - v);
    add("round_trip_mb", du <= 1e-8 * std::max(1.0, u) && dv <= 1e-8 * std::max(1.0, std::fabs(v)),
        "|du| = " + short_num(du) + ", |dv| = " + short_num(dv));
    const EntropyKind kind = EntropyKind::from_token(spec.entropy);
    if (!kind.is_mb()) {
      const auto [xn, yn] = solver.to_normalized_xy(x, y);
      const double xb = kind.is_be() ? -1.0 - pr.theta1 * yn : xn;
      const auto [x0, y0] = solver.from_normalized_xy(xb, yn);
      const EmpSolution f2 = solver.forward_solve(kind, x0, y0);
      const InverseResult inv = solver.inverse_solve_bf(kind, f2.targets->first, f2.targets->second);
      const bool ok = inv.converged && std::fabs(inv.x - x0) <= 1e-8 * std::max(1.0, std::fabs(x0)) &&
                      std::fabs(inv.y - y0) <= 1e-8 * std::max(1.0, std::fabs(y0));
      add(std::string("round_trip_") + std::string(kind.token()), ok,
          inv.converged ? "multiplier error " + short_num(std::max(std::fabs(inv.x - x0), std::fabs(inv.y - y0)))
                        : inv.reason);
    }
  }

  // weak duality on random feasible truncated sequences
  {
    double worst = kInf;
    int tried = 0;
    std::uniform_int_distribution<long> M(2, 40);
    for (int i = 0; i < 200; ++i) {
      const std::vector<double> seq = random_feasible(solver, u, v, M(rng), rng);
      if (seq.empty()) continue;
      ++tried;
      worst = std::min(worst, solver.objective_value(mb, SequenceDescription::prefix(seq)) - H);
    }
    add("weak_duality", tried > 0 && worst >= -1e-8,
        std::to_string(tried) + " sequences, min objective - value = " + short_num(worst));
  }

  // beyond theta2 the boundary closed form cannot meet the second constraint
  if (sol.region == Region::BeyondTheta2) {
    const double xn = std::log(u) - std::log(*pr.f_at_boundary);
    const auto [x, y] = solver.from_normalized_xy(xn, -pr.alpha);
    const EmpSolution cand = solver.forward_solve(mb, x, y);
    const double vc = solver.to_normalized_v(cand.targets->first, cand.targets->second);
    const double vt = solver.to_normalized_v(u, v);
    add("closed_form_candidate", std::fabs(cand.targets->first - u) <= 1e-9 * u && vc < vt,
        "boundary candidate reaches v' = " + short_num(vc) + " < " + short_num(vt));
  }
  return checks;
}

}  // namespace detail

inline Outcome cmd_solve(const ProblemSpec& spec, const Options& opt, std::ostream& out) {
  Outcome oc;
  const EmpSolver solver(make_family(spec.family), detail::solver_options(spec));
  const double u = detail::need(spec, "u"), v = detail::need(spec, "v");
  const EntropyKind kind = EntropyKind::from_token(spec.entropy);
  oc.record = {{"mode", "solve"}, {"entropy", spec.entropy}, {"u", detail::jnum(u)}, {"v", detail::jnum(v)}};
  if (kind.is_mb()) {
    const EmpSolution s = solver.solve_mb(u, v);
    detail::report_solution(out, oc.record, solver, s, opt.terms);
    if (opt.strict_feasible && detail::infeasible(s.region)) oc.code = kInfeasible;
    return oc;
  }
  out << "best-effort " << kind.token()
      << " inverse: Newton on the dual started from the MB multipliers; success is not guaranteed\n";
  const InverseResult inv = solver.inverse_solve_bf(kind, u, v);
  oc.record["converged"] = inv.converged;
  oc.record["iterations"] = inv.iterations;
  if (!inv.converged) {
    out << "inverse failed after " << inv.iterations << " iterations: " << inv.reason << "\n";
    oc.record["failure"] = inv.reason;
    const Region r = solver.classify(u, v);
    oc.record["region"] = to_string(r);
    oc.code = opt.strict_feasible && detail::infeasible(r) ? kInfeasible : kNumericalFailure;
    return oc;
  }
  detail::report_solution(out, oc.record, solver, *inv.solution, opt.terms);
  return oc;
}

inline Outcome cmd_classify(const ProblemSpec& spec, const Options& opt, std::ostream& out) {
  Outcome oc;
  const SequenceFamily family = make_family(spec.family);
  const EmpSolver solver(family, detail::solver_options(spec));
  oc.record = {{"mode", "classify"}};
  if (solver.degenerate()) {
    const char* st = solver.structure() == FamilyStructure::ConstantSigma ? "constant sigma" : "dom f empty";
    out << "family: degenerate (" << st << "); H = -inf on its cone\n";
    oc.record["structure"] = st;
  } else {
    const SeriesProfile& pr = solver.profile();
    out << "alpha: " << detail::short_num(pr.alpha) << "\n";
    out << "boundary case: " << to_string(pr.boundary_case) << "\n";
    out << "theta1: " << detail::short_num(pr.theta1) << "  theta2: " << detail::short_num(pr.theta2)
        << "  (normalized levels)\n";
    if (pr.f_at_boundary) out << "f(-alpha): " << detail::short_num(*pr.f_at_boundary) << "\n";
    if (pr.gamma) out << "gamma: " << detail::short_num(*pr.gamma) << "\n";
    if (solver.sign() != 1 || solver.shift() != 0.0)
      out << "normalization: sigma' = " << solver.sign() << " * sigma - (" << detail::short_num(solver.shift())
          << ")\n";
    oc.record["alpha"] = detail::jnum(pr.alpha);
    oc.record["boundary_case"] = to_string(pr.boundary_case);
    oc.record["theta1"] = detail::jnum(pr.theta1);
    oc.record["theta2"] = detail::jnum(pr.theta2);
    oc.record["sign"] = solver.sign();
    oc.record["shift"] = solver.shift();
  }
  if (family.is_lattice()) {
    auto it = spec.family.params.find("levels");
    const long count = it == spec.family.params.end() ? 12 : static_cast<long>(it->second);
    if (count < 1) throw ConfigurationError("lattice levels must be >= 1");
    nlohmann::json arr = nlohmann::json::array();
    out << "levels (degeneracy, level):";
    for (const LatticeLevel& l : lattice_levels(family.lattice_scale(), count)) {
      out << " (" << l.degeneracy << ", " << detail::short_num(l.level) << ")";
      arr.push_back({l.degeneracy, l.level});
    }
    out << "\n";
    oc.record["levels"] = arr;
  }
  if (spec.target("u") && spec.target("v")) {
    const double u = *spec.target("u"), v = *spec.target("v");
    const Region r = solver.classify(u, v);
    const double val = solver.value_mb(u, v);
    out << "region: " << to_string(r) << ": " << detail::describe(r) << "\n";
    out << "value: " << detail::short_num(val) << "\n";
    oc.record["region"] = to_string(r);
    oc.record["value"] = detail::jnum(val);
    if (opt.strict_feasible && detail::infeasible(r)) oc.code = kInfeasible;
  }
  return oc;
}

inline Outcome cmd_forward(const ProblemSpec& spec, const Options& opt, std::ostream& out) {
  Outcome oc;
  const EmpSolver solver(make_family(spec.family), detail::solver_options(spec));
  const double x = detail::need(spec, "x"), y = detail::need(spec, "y");
  const EntropyKind kind = EntropyKind::from_token(spec.entropy);
  const EmpSolution s = solver.forward_solve(kind, x, y);
  out << "targets: u = " << detail::short_num(s.targets->first) << ", v = " << detail::short_num(s.targets->second)
      << "\n";
  oc.record = {{"mode", "forward"},
               {"entropy", spec.entropy},
               {"x", x},
               {"y", y},
               {"u", detail::jnum(s.targets->first)},
               {"v", detail::jnum(s.targets->second)}};
  detail::report_solution(out, oc.record, solver, s, opt.terms);
  return oc;
}

inline Outcome cmd_sweep(const ProblemSpec& spec, const Options& opt, std::ostream& out) {
  Outcome oc;
  const EmpSolver solver(make_family(spec.family), detail::solver_options(spec));
  const EntropyKind kind = EntropyKind::from_token(spec.entropy);
  auto axis = [&](const char* lo, const char* hi, const char* steps) {
    const double a = detail::need(spec, lo), b = detail::need(spec, hi), s = detail::need(spec, steps);
    if (!(s >= 1.0) || s != std::floor(s) || s > 1e6)
      throw ConfigurationError(std::string(steps) + " must be a positive integer");
    const long n = static_cast<long>(s);
    std::vector<double> pts(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return pts;
  };
  const std::vector<double> us = axis("u_min", "u_max", "u_steps"), vs = axis("v_min", "v_max", "v_steps");
  struct Row {
    Region region;
    double value;
    bool attained;
    std::string error;
  };
  const std::size_t total = us.size() * vs.size();
  std::vector<Row> rows(total);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < total;) {
      const double u = us[i / vs.size()], v = vs[i % vs.size()];
      Row& r = rows[i];
      try {
        r.region = solver.classify(u, v);
        if (kind.is_mb() || detail::infeasible(r.region) || r.region == Region::OriginPoint || solver.degenerate()) {
          r.value = solver.value_mb(u, v);
          r.attained = solver.solve_mb(u, v).attained;
          if (!kind.is_mb() && r.region != Region::OriginPoint && std::isfinite(r.value)) {
            r.error = "be/fd sweep outside the inverse's scope";
            r.value = std::nan("");
          }
        } else {
          const InverseResult inv = solver.inverse_solve_bf(kind, u, v);
          if (!inv.converged) {
            r.value = std::nan("");
            r.error = inv.reason;
          } else {
            r.value = inv.solution->value;
            r.attained = true;
          }
        }
      } catch (const Error& e) {
        r.value = std::nan("");
        r.error = e.what();
      }
    }
  };
  const int nw = std::max(1, opt.workers);
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "u,v,region,value,attained\n";
  nlohmann::json arr = nlohmann::json::array();
  bool any_feasible = false;
  for (std::size_t i = 0; i < total; ++i) {
    const double u = us[i / vs.size()], v = vs[i % vs.size()];
    const Row& r = rows[i];
    csv << detail::num(u) << "," << detail::num(v) << "," << to_string(r.region) << "," << detail::num(r.value) << ","
        << (r.attained ? "true" : "false") << "\n";
    arr.push_back({{"u", u},
                   {"v", v},
                   {"region", to_string(r.region)},
                   {"value", detail::jnum(r.value)},
                   {"attained", r.attained}});
    if (!r.error.empty()) {
      out << "row (" << detail::num(u) << ", " << detail::num(v) << ") failed: " << r.error << "\n";
      oc.code = kNumericalFailure;
    }
    if (!detail::infeasible(r.region)) any_feasible = true;
  }
  oc.csv = csv.str();
  oc.record = {{"mode", "sweep"}, {"rows", arr}};
  out << total << " rows\n";
  if (oc.code == kOk && opt.strict_feasible && !any_feasible) oc.code = kInfeasible;
  return oc;
}

inline Outcome cmd_verify(const ProblemSpec& spec, const Options&, std::ostream& out) {
  Outcome oc;
  const EmpSolver solver(make_family(spec.family), detail::solver_options(spec));
  std::ostringstream log;
  const std::vector<detail::Check> checks = detail::verify_suite(solver, spec, log);
  out << log.str();
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    if (!c.pass) oc.code = kNumericalFailure;
  }
  oc.record = {{"mode", "verify"}, {"checks", arr}, {"pass", oc.code == kOk}};
  return oc;
}

inline Outcome dispatch(const ProblemSpec& spec, const Options& opt, std::ostream& out) {
  if (spec.mode == "solve") return cmd_solve(spec, opt, out);
  if (spec.mode == "classify") return cmd_classify(spec, opt, out);
  if (spec.mode == "forward") return cmd_forward(spec, opt, out);
  if (spec.mode == "sweep") return cmd_sweep(spec, opt, out);
  return cmd_verify(spec, opt, out);
}

inline std::string record_csv(const nlohmann::json& rec) {
  std::ostringstream csv;
  csv << "field,value\n";
  for (const auto& [k, v] : rec.items()) csv << k << "," << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
  return csv.str();
}

/// Full command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy minimization over countable index sets"};
  Options opt;
  app.add_option("--spec", opt.spec_path, "problem-spec file")->required();
  app.add_option("--out", opt.out_path, "write the machine-readable record here");
  app.add_option("--format", opt.format, "record format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--terms", opt.terms, "solution terms to print")->check(CLI::NonNegativeNumber);
  app.add_option("--workers", opt.workers, "sweep threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict-feasible", opt.strict_feasible, "exit 3 when the results are infeasible");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  }
  opt.log_level = log_level_from_env();

  ProblemSpec spec;
  try {
    spec = load_spec(opt.spec_path);
  } catch (const ParseError& e) {
    err << opt.spec_path << ":" << e.what() << "\n";
    return kParseError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  }
  if (opt.log_level >= 2) err << "[emp] parsed spec:\n" << serialize_spec(spec);

  Outcome oc;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    // a sweep without --out writes CSV to stdout; keep the human log off it
    const bool csv_on_stdout = spec.mode == "sweep" && opt.out_path.empty();
    oc = dispatch(spec, opt, csv_on_stdout ? err : out);
  } catch (const ConfigurationError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kParseError;
  } catch (const Error& e) {
    err << "solver failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
  if (opt.log_level >= 1)
    err << "[emp] " << spec.mode << " finished in "
        << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";

  const std::string format = !opt.format.empty() ? opt.format : spec.mode == "sweep" ? "csv" : "json";
  std::string payload;
  if (format == "json")
    payload = oc.record.dump(2) + "\n";
  else
    payload = spec.mode == "sweep" ? oc.csv : record_csv(oc.record);
  if (!opt.out_path.empty()) {
    std::ofstream f(opt.out_path, std::ios::binary);
    if (!f) {
      err << "error: cannot write '" << opt.out_path << "'\n";
      return kNumericalFailure;
    }
    f << payload;
  } else if (spec.mode == "sweep") {
    out << payload;
  }
  return oc.code;
}

}  // namespace emp::cli
