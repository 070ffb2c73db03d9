#pragma once

// The entropy minimization problem over all n >= 1:
//   H(u,v) = inf { sum p_n W(u_n/p_n) : sum u_n = u, sum sigma_n u_n = v }.
//
// Families whose levels decrease to -inf, or whose minimum level is <= 0,
// are solved through sigma' = sign*sigma - shift, which maps (u,v) to
// (u, sign*v - shift*u) and (x,y) to (x + shift*sign*y, sign*y). Everything
// below the public surface works in those normalized coordinates.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "emp/entropy.hpp"
#include "emp/errors.hpp"
#include "emp/finite.hpp"
#include "emp/series.hpp"
#include "emp/sequence.hpp"

namespace emp {

enum class Region {
  InfeasibleNegative,
  OriginPoint,
  ZeroWithPositiveV,
  LowerBoundary,
  Interior,
  UpperBoundaryTheta2,
  BeyondTheta2,
  BelowCone,
  DegenerateConstantSigma,
  DegenerateAllDivergent,
  DegenerateEdge,
  OutsideDomain,
};

inline const char* to_string(Region r) {
  switch (r) {
    case Region::InfeasibleNegative:
      return "InfeasibleNegative";
    case Region::OriginPoint:
      return "OriginPoint";
    case Region::ZeroWithPositiveV:
      return "ZeroWithPositiveV";
    case Region::LowerBoundary:
      return "LowerBoundary";
    case Region::Interior:
      return "Interior";
    case Region::UpperBoundaryTheta2:
      return "UpperBoundaryTheta2";
    case Region::BeyondTheta2:
      return "BeyondTheta2";
    case Region::BelowCone:
      return "BelowCone";
    case Region::DegenerateConstantSigma:
      return "DegenerateConstantSigma";
    case Region::DegenerateAllDivergent:
      return "DegenerateAllDivergent";
    case Region::DegenerateEdge:
      return "DegenerateEdge";
    case Region::OutsideDomain:
      return "OutsideDomain";
  }
  return "?";
}

/// A finitely described occupation sequence (u_n), in original indexing.
struct SequenceDescription {
  enum class Form { Zero, SupportRestricted, ClosedForm, ExplicitPrefix };

  Form form = Form::Zero;
  EntropyKind kind;             // ClosedForm: u_n = p_n (W*)'(x + sigma_n y)
  double x = 0.0, y = 0.0;      // ClosedForm multipliers, original coordinates
  std::vector<long> indices;    // SupportRestricted
  std::vector<double> values;   // SupportRestricted values, or the explicit prefix

  static SequenceDescription zero() { return {}; }
  static SequenceDescription closed_form(EntropyKind k, double x, double y) {
    SequenceDescription d;
    d.form = Form::ClosedForm;
    d.kind = k;
    d.x = x;
    d.y = y;
    return d;
  }
  static SequenceDescription support(std::vector<long> idx, std::vector<double> vals) {
    SequenceDescription d;
    d.form = Form::SupportRestricted;
    d.indices = std::move(idx);
    d.values = std::move(vals);
    return d;
  }
  static SequenceDescription prefix(std::vector<double> vals) {
    SequenceDescription d;
    d.form = Form::ExplicitPrefix;
    d.values = std::move(vals);
    return d;
  }
};

/// One member of the feasible family whose objectives approach H beyond theta2.
struct EpsilonMember {
  long n = 0;
  double lambda = 0.0;   // lambda_n, normalized coordinates
  double upsilon = 0.0;  // upsilon_n
  double objective = 0.0;
  double objective_closed_form = 0.0;
  double u_sum = 0.0;
  double v_sum = 0.0;  // original coordinates
  double gap = 0.0;    // objective - value
  std::vector<double> terms;
};

struct EpsilonTrace {
  std::vector<EpsilonMember> members;  // terms left empty
  double epsilon = 0.0;
  bool reached = false;
};

struct EmpSolution {
  Region region = Region::InfeasibleNegative;
  double value = kInf;                   // H(u,v)
  std::optional<double> conjugate_value;  // h*(u,v) when it differs or is informative
  bool attained = false;
  std::optional<SequenceDescription> solution;
  std::optional<EpsilonTrace> epsilon_family;
  std::optional<std::pair<double, double>> multipliers;  // (x, y), original coordinates
  std::optional<std::pair<double, double>> targets;      // (u, v)
};

struct InverseResult {
  bool converged = false;
  std::optional<EmpSolution> solution;
  double x = 0.0, y = 0.0;  // last iterate, original coordinates
  double residual_u = kInf, residual_v = kInf;
  int iterations = 0;
  std::string reason;
};

struct BiconjugateResult {
  double lhs = -kInf;
  double rhs = kInf;
  long samples = 0;
  bool lhs_unbounded = false;
};

struct SolverOptions {
  double tol = kDefaultTol;
  double epsilon = 1e-6;
  long n_max = 1L << 20;
  double tie_tol = 1e-12;
  bool epsilon_trace = true;
};

class EmpSolver {
 public:
  explicit EmpSolver(SequenceFamily family, SolverOptions opts = {}) : family_(std::move(family)), opts_(opts) {
    structure_ = family_.structure();
    if (structure_ == FamilyStructure::Regular) {
      sign_ = family_.direction();
      const SequenceFamily oriented = sign_ == 1 ? family_ : family_.transformed(-1, 0.0);
      const double lo = oriented.sigma_infimum();
      shift_ = lo <= 0.0 ? lo - 1.0 : 0.0;
      series_ = std::make_shared<PartitionSeries>(
          sign_ == 1 && shift_ == 0.0 ? family_ : family_.transformed(sign_, shift_));
      series_->profile();
    } else {
      eta1_ = eta2_ = family_.tail().offset;
      for (double s : family_.prefix_sigma()) {
        eta1_ = std::min(eta1_, s);
        eta2_ = std::max(eta2_, s);
      }
    }
  }

  const SequenceFamily& family() const { return family_; }
  FamilyStructure structure() const { return structure_; }
  const SolverOptions& options() const { return opts_; }
  bool degenerate() const { return structure_ != FamilyStructure::Regular; }
  int sign() const { return sign_; }
  double shift() const { return shift_; }

  /// Profile of the normalized series.
  const SeriesProfile& profile() const {
    if (!series_) throw UnsupportedFamilyError("degenerate family has no series profile");
    return series_->profile();
  }
  const PartitionSeries& series() const {
    if (!series_) throw UnsupportedFamilyError("degenerate family has no partition series");
    return *series_;
  }

  // --- coordinate maps -------------------------------------------------------

  double to_normalized_v(double u, double v) const { return sign_ * v - shift_ * u; }
  double from_normalized_v(double u, double vn) const { return sign_ * (vn + shift_ * u); }
  std::pair<double, double> to_normalized_xy(double x, double y) const { return {x + shift_ * sign_ * y, sign_ * y}; }
  std::pair<double, double> from_normalized_xy(double xn, double yn) const { return {xn - shift_ * yn, sign_ * yn}; }

  // --- classification and values ----------------------------------------------

  Region classify(double u, double v) const {
    if (u < 0.0 || std::isnan(u) || std::isnan(v)) return Region::InfeasibleNegative;
    if (degenerate()) {
      if (u == 0.0) return v == 0.0 ? Region::OriginPoint : Region::InfeasibleNegative;
      const double w = v / u;
      const double band = opts_.tie_tol * std::max(1.0, std::max(std::fabs(eta1_), std::fabs(eta2_)));
      if (structure_ == FamilyStructure::ConstantSigma)
        return std::fabs(w - eta1_) <= band ? Region::DegenerateConstantSigma : Region::OutsideDomain;
      if (std::fabs(w - eta1_) <= band || std::fabs(w - eta2_) <= band) return Region::DegenerateEdge;
      if (w > eta1_ && w < eta2_) return Region::DegenerateAllDivergent;
      return Region::OutsideDomain;
    }
    const double vn = to_normalized_v(u, v);
    if (u == 0.0) {
      if (vn == 0.0) return Region::OriginPoint;
      return vn > 0.0 ? Region::ZeroWithPositiveV : Region::InfeasibleNegative;
    }
    const SeriesProfile& pr = profile();
    const double w = vn / u;
    if (std::fabs(w - pr.theta1) <= opts_.tie_tol * std::max(1.0, pr.theta1)) return Region::LowerBoundary;
    if (w < pr.theta1) return Region::BelowCone;
    if (pr.boundary_case == BoundaryCase::ClosedGammaFinite) {
      if (std::fabs(w - pr.theta2) <= opts_.tie_tol * std::max(1.0, pr.theta2)) return Region::UpperBoundaryTheta2;
      if (w > pr.theta2) return Region::BeyondTheta2;
    }
    return Region::Interior;
  }

  /// H(u,v) for the MB entropy.
  double value_mb(double u, double v) const { return value_in_region(classify(u, v), u, v, false); }

  /// h*(u,v) for the MB entropy; differs from H only at (0, v) with v' > 0.
  double conjugate_value_mb(double u, double v) const { return value_in_region(classify(u, v), u, v, true); }

  EmpSolution solve_mb(double u, double v) const {
    EmpSolution s;
    s.region = classify(u, v);
    s.targets = std::make_pair(u, v);
    s.value = value_in_region(s.region, u, v, false);
    const double hstar = value_in_region(s.region, u, v, true);
    if (hstar != s.value || s.region == Region::ZeroWithPositiveV) s.conjugate_value = hstar;
    switch (s.region) {
      case Region::OriginPoint:
        s.attained = true;
        s.solution = SequenceDescription::zero();
        break;
      case Region::LowerBoundary: {
        const SigmaMinSet& sm = profile().sigma_min;
        std::vector<double> vals;
        for (long k : sm.indices) vals.push_back(family_.p(k) * u / sm.p_sum);
        s.attained = true;
        s.solution = SequenceDescription::support(sm.indices, std::move(vals));
        break;
      }
      case Region::Interior: {
        const double yn = series_->phi_inverse(to_normalized_v(u, v) / u, opts_.tol);
        const double xn = std::log(u) - series_->log_f(yn, opts_.tol);
        set_closed_form(s, xn, yn);
        break;
      }
      case Region::UpperBoundaryTheta2: {
        const SeriesProfile& pr = profile();
        set_closed_form(s, std::log(u) - std::log(*pr.f_at_boundary), -pr.alpha);
        break;
      }
      case Region::BeyondTheta2:
        if (opts_.epsilon_trace) s.epsilon_family = epsilon_trace(u, v, s.value);
        break;
      case Region::DegenerateEdge:
        if (auto sup = degenerate_edge_support(u, v)) {
          s.attained = true;
          s.solution = std::move(*sup);
        }
        break;
      default:
        break;
    }
    return s;
  }

  /// The n-th member of the feasible family used beyond theta2 (first n
  /// terms, MB weights at the finite multipliers).
  EpsilonMember epsilon_member(double u, double v, long n, bool keep_terms = false) const {
    if (degenerate()) throw UnsupportedFamilyError("epsilon family needs a regular family");
    if (!(u > 0.0)) throw PreconditionError("epsilon family needs u > 0");
    const SequenceFamily& nf = series_->family();
    std::vector<double> lp(static_cast<std::size_t>(n)), sg(static_cast<std::size_t>(n));
    for (long k = 1; k <= n; ++k) {
      lp[static_cast<std::size_t>(k - 1)] = nf.log_p(k);
      sg[static_cast<std::size_t>(k - 1)] = nf.sigma(k);
    }
    const double vn = to_normalized_v(u, v);
    const double t = detail::phi_n_inverse_log(lp, sg, vn / u);
    EpsilonMember m;
    m.n = n;
    m.lambda = -t;
    m.upsilon = std::log(u) - detail::log_sum_exp(lp, sg, t).log_sum;
    NeumaierSum su, sv, obj;
    if (keep_terms) m.terms.resize(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < lp.size(); ++k) {
      const double a = m.upsilon + sg[k] * t;
      const double uk = std::exp(lp[k] + a);
      su.add(uk);
      sv.add(sg[k] * uk);
      obj.add(uk * (a - 1.0));  // p W(u/p) with ln(u/p) = a
      if (keep_terms) m.terms[k] = uk;
    }
    m.u_sum = su.value();
    m.v_sum = from_normalized_v(m.u_sum, sv.value());
    m.objective = obj.value();
    m.objective_closed_form = (m.upsilon - 1.0) * u - m.lambda * vn;
    m.gap = m.objective - value_mb(u, v);
    return m;
  }

  // --- forward and inverse ------------------------------------------------------

  /// Targets and the unique optimizer for multipliers (x, y).
  EmpSolution forward_solve(EntropyKind kind, double x, double y) const {
    if (degenerate()) throw PreconditionError("forward solve needs a regular family (h_W is +inf everywhere)");
    const auto [xn, yn] = to_normalized_xy(x, y);
    const SeriesProfile& pr = profile();
    const bool boundary = series_->at_boundary(yn);
    if (!boundary && !(yn < -pr.alpha))
      throw PreconditionError("y is outside dom f: the gradient series diverges");
    if (boundary && pr.boundary_case != BoundaryCase::ClosedGammaFinite)
      throw PreconditionError(std::string("gradient series diverges at y = -alpha (case ") +
                              to_string(pr.boundary_case) + ")");
    if (kind.is_be() && !(xn + pr.theta1 * yn < 0.0)) throw PreconditionError("BE needs x + theta1 y < 0");
    const double yy = boundary ? -pr.alpha : yn;
    const double u = series_->kernel_sum(kind, 1, 0, xn, yy, opts_.tol).value;
    const double vn = series_->kernel_sum(kind, 1, 1, xn, yy, opts_.tol).value;
    const double h = series_->kernel_sum(kind, 0, 0, xn, yy, opts_.tol).value;
    EmpSolution s;
    const double v = from_normalized_v(u, vn);
    s.targets = std::make_pair(u, v);
    s.region = classify(u, v);
    s.value = xn * u + yy * vn - h;
    s.attained = true;
    s.solution = SequenceDescription::closed_form(kind, x, y);
    s.multipliers = std::make_pair(x, y);
    return s;
  }

  /// Best-effort inverse for BE/FD: Newton on the dual from the MB multipliers.
  InverseResult inverse_solve_bf(EntropyKind kind, double u, double v) const {
    InverseResult r;
    if (kind.is_mb()) throw PreconditionError("inverse_solve_bf is for BE and FD; use solve_mb");
    if (degenerate()) {
      r.reason = "degenerate family: h_W is +inf everywhere";
      return r;
    }
    if (classify(u, v) != Region::Interior) {
      r.reason = std::string("target is not in the MB interior cone (region ") + to_string(classify(u, v)) + ")";
      return r;
    }
    const SeriesProfile& pr = profile();
    const double vn = to_normalized_v(u, v);
    double xn, yn;
    try {
      yn = series_->phi_inverse(vn / u, opts_.tol);
      xn = std::log(u) - series_->log_f(yn, opts_.tol);
    } catch (const Error& e) {
      r.reason = std::string("MB start failed: ") + e.what();
      return r;
    }
    if (kind.is_be()) {
      const double tmax = xn + pr.theta1 * yn;
      xn -= std::log1p(std::exp(tmax));
    }
    auto in_dom = [&](double a, double b) {
      if (!(b < -pr.alpha) || series_->at_boundary(b)) return false;
      return !kind.is_be() || a + pr.theta1 * b < 0.0;
    };
    auto dual = [&](double a, double b) {
      return series_->kernel_sum(kind, 0, 0, a, b, opts_.tol).value - a * u - b * vn;
    };
    const double su = std::max(1.0, std::fabs(u)), sv = std::max(1.0, std::fabs(vn));
    try {
      double D = dual(xn, yn);
      for (int it = 0; it <= 100; ++it) {
        r.iterations = it;
        const auto [gu, gv] = series_->grad_h(kind, xn, yn, opts_.tol);
        const double ru = gu - u, rv = gv - vn;
        std::tie(r.x, r.y) = from_normalized_xy(xn, yn);
        r.residual_u = ru;
        r.residual_v = rv;
        if (std::fabs(ru) <= 1e-12 * su && std::fabs(rv) <= 1e-12 * sv) {
          r.converged = true;
          r.solution = forward_solve(kind, r.x, r.y);
          return r;
        }
        if (it == 100) break;
        const auto H = series_->hess_h(kind, xn, yn, opts_.tol);
        const double det = H[0] * H[2] - H[1] * H[1];
        if (!(det > 0.0) || !std::isfinite(det)) {
          r.reason = "singular Hessian";
          return r;
        }
        const double dx = -(H[2] * ru - H[1] * rv) / det;
        const double dy = -(-H[1] * ru + H[0] * rv) / det;
        const double slope = ru * dx + rv * dy;
        double step = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
          const double na = xn + step * dx, nb = yn + step * dy;
          if (!in_dom(na, nb)) continue;
          const double nD = dual(na, nb);
          if (nD <= D + 1e-4 * step * slope || (step < 1e-3 && nD <= D)) {
            xn = na;
            yn = nb;
            D = nD;
            moved = true;
            break;
          }
        }
        if (!moved) {
          const double na = xn + dx, nb = yn + dy;
          if (!in_dom(na, nb)) {
            r.reason = "line search failed inside dom h";
            return r;
          }
          xn = na;
          yn = nb;
          D = dual(xn, yn);
        }
      }
      r.reason = "Newton budget of 100 iterations exhausted";
    } catch (const Error& e) {
      r.reason = std::string("numerical failure: ") + e.what();
    }
    return r;
  }

  // --- sequences ------------------------------------------------------------------

  /// u_n of a described sequence.
  double sequence_term(const SequenceDescription& d, long n) const {
    switch (d.form) {
      case SequenceDescription::Form::Zero:
        return 0.0;
      case SequenceDescription::Form::SupportRestricted:
        for (std::size_t i = 0; i < d.indices.size(); ++i)
          if (d.indices[i] == n) return d.values[i];
        return 0.0;
      case SequenceDescription::Form::ExplicitPrefix:
        return n >= 1 && n <= static_cast<long>(d.values.size()) ? d.values[static_cast<std::size_t>(n - 1)] : 0.0;
      case SequenceDescription::Form::ClosedForm:
        return std::exp(family_.log_p(n) + log_conjugate_kernel(d.kind, 1, d.x + family_.sigma(n) * d.y));
    }
    return 0.0;
  }

  /// (sum u_n, sum sigma_n u_n) of a described sequence.
  std::pair<double, double> sequence_sums(const SequenceDescription& d) const {
    if (d.form == SequenceDescription::Form::ClosedForm) {
      const auto [xn, yn] = to_normalized_xy(d.x, d.y);
      const double yy = series_->at_boundary(yn) ? -profile().alpha : yn;
      const double u = series_->kernel_sum(d.kind, 1, 0, xn, yy, opts_.tol).value;
      return {u, from_normalized_v(u, series_->kernel_sum(d.kind, 1, 1, xn, yy, opts_.tol).value)};
    }
    NeumaierSum su, sv;
    visit_finite(d, [&](long n, double un) {
      su.add(un);
      sv.add(family_.sigma(n) * un);
    });
    return {su.value(), sv.value()};
  }

  /// sum p_n W(u_n/p_n) with the extended-real summation convention.
  double objective_value(EntropyKind kind, const SequenceDescription& d) const {
    if (d.form != SequenceDescription::Form::ClosedForm) {
      NeumaierSum s;
      bool inf = false;
      visit_finite(d, [&](long n, double un) {
        const double t = scaled_entropy(kind, un, family_.log_p(n));
        if (t == kInf) inf = true;
        else s.add(t);
      });
      return inf ? kInf : s.value();
    }
    if (!(d.kind == kind)) throw PreconditionError("closed-form objective needs the sequence's own entropy");
    if (degenerate()) throw PreconditionError("closed-form sequences need a regular family");
    const auto [xn, yn0] = to_normalized_xy(d.x, d.y);
    const double yn = series_->at_boundary(yn0) ? -profile().alpha : yn0;
    if (!series_->in_domain(yn)) return kInf;
    const SequenceFamily& nf = series_->family();
    const double C = kind.is_be() ? 2.0 : 1.0;
    const bool lattice = nf.is_lattice();
    std::optional<ThetaSum> t0, t1;
    if (lattice) {
      t0 = nf.lattice_moment_total(0, yn, -xn);
      t1 = nf.lattice_moment_total(1, yn, -xn);
    }
    NeumaierSum s, m0, m1;
    long n = 0;
    for (long check = std::max(32L, nf.prefix_length());; check *= 2) {
      for (; n < check; ++n) {
        const long k = n + 1;
        const double lp = nf.log_p(k), sg = nf.sigma(k), t = xn + sg * yn;
        const double un = std::exp(lp + log_conjugate_kernel(kind, 1, t));
        s.add(scaled_entropy(kind, un, lp));
        if (lattice) {
          const double e = std::exp(lp + t);
          m0.add(e);
          m1.add(sg * e);
        }
      }
      const double sN = std::exp(xn + nf.sigma(n + 1) * yn);
      if (kind.is_mb()) {
        // MB tail is exactly (x-1) T0 + y T1 with T_j the moment tails
        std::optional<TailEstimate> a, b;
        if (lattice) {
          a = TailEstimate{t0->value - m0.value(), t0->radius + 1e-15 * t0->value};
          b = TailEstimate{t1->value - m1.value(), t1->radius + 1e-15 * t1->value};
        } else {
          a = nf.moment_tail(0, yn, n, -xn);
          if (a) b = nf.moment_tail(1, yn, n, -xn);
        }
        if (a && b) {
          const double est = s.value() + (xn - 1.0) * a->center + yn * b->center;
          const double rad = std::fabs(xn - 1.0) * a->radius + std::fabs(yn) * b->radius;
          if (rad <= opts_.tol * std::max(1.0, std::fabs(est))) return est;
        }
      } else if (!kind.is_be() || sN <= 0.5) {
        double r0 = kInf, r1 = kInf;
        if (lattice) {
          r0 = t0->value - m0.value() + t0->radius + 1e-15 * t0->value;
          r1 = t1->value - m1.value() + t1->radius + 1e-15 * t1->value;
        } else if (auto a = nf.moment_tail(0, yn, n, -xn)) {
          if (auto b = nf.moment_tail(1, yn, n, -xn)) {
            r0 = a->upper();
            r1 = b->upper();
          }
        }
        const double bound = C * ((std::fabs(xn) + 1.0) * r0 + std::fabs(yn) * r1);
        if (bound <= opts_.tol * std::max(1.0, std::fabs(s.value()))) return s.value();
      }
      if (check >= kTermBudget) throw BudgetError("objective series did not converge within the term budget");
    }
  }

  /// Returns (lhs, rhs): sup over sampled (u,v) of xu + yv - H(u,v), and h_MB(x,y).
  BiconjugateResult biconjugate_check(double x, double y, long sample_budget = 10000) const {
    BiconjugateResult r;
    if (degenerate()) {
      // H takes the value -inf, so its conjugate is +inf; f diverges everywhere
      r.lhs = kInf;
      r.rhs = kInf;
      r.lhs_unbounded = true;
      return r;
    }
    const auto [xn, yn] = to_normalized_xy(x, y);
    r.rhs = series_->eval_h(EntropyKind::maxwell_boltzmann(), xn, yn, opts_.tol);
    const SeriesProfile& pr = profile();
    auto score = [&](double lu, double lw) {
      const double u = std::exp(lu);
      const double w = pr.theta1 + std::exp(lw);
      const double v = from_normalized_v(u, w * u);
      ++r.samples;
      const double H = value_mb(u, v);
      return x * u + y * v - H;
    };
    const long side = std::max(4L, static_cast<long>(std::sqrt(0.5 * static_cast<double>(sample_budget))));
    const double lu0 = std::log(1e-3), lu1 = std::log(1e3), lw0 = std::log(1e-6), lw1 = std::log(1e12);
    double best = -kInf, blu = 0.0, blw = 0.0;
    for (long i = 0; i < side; ++i)
      for (long j = 0; j < side; ++j) {
        const double lu = lu0 + (lu1 - lu0) * i / (side - 1), lw = lw0 + (lw1 - lw0) * j / (side - 1);
        const double val = score(lu, lw);
        if (val > best) {
          best = val;
          blu = lu;
          blw = lw;
        }
      }
    // lower boundary ray w = theta1
    for (long i = 0; i < side; ++i) {
      const double u = std::exp(lu0 + (lu1 - lu0) * i / (side - 1));
      ++r.samples;
      best = std::max(best, x * u + y * from_normalized_v(u, pr.theta1 * u) - value_mb(u, from_normalized_v(u, pr.theta1 * u)));
    }
    // pattern search around the best grid point
    double hu = (lu1 - lu0) / (side - 1), hw = (lw1 - lw0) / (side - 1);
    while (r.samples < sample_budget && (hu > 1e-10 || hw > 1e-10)) {
      bool moved = false;
      for (auto [du, dw] : {std::pair{hu, 0.0}, {-hu, 0.0}, {0.0, hw}, {0.0, -hw}}) {
        const double val = score(blu + du, blw + dw);
        if (val > best) {
          best = val;
          blu += du;
          blw += dw;
          moved = true;
          break;
        }
      }
      if (!moved) {
        hu *= 0.5;
        hw *= 0.5;
      }
    }
    r.lhs = best;
    if (best > 1e9) {
      r.lhs = kInf;
      r.lhs_unbounded = true;
    }
    return r;
  }

 private:
  void set_closed_form(EmpSolution& s, double xn, double yn) const {
    const auto [x, y] = from_normalized_xy(xn, yn);
    s.attained = true;
    s.multipliers = std::make_pair(x, y);
    s.solution = SequenceDescription::closed_form(EntropyKind::maxwell_boltzmann(), x, y);
  }

  double value_in_region(Region reg, double u, double v, bool conjugate) const {
    switch (reg) {
      case Region::OriginPoint:
        return 0.0;
      case Region::InfeasibleNegative:
      case Region::BelowCone:
      case Region::OutsideDomain:
        return kInf;
      case Region::ZeroWithPositiveV:
        return conjugate ? -profile().alpha * to_normalized_v(u, v) : kInf;
      case Region::LowerBoundary:
        return u * std::log(u) - u - u * std::log(profile().sigma_min.p_sum);
      case Region::Interior:
      case Region::UpperBoundaryTheta2:
      case Region::BeyondTheta2: {
        const double w = to_normalized_v(u, v) / u;
        const SeriesProfile& pr = profile();
        double lfc;
        if (reg == Region::Interior)
          lfc = series_->lnf_conjugate(w, opts_.tol);
        else
          lfc = -pr.alpha * w - std::log(*pr.f_at_boundary);
        return u * std::log(u) - u + u * lfc;
      }
      case Region::DegenerateConstantSigma:
      case Region::DegenerateAllDivergent:
        return -kInf;
      case Region::DegenerateEdge: {
        auto sup = degenerate_edge_support(u, v);
        if (!sup) return -kInf;
        double rho = 0.0;
        for (long k : sup->indices) rho += family_.p(k);
        return rho * entropy_value(EntropyKind::maxwell_boltzmann(), u / rho);
      }
    }
    return kInf;
  }

  // On an edge ray of a degenerate family the mass sits on the indices at
  // that level; nullopt when there are infinitely many of them.
  std::optional<SequenceDescription> degenerate_edge_support(double u, double v) const {
    const double w = v / u;
    const double band = opts_.tie_tol * std::max(1.0, std::max(std::fabs(eta1_), std::fabs(eta2_)));
    const double level = std::fabs(w - eta1_) <= band ? eta1_ : eta2_;
    if (family_.tail().offset == level) return std::nullopt;
    std::vector<long> idx;
    double rho = 0.0;
    for (long k = 1; k <= family_.prefix_length(); ++k)
      if (family_.sigma(k) == level) {
        idx.push_back(k);
        rho += family_.p(k);
      }
    std::vector<double> vals;
    for (long k : idx) vals.push_back(u * family_.p(k) / rho);
    return SequenceDescription::support(std::move(idx), std::move(vals));
  }

  template <class F>
  void visit_finite(const SequenceDescription& d, F&& f) const {
    if (d.form == SequenceDescription::Form::SupportRestricted) {
      for (std::size_t i = 0; i < d.indices.size(); ++i) f(d.indices[i], d.values[i]);
    } else if (d.form == SequenceDescription::Form::ExplicitPrefix) {
      for (std::size_t i = 0; i < d.values.size(); ++i) f(static_cast<long>(i + 1), d.values[i]);
    }
  }

  // p W(u/p) from u and ln p, finite even when p overflows.
  static double scaled_entropy(EntropyKind kind, double u, double lp) {
    if (u < 0.0) return kInf;
    if (u == 0.0) return 0.0;
    const double lr = std::log(u) - lp;
    switch (kind.statistics()) {
      case Statistics::MaxwellBoltzmann:
        return u * (lr - 1.0);
      case Statistics::BoseEinstein: {
        const double r = std::exp(lr);
        return u * (lr - (1.0 + 1.0 / r) * std::log1p(r));
      }
      case Statistics::FermiDirac: {
        if (lr > 0.0) return kInf;
        const double r = std::exp(lr);
        if (r == 1.0) return 0.0;
        return u * (lr + (1.0 / r - 1.0) * std::log1p(-r));
      }
    }
    return kInf;
  }

  EpsilonTrace epsilon_trace(double u, double v, double value) const {
    EpsilonTrace tr;
    tr.epsilon = opts_.epsilon;
    for (long n = 8; n <= opts_.n_max; n *= 2) {
      EpsilonMember m;
      try {
        m = epsilon_member(u, v, n);
      } catch (const RangeError&) {
        continue;  // v/u not yet inside the first n levels' range
      }
      m.gap = m.objective - value;
      tr.members.push_back(m);
      if (std::fabs(m.gap) <= opts_.epsilon) {
        tr.reached = true;
        break;
      }
    }
    return tr;
  }

  SequenceFamily family_;
  SolverOptions opts_;
  FamilyStructure structure_ = FamilyStructure::Regular;
  int sign_ = 1;
  double shift_ = 0.0;
  double eta1_ = 0.0, eta2_ = 0.0;
  std::shared_ptr<PartitionSeries> series_;
};

}  // namespace emp
