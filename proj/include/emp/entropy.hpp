#pragma once

// Scalar Bose-Einstein, Maxwell-Boltzmann and Fermi-Dirac entropies,
// their convex conjugates and derivatives.
//
// Extended reals are encoded with IEEE infinities: every value function is
// total and returns +inf outside its effective domain.

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "emp/errors.hpp"

namespace emp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Statistics { BoseEinstein, MaxwellBoltzmann, FermiDirac };

/// One of the three entropies together with its sign constant a_W.
class EntropyKind {
 public:
  constexpr EntropyKind(Statistics s = Statistics::MaxwellBoltzmann) noexcept : stats_(s) {}

  static constexpr EntropyKind bose_einstein() noexcept { return {Statistics::BoseEinstein}; }
  static constexpr EntropyKind maxwell_boltzmann() noexcept { return {Statistics::MaxwellBoltzmann}; }
  static constexpr EntropyKind fermi_dirac() noexcept { return {Statistics::FermiDirac}; }

  constexpr Statistics statistics() const noexcept { return stats_; }

  /// a_W: -1 for BE, 0 for MB, +1 for FD.
  constexpr int a() const noexcept {
    switch (stats_) {
      case Statistics::BoseEinstein:
        return -1;
      case Statistics::MaxwellBoltzmann:
        return 0;
      case Statistics::FermiDirac:
        return 1;
    }
    return 0;
  }

  constexpr bool is_mb() const noexcept { return stats_ == Statistics::MaxwellBoltzmann; }
  constexpr bool is_be() const noexcept { return stats_ == Statistics::BoseEinstein; }
  constexpr bool is_fd() const noexcept { return stats_ == Statistics::FermiDirac; }

  /// Short token used in problem files and reports: "be", "mb", "fd".
  constexpr std::string_view token() const noexcept {
    switch (stats_) {
      case Statistics::BoseEinstein:
        return "be";
      case Statistics::MaxwellBoltzmann:
        return "mb";
      case Statistics::FermiDirac:
        return "fd";
    }
    return "mb";
  }

  static EntropyKind from_token(std::string_view tok) {
    if (tok == "be") return bose_einstein();
    if (tok == "mb") return maxwell_boltzmann();
    if (tok == "fd") return fermi_dirac();
    throw ConfigurationError("unknown entropy '" + std::string(tok) + "' (expected mb, be or fd)");
  }

  friend constexpr bool operator==(EntropyKind, EntropyKind) noexcept = default;

 private:
  Statistics stats_;
};

namespace detail {

// x*ln(x) with 0 ln 0 := 0
inline double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

// ln(1 + e^t), split for large |t|
inline double softplus(double t) {
  if (t > 30.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

// -ln(1 - e^t) for t < 0
inline double neg_log1m_exp(double t) {
  if (t > -0.6931471805599453) return -std::log(-std::expm1(t));
  return -std::log1p(-std::exp(t));
}

}  // namespace detail

/// W(u) per the three entropy definitions; +inf outside dom W.
inline double entropy_value(EntropyKind kind, double u) {
  if (std::isnan(u)) return u;
  switch (kind.statistics()) {
    case Statistics::MaxwellBoltzmann:
      if (u < 0.0) return kInf;
      if (u == 0.0) return 0.0;
      if (std::isinf(u)) return kInf;
      return u * (std::log(u) - 1.0);
    case Statistics::BoseEinstein:
      if (u < 0.0) return kInf;
      if (u == 0.0) return 0.0;
      if (std::isinf(u)) return -kInf;
      // u ln u - (1+u) ln(1+u) = -u ln(1 + 1/u) - ln(1 + u)
      return -u * std::log1p(1.0 / u) - std::log1p(u);
    case Statistics::FermiDirac:
      if (u < 0.0 || u > 1.0) return kInf;
      if (u == 1.0) return 0.0;
      return detail::xlogx(u) + (1.0 - u) * std::log1p(-u);
  }
  return kInf;
}

/// W*(t): e^t (MB), ln(1+e^t) (FD), -ln(1-e^t) for t<0 else +inf (BE).
inline double entropy_conjugate(EntropyKind kind, double t) {
  if (std::isnan(t)) return t;
  switch (kind.statistics()) {
    case Statistics::MaxwellBoltzmann:
      return std::exp(t);
    case Statistics::FermiDirac:
      return detail::softplus(t);
    case Statistics::BoseEinstein:
      if (t >= 0.0) return kInf;
      return detail::neg_log1m_exp(t);
  }
  return kInf;
}

/// (W*)'(t) = e^t / (1 + a_W e^t); BE requires t < 0.
inline double entropy_conjugate_derivative(EntropyKind kind, double t) {
  switch (kind.statistics()) {
    case Statistics::MaxwellBoltzmann:
      return std::exp(t);
    case Statistics::FermiDirac:
      return 1.0 / (1.0 + std::exp(-t));
    case Statistics::BoseEinstein:
      if (!(t < 0.0)) throw DomainError("BE conjugate derivative needs t < 0");
      return 1.0 / std::expm1(-t);
  }
  return 0.0;
}

/// (W*)''(t) = e^t / (1 + a_W e^t)^2; BE requires t < 0.
inline double entropy_conjugate_second_derivative(EntropyKind kind, double t) {
  switch (kind.statistics()) {
    case Statistics::MaxwellBoltzmann:
      return std::exp(t);
    case Statistics::FermiDirac: {
      const double s = 1.0 / (1.0 + std::exp(-t));
      return s * (1.0 - s);
    }
    case Statistics::BoseEinstein: {
      if (!(t < 0.0)) throw DomainError("BE conjugate second derivative needs t < 0");
      const double s = 1.0 / std::expm1(-t);
      return s * (1.0 + s);
    }
  }
  return 0.0;
}

/// ln of the order-th derivative of W* at t (order in {0,1,2}).
/// Finite for every t in dom W*; +inf for BE with t >= 0.
inline double log_conjugate_kernel(EntropyKind kind, int order, double t) {
  switch (kind.statistics()) {
    case Statistics::MaxwellBoltzmann:
      return t;
    case Statistics::FermiDirac:
      switch (order) {
        case 0:
          if (t < -30.0) return t + std::log1p(-0.5 * std::exp(t));
          return std::log(detail::softplus(t));
        case 1:
          return -detail::softplus(-t);
        default:
          return t - 2.0 * detail::softplus(t);
      }
    case Statistics::BoseEinstein: {
      if (!(t < 0.0)) return kInf;
      switch (order) {
        case 0:
          if (t < -30.0) return t + std::log1p(0.5 * std::exp(t));
          return std::log(detail::neg_log1m_exp(t));
        case 1:
          return t + detail::neg_log1m_exp(t);
        default:
          return t + 2.0 * detail::neg_log1m_exp(t);
      }
    }
  }
  return kInf;
}

/// W'(u) on int(dom W): ln(u/(1+u)) (BE), ln u (MB), ln(u/(1-u)) (FD).
/// The subdifferential is empty on the boundary, reported as DomainError.
inline double entropy_derivative(EntropyKind kind, double u) {
  switch (kind.statistics()) {
    case Statistics::MaxwellBoltzmann:
      if (!(u > 0.0) || std::isinf(u)) throw DomainError("MB derivative needs u > 0");
      return std::log(u);
    case Statistics::BoseEinstein:
      if (!(u > 0.0) || std::isinf(u)) throw DomainError("BE derivative needs u > 0");
      return -std::log1p(1.0 / u);
    case Statistics::FermiDirac:
      if (!(u > 0.0 && u < 1.0)) throw DomainError("FD derivative needs 0 < u < 1");
      return std::log(u) - std::log1p(-u);
  }
  return 0.0;
}

}  // namespace emp
