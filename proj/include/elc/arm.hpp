#pragma once

// Planar two-link revolute arm in Euler-Lagrange form
//   M(q) qdd + C(q, qd) qd + g(q) + d(t) = tau
// with joint angles measured from the horizontal.

#include "elc/types.hpp"

#include <cmath>
#include <functional>

namespace elc {

/// Physical constants of one arm (SI units). Defaults describe the reference arm
/// used by the built-in presets.
template <typename Scalar>
struct ArmParameters {
  Scalar m1 = Scalar(1.0), m2 = Scalar(0.8);
  Scalar l1 = Scalar(0.8), l2 = Scalar(0.6);
  Scalar lc1 = Scalar(0.4), lc2 = Scalar(0.3);
  Scalar j1 = Scalar(0.0533), j2 = Scalar(0.024);
  Scalar gravity = Scalar(9.81);

  /// Lumped parameters (m1 lc1^2 + m2 l1^2 + J1, m2 lc2^2 + J2, m2 l1 lc2, m1 lc1 + m2 l1, m2 lc2).
  Vec5<Scalar> theta() const {
    Vec5<Scalar> th;
    th << m1 * lc1 * lc1 + m2 * l1 * l1 + j1, m2 * lc2 * lc2 + j2, m2 * l1 * lc2, m1 * lc1 + m2 * l1, m2 * lc2;
    return th;
  }

  /// Throws InvalidInput when a constant is nonpositive or a centre of mass lies beyond its link.
  void validate() const {
    for (Scalar v : {m1, m2, l1, l2, lc1, lc2, j1, j2})
      if (!(v > Scalar(0)) || !std::isfinite(static_cast<double>(v)))
        throw InvalidInput("arm constants must be positive and finite");
    if (!(gravity >= Scalar(0)) || !std::isfinite(static_cast<double>(gravity)))
      throw InvalidInput("gravity must be nonnegative and finite");
    if (lc1 > l1 || lc2 > l2) throw InvalidInput("centre of mass lies beyond the link length");
  }

  bool operator==(const ArmParameters&) const = default;
};

template <typename Scalar>
struct PlantState {
  Vec2<Scalar> q = Vec2<Scalar>::Zero();
  Vec2<Scalar> qdot = Vec2<Scalar>::Zero();
};

template <typename Scalar>
Mat2<Scalar> mass_matrix(const ArmParameters<Scalar>& p, const Vec2<Scalar>& q) {
  using std::cos;
  const Vec5<Scalar> th = p.theta();
  const Scalar c2 = cos(q(1));
  Mat2<Scalar> m;
  m(0, 0) = th(0) + th(1) + Scalar(2) * th(2) * c2;
  m(0, 1) = th(1) + th(2) * c2;
  m(1, 0) = m(0, 1);
  m(1, 1) = th(1);
  return m;
}

/// Christoffel-symbol Coriolis matrix; Mdot - 2C is skew-symmetric.
template <typename Scalar>
Mat2<Scalar> coriolis_matrix(const ArmParameters<Scalar>& p, const Vec2<Scalar>& q, const Vec2<Scalar>& qdot) {
  using std::sin;
  const Scalar h = p.m2 * p.l1 * p.lc2 * sin(q(1));
  Mat2<Scalar> c;
  c << -h * qdot(1), -h * (qdot(0) + qdot(1)), h * qdot(0), Scalar(0);
  return c;
}

template <typename Scalar>
Vec2<Scalar> gravity_vector(const ArmParameters<Scalar>& p, const Vec2<Scalar>& q) {
  using std::cos;
  const Vec5<Scalar> th = p.theta();
  const Scalar c1 = cos(q(0));
  const Scalar c12 = cos(q(0) + q(1));
  return Vec2<Scalar>(p.gravity * (th(3) * c1 + th(4) * c12), p.gravity * th(4) * c12);
}

/// Regressor Y with M(q) x + C(q, qdot) y + g(q) = Y(q, qdot, x, y) theta.
/// Depends on the arm only through the gravity constant.
template <typename Scalar>
Mat25<Scalar> regressor(Scalar gravity, const Vec2<Scalar>& q, const Vec2<Scalar>& qdot, const Vec2<Scalar>& x,
                        const Vec2<Scalar>& y) {
  using std::cos;
  using std::sin;
  const Scalar c1 = cos(q(0)), c2 = cos(q(1)), s2 = sin(q(1)), c12 = cos(q(0) + q(1));
  Mat25<Scalar> reg;
  reg(0, 0) = x(0);
  reg(0, 1) = x(0) + x(1);
  reg(0, 2) = c2 * (Scalar(2) * x(0) + x(1)) - s2 * (qdot(1) * y(0) + (qdot(0) + qdot(1)) * y(1));
  reg(0, 3) = gravity * c1;
  reg(0, 4) = gravity * c12;
  reg(1, 0) = Scalar(0);
  reg(1, 1) = x(0) + x(1);
  reg(1, 2) = c2 * x(0) + s2 * qdot(0) * y(0);
  reg(1, 3) = Scalar(0);
  reg(1, 4) = gravity * c12;
  return reg;
}

/// qdd = M^{-1} (tau - C qd - g - d).
template <typename Scalar>
Vec2<Scalar> forward_dynamics(const ArmParameters<Scalar>& p, const PlantState<Scalar>& state, const Vec2<Scalar>& tau,
                              const Vec2<Scalar>& disturbance) {
  if (!state.q.allFinite() || !state.qdot.allFinite() || !tau.allFinite() || !disturbance.allFinite())
    throw InvalidInput("forward_dynamics: non-finite input");
  const Mat2<Scalar> m = mass_matrix(p, state.q);
  const Vec2<Scalar> rhs =
      tau - coriolis_matrix(p, state.q, state.qdot) * state.qdot - gravity_vector(p, state.q) - disturbance;
  return m.inverse() * rhs;
}

/// tau = M qdd + C qd + g + d.
template <typename Scalar>
Vec2<Scalar> inverse_dynamics(const ArmParameters<Scalar>& p, const PlantState<Scalar>& state, const Vec2<Scalar>& qddot,
                              const Vec2<Scalar>& disturbance) {
  return mass_matrix(p, state.q) * qddot + coriolis_matrix(p, state.q, state.qdot) * state.qdot +
         gravity_vector(p, state.q) + disturbance;
}

/// Configuration-independent eigenvalue bounds [lower, upper] of M(q).
template <typename Scalar>
std::pair<Scalar, Scalar> inertia_bounds(const ArmParameters<Scalar>& p) {
  const Vec5<Scalar> th = p.theta();
  const Scalar trace_max = th(0) + Scalar(2) * th(1) + Scalar(2) * th(2);
  const Scalar det_min = th(0) * th(1) - th(2) * th(2);
  return {det_min / trace_max, trace_max};
}

/// k_C with |C(q, y)| <= k_C |y| (spectral norm), from the Frobenius bound.
template <typename Scalar>
Scalar coriolis_bound(const ArmParameters<Scalar>& p) {
  using std::sqrt;
  return sqrt(Scalar(3)) * p.m2 * p.l1 * p.lc2;
}

/// Tight bound on |g(q)|, attained when both links are horizontal.
template <typename Scalar>
Scalar gravity_bound(const ArmParameters<Scalar>& p) {
  using std::hypot;
  const Vec5<Scalar> th = p.theta();
  return p.gravity * hypot(th(3) + th(4), th(4));
}

/// Bounded external torque d_i(t) = amplitude sin(frequency_scale * i * t) on both joints,
/// plus an optional user waveform. `agent_index` is 1-based.
struct DisturbanceModel {
  double amplitude = 0.0;
  double frequency_scale = 0.0;
  std::function<Vec2<double>(double)> extra;  // optional, must be bounded

  Vec2<double> operator()(int agent_index, double t) const {
    Vec2<double> d = Vec2<double>::Constant(amplitude * std::sin(frequency_scale * agent_index * t));
    if (extra) d += extra(t);
    return d;
  }
};

}  // namespace elc
