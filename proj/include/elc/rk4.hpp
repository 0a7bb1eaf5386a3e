#pragma once

namespace elc {

/// One classical fourth-order Runge-Kutta step of x' = f(t, x).
/// State must support addition and scaling (Eigen vectors, scalars).
template <typename State, typename Scalar, typename Rhs>
State rk4_step(const Rhs& f, Scalar t, const State& x, Scalar dt) {
  const Scalar half = dt / Scalar(2);
  const State k1 = f(t, x);
  const State k2 = f(t + half, State(x + half * k1));
  const State k3 = f(t + half, State(x + half * k2));
  const State k4 = f(t + dt, State(x + dt * k3));
  return State(x + (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4));
}

}  // namespace elc
