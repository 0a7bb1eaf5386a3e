#pragma once

// Distributed adaptive consensus control laws for networks of two-link arms.
//
// Every step function is pure: it maps (gains, own plant state, neighbour view,
// own adaptive state, time) to the joint torque and the time derivatives of the
// controller's internal states. Agents only see the relative quantities carried
// by their view, which holds in-neighbours of the currently active graph.

#include "elc/arm.hpp"
#include "elc/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace elc {

enum class Variant { Baseline, Fixed, FixedNovel, Switching, SwitchingNovel };

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::Fixed: return "fixed";
    case Variant::FixedNovel: return "fixed-novel";
    case Variant::Switching: return "switching";
    case Variant::SwitchingNovel: return "switching-novel";
  }
  return "unknown";
}

inline std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : {Variant::Baseline, Variant::Fixed, Variant::FixedNovel, Variant::Switching, Variant::SwitchingNovel})
    if (variant_name(v) == name) return v;
  return std::nullopt;
}

/// Variants that read neighbours' relative velocities.
inline bool uses_relative_velocity(Variant v) {
  return v == Variant::Baseline || v == Variant::Fixed || v == Variant::Switching;
}

/// Variants designed for time-varying graphs.
inline bool supports_switching(Variant v) { return v == Variant::Switching || v == Variant::SwitchingNovel; }

enum class DecayKind { Exponential, InverseSquare };

/// mu(t) > 0 with finite integral: exp(-t) or 1/(t+1)^2.
template <typename Scalar>
struct DecayFunction {
  DecayKind kind = DecayKind::Exponential;

  Scalar operator()(Scalar t) const {
    using std::exp;
    const Scalar mu = kind == DecayKind::Exponential ? exp(-t) : Scalar(1) / ((t + Scalar(1)) * (t + Scalar(1)));
    if (!(mu > Scalar(0)) || !std::isfinite(static_cast<double>(mu)))
      throw ConfigError("mu", "decay function must stay positive and finite (t = " + std::to_string(double(t)) + ")");
    return mu;
  }
  bool operator==(const DecayFunction&) const = default;
};

/// Optional sigma-modification of the disturbance-bound adaptation. With gamma = 0
/// the leak target d_bar stays frozen (plain sigma-modification).
template <typename Scalar>
struct SigmaModification {
  bool enabled = false;
  Scalar sigma = Scalar(0);
  Scalar gamma = Scalar(0);
  bool operator==(const SigmaModification&) const = default;
};

template <typename Scalar>
struct ControllerGains {
  Scalar alpha = Scalar(1);
  Mat2<Scalar> K = Scalar(2) * Mat2<Scalar>::Identity();
  Mat5<Scalar> Lambda = Scalar(5) * Mat5<Scalar>::Identity();
  Scalar delta = Scalar(0.2);
  Scalar gamma = Scalar(3);  // adaptive feedback gain rate (fixed-novel)
  Scalar k = Scalar(1);      // reference-model damping (switching-novel)
  DecayFunction<Scalar> mu;
  SigmaModification<Scalar> sigma_mod;

  /// Throws ConfigError naming `prefix.<field>` on the first invalid gain.
  void validate(const std::string& prefix = "gains") const {
    auto positive = [&](Scalar v, const char* name) {
      if (!(v > Scalar(0)) || !std::isfinite(static_cast<double>(v)))
        throw ConfigError(prefix + "." + name, "must be positive and finite");
    };
    auto spd = [&](const auto& m, const char* name) {
      using M = std::decay_t<decltype(m)>;
      if (!m.allFinite() || !m.isApprox(m.transpose(), Scalar(1e-12)))
        throw ConfigError(prefix + "." + name, "must be symmetric");
      Eigen::SelfAdjointEigenSolver<M> solver(m, Eigen::EigenvaluesOnly);
      if (!(solver.eigenvalues().minCoeff() > Scalar(0)))
        throw ConfigError(prefix + "." + name, "must be positive definite");
    };
    positive(alpha, "alpha");
    spd(K, "K");
    spd(Lambda, "Lambda");
    positive(delta, "delta");
    positive(gamma, "gamma");
    positive(k, "k");
    if (sigma_mod.enabled) {
      positive(sigma_mod.sigma, "sigma_mod.sigma");
      if (!(sigma_mod.gamma >= Scalar(0))) throw ConfigError(prefix + ".sigma_mod.gamma", "must be nonnegative");
    }
  }

  bool operator==(const ControllerGains&) const = default;
};

/// Controller-internal states of one agent. The same layout carries their time derivatives.
template <typename Scalar>
struct AdaptiveState {
  Vec5<Scalar> theta_hat = Vec5<Scalar>::Zero();
  Scalar d_hat = Scalar(0);
  Scalar k_hat = Scalar(0);
  Scalar d_bar = Scalar(0);
  Vec2<Scalar> integral_vartheta = Vec2<Scalar>::Zero();
  Vec2<Scalar> z = Vec2<Scalar>::Zero();
  Vec2<Scalar> zdot = Vec2<Scalar>::Zero();

  bool operator==(const AdaptiveState&) const = default;
};

/// In-neighbour j of agent i: weight a_ij and q_i - q_j.
template <typename Scalar>
struct PositionSample {
  Scalar weight;
  Vec2<Scalar> rel_position;
};

/// In-neighbour j of agent i: weight a_ij, q_i - q_j and qdot_i - qdot_j.
template <typename Scalar>
struct FullSample {
  Scalar weight;
  Vec2<Scalar> rel_position;
  Vec2<Scalar> rel_velocity;
};

/// Relative positions only; velocity-free controllers accept nothing richer.
template <typename Scalar>
struct PositionView {
  std::vector<PositionSample<Scalar>> neighbors;
};

template <typename Scalar>
struct FullView {
  std::vector<FullSample<Scalar>> neighbors;
};

template <typename Scalar>
struct ControlOutput {
  Vec2<Scalar> tau;
  AdaptiveState<Scalar> rates;
  Vec2<Scalar> error;  // the sliding / tracking signal the law drives to zero
};

namespace detail {

template <typename Scalar, typename View>
Vec2<Scalar> weighted_position_sum(const View& view) {
  Vec2<Scalar> sum = Vec2<Scalar>::Zero();
  for (const auto& nb : view.neighbors) sum += nb.weight * nb.rel_position;
  return sum;
}

template <typename Scalar>
Vec2<Scalar> weighted_velocity_sum(const FullView<Scalar>& view) {
  Vec2<Scalar> sum = Vec2<Scalar>::Zero();
  for (const auto& nb : view.neighbors) sum += nb.weight * nb.rel_velocity;
  return sum;
}

}  // namespace detail

/// -(d_hat / (|e| + mu)) e; zero at e = 0 and never longer than d_hat.
template <typename Scalar>
Vec2<Scalar> robust_term(Scalar d_hat, const Vec2<Scalar>& error, Scalar mu) {
  return -(d_hat / (error.norm() + mu)) * error;
}

/// Adaptive sigma-modification:
///   d_hat' = delta (|s|^2 / (|s| + mu) - sigma (d_hat - d_bar)),  d_bar' = gamma_bar (d_hat - d_bar).
template <typename Scalar>
std::pair<Scalar, Scalar> sigma_mod_d_update(Scalar delta, Scalar sigma, Scalar gamma_bar, Scalar s_norm, Scalar mu,
                                             Scalar d_hat, Scalar d_bar) {
  const Scalar drive = s_norm * s_norm / (s_norm + mu);
  return {delta * (drive - sigma * (d_hat - d_bar)), gamma_bar * (d_hat - d_bar)};
}

namespace detail {

template <typename Scalar>
void disturbance_bound_rates(const ControllerGains<Scalar>& gains, const Vec2<Scalar>& error, Scalar mu,
                             const AdaptiveState<Scalar>& adaptive, AdaptiveState<Scalar>& rates) {
  const Scalar n = error.norm();
  if (gains.sigma_mod.enabled) {
    std::tie(rates.d_hat, rates.d_bar) = sigma_mod_d_update(gains.delta, gains.sigma_mod.sigma, gains.sigma_mod.gamma,
                                                            n, mu, adaptive.d_hat, adaptive.d_bar);
  } else {
    rates.d_hat = gains.delta * n * n / (n + mu);
  }
}

template <typename Scalar>
AdaptiveState<Scalar> zero_rates() {
  AdaptiveState<Scalar> r;
  return r;
}

}  // namespace detail

/// Sliding-variable adaptive law without integral action or disturbance compensation.
///   s = qdot + alpha sum a_ij (q_i - q_j),  tau = -K s + Y(q, qdot, qdd_r, qd_r) theta_hat.
template <typename Scalar>
ControlOutput<Scalar> baseline_step(const ControllerGains<Scalar>& gains, Scalar gravity, const PlantState<Scalar>& plant,
                                    const FullView<Scalar>& view, const AdaptiveState<Scalar>& adaptive) {
  const Vec2<Scalar> qdot_r = -gains.alpha * detail::weighted_position_sum<Scalar>(view);
  const Vec2<Scalar> qddot_r = -gains.alpha * detail::weighted_velocity_sum(view);
  const Vec2<Scalar> s = plant.qdot - qdot_r;
  const Mat25<Scalar> y = regressor(gravity, plant.q, plant.qdot, qddot_r, qdot_r);

  ControlOutput<Scalar> out{-gains.K * s + y * adaptive.theta_hat, detail::zero_rates<Scalar>(), s};
  out.rates.theta_hat = -gains.Lambda * y.transpose() * s;
  return out;
}

/// Integral sliding variable with per-agent alpha and an adaptive robust term:
///   vartheta = qdot + alpha sum a_ij (q_i - q_j)
///   qd_r     = -alpha sum a_ij (q_i - q_j) - int vartheta
///   s        = vartheta + int vartheta
///   qdd_r    = -alpha sum a_ij (qdot_i - qdot_j) - vartheta
template <typename Scalar>
ControlOutput<Scalar> fixed_step(const ControllerGains<Scalar>& gains, Scalar gravity, const PlantState<Scalar>& plant,
                                 const FullView<Scalar>& view, const AdaptiveState<Scalar>& adaptive, Scalar t) {
  const Scalar mu = gains.mu(t);
  const Vec2<Scalar> coupling = gains.alpha * detail::weighted_position_sum<Scalar>(view);
  const Vec2<Scalar> vartheta = plant.qdot + coupling;
  const Vec2<Scalar> qdot_r = -coupling - adaptive.integral_vartheta;
  const Vec2<Scalar> s = vartheta + adaptive.integral_vartheta;
  const Vec2<Scalar> qddot_r = -gains.alpha * detail::weighted_velocity_sum(view) - vartheta;
  const Mat25<Scalar> y = regressor(gravity, plant.q, plant.qdot, qddot_r, qdot_r);

  ControlOutput<Scalar> out{-gains.K * s + y * adaptive.theta_hat + robust_term(adaptive.d_hat, s, mu),
                            detail::zero_rates<Scalar>(), s};
  out.rates.theta_hat = -gains.Lambda * y.transpose() * s;
  detail::disturbance_bound_rates(gains, s, mu, adaptive, out.rates);
  out.rates.integral_vartheta = vartheta;
  return out;
}

/// Velocity-free fixed-graph law with adaptive feedback gain k_hat:
///   tau = -k_hat s + Y(q, qdot, 0, qd_r) theta_hat + robust,  k_hat' = gamma s^T s.
template <typename Scalar>
ControlOutput<Scalar> fixed_novel_step(const ControllerGains<Scalar>& gains, Scalar gravity,
                                       const PlantState<Scalar>& plant, const PositionView<Scalar>& view,
                                       const AdaptiveState<Scalar>& adaptive, Scalar t) {
  const Scalar mu = gains.mu(t);
  const Vec2<Scalar> coupling = gains.alpha * detail::weighted_position_sum<Scalar>(view);
  const Vec2<Scalar> vartheta = plant.qdot + coupling;
  const Vec2<Scalar> qdot_r = -coupling - adaptive.integral_vartheta;
  const Vec2<Scalar> s = vartheta + adaptive.integral_vartheta;
  const Mat25<Scalar> y = regressor(gravity, plant.q, plant.qdot, Vec2<Scalar>::Zero().eval(), qdot_r);

  ControlOutput<Scalar> out{-adaptive.k_hat * s + y * adaptive.theta_hat + robust_term(adaptive.d_hat, s, mu),
                            detail::zero_rates<Scalar>(), s};
  out.rates.theta_hat = -gains.Lambda * y.transpose() * s;
  out.rates.k_hat = gains.gamma * s.squaredNorm();
  detail::disturbance_bound_rates(gains, s, mu, adaptive, out.rates);
  out.rates.integral_vartheta = vartheta;
  return out;
}

/// Model-reference law for switching graphs. Reference z follows
///   zdot = -alpha sum a_ij(t) (w_i - w_j),  w = qdot + q,
/// and the tracking error e = w - z is driven to zero.
template <typename Scalar>
ControlOutput<Scalar> switching_step(const ControllerGains<Scalar>& gains, Scalar gravity,
                                     const PlantState<Scalar>& plant, const FullView<Scalar>& view,
                                     const AdaptiveState<Scalar>& adaptive, Scalar t) {
  const Scalar mu = gains.mu(t);
  Vec2<Scalar> w_diff = Vec2<Scalar>::Zero();
  for (const auto& nb : view.neighbors) w_diff += nb.weight * (nb.rel_position + nb.rel_velocity);
  const Vec2<Scalar> zdot = -gains.alpha * w_diff;
  const Vec2<Scalar> e = plant.qdot + plant.q - adaptive.z;
  // M edot + C e = tau - d - Y(q, qdot, zdot - qdot, z - q) theta
  const Mat25<Scalar> y = regressor(gravity, plant.q, plant.qdot, (zdot - plant.qdot).eval(), (adaptive.z - plant.q).eval());

  ControlOutput<Scalar> out{-gains.K * e + y * adaptive.theta_hat + robust_term(adaptive.d_hat, e, mu),
                            detail::zero_rates<Scalar>(), e};
  out.rates.theta_hat = -gains.Lambda * y.transpose() * e;
  detail::disturbance_bound_rates(gains, e, mu, adaptive, out.rates);
  out.rates.z = zdot;
  return out;
}

/// Velocity-free model-reference law for switching graphs. Second-order reference
///   zdd = -sum a_ij(t) (q_i - q_j) - (sum_j a_ij(t) / k + k) qdot,
/// e = q - z, w = edot + e.
template <typename Scalar>
ControlOutput<Scalar> switching_novel_step(const ControllerGains<Scalar>& gains, Scalar gravity,
                                           const PlantState<Scalar>& plant, const PositionView<Scalar>& view,
                                           const AdaptiveState<Scalar>& adaptive, Scalar t) {
  const Scalar mu = gains.mu(t);
  Scalar degree(0);
  for (const auto& nb : view.neighbors) degree += nb.weight;
  const Vec2<Scalar> zddot =
      -detail::weighted_position_sum<Scalar>(view) - (degree / gains.k + gains.k) * plant.qdot;
  const Vec2<Scalar> e = plant.q - adaptive.z;
  const Vec2<Scalar> edot = plant.qdot - adaptive.zdot;
  const Vec2<Scalar> w = edot + e;
  const Mat25<Scalar> y = regressor(gravity, plant.q, plant.qdot, (zddot - edot).eval(), (adaptive.zdot - e).eval());

  ControlOutput<Scalar> out{-gains.K * w + y * adaptive.theta_hat + robust_term(adaptive.d_hat, w, mu),
                            detail::zero_rates<Scalar>(), w};
  out.rates.theta_hat = -gains.Lambda * y.transpose() * w;
  detail::disturbance_bound_rates(gains, w, mu, adaptive, out.rates);
  out.rates.z = adaptive.zdot;
  out.rates.zdot = zddot;
  return out;
}

}  // namespace elc
