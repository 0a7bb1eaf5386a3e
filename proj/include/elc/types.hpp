#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace elc {

template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec5 = Eigen::Matrix<Scalar, 5, 1>;
template <typename Scalar> using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar> using Mat5 = Eigen::Matrix<Scalar, 5, 5>;
template <typename Scalar> using Mat25 = Eigen::Matrix<Scalar, 2, 5>;
template <typename Scalar> using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Input violates a documented precondition (shape, sign, finiteness).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Graph lacks the structure an operation needs (spanning tree, strong connectivity).
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario or controller configuration is invalid. `field()` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace elc
