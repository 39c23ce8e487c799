#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vplan {

/// Index into the closed action vocabulary.
enum class ActionId : std::uint32_t {};
/// Index into the goal set.
enum class GoalId : std::uint32_t {};
/// Index into the word-token vocabulary.
enum class TokenId : std::uint32_t {};

inline constexpr ActionId kInvalidAction{std::numeric_limits<std::uint32_t>::max()};

constexpr std::size_t index(ActionId a) { return static_cast<std::size_t>(a); }
constexpr std::size_t index(GoalId g) { return static_cast<std::size_t>(g); }
constexpr std::size_t index(TokenId t) { return static_cast<std::size_t>(t); }

constexpr ActionId action_id(std::size_t i) { return static_cast<ActionId>(i); }
constexpr GoalId goal_id(std::size_t i) { return static_cast<GoalId>(i); }
constexpr TokenId token_id(std::size_t i) { return static_cast<TokenId>(i); }

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Error categories map one-to-one onto CLI exit codes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vplan
