#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace distopt {

class ConvergenceTrace;

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value (negative tolerance, zero iteration budget, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Shape mismatch. `block()` is -1 when the mismatch is not tied to a block.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, int block = -1) : Error(what), block_(block) {}
  int block() const noexcept { return block_; }

 private:
  int block_;
};

/// A callable returned a non-finite value. `index()` is the stencil coordinate
/// (finite differences) or the block index (objective sums); -1 when unknown.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, int index = -1) : Error(what), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

class SingularDerivativeError : public Error {
 public:
  SingularDerivativeError(const std::string& what, double at) : Error(what), at_(at) {}
  double at() const noexcept { return at_; }

 private:
  double at_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double last_iterate)
      : Error(what), last_(last_iterate) {}
  double last_iterate() const noexcept { return last_; }

 private:
  double last_;
};

class NotPsdError : public Error {
 public:
  using Error::Error;
};

/// KKT matrix singular or numerically rank deficient.
class SingularKktError : public Error {
 public:
  SingularKktError(const std::string& what, double rcond, int rank, int expected_rank)
      : Error(what), rcond_(rcond), rank_(rank), expected_(expected_rank) {}
  double rcond() const noexcept { return rcond_; }
  int rank() const noexcept { return rank_; }
  int expected_rank() const noexcept { return expected_; }

 private:
  double rcond_;
  int rank_;
  int expected_;
};

/// Linearized active constraints of some block are inconsistent.
class CoordinationInfeasibleError : public Error {
 public:
  CoordinationInfeasibleError(const std::string& what, int block) : Error(what), block_(block) {}
  int block() const noexcept { return block_; }

 private:
  int block_;
};

/// Dataset cannot be split evenly into the requested number of blocks.
class PartitionError : public Error {
 public:
  using Error::Error;
};

/// One or more tasks of a map_blocks batch threw.
class TaskFailureError : public Error {
 public:
  TaskFailureError(const std::string& what, std::vector<int> failed, std::vector<std::string> messages)
      : Error(what), failed_(std::move(failed)), messages_(std::move(messages)) {}
  const std::vector<int>& failed_indices() const noexcept { return failed_; }
  const std::vector<std::string>& messages() const noexcept { return messages_; }

 private:
  std::vector<int> failed_;
  std::vector<std::string> messages_;
};

}  // namespace distopt
