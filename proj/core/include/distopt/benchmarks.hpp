#pragma once

#include "distopt/problem.hpp"
#include "distopt/sqp.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace distopt {

/// f(x) = (1/2) x^T Q x + c^T x with analytic derivatives.
ScalarField quadratic_objective(Matrix Q, Vector c);

// ---------------------------------------------------------------- logistic

struct LabeledDataset {
  Matrix points;  ///< M x n_x
  Vector labels;  ///< entries in {-1, +1}
  std::uint64_t seed = 0;

  int size() const noexcept { return static_cast<int>(points.rows()); }
  int features() const noexcept { return static_cast<int>(points.cols()); }
  /// Throws ConfigError on row/label count mismatch or labels other than +-1.
  void validate() const;
};

/// Two unit-variance Gaussian clouds centred at +-(1, ..., 1) / sqrt(n_x);
/// labels alternate +1, -1 so the split is exact for even M.
LabeledDataset gen_synthetic_dataset(int M, int n_x, std::uint64_t seed);

/// Delimited text (comma, semicolon, tab or spaces): n_x feature columns then
/// a +-1 label. A first line that does not parse as numbers is a header.
LabeledDataset read_dataset(std::istream& in);
LabeledDataset read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const LabeledDataset& data);

enum class PartitionMode {
  strict,              ///< n_sub must divide M
  last_block_smaller,  ///< cap = ceil(M / n_sub); the last block takes the rest
};

/// Consensus logistic regression, one block per group of cap points. Block i
/// optimizes cap copies of the weight vector with equalities w_1 = w_j inside
/// the block. In strict mode the blocks are coupled through
/// build_consensus_problem on the whole block vector; with uneven groups only
/// the first copy of each block is coupled.
SeparableProblem gen_logistic_consensus(const LabeledDataset& data, int n_sub, double gamma,
                                        PartitionMode mode = PartitionMode::strict);

/// (1/M) sum_j log(1 + exp(-y_j x_j^T w)) + gamma / 2 |w|^2: the centralized loss.
double logistic_loss(const LabeledDataset& data, const Vector& w, double gamma);

// ---------------------------------------------------------------- sensors

struct SensorScene {
  int N = 0;
  double sigma = 0.0;
  Matrix eta;      ///< 2 x (N + 1) measured positions; last column repeats the first
  Vector eta_bar;  ///< measured distance from sensor i to sensor i + 1
  std::uint64_t seed = 0;

  void validate() const;
};

/// Sensors on the radius-N circle at angles 2 i pi / N, i = 1..N, with
/// Normal(0, sigma) noise drawn per sensor in the order x, y, distance.
SensorScene gen_sensor_scene(int N, double sigma, std::uint64_t seed);

/// True circle position of sensor i (1-based, wrapping).
Vector sensor_position(int N, int i);

struct SensorOptions {
  /// Right-hand side of the distance inequality; unset means 2 sigma^2.
  std::optional<double> slack_sq;
  /// Optional per-sensor noise levels used as objective weights.
  Vector sigma_per_sensor;
  /// Attach sensor_start_values as the problem's initial guess.
  bool with_start_values = true;
};

/// Block i decides (X_i, zeta_i), the own position and the estimate of the
/// neighbour's, with
///   f_i = |X - eta_i|^2 / (4 s_i^2) + |zeta - eta_{i+1}|^2 / (4 s_{i+1}^2)
///       + (|X - zeta| - eta_bar_i)^2 / (2 s_i^2),
///   h_i = (|X - zeta| - eta_bar_i)^2 - slack,
/// and coupling zeta_i = X_{i+1} (cyclic), b = 0. A weight of zero noise is
/// replaced by 1 so noise-free scenes stay finite.
SeparableProblem gen_sensor_problem(const SensorScene& scene, const SensorOptions& options = {});

/// (perturbed position i, perturbed position i + 1) per block; the
/// perturbation uses a stream separate from the scene's.
BlockVectors sensor_start_values(const SensorScene& scene);

/// (true X_i, true X_{i+1}) per block.
BlockVectors sensor_ground_truth(int N);

/// One row per sensor: true, measured and (optionally) estimated positions.
void write_scene_csv(std::ostream& out, const SensorScene& scene, const BlockVectors& estimate = {});

// ---------------------------------------------------------------- quadratics

/// f_i(x) = |x - c_i|^2 on a shared vector of dimension c_i.size().
SeparableProblem gen_consensus_quadratic(const std::vector<Vector>& centers);

struct QuadraticInstance {
  std::vector<Matrix> Q;
  BlockVectors c;
  std::vector<Matrix> A;
  Vector b;
};

/// Random strictly convex blocks (1/2) x^T Q_i x + c_i^T x with random coupling.
/// Dimensions are drawn in [1, max_n] per block; Q_i = M^T M + I.
QuadraticInstance random_quadratic_instance(int blocks, int max_n, int m_c, std::uint64_t seed);
SeparableProblem build_quadratic_problem(const QuadraticInstance& inst);

/// f_i = x_i on [-5, 5] for two scalar blocks, coupled by x_1 + x_2 = 2. The
/// Lagrangian is linear, so dual methods without a penalty oscillate.
SeparableProblem gen_linear_coupled();

// ---------------------------------------------------------------- reference

/// The whole problem solved as one NLP with the coupling as equalities.
/// Returns per-block x through `x` and the coupling multipliers through `lambda`.
struct CentralizedSolution {
  BlockVectors x;
  Vector lambda;
  double objective = 0.0;
  LocalNlpStatus status = LocalNlpStatus::max_iter;
};
CentralizedSolution solve_centralized(const SeparableProblem& p, const LocalNlpOptions& options = {});

}  // namespace distopt
