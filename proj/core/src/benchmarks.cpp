#include "distopt/benchmarks.hpp"

#include "distopt/errors.hpp"
#include "distopt/random.hpp"
#include "distopt/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>

namespace distopt {

ScalarField quadratic_objective(Matrix Q, Vector c) {
  if (Q.rows() != Q.cols() || Q.rows() != c.size()) {
    throw DimensionError("quadratic_objective: Q must be square and match c");
  }
  auto Qs = std::make_shared<const Matrix>(0.5 * (Q + Q.transpose()));
  auto cs = std::make_shared<const Vector>(std::move(c));
  ScalarField f;
  f.dim = static_cast<int>(cs->size());
  f.eval = [Qs, cs](const Vector& x) { return 0.5 * x.dot(*Qs * x) + cs->dot(x); };
  f.gradient = [Qs, cs](const Vector& x) { return Vector(*Qs * x + *cs); };
  f.hessian = [Qs](const Vector&) { return *Qs; };
  return f;
}

// ---------------------------------------------------------------- logistic

void LabeledDataset::validate() const {
  if (points.rows() != labels.size()) throw ConfigError("dataset: point and label counts differ");
  for (Eigen::Index j = 0; j < labels.size(); ++j) {
    if (labels[j] != 1.0 && labels[j] != -1.0) {
      throw ConfigError("dataset: label " + std::to_string(j) + " is not +1 or -1");
    }
  }
}

LabeledDataset gen_synthetic_dataset(int M, int n_x, std::uint64_t seed) {
  if (M < 1 || n_x < 1) throw ConfigError("gen_synthetic_dataset: M and n_x must be positive");
  Rng rng(seed);
  LabeledDataset data;
  data.seed = seed;
  data.points.resize(M, n_x);
  data.labels.resize(M);
  const double offset = 1.0 / std::sqrt(static_cast<double>(n_x));
  for (int j = 0; j < M; ++j) {
    const double y = j % 2 == 0 ? 1.0 : -1.0;
    data.labels[j] = y;
    for (int k = 0; k < n_x; ++k) data.points(j, k) = rng.normal(y * offset, 1.0);
  }
  return data;
}

namespace {

std::vector<double> parse_numbers(std::string line, bool& ok) {
  for (char& ch : line) {
    if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
  }
  std::istringstream in(line);
  std::vector<double> out;
  std::string tok;
  ok = true;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) ok = false;
    } catch (const std::exception&) {
      ok = false;
    }
  }
  return out;
}

}  // namespace

LabeledDataset read_dataset(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    bool ok = false;
    auto values = parse_numbers(line, ok);
    if (!ok) {
      if (rows.empty() && line_no == 1) continue;
      throw ConfigError("dataset: line " + std::to_string(line_no) + " is not numeric");
    }
    if (values.size() < 2) throw ConfigError("dataset: line " + std::to_string(line_no) + " needs features and a label");
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw ConfigError("dataset: line " + std::to_string(line_no) + " has a different column count");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ConfigError("dataset: no data rows");
  const auto M = static_cast<Eigen::Index>(rows.size());
  const auto n_x = static_cast<Eigen::Index>(rows.front().size()) - 1;
  LabeledDataset data;
  data.points.resize(M, n_x);
  data.labels.resize(M);
  for (Eigen::Index j = 0; j < M; ++j) {
    for (Eigen::Index k = 0; k < n_x; ++k) data.points(j, k) = rows[j][k];
    data.labels[j] = rows[j][n_x];
  }
  data.validate();
  return data;
}

LabeledDataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("dataset: cannot open " + path);
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const LabeledDataset& data) {
  for (int k = 0; k < data.features(); ++k) out << 'x' << k + 1 << ',';
  out << "label\n";
  for (int j = 0; j < data.size(); ++j) {
    for (int k = 0; k < data.features(); ++k) out << format_double(data.points(j, k)) << ',';
    out << format_double(data.labels[j]) << '\n';
  }
}

namespace {

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Block loss over rows [first, first + cap) of the dataset, one weight copy per point.
ScalarField logistic_block_objective(const LabeledDataset& data, int first, int cap, double gamma) {
  const int n_x = data.features();
  const double inv_m = 1.0 / data.size();
  auto X = std::make_shared<const Matrix>(data.points.middleRows(first, cap));
  auto y = std::make_shared<const Vector>(data.labels.segment(first, cap));
  ScalarField f;
  f.dim = cap * n_x;
  f.eval = [=](const Vector& w) {
    double v = 0.0;
    for (int j = 0; j < cap; ++j) {
      const double t = -(*y)[j] * X->row(j).dot(w.segment(j * n_x, n_x));
      v += softplus(t);
    }
    return inv_m * v + 0.5 * gamma * inv_m * w.squaredNorm();
  };
  f.gradient = [=](const Vector& w) {
    Vector g = gamma * inv_m * w;
    for (int j = 0; j < cap; ++j) {
      const double t = -(*y)[j] * X->row(j).dot(w.segment(j * n_x, n_x));
      g.segment(j * n_x, n_x) -= inv_m * sigmoid(t) * (*y)[j] * X->row(j).transpose();
    }
    return g;
  };
  f.hessian = [=](const Vector& w) {
    Matrix H = Matrix::Identity(cap * n_x, cap * n_x) * (gamma * inv_m);
    for (int j = 0; j < cap; ++j) {
      const double t = -(*y)[j] * X->row(j).dot(w.segment(j * n_x, n_x));
      const double s = sigmoid(t);
      H.block(j * n_x, j * n_x, n_x, n_x) += inv_m * s * (1.0 - s) * X->row(j).transpose() * X->row(j);
    }
    return H;
  };
  return f;
}

/// Rows w_1 - w_j = 0, j = 2..cap.
VectorField copy_equalities(int cap, int n_x) {
  if (cap < 2) return VectorField::none(cap * n_x);
  Matrix C = Matrix::Zero((cap - 1) * n_x, cap * n_x);
  for (int j = 1; j < cap; ++j) {
    C.block((j - 1) * n_x, 0, n_x, n_x).setIdentity();
    C.block((j - 1) * n_x, j * n_x, n_x, n_x) = -Matrix::Identity(n_x, n_x);
  }
  return VectorField::affine(std::move(C), Vector::Zero((cap - 1) * n_x));
}

}  // namespace

SeparableProblem gen_logistic_consensus(const LabeledDataset& data, int n_sub, double gamma,
                                        PartitionMode mode) {
  data.validate();
  if (n_sub < 1) throw ConfigError("gen_logistic_consensus: n_sub must be positive");
  if (!(gamma >= 0.0)) throw ConfigError("gen_logistic_consensus: gamma must be nonnegative");
  const int M = data.size();
  const int n_x = data.features();
  if (n_sub > M) throw PartitionError("gen_logistic_consensus: more subsystems than data points");

  std::vector<int> caps;
  if (M % n_sub == 0) {
    caps.assign(static_cast<std::size_t>(n_sub), M / n_sub);
  } else if (mode == PartitionMode::strict) {
    throw PartitionError("gen_logistic_consensus: " + std::to_string(n_sub) + " subsystems do not divide " +
                         std::to_string(M) + " data points");
  } else {
    const int cap = (M + n_sub - 1) / n_sub;
    const int last = M - cap * (n_sub - 1);
    if (last < 1) {
      throw PartitionError("gen_logistic_consensus: no ceil-sized partition leaves a nonempty last block");
    }
    caps.assign(static_cast<std::size_t>(n_sub - 1), cap);
    caps.push_back(last);
  }

  std::vector<LocalBlock> blocks;
  int first = 0;
  for (int cap : caps) {
    LocalBlock blk;
    blk.n = cap * n_x;
    blk.f = logistic_block_objective(data, first, cap, gamma);
    blk.g = copy_equalities(cap, n_x);
    blk.h = VectorField::none(blk.n);
    blocks.push_back(std::move(blk));
    first += cap;
  }

  const bool even = std::all_of(caps.begin(), caps.end(), [&](int c) { return c == caps.front(); });
  if (even) return build_consensus_problem(std::move(blocks));

  const Eigen::Index m_c = static_cast<Eigen::Index>(n_sub - 1) * n_x;
  for (int i = 0; i < n_sub; ++i) {
    LocalBlock& blk = blocks[static_cast<std::size_t>(i)];
    blk.A = Matrix::Zero(m_c, blk.n);
    if (i == 0) {
      for (int r = 0; r < n_sub - 1; ++r) blk.A.block(r * n_x, 0, n_x, n_x).setIdentity();
    } else {
      blk.A.block((i - 1) * n_x, 0, n_x, n_x) = -Matrix::Identity(n_x, n_x);
    }
  }
  return build_problem(std::move(blocks), Vector::Zero(m_c));
}

double logistic_loss(const LabeledDataset& data, const Vector& w, double gamma) {
  data.validate();
  if (w.size() != data.features()) throw DimensionError("logistic_loss: weight length mismatch");
  double v = 0.0;
  for (int j = 0; j < data.size(); ++j) v += softplus(-data.labels[j] * data.points.row(j).dot(w));
  return v / data.size() + 0.5 * gamma * w.squaredNorm();
}

// ---------------------------------------------------------------- sensors

void SensorScene::validate() const {
  if (N < 3) throw ConfigError("sensor scene: need at least 3 sensors");
  if (!(sigma >= 0.0)) throw ConfigError("sensor scene: sigma must be nonnegative");
  if (eta.rows() != 2 || eta.cols() != N + 1 || eta_bar.size() != N) {
    throw DimensionError("sensor scene: eta must be 2 x (N + 1) and eta_bar of length N");
  }
  if (eta.col(N) != eta.col(0)) throw ConfigError("sensor scene: last eta column must repeat the first");
}

Vector sensor_position(int N, int i) {
  const double angle = 2.0 * i * std::numbers::pi / N;
  Vector p(2);
  p << N * std::cos(angle), N * std::sin(angle);
  return p;
}

SensorScene gen_sensor_scene(int N, double sigma, std::uint64_t seed) {
  if (N < 3) throw ConfigError("gen_sensor_scene: need at least 3 sensors");
  if (!(sigma >= 0.0)) throw ConfigError("gen_sensor_scene: sigma must be nonnegative");
  Rng rng(seed);
  SensorScene s;
  s.N = N;
  s.sigma = sigma;
  s.seed = seed;
  s.eta.resize(2, N + 1);
  s.eta_bar.resize(N);
  const double chord = 2.0 * N * std::sin(std::numbers::pi / N);
  for (int i = 1; i <= N; ++i) {
    const Vector p = sensor_position(N, i);
    s.eta(0, i - 1) = p[0] + rng.normal(0.0, sigma);
    s.eta(1, i - 1) = p[1] + rng.normal(0.0, sigma);
    s.eta_bar[i - 1] = chord + rng.normal(0.0, sigma);
  }
  s.eta.col(N) = s.eta.col(0);
  return s;
}

namespace {

struct SensorTerms {
  Vector u;     ///< X - zeta
  double d;     ///< |u|
  double e;     ///< d - eta_bar
  Vector grad;  ///< gradient of e in (X, zeta)
  Matrix curv;  ///< Hessian of d in (X, zeta)
};

SensorTerms sensor_terms(const Vector& x, double eta_bar) {
  SensorTerms t;
  t.u = x.head<2>() - x.tail<2>();
  t.d = t.u.norm();
  t.e = t.d - eta_bar;
  t.grad = Vector::Zero(4);
  t.curv = Matrix::Zero(4, 4);
  if (t.d > 0.0) {
    const Vector n = t.u / t.d;
    t.grad << n, -n;
    const Matrix K = (Matrix::Identity(2, 2) - n * n.transpose()) / t.d;
    t.curv.topLeftCorner(2, 2) = K;
    t.curv.topRightCorner(2, 2) = -K;
    t.curv.bottomLeftCorner(2, 2) = -K;
    t.curv.bottomRightCorner(2, 2) = K;
  }
  return t;
}

/// Hessian of e^2 given the terms.
Matrix squared_gap_hessian(const SensorTerms& t) {
  return 2.0 * t.grad * t.grad.transpose() + 2.0 * t.e * t.curv;
}

}  // namespace

SeparableProblem gen_sensor_problem(const SensorScene& scene, const SensorOptions& options) {
  scene.validate();
  const int N = scene.N;
  if (options.sigma_per_sensor.size() != 0 && options.sigma_per_sensor.size() != N) {
    throw DimensionError("gen_sensor_problem: sigma_per_sensor needs one entry per sensor");
  }
  const double slack = options.slack_sq.value_or(2.0 * scene.sigma * scene.sigma);
  if (!(slack >= 0.0)) throw ConfigError("gen_sensor_problem: slack must be nonnegative");

  auto noise = [&](int i) {
    const double s = options.sigma_per_sensor.size() ? options.sigma_per_sensor[i % N] : scene.sigma;
    return s > 0.0 ? s : 1.0;
  };

  std::vector<LocalBlock> blocks;
  for (int i = 0; i < N; ++i) {
    const Vector own = scene.eta.col(i);
    const Vector next = scene.eta.col(i + 1);
    const double bar = scene.eta_bar[i];
    const double s_i = noise(i);
    const double s_n = noise(i + 1);
    const double a = 1.0 / (4.0 * s_i * s_i);
    const double c = 1.0 / (4.0 * s_n * s_n);
    const double w = 1.0 / (2.0 * s_i * s_i);

    LocalBlock blk;
    blk.n = 4;
    blk.f.dim = 4;
    blk.f.eval = [=](const Vector& x) {
      const double e = (x.head<2>() - x.tail<2>()).norm() - bar;
      return a * (x.head<2>() - own).squaredNorm() + c * (x.tail<2>() - next).squaredNorm() + w * e * e;
    };
    blk.f.gradient = [=](const Vector& x) {
      const SensorTerms t = sensor_terms(x, bar);
      Vector g(4);
      g << 2.0 * a * (x.head<2>() - own), 2.0 * c * (x.tail<2>() - next);
      g += 2.0 * w * t.e * t.grad;
      return g;
    };
    blk.f.hessian = [=](const Vector& x) {
      const SensorTerms t = sensor_terms(x, bar);
      Matrix H = w * squared_gap_hessian(t);
      H.topLeftCorner(2, 2).diagonal().array() += 2.0 * a;
      H.bottomRightCorner(2, 2).diagonal().array() += 2.0 * c;
      return H;
    };

    blk.h.in_dim = 4;
    blk.h.out_dim = 1;
    blk.h.eval = [=](const Vector& x) {
      const double e = (x.head<2>() - x.tail<2>()).norm() - bar;
      Vector v(1);
      v[0] = e * e - slack;
      return v;
    };
    blk.h.jacobian = [=](const Vector& x) {
      const SensorTerms t = sensor_terms(x, bar);
      return Matrix((2.0 * t.e * t.grad).transpose());
    };
    blk.h.weighted_hessian = [=](const Vector& x, const Vector& weights) {
      return Matrix(weights[0] * squared_gap_hessian(sensor_terms(x, bar)));
    };
    blk.g = VectorField::none(4);

    blk.A = Matrix::Zero(2 * N, 4);
    if (i == 0) {
      blk.A.block(0, 2, 2, 2).setIdentity();
      blk.A.block(2 * N - 2, 0, 2, 2) = -Matrix::Identity(2, 2);
    } else {
      blk.A.block(2 * (i - 1), 0, 2, 2) = -Matrix::Identity(2, 2);
      blk.A.block(2 * i, 2, 2, 2).setIdentity();
    }
    blocks.push_back(std::move(blk));
  }
  BlockVectors start;
  if (options.with_start_values) start = sensor_start_values(scene);
  return build_problem(std::move(blocks), Vector::Zero(2 * N), std::move(start));
}

BlockVectors sensor_start_values(const SensorScene& scene) {
  scene.validate();
  const int N = scene.N;
  Rng rng(scene.seed ^ 0x9E3779B97F4A7C15ULL);
  Matrix pos(2, N);
  for (int i = 1; i <= N; ++i) {
    const Vector p = sensor_position(N, i);
    pos(0, i - 1) = p[0] + rng.normal(0.0, scene.sigma);
    pos(1, i - 1) = p[1] + rng.normal(0.0, scene.sigma);
  }
  BlockVectors out;
  for (int i = 0; i < N; ++i) {
    Vector x(4);
    x << pos.col(i), pos.col((i + 1) % N);
    out.push_back(std::move(x));
  }
  return out;
}

BlockVectors sensor_ground_truth(int N) {
  if (N < 3) throw ConfigError("sensor_ground_truth: need at least 3 sensors");
  BlockVectors out;
  for (int i = 1; i <= N; ++i) {
    Vector x(4);
    x << sensor_position(N, i), sensor_position(N, i % N + 1);
    out.push_back(std::move(x));
  }
  return out;
}

void write_scene_csv(std::ostream& out, const SensorScene& scene, const BlockVectors& estimate) {
  scene.validate();
  if (!estimate.empty() && estimate.size() != static_cast<std::size_t>(scene.N)) {
    throw DimensionError("write_scene_csv: estimate needs one block per sensor");
  }
  out << "sensor,true_x,true_y,eta_x,eta_y";
  if (!estimate.empty()) out << ",est_x,est_y";
  out << '\n';
  for (int i = 0; i < scene.N; ++i) {
    const Vector p = sensor_position(scene.N, i + 1);
    out << i + 1 << ',' << format_double(p[0]) << ',' << format_double(p[1]) << ','
        << format_double(scene.eta(0, i)) << ',' << format_double(scene.eta(1, i));
    if (!estimate.empty()) {
      out << ',' << format_double(estimate[i][0]) << ',' << format_double(estimate[i][1]);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------- quadratics

SeparableProblem gen_consensus_quadratic(const std::vector<Vector>& centers) {
  if (centers.empty()) throw ConfigError("gen_consensus_quadratic: need at least one center");
  std::vector<LocalBlock> blocks;
  for (const Vector& c : centers) {
    const auto d = c.size();
    // |x - c|^2 = (1/2) x^T (2I) x - 2 c^T x + const
    ScalarField q = quadratic_objective(2.0 * Matrix::Identity(d, d), -2.0 * c);
    const double shift = c.squaredNorm();
    ScalarField f = q;
    f.eval = [q, shift](const Vector& x) { return q.eval(x) + shift; };
    blocks.push_back(LocalBlock::unconstrained(std::move(f), Matrix(0, d)));
  }
  return build_consensus_problem(std::move(blocks));
}

QuadraticInstance random_quadratic_instance(int blocks, int max_n, int m_c, std::uint64_t seed) {
  if (blocks < 1 || max_n < 1 || m_c < 0) throw ConfigError("random_quadratic_instance: invalid sizes");
  Rng rng(seed);
  QuadraticInstance inst;
  for (int i = 0; i < blocks; ++i) {
    const int n = 1 + static_cast<int>(rng.uniform() * max_n) % max_n;
    Matrix M(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) M(r, c) = rng.normal();
    }
    inst.Q.push_back(M.transpose() * M + Matrix::Identity(n, n));
    Vector c(n);
    for (int r = 0; r < n; ++r) c[r] = rng.normal();
    inst.c.push_back(std::move(c));
    Matrix A(m_c, n);
    for (int r = 0; r < m_c; ++r) {
      for (int k = 0; k < n; ++k) A(r, k) = rng.normal();
    }
    inst.A.push_back(std::move(A));
  }
  inst.b.resize(m_c);
  for (int r = 0; r < m_c; ++r) inst.b[r] = rng.normal();
  return inst;
}

SeparableProblem build_quadratic_problem(const QuadraticInstance& inst) {
  if (inst.Q.size() != inst.c.size() || inst.Q.size() != inst.A.size()) {
    throw DimensionError("build_quadratic_problem: per-block fields differ in length");
  }
  std::vector<LocalBlock> blocks;
  for (std::size_t i = 0; i < inst.Q.size(); ++i) {
    blocks.push_back(LocalBlock::unconstrained(quadratic_objective(inst.Q[i], inst.c[i]), inst.A[i]));
  }
  return build_problem(std::move(blocks), inst.b);
}

SeparableProblem gen_linear_coupled() {
  std::vector<LocalBlock> blocks;
  for (int i = 0; i < 2; ++i) {
    ScalarField f = quadratic_objective(Matrix::Zero(1, 1), Vector::Ones(1));
    LocalBlock blk = LocalBlock::unconstrained(std::move(f), Matrix::Ones(1, 1));
    blk.lb = Vector::Constant(1, -5.0);
    blk.ub = Vector::Constant(1, 5.0);
    blocks.push_back(std::move(blk));
  }
  return build_problem(std::move(blocks), Vector::Constant(1, 2.0));
}

// ---------------------------------------------------------------- reference

CentralizedSolution solve_centralized(const SeparableProblem& p, const LocalNlpOptions& options) {
  const LocalBlock whole = stack_blocks(p);
  const VectorField coupling = VectorField::affine(whole.A, -p.b());
  const VectorField eq = whole.g.out_dim > 0 ? VectorField::concat(whole.g, coupling) : coupling;
  const LocalNlpResult r = solve_local_nlp(LocalNlp{whole.f, eq, whole.h}, stack(p.initial_guess()), options);
  CentralizedSolution out;
  out.x = split(p, r.x);
  out.lambda = r.gamma.tail(p.coupling_rows());
  out.objective = total_objective(p, out.x);
  out.status = r.status;
  return out;
}

}  // namespace distopt
