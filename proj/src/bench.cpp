#include "kdm/bench.hpp"
#include "kdm/eigsolve.hpp"
#include "kdm/errors.hpp"
#include "kdm/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <lapacke.h>
#include <numbers>
#include <random>
#include <stdexcept>

namespace kdm {

namespace {

Eigen::MatrixXd gauge_fixed_reference(const Eigen::MatrixXd& raw, const std::string& problem)
{
  GaugeResult g = gauge_fix(raw);
  if (g.dropped() > 0)
    throw NumericalError("reference eigenfunctions of " + problem + " are rank deficient");
  return g.Phi;
}

const LangevinGrid& double_well_grid(bool asymmetric)
{
  static const LangevinGrid symmetric = make_langevin_grid(
    [](double x) { return double_well_potential(x); }, kGridLo, kGridHi, kGridNodes);
  static const LangevinGrid tilted = make_langevin_grid(
    [](double x) { return double_well_potential(x, kAsymmetricTilt); }, kGridLo, kGridHi,
    kGridNodes);
  return asymmetric ? tilted : symmetric;
}

double param_or(const nlohmann::json& p, const char* key, double fallback)
{
  return p.contains(key) ? p.at(key).get<double>() : fallback;
}

int int_param_or(const nlohmann::json& p, const char* key, int fallback)
{
  return p.contains(key) ? p.at(key).get<int>() : fallback;
}

} // namespace

double double_well_potential(double x, double tilt)
{
  double q = x * x - 1.0;
  return 0.25 * q * q + tilt * x;
}

LangevinGrid make_langevin_grid(const std::function<double(double)>& V,
                                double lo,
                                double hi,
                                int nodes)
{
  if (nodes < 3 || !(hi > lo))
    throw std::invalid_argument("Langevin grid needs at least three nodes on a nonempty interval");
  LangevinGrid g;
  g.nodes = Eigen::VectorXd::LinSpaced(nodes, lo, hi);
  g.h = (hi - lo) / (nodes - 1);
  g.V.resize(nodes);
  for (int i = 0; i < nodes; ++i)
    g.V(i) = V(g.nodes(i));
  const double h2 = g.h * g.h;
  // Midpoint potential between nodes i and i+1.
  Eigen::VectorXd Vmid(nodes - 1);
  for (int i = 0; i + 1 < nodes; ++i)
    Vmid(i) = V(0.5 * (g.nodes(i) + g.nodes(i + 1)));
  g.diag = Eigen::VectorXd::Zero(nodes);
  g.offdiag.resize(nodes - 1);
  for (int i = 0; i + 1 < nodes; ++i) {
    g.offdiag(i) = std::exp(0.5 * (g.V(i) + g.V(i + 1)) - Vmid(i)) / h2;
    g.diag(i) -= std::exp(g.V(i) - Vmid(i)) / h2;
    g.diag(i + 1) -= std::exp(g.V(i + 1) - Vmid(i)) / h2;
  }
  return g;
}

Eigen::VectorXd LangevinGrid::apply(const Eigen::VectorXd& f) const
{
  const Eigen::Index n = nodes.size();
  if (f.size() != n)
    throw std::invalid_argument("LangevinGrid::apply: wrong vector length");
  // G = Π^{-1/2} M Π^{1/2}, Π = diag(e^{-V}).
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = diag(i) * f(i);
    if (i > 0)
      acc += offdiag(i - 1) * std::exp(0.5 * (V(i) - V(i - 1))) * f(i - 1);
    if (i + 1 < n)
      acc += offdiag(i) * std::exp(0.5 * (V(i) - V(i + 1))) * f(i + 1);
    out(i) = acc;
  }
  return out;
}

GridEigenpairs grid_eigenpairs(const LangevinGrid& grid, int k)
{
  const lapack_int n = static_cast<lapack_int>(grid.nodes.size());
  if (k < 1 || k > n)
    throw std::invalid_argument("grid_eigenpairs: invalid mode count");
  Eigen::VectorXd d = grid.diag;
  Eigen::VectorXd e(n);
  e.head(n - 1) = grid.offdiag;
  e(n - 1) = 0.0;
  lapack_int m = 0;
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, k);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(k));
  lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0,
                                   n - k + 1, n, 0.0, &m, w.data(), z.data(), n, isuppz.data());
  if (info != 0 || m != k)
    throw NumericalError("tridiagonal eigensolver failed (info " + std::to_string(info) + ")");

  GridEigenpairs out;
  out.rates.resize(k);
  out.functions.resize(n, k);
  out.symmetric_vectors.resize(n, k);
  Eigen::ArrayXd half = (0.5 * grid.V.array()).exp();
  for (int j = 0; j < k; ++j) {
    // LAPACK returns ascending eigenvalues of M; the largest come last.
    int src = k - 1 - j;
    Eigen::VectorXd v = z.col(src);
    if (v(n - 1) < 0.0)
      v = -v;
    out.rates(j) = -w(src);
    out.symmetric_vectors.col(j) = v;
    out.functions.col(j) = (v.array() * half).matrix();
  }
  return out;
}

Eigen::VectorXd interpolate(const Eigen::VectorXd& nodes,
                            const Eigen::VectorXd& values,
                            const Eigen::VectorXd& x)
{
  const Eigen::Index n = nodes.size();
  if (values.size() != n || n < 2)
    throw std::invalid_argument("interpolate: needs at least two nodes with matching values");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double xi = x(i);
    if (xi <= nodes(0)) {
      out(i) = values(0);
      continue;
    }
    if (xi >= nodes(n - 1)) {
      out(i) = values(n - 1);
      continue;
    }
    auto it = std::upper_bound(nodes.data(), nodes.data() + n, xi);
    Eigen::Index k = (it - nodes.data()) - 1;
    double t = (xi - nodes(k)) / (nodes(k + 1) - nodes(k));
    out(i) = (1.0 - t) * values(k) + t * values(k + 1);
  }
  return out;
}

OuGenerator::OuGenerator(Eigen::VectorXd alphas)
  : alphas_(std::move(alphas))
{
  if (alphas_.size() == 0 || (alphas_.array() <= 0.0).any())
    throw std::invalid_argument("OU drift rates must be positive");
}

Eigen::MatrixXd OuGenerator::apply(const Expansion& f, const Eigen::MatrixXd& X) const
{
  const Eigen::Index N = X.rows(), d = X.cols();
  if (d != alphas_.size() || f.dimension() != d)
    throw std::invalid_argument("OU generator: dimension mismatch");
  Eigen::MatrixXd grad = f.gradients(X);
  Eigen::MatrixXd out = f.laplacians(X);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < d; ++j)
      out.row(i) -= alphas_(j) * X(i, j) * grad.row(i * d + j);
  }
  return out;
}

GridGenerator::GridGenerator(LangevinGrid grid)
  : grid_(std::move(grid))
{}

Eigen::MatrixXd GridGenerator::apply(const Expansion& f, const Eigen::MatrixXd& X) const
{
  if (X.cols() != 1 || f.dimension() != 1)
    throw std::invalid_argument("grid generator is one-dimensional");
  Eigen::MatrixXd on_grid = f.values(grid_.nodes);
  Eigen::MatrixXd out(X.rows(), on_grid.cols());
  for (Eigen::Index k = 0; k < on_grid.cols(); ++k)
    out.col(k) = interpolate(grid_.nodes, grid_.apply(on_grid.col(k)), X.col(0));
  return out;
}

Eigen::MatrixXd GridGenerator::apply_samples(const Eigen::MatrixXd& Phi,
                                             const Eigen::MatrixXd& X) const
{
  if (X.cols() != 1 || Phi.rows() != X.rows())
    throw std::invalid_argument("grid generator is one-dimensional");
  const Eigen::Index N = X.rows();
  constexpr Eigen::Index half = 10;
  if (N < 2 * half + 1)
    throw std::invalid_argument("grid generator needs at least 21 samples");
  std::vector<Eigen::Index> order(N);
  for (Eigen::Index i = 0; i < N; ++i)
    order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return X(a, 0) < X(b, 0); });

  // V' on the grid by central differences, one-sided at the ends.
  const Eigen::Index n = grid_.nodes.size();
  Eigen::VectorXd dV(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index lo = std::max<Eigen::Index>(i - 1, 0), hi = std::min<Eigen::Index>(i + 1, n - 1);
    dV(i) = (grid_.V(hi) - grid_.V(lo)) / (grid_.nodes(hi) - grid_.nodes(lo));
  }
  Eigen::VectorXd dV_at = interpolate(grid_.nodes, dV, X.col(0));

  // Local cubic least squares over the 2·half+1 nearest samples in sorted
  // order gives f' and f'' at each sample.
  Eigen::MatrixXd out(N, Phi.cols());
  for (Eigen::Index s = 0; s < N; ++s) {
    Eigen::Index first = std::clamp<Eigen::Index>(s - half, 0, N - 2 * half - 1);
    const Eigen::Index i = order[s];
    const double x0 = X(i, 0);
    Eigen::MatrixXd B(2 * half + 1, 4);
    Eigen::MatrixXd F(2 * half + 1, Phi.cols());
    double scale = 0.0;
    for (Eigen::Index m = 0; m <= 2 * half; ++m)
      scale = std::max(scale, std::abs(X(order[first + m], 0) - x0));
    if (!(scale > 0.0))
      throw NumericalError("grid generator: samples coincide");
    for (Eigen::Index m = 0; m <= 2 * half; ++m) {
      double t = (X(order[first + m], 0) - x0) / scale;
      B.row(m) << 1.0, t, t * t, t * t * t;
      F.row(m) = Phi.row(order[first + m]);
    }
    Eigen::MatrixXd c = B.colPivHouseholderQr().solve(F);
    for (Eigen::Index k = 0; k < Phi.cols(); ++k) {
      double d1 = c(1, k) / scale;
      double d2 = 2.0 * c(2, k) / (scale * scale);
      out(i, k) = d2 - dV_at(i) * d1;
    }
  }
  return out;
}

nlohmann::json BenchmarkDataset::metadata() const
{
  return { { "problem", problem },
           { "params", params },
           { "seed", seed },
           { "N", X.rows() },
           { "d", X.cols() },
           { "r", r() } };
}

std::vector<std::vector<int>> ou_multi_indices(const Eigen::VectorXd& alphas, int r)
{
  const int d = static_cast<int>(alphas.size());
  if (d == 0 || r < 1)
    throw std::invalid_argument("ou_multi_indices: need d >= 1 and r >= 1");
  // Any of the first r modes has Σ n_j α_j ≤ r·min α.
  const double bound = r * alphas.minCoeff() * (1.0 + 1e-12);
  std::vector<std::pair<double, std::vector<int>>> all;
  std::vector<int> cur(d, 0);
  std::function<void(int, double)> rec = [&](int j, double acc) {
    if (j == d) {
      if (acc > 0.0)
        all.emplace_back(acc, cur);
      return;
    }
    for (int n = 0; acc + n * alphas(j) <= bound; ++n) {
      cur[j] = n;
      rec(j + 1, acc + n * alphas(j));
    }
    cur[j] = 0;
  };
  rec(0, 0.0);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first)
      return a.first < b.first;
    return a.second < b.second;
  });
  if (static_cast<int>(all.size()) < r)
    throw std::logic_error("ou_multi_indices: enumeration bound too small");
  std::vector<std::vector<int>> out;
  for (int k = 0; k < r; ++k)
    out.push_back(all[k].second);
  return out;
}

double hermite_he(int n, double x)
{
  if (n < 0)
    return 0.0;
  double prev = 1.0, cur = x;
  if (n == 0)
    return prev;
  for (int k = 1; k < n; ++k) {
    double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

OuReferenceExpansion::OuReferenceExpansion(Eigen::VectorXd alphas,
                                           std::vector<std::vector<int>> indices)
  : alphas_(std::move(alphas))
  , indices_(std::move(indices))
{
  for (const auto& idx : indices_) {
    if (static_cast<Eigen::Index>(idx.size()) != alphas_.size())
      throw std::invalid_argument("OU multi-index length must equal dimension");
  }
}

Eigen::MatrixXd OuReferenceExpansion::values(const Eigen::MatrixXd& pts) const
{
  Eigen::MatrixXd out(pts.rows(), size());
  for (Eigen::Index k = 0; k < size(); ++k) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      double v = 1.0;
      for (Eigen::Index j = 0; j < dimension(); ++j)
        v *= hermite_he(indices_[k][j], std::sqrt(alphas_(j)) * pts(i, j));
      out(i, k) = v;
    }
  }
  return out;
}

Eigen::MatrixXd OuReferenceExpansion::gradients(const Eigen::MatrixXd& pts) const
{
  const Eigen::Index d = dimension();
  Eigen::MatrixXd out(pts.rows() * d, size());
  for (Eigen::Index k = 0; k < size(); ++k) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        // He_n' = n He_{n-1}
        double v = 1.0;
        for (Eigen::Index q = 0; q < d; ++q) {
          double s = std::sqrt(alphas_(q));
          int n = indices_[k][q];
          v *= q == j ? s * n * hermite_he(n - 1, s * pts(i, q)) : hermite_he(n, s * pts(i, q));
        }
        out(i * d + j, k) = v;
      }
    }
  }
  return out;
}

Eigen::MatrixXd OuReferenceExpansion::laplacians(const Eigen::MatrixXd& pts) const
{
  const Eigen::Index d = dimension();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(pts.rows(), size());
  for (Eigen::Index k = 0; k < size(); ++k) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        double v = 1.0;
        for (Eigen::Index q = 0; q < d; ++q) {
          double s = std::sqrt(alphas_(q));
          int n = indices_[k][q];
          v *= q == j ? alphas_(q) * n * (n - 1) * hermite_he(n - 2, s * pts(i, q))
                      : hermite_he(n, s * pts(i, q));
        }
        out(i, k) += v;
      }
    }
  }
  return out;
}

BenchmarkDataset gen_ou(const Eigen::VectorXd& alphas, int N, std::uint64_t seed, int r)
{
  if (N < 2)
    throw std::invalid_argument("dataset needs N >= 2");
  auto gen = std::make_shared<OuGenerator>(alphas);
  const Eigen::Index d = alphas.size();
  std::mt19937_64 rng(seed_stream(seed, "ou-samples"));
  std::normal_distribution<double> normal(0.0, 1.0);
  BenchmarkDataset data;
  data.problem = "ou";
  data.params = { { "alphas", std::vector<double>(alphas.data(), alphas.data() + d) },
                  { "r", r } };
  data.seed = seed;
  data.X.resize(N, d);
  for (int i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < d; ++j)
      data.X(i, j) = normal(rng) / std::sqrt(alphas(j));
  }
  auto indices = ou_multi_indices(alphas, r);
  OuReferenceExpansion ref(alphas, indices);
  data.phi_star = gauge_fixed_reference(ref.values(data.X), data.problem);
  data.reference_rates.resize(r);
  for (int k = 0; k < r; ++k) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j)
      s += indices[k][j] * alphas(j);
    data.reference_rates(k) = s;
  }
  data.generator = gen;
  return data;
}

Eigen::VectorXd sample_potential(const LangevinGrid& grid, int n, std::uint64_t seed)
{
  const Eigen::Index m = grid.nodes.size();
  Eigen::VectorXd dens = (-(grid.V.array() - grid.V.minCoeff())).exp();
  Eigen::VectorXd cdf(m);
  cdf(0) = 0.0;
  for (Eigen::Index i = 1; i < m; ++i)
    cdf(i) = cdf(i - 1) + 0.5 * (dens(i) + dens(i - 1)) * grid.h;
  cdf /= cdf(m - 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i)
    u(i) = unif(rng);
  // Inverse CDF by interpolating nodes against the (monotone) CDF.
  return interpolate(cdf, grid.nodes, u);
}

BenchmarkDataset gen_doublewell(int N, std::uint64_t seed, bool asymmetric, int r)
{
  if (N < 2)
    throw std::invalid_argument("dataset needs N >= 2");
  const LangevinGrid& grid = double_well_grid(asymmetric);
  BenchmarkDataset data;
  data.problem = asymmetric ? "adw1d" : "dw1d";
  data.params = { { "tilt", asymmetric ? kAsymmetricTilt : 0.0 }, { "r", r } };
  data.seed = seed;
  data.X = sample_potential(grid, N, seed_stream(seed, "dw-samples"));
  GridEigenpairs eig = grid_eigenpairs(grid, r + 1);
  Eigen::MatrixXd raw(N, r);
  for (int k = 0; k < r; ++k)
    raw.col(k) = interpolate(grid.nodes, eig.functions.col(k + 1), data.X.col(0));
  data.phi_star = gauge_fixed_reference(raw, data.problem);
  data.reference_rates = eig.rates.tail(r);
  data.generator = std::make_shared<GridGenerator>(grid);
  return data;
}

BenchmarkDataset gen_circle(int N, double noise_sigma, std::uint64_t seed)
{
  if (N < 2)
    throw std::invalid_argument("dataset needs N >= 2");
  if (!(noise_sigma >= 0.0))
    throw std::invalid_argument("circle noise must be non-negative");
  std::mt19937_64 rng(seed_stream(seed, "circle-samples"));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> normal(0.0, 1.0);
  BenchmarkDataset data;
  data.problem = "circle";
  data.params = { { "noise", noise_sigma } };
  data.seed = seed;
  data.X.resize(N, 2);
  Eigen::MatrixXd raw(N, 4);
  for (int i = 0; i < N; ++i) {
    double t = angle(rng);
    data.X(i, 0) = std::cos(t) + noise_sigma * normal(rng);
    data.X(i, 1) = std::sin(t) + noise_sigma * normal(rng);
    raw.row(i) << std::cos(t), std::sin(t), std::cos(2 * t), std::sin(2 * t);
  }
  data.phi_star = gauge_fixed_reference(raw, data.problem);
  return data;
}

BenchmarkDataset gen_mdlike(int d_slow, int d_fast, int N, std::uint64_t seed)
{
  if (d_slow < 1 || d_fast < 0)
    throw std::invalid_argument("MD-like data needs d_slow >= 1 and d_fast >= 0");
  if (N < 2)
    throw std::invalid_argument("dataset needs N >= 2");
  const LangevinGrid& grid = double_well_grid(false);
  BenchmarkDataset data;
  data.problem = "mdlike";
  data.params = { { "d_slow", d_slow }, { "d_fast", d_fast } };
  data.seed = seed;
  data.X.resize(N, d_slow + d_fast);
  Eigen::MatrixXd raw(N, d_slow);
  for (int j = 0; j < d_slow; ++j) {
    data.X.col(j) = sample_potential(grid, N, seed_stream(seed, "md-slow", { std::uint64_t(j) }));
    raw.col(j) = (3.0 * data.X.col(j).array()).tanh().matrix();
  }
  std::mt19937_64 rng(seed_stream(seed, "md-fast"));
  std::normal_distribution<double> normal(0.0, std::sqrt(kFastVariance));
  for (int j = 0; j < d_fast; ++j) {
    for (int i = 0; i < N; ++i)
      data.X(i, d_slow + j) = normal(rng);
  }
  data.phi_star = gauge_fixed_reference(raw, data.problem);
  return data;
}

std::vector<std::string> problem_names()
{
  return { "ou1d", "ou2d", "ou3d", "ou", "dw1d", "adw1d", "circle", "mdlike" };
}

BenchmarkDataset generate(const std::string& problem,
                          const nlohmann::json& params,
                          int N,
                          std::uint64_t seed)
{
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  int r = int_param_or(p, "r", 4);
  BenchmarkDataset data;
  if (problem == "ou1d") {
    data = gen_ou(Eigen::VectorXd::Constant(1, param_or(p, "alpha", 1.0)), N, seed, r);
  } else if (problem == "ou2d") {
    Eigen::VectorXd a(2);
    a << param_or(p, "alpha_x", 1.0), param_or(p, "alpha_y", 4.0);
    data = gen_ou(a, N, seed, r);
  } else if (problem == "ou3d") {
    Eigen::VectorXd a(3);
    a << 1.0, 4.0, 16.0;
    if (p.contains("alphas"))
      a = Eigen::Map<const Eigen::VectorXd>(p.at("alphas").get<std::vector<double>>().data(), 3);
    data = gen_ou(a, N, seed, r);
  } else if (problem == "ou") {
    Eigen::VectorXd a;
    if (p.contains("alphas")) {
      auto v = p.at("alphas").get<std::vector<double>>();
      a = Eigen::Map<Eigen::VectorXd>(v.data(), v.size());
    } else {
      int d = int_param_or(p, "d", 2);
      a.resize(d);
      for (int j = 0; j < d; ++j)
        a(j) = std::pow(2.0, j);
    }
    data = gen_ou(a, N, seed, r);
  } else if (problem == "dw1d" || problem == "adw1d") {
    data = gen_doublewell(N, seed, problem == "adw1d", r);
  } else if (problem == "circle") {
    data = gen_circle(N, param_or(p, "noise", 0.05), seed);
  } else if (problem == "mdlike") {
    data = gen_mdlike(int_param_or(p, "d_slow", 2), int_param_or(p, "d_fast", 4), N, seed);
  } else {
    throw std::invalid_argument("unknown problem '" + problem + "'");
  }
  data.problem = problem;
  data.params = p;
  return data;
}

BenchmarkDataset generate_from_metadata(const nlohmann::json& meta)
{
  return generate(meta.at("problem").get<std::string>(),
                  meta.value("params", nlohmann::json::object()),
                  meta.at("N").get<int>(), meta.at("seed").get<std::uint64_t>());
}

Eigen::MatrixXd apply_generator(const BenchmarkDataset& data, const Expansion& f)
{
  if (!data.generator)
    throw std::invalid_argument("problem '" + data.problem + "' has no generator discretization");
  return data.generator->apply(f, data.X);
}

} // namespace kdm
