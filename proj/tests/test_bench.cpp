#include "kdm/bench.hpp"
#include "kdm/expansion.hpp"
#include "kdm/metrics.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

using namespace kdm;

namespace {

// Frozen from the flux-form grid (4000 nodes on [−2.5, 2.5]); cross-checked
// below against an independent dense discretization.
constexpr double kDoubleWellMode1 = 0.7921718634115249;

void check_gauge(const Eigen::MatrixXd& Phi)
{
  const double N = static_cast<double>(Phi.rows());
  Eigen::MatrixXd gram = Phi.transpose() * Phi / N;
  CHECK((gram - Eigen::MatrixXd::Identity(Phi.cols(), Phi.cols())).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(Phi.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);
}

// Smallest nonzero rate of −V′f′ + f″ from the plain centered stencil with
// one-sided reflecting ends, solved densely.
double dense_mode1(const std::function<double(double)>& dV, int n)
{
  const double lo = -2.5, hi = 2.5, h = (hi - lo) / (n - 1);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double x = lo + i * h;
    double b = -dV(x);
    if (i == 0) {
      G(0, 0) = -2.0 / (h * h);
      G(0, 1) = 2.0 / (h * h);
    } else if (i == n - 1) {
      G(i, i) = -2.0 / (h * h);
      G(i, i - 1) = 2.0 / (h * h);
    } else {
      G(i, i - 1) = 1.0 / (h * h) - b / (2 * h);
      G(i, i) = -2.0 / (h * h);
      G(i, i + 1) = 1.0 / (h * h) + b / (2 * h);
    }
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(G, false);
  std::vector<double> rates;
  for (Eigen::Index i = 0; i < n; ++i)
    rates.push_back(-es.eigenvalues()(i).real());
  std::sort(rates.begin(), rates.end());
  return rates[1];
}

} // namespace

TEST_SUITE("bench")
{
  TEST_CASE("hermite polynomials")
  {
    for (double x : { -1.7, 0.0, 0.4, 2.3 }) {
      CHECK(hermite_he(0, x) == 1.0);
      CHECK(hermite_he(1, x) == x);
      CHECK(hermite_he(2, x) == doctest::Approx(x * x - 1));
      CHECK(hermite_he(3, x) == doctest::Approx(x * x * x - 3 * x));
      CHECK(hermite_he(4, x) == doctest::Approx(std::pow(x, 4) - 6 * x * x + 3));
    }
  }

  TEST_CASE("OU multi-index ordering")
  {
    auto idx = ou_multi_indices(Eigen::Vector2d(1, 4), 4);
    REQUIRE(idx.size() == 4);
    CHECK(idx[0] == std::vector<int>{ 1, 0 });
    CHECK(idx[1] == std::vector<int>{ 2, 0 });
    CHECK(idx[2] == std::vector<int>{ 3, 0 });
    CHECK(idx[3] == std::vector<int>{ 0, 1 });
    auto iso = ou_multi_indices(Eigen::Vector2d(1, 1), 3);
    CHECK(iso[0] == std::vector<int>{ 0, 1 });
    CHECK(iso[1] == std::vector<int>{ 1, 0 });
    CHECK(iso[2] == std::vector<int>{ 0, 2 });
  }

  TEST_CASE("OU references are generator eigenfunctions")
  {
    for (auto alphas : { Eigen::VectorXd(Eigen::Vector2d(1, 4)), Eigen::VectorXd(Eigen::Vector3d(1, 4, 16)) }) {
      auto idx = ou_multi_indices(alphas, 4);
      OuReferenceExpansion ref(alphas, idx);
      OuGenerator gen(alphas);
      Eigen::MatrixXd X = test::gaussian_matrix(200, alphas.size(), 3);
      Eigen::MatrixXd F = ref.values(X);
      Eigen::MatrixXd GF = gen.apply(ref, X);
      for (int k = 0; k < 4; ++k) {
        double rate = 0.0;
        for (Eigen::Index j = 0; j < alphas.size(); ++j)
          rate += idx[k][j] * alphas(j);
        CHECK((GF.col(k) + rate * F.col(k)).norm() / F.col(k).norm() < 1e-6);
      }
    }
  }

  TEST_CASE("OU reference derivatives match finite differences")
  {
    Eigen::Vector2d alphas(1, 4);
    OuReferenceExpansion ref(alphas, ou_multi_indices(alphas, 4));
    Eigen::MatrixXd X = test::gaussian_matrix(20, 2, 4);
    Eigen::MatrixXd G = ref.gradients(X), Lap = ref.laplacians(X);
    const double h = 1e-5, h2 = 1e-3;
    for (int i = 0; i < 20; ++i) {
      Eigen::MatrixXd x0 = X.row(i);
      Eigen::RowVectorXd lap = Eigen::RowVectorXd::Zero(4);
      for (int j = 0; j < 2; ++j) {
        Eigen::MatrixXd xp = x0, xm = x0, xp2 = x0, xm2 = x0;
        xp(0, j) += h;
        xm(0, j) -= h;
        xp2(0, j) += h2;
        xm2(0, j) -= h2;
        Eigen::RowVectorXd fd = (ref.values(xp) - ref.values(xm)) / (2 * h);
        CHECK((G.row(2 * i + j) - fd).norm() <= 1e-6 * (1 + fd.norm()));
        lap += (ref.values(xp2) - 2 * ref.values(x0) + ref.values(xm2)) / (h2 * h2);
      }
      CHECK((Lap.row(i) - lap).norm() <= 1e-4 * (1 + lap.norm()));
    }
  }

  TEST_CASE("OU datasets")
  {
    BenchmarkDataset d = generate("ou2d", { { "alpha_y", 4.0 } }, 20000, 42);
    CHECK(d.X.rows() == 20000);
    CHECK(d.X.cols() == 2);
    CHECK(d.r() == 4);
    check_gauge(d.phi_star);
    Eigen::RowVectorXd var = d.X.array().square().colwise().mean();
    CHECK(var(0) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(var(1) == doctest::Approx(0.25).epsilon(0.05));
    CHECK(d.reference_rates.size() == 4);
    CHECK(d.reference_rates(3) == doctest::Approx(4.0));

    BenchmarkDataset small = generate("ou2d", { { "alpha_y", 4.0 } }, 300, 42);
    OuReferenceExpansion ref(Eigen::Vector2d(1, 4), ou_multi_indices(Eigen::Vector2d(1, 4), 4));
    CHECK(subr2(small.phi_star, ref.values(small.X)).subr2 == doctest::Approx(1.0).epsilon(1e-10));

    BenchmarkDataset again = generate("ou2d", { { "alpha_y", 4.0 } }, 300, 42);
    CHECK(again.X == small.X);
    CHECK(generate("ou2d", { { "alpha_y", 4.0 } }, 300, 43).X != small.X);

    BenchmarkDataset gen_d = generate("ou", { { "d", 3 } }, 100, 1);
    CHECK(gen_d.params["d"] == 3);
    CHECK(gen_d.X.cols() == 3);
    CHECK_THROWS(generate("nope", {}, 10, 1));

    BenchmarkDataset re = generate_from_metadata(small.metadata());
    CHECK(re.X == small.X);
  }

  TEST_CASE("Langevin grid reproduces OU rates")
  {
    auto grid = make_langevin_grid([](double x) { return 0.5 * x * x; }, -8.0, 8.0, 3201);
    auto e = grid_eigenpairs(grid, 5);
    for (int j = 0; j < 5; ++j)
      CHECK(std::abs(e.rates(j) - j) < 1e-6);
    for (int j = 0; j < 5; ++j) {
      Eigen::VectorXd f = e.functions.col(j);
      CHECK((grid.apply(f) + e.rates(j) * f).norm() <= 1e-8 * (1 + e.rates(j)) * f.norm());
    }
  }

  TEST_CASE("double-well mode-1 regression constant")
  {
    auto grid = make_langevin_grid([](double x) { return double_well_potential(x); }, -2.5, 2.5, 4000);
    auto e = grid_eigenpairs(grid, 3);
    CHECK(std::abs(e.rates(0)) < 1e-8);
    CHECK(e.rates(1) == doctest::Approx(kDoubleWellMode1).epsilon(1e-10));
    double oracle = dense_mode1([](double x) { return x * x * x - x; }, 1200);
    CHECK(std::abs(oracle - e.rates(1)) < 1e-3);
  }

  TEST_CASE("double-well samples follow exp(-V)")
  {
    auto grid = make_langevin_grid([](double x) { return double_well_potential(x, 0.25); }, -2.5, 2.5, 4000);
    Eigen::VectorXd s = sample_potential(grid, 40000, 5);
    Eigen::ArrayXd w = (-grid.V.array()).exp();
    double Z = w.sum();
    double m1 = (w * grid.nodes.array()).sum() / Z;
    double m2 = (w * grid.nodes.array().square()).sum() / Z;
    double se = std::sqrt((m2 - m1 * m1) / 40000.0);
    CHECK(std::abs(s.mean() - m1) < 4 * se);
    CHECK(s.array().square().mean() == doctest::Approx(m2).epsilon(0.02));
    CHECK(s.minCoeff() >= -2.5);
    CHECK(s.maxCoeff() <= 2.5);
  }

  TEST_CASE("grid generator on sample values")
  {
    BenchmarkDataset d = generate("dw1d", {}, 800, 42);
    check_gauge(d.phi_star);
    REQUIRE(d.generator);
    const auto* gg = dynamic_cast<const GridGenerator*>(d.generator.get());
    REQUIRE(gg != nullptr);
    auto e = grid_eigenpairs(gg->grid(), 3);
    Eigen::VectorXd x = d.X.col(0);
    Eigen::MatrixXd f(800, 1);
    f.col(0) = interpolate(gg->grid().nodes, e.functions.col(1), x);
    Eigen::MatrixXd gf = gg->apply_samples(f, d.X);
    // Local cubic fits lose accuracy in the sparsely sampled tails.
    CHECK((gf + e.rates(1) * f).norm() / f.norm() < 5e-3);
  }

  TEST_CASE("circle and md-like datasets")
  {
    BenchmarkDataset c = generate("circle", { { "noise", 0.05 } }, 500, 42);
    CHECK(c.X.rows() == 500);
    CHECK(c.X.cols() == 2);
    check_gauge(c.phi_star);
    Eigen::ArrayXd radius = c.X.rowwise().norm().array();
    CHECK(radius.mean() == doctest::Approx(1.0).epsilon(0.02));

    BenchmarkDataset m = generate("mdlike", { { "d_slow", 2 }, { "d_fast", 4 } }, 300, 42);
    CHECK(m.X.cols() == 6);
    CHECK(m.r() == 2);
    check_gauge(m.phi_star);
    Eigen::RowVectorXd fast_var = m.X.rightCols(4).array().square().colwise().mean();
    for (int j = 0; j < 4; ++j)
      CHECK(fast_var(j) == doctest::Approx(0.04).epsilon(0.25));
    Eigen::MatrixXd raw = (3.0 * m.X.leftCols(2).array()).tanh().matrix();
    CHECK(subr2(m.phi_star, raw).subr2 == doctest::Approx(1.0).epsilon(1e-10));
  }
}
