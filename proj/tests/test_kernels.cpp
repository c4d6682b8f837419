#include "kdm/kernels.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace kdm;

namespace {

Eigen::Vector2d v2(double a, double b)
{
  return Eigen::Vector2d(a, b);
}

double fd_kernel_partial(const KernelSpec& s, Eigen::VectorXd x, const Eigen::VectorXd& z, int j, double h)
{
  Eigen::VectorXd xp = x, xm = x;
  xp(j) += h;
  xm(j) -= h;
  return (eval_kernel(s, xp, z) - eval_kernel(s, xm, z)) / (2 * h);
}

double fd_kernel_laplacian(const KernelSpec& s, const Eigen::VectorXd& x, const Eigen::VectorXd& z, double h)
{
  double lap = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    lap += (eval_kernel(s, xp, z) - 2 * eval_kernel(s, x, z) + eval_kernel(s, xm, z)) / (h * h);
  }
  return lap;
}

} // namespace

TEST_SUITE("kernels")
{
  TEST_CASE("closed-form values")
  {
    KernelSpec g(KernelFamily::Gaussian, 1.0);
    CHECK(eval_kernel(g, v2(0.3, -1), v2(0.3, -1)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eval_kernel(g, v2(1, 0), v2(0, 0)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    KernelSpec m32(KernelFamily::Matern32, 1.0);
    // (1+√3)e^{−√3} to 20 digits
    CHECK(eval_kernel(m32, v2(1, 0), v2(0, 0)) == doctest::Approx(0.48335772459650765060).epsilon(1e-14));
    KernelSpec lap(KernelFamily::Laplacian, 2.0);
    CHECK(eval_kernel(lap, v2(1, 1), v2(0, 0)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    KernelSpec m52(KernelFamily::Matern52, 1.0);
    double t = std::sqrt(5.0);
    CHECK(eval_kernel(m52, v2(1, 0), v2(0, 0)) == doctest::Approx((1 + t + 5.0 / 3.0) * std::exp(-t)).epsilon(1e-14));
    KernelSpec rq2(KernelFamily::RatQuad2, 1.0), rq5(KernelFamily::RatQuad5, 1.0);
    CHECK(eval_kernel(rq2, v2(1, 0), v2(0, 0)) == doctest::Approx(std::pow(1.25, -2)).epsilon(1e-14));
    CHECK(eval_kernel(rq5, v2(1, 0), v2(0, 0)) == doctest::Approx(std::pow(1.1, -5)).epsilon(1e-14));
  }

  TEST_CASE("invalid specs are rejected")
  {
    CHECK_THROWS(KernelSpec(KernelFamily::Gaussian, 0.0));
    CHECK_THROWS(KernelSpec(KernelFamily::Gaussian, -1.0));
    CHECK_THROWS(KernelSpec(KernelFamily::Gaussian, std::nan("")));
    CHECK_THROWS(KernelSpec(KernelFamily::Laplacian, Eigen::Vector2d(1, 2)));
    CHECK_NOTHROW(KernelSpec(KernelFamily::Matern32, Eigen::Vector2d(1, 2)));
    KernelSpec a(KernelFamily::Gaussian, Eigen::Vector2d(1, 2));
    Eigen::Vector3d x3 = Eigen::Vector3d::Zero();
    CHECK_THROWS(eval_kernel(a, x3, x3));
    KernelSpec g(KernelFamily::Gaussian, 1.0);
    CHECK_THROWS(eval_kernel(g, x3, Eigen::Vector2d::Zero()));
  }

  TEST_CASE("json round trip")
  {
    KernelSpec a(KernelFamily::RatQuad5, 0.7);
    auto j = a.to_json();
    CHECK(j["family"] == "ratquad5");
    CHECK(j["sigma"].get<double>() == 0.7);
    CHECK(KernelSpec::from_json(j) == a);
    KernelSpec b(KernelFamily::Matern32, Eigen::Vector2d(1.5, 3.0));
    CHECK(b.to_json()["sigma"].is_array());
    CHECK(KernelSpec::from_json(b.to_json()) == b);
    CHECK(b.sigma() == doctest::Approx(std::sqrt(4.5)));
    for (auto f : kAllFamilies)
      CHECK(family_from_name(family_name(f)) == f);
    CHECK_THROWS(family_from_name("cosine"));
  }

  TEST_CASE("symmetry on random pairs")
  {
    Eigen::MatrixXd P = test::gaussian_matrix(2000, 3, 1);
    for (auto f : kAllFamilies) {
      KernelSpec s(f, 0.8);
      for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd x = P.row(2 * i).transpose(), z = P.row(2 * i + 1).transpose();
        double kxz = eval_kernel(s, x, z), kzx = eval_kernel(s, z, x);
        CHECK(kxz == kzx);
        CHECK(kxz > 0.0);
        CHECK(kxz <= 1.0);
      }
    }
  }

  TEST_CASE("gram matrices are positive semidefinite")
  {
    for (auto f : kAllFamilies) {
      for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd X = test::gaussian_matrix(12, 2, 100 + trial);
        KernelSpec s(f, 0.3 + 0.2 * trial);
        Eigen::MatrixXd K = cross_gram(s, X, X);
        CHECK((K - K.transpose()).norm() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
      }
    }
  }

  TEST_CASE("mixture gram is the weighted sum and PSD")
  {
    std::vector<KernelSpec> dict{ { KernelFamily::Gaussian, 0.5 }, { KernelFamily::Gaussian, 1.0 },
                                  { KernelFamily::Matern32, 2.0 } };
    Eigen::MatrixXd X = test::gaussian_matrix(15, 2, 7);
    for (int t = 0; t < 10; ++t) {
      Eigen::VectorXd beta = test::random_simplex(3, 40 + t);
      Eigen::MatrixXd K = mixture_gram(dict, beta, X, X);
      Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(15, 15);
      for (int l = 0; l < 3; ++l)
        ref += beta(l) * cross_gram(dict[l], X, X);
      CHECK((K - ref).norm() < 1e-13);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
  }

  TEST_CASE("gaussian gradient")
  {
    KernelSpec g(KernelFamily::Gaussian, 1.0);
    CHECK(grad_kernel_gaussian(g, v2(0.4, 0.1), v2(0.4, 0.1)).norm() == 0.0);
    Eigen::VectorXd gr = grad_kernel_gaussian(g, v2(1, 0), v2(0, 0));
    CHECK(gr(0) == doctest::Approx(-std::exp(-0.5)).epsilon(1e-14));
    CHECK(gr(1) == 0.0);

    KernelSpec a(KernelFamily::Gaussian, Eigen::Vector2d(1, 2));
    Eigen::VectorXd x = v2(1.3, 0.2), z = v2(0.3, -0.8);
    Eigen::VectorXd an = grad_kernel_gaussian(a, x, z);
    for (int j = 0; j < 2; ++j) {
      double fd = fd_kernel_partial(a, x, z, j, 1e-5);
      CHECK(std::abs(an(j) - fd) <= 1e-6 * std::abs(an(j)));
    }
    CHECK_THROWS(grad_kernel_gaussian(KernelSpec(KernelFamily::Matern32, 1.0), x, z));
  }

  TEST_CASE("gaussian laplacian")
  {
    KernelSpec g(KernelFamily::Gaussian, 1.0);
    Eigen::VectorXd x1(1), z1(1);
    x1 << 0.5;
    z1 << 0.5;
    CHECK(laplacian_kernel_gaussian(g, x1, z1) == doctest::Approx(-1.0));
    CHECK(std::abs(laplacian_kernel_gaussian(g, v2(1, 1), v2(0, 0))) < 1e-15);

    KernelSpec a(KernelFamily::Gaussian, Eigen::Vector2d(1, 2));
    Eigen::VectorXd x = v2(1.0, 1.0), z = v2(0.0, 0.0);
    double an = laplacian_kernel_gaussian(a, x, z);
    double fd = fd_kernel_laplacian(a, x, z, 1e-4);
    CHECK(std::abs(an - fd) <= 1e-4 * std::abs(an));
    CHECK_THROWS(laplacian_kernel_gaussian(KernelSpec(KernelFamily::RatQuad2, 1.0), x, z));
  }

  TEST_CASE("mixture weights")
  {
    auto w = mixture_weights_from_u(Eigen::VectorXd::Zero(5), 0.0);
    for (int i = 0; i < 5; ++i)
      CHECK(w.beta(i) == doctest::Approx(0.2).epsilon(1e-15));
    auto big = mixture_weights_from_u(Eigen::Vector2d(1000, 0), 0.0);
    CHECK(big.beta(0) == doctest::Approx(1.0));
    CHECK(big.beta(1) == doctest::Approx(0.0));
    CHECK(std::isfinite(big.beta(1)));
    auto fl = mixture_weights_from_u(Eigen::Vector2d(0, 0), 0.1);
    CHECK(fl.beta(0) == doctest::Approx(0.5));
    CHECK_THROWS(mixture_weights_from_u(Eigen::Vector2d(0, 0), 1.0));

    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd u = test::gaussian_matrix(6, 1, 300 + t, 3.0);
      auto m = mixture_weights_from_u(u, 0.01);
      CHECK(std::abs(m.beta.sum() - 1.0) < 1e-12);
      CHECK(m.beta.minCoeff() >= 0.01 / 6 - 1e-15);
    }
  }

  TEST_CASE("mixture jacobian matches finite differences")
  {
    Eigen::VectorXd u = test::gaussian_matrix(4, 1, 9);
    auto w = mixture_weights_from_u(u, 0.05);
    Eigen::MatrixXd J = mixture_jacobian(w);
    const double h = 1e-6;
    for (int l = 0; l < 4; ++l) {
      Eigen::VectorXd up = u, um = u;
      up(l) += h;
      um(l) -= h;
      Eigen::VectorXd col =
        (mixture_weights_from_u(up, 0.05).beta - mixture_weights_from_u(um, 0.05).beta) / (2 * h);
      CHECK((J.col(l) - col).norm() < 1e-8);
    }
  }
}
