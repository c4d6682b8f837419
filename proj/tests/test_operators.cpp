#include "kdm/eigsolve.hpp"
#include "kdm/operators.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace kdm;

TEST_SUITE("operators")
{
  TEST_CASE("rff pair from explicit features")
  {
    RffBasis basis = sample_basis(KernelSpec(KernelFamily::Matern32, 0.8), 60, 2, 3);
    Eigen::MatrixXd X = test::gaussian_matrix(120, 2, 4);
    FeatureMatrices fm = features_and_derivatives(basis, X);
    OperatorPair explicit_pair = operator_pair_rff(fm.S, fm.D, 0.02);
    OperatorPair gram_pair = operator_pair_from_grams(rff_grams(basis, X), 0.02);
    CHECK((explicit_pair.Sigma - gram_pair.Sigma).norm() <= 1e-12 * explicit_pair.Sigma.norm());
    CHECK((explicit_pair.Llam - gram_pair.Llam).norm() <= 1e-12 * explicit_pair.Llam.norm());
    Eigen::MatrixXd ref_S = fm.S.transpose() * fm.S / 120.0;
    Eigen::MatrixXd ref_L = fm.D.transpose() * fm.D / 120.0 + 0.02 * Eigen::MatrixXd::Identity(60, 60);
    CHECK((explicit_pair.Sigma - ref_S).norm() < 1e-13);
    CHECK((explicit_pair.Llam - ref_L).norm() < 1e-13);
    CHECK(explicit_pair.basis == BasisKind::Rff);
  }

  TEST_CASE("zero-frequency feature")
  {
    RffBasis basis = sample_basis(KernelSpec(KernelFamily::Gaussian, 1.0), 10, 2, 5);
    basis.frequencies.row(3).setZero();
    basis.phases(3) = 0.0;
    Eigen::MatrixXd X = test::gaussian_matrix(40, 2, 6);
    OperatorPair pair = operator_pair_from_grams(rff_grams(basis, X), 0.05);
    CHECK(pair.Sigma(3, 3) == doctest::Approx(2.0 / 10).epsilon(1e-13));
    CHECK(pair.Llam(3, 3) == doctest::Approx(0.05).epsilon(1e-13));
  }

  TEST_CASE("gram complement")
  {
    RffBasis basis = sample_basis(KernelSpec(KernelFamily::Gaussian, 1.0), 30, 2, 5);
    Eigen::MatrixXd X = test::gaussian_matrix(90, 2, 6);
    RffGrams all = rff_grams(basis, X);
    RffGrams head = rff_grams(basis, X.topRows(30));
    RffGrams tail = rff_grams(basis, X.bottomRows(60));
    RffGrams rest = complement(all, head);
    CHECK(rest.n == 60);
    CHECK((rest.SS - tail.SS).norm() < 1e-11);
    CHECK((rest.DD - tail.DD).norm() < 1e-11);
  }

  TEST_CASE("nystrom matrices")
  {
    Eigen::MatrixXd X = test::gaussian_matrix(50, 2, 10);
    Eigen::MatrixXd Z = test::gaussian_matrix(8, 2, 11);
    KernelSpec g(KernelFamily::Gaussian, 0.9);
    NystromParts parts = build_nystrom(g, X, Z);
    CHECK((parts.C - cross_gram(g, X, Z)).norm() < 1e-14);
    CHECK((parts.W - cross_gram(g, Z, Z)).norm() < 1e-14);
    for (int i = 0; i < 50; ++i)
      for (int m = 0; m < 8; ++m) {
        Eigen::VectorXd gr = grad_kernel_gaussian(g, X.row(i).transpose(), Z.row(m).transpose());
        CHECK((parts.J.block(2 * i, m, 2, 1) - gr).norm() < 1e-14);
      }
    CHECK_THROWS(build_nystrom(KernelSpec(KernelFamily::Matern32, 1.0), X, Z, true));
    CHECK_NOTHROW(build_nystrom(KernelSpec(KernelFamily::Matern32, 1.0), X, Z, false));
  }

  TEST_CASE("mixture aggregation and pair")
  {
    Eigen::MatrixXd X = test::gaussian_matrix(60, 2, 12);
    Eigen::MatrixXd Z = test::gaussian_matrix(10, 2, 13);
    std::vector<KernelSpec> dict{ { KernelFamily::Gaussian, 0.5 }, { KernelFamily::Gaussian, 1.5 } };
    auto parts = build_nystrom(dict, X, Z);
    Eigen::Vector2d beta(0.3, 0.7);
    NystromMatrices m = aggregate_mixture(parts, beta, Z, 1e-8);
    CHECK((m.C - (0.3 * parts[0].C + 0.7 * parts[1].C)).norm() < 1e-14);
    CHECK((m.J - (0.3 * parts[0].J + 0.7 * parts[1].J)).norm() < 1e-14);
    Eigen::MatrixXd Wref = 0.3 * parts[0].W + 0.7 * parts[1].W;
    Wref = 0.5 * (Wref + Wref.transpose()) + 1e-8 * Eigen::MatrixXd::Identity(10, 10);
    CHECK((m.W - Wref).norm() < 1e-14);
    OperatorPair pair = operator_pair_nystrom(m, 0.01);
    CHECK((pair.Sigma - m.C.transpose() * m.C / 60.0).norm() < 1e-13);
    CHECK((pair.Llam - (m.J.transpose() * m.J / 60.0 + 0.01 * m.W)).norm() < 1e-13);
    CHECK(pair.basis == BasisKind::Nystrom);
    CHECK_THROWS(aggregate_mixture(parts, Eigen::Vector3d(0.2, 0.3, 0.5), Z));
  }

  TEST_CASE("nested landmarks never lower the top eigenvalue")
  {
    Eigen::MatrixXd X = test::gaussian_matrix(200, 2, 14);
    Eigen::MatrixXd Zbig = test::gaussian_matrix(24, 2, 15);
    KernelSpec g(KernelFamily::Gaussian, 1.0);
    double prev = 0.0;
    for (int p : { 6, 12, 18, 24 }) {
      Eigen::MatrixXd Z = Zbig.topRows(p);
      NystromMatrices m = aggregate_mixture({ build_nystrom(g, X, Z) }, Eigen::VectorXd::Ones(1), Z);
      GevpResult res = solve_gevp(operator_pair_nystrom(m, 0.01), 1);
      CHECK(res.mu(0) >= prev * (1 - 1e-6));
      prev = res.mu(0);
    }
  }

  TEST_CASE("kmeans landmarks")
  {
    Eigen::MatrixXd X = test::gaussian_matrix(300, 3, 16);
    Eigen::MatrixXd Z1 = kmeans_landmarks(X, 20, 7);
    Eigen::MatrixXd Z2 = kmeans_landmarks(X, 20, 7);
    CHECK(Z1.rows() == 20);
    CHECK(Z1.cols() == 3);
    CHECK(Z1 == Z2);
    for (int j = 0; j < 3; ++j) {
      CHECK(Z1.col(j).minCoeff() >= X.col(j).minCoeff());
      CHECK(Z1.col(j).maxCoeff() <= X.col(j).maxCoeff());
    }
    CHECK_THROWS(kmeans_landmarks(X, 301, 1));
  }
}
