#include "kdm/rff.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kdm;

namespace {

RffBasis manual_basis(const Eigen::MatrixXd& W, const Eigen::VectorXd& b)
{
  RffBasis basis;
  basis.components = { KernelSpec(KernelFamily::Gaussian, 1.0) };
  basis.component_sizes = { static_cast<int>(W.rows()) };
  basis.unit_frequencies = W;
  basis.frequencies = W;
  basis.phases = b;
  return basis;
}

struct McEstimate
{
  double mean;
  double stderr_;
};

// Bochner: E cos(w·r) = k(r) for the family's spectral measure.
McEstimate bochner(const RffBasis& basis, const Eigen::VectorXd& r)
{
  Eigen::ArrayXd c = (basis.frequencies * r).array().cos();
  double m = c.mean();
  double var = (c - m).square().sum() / static_cast<double>(c.size() - 1);
  return { m, std::sqrt(var / static_cast<double>(c.size())) };
}

} // namespace

TEST_SUITE("rff")
{
  TEST_CASE("bochner reconstruction for every family")
  {
    const int p = 100000;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> us(0.5, 2.0);
    for (auto f : kAllFamilies) {
      for (int t = 0; t < 5; ++t) {
        const int d = 1 + t % 3;
        const double sigma = us(rng);
        KernelSpec spec(f, sigma);
        RffBasis basis = sample_basis(spec, p, d, 1000 + t);
        Eigen::VectorXd r = test::gaussian_matrix(d, 1, 77 + t, 0.8 * sigma);
        McEstimate mc = bochner(basis, r);
        double exact = eval_kernel(spec, r, Eigen::VectorXd::Zero(d));
        INFO(family_name(f), " sigma=", sigma, " d=", d, " mc=", mc.mean, " exact=", exact);
        CHECK(std::abs(mc.mean - exact) <= 3.0 * mc.stderr_ + 1e-3);
        CHECK(bochner(basis, Eigen::VectorXd::Zero(d)).mean == 1.0);
      }
    }
  }

  TEST_CASE("bochner examples")
  {
    const int p = 100000;
    Eigen::VectorXd r1(1);
    r1 << 1.0;
    RffBasis g = sample_basis(KernelSpec(KernelFamily::Gaussian, 2.0), p, 1, 5);
    CHECK(std::abs(bochner(g, r1).mean - std::exp(-1.0 / 8.0)) <= 0.01);
    RffBasis m = sample_basis(KernelSpec(KernelFamily::Matern32, 1.0), p, 2, 6);
    Eigen::VectorXd r2 = Eigen::Vector2d(0.6, 0.8);
    double exact = (1 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0));
    CHECK(std::abs(bochner(m, r2).mean - exact) <= 0.01);

    // Feature inner products carry the same estimate up to phase noise.
    Eigen::MatrixXd X(2, 2);
    X << 0.1, 0.2, 0.7, 1.0;
    Eigen::MatrixXd S = features(m, X);
    CHECK(std::abs(S.row(0).dot(S.row(1)) - exact) <= 0.01);
  }

  TEST_CASE("mixture basis approximates the average kernel")
  {
    std::vector<KernelSpec> specs{ { KernelFamily::Gaussian, 0.5 }, { KernelFamily::Gaussian, 2.0 },
                                   { KernelFamily::Laplacian, 1.0 } };
    RffBasis b = sample_mixture_basis(specs, 90001, 2, 3);
    CHECK(b.component_sizes.size() == 3);
    int total = 0;
    for (int s : b.component_sizes) {
      CHECK(std::abs(s - 30000) <= 1);
      total += s;
    }
    CHECK(total == 90001);
    Eigen::VectorXd r = Eigen::Vector2d(0.4, -0.3);
    double avg = 0.0;
    for (const auto& s : specs)
      avg += eval_kernel(s, r, Eigen::Vector2d::Zero()) / 3.0;
    McEstimate mc = bochner(b, r);
    CHECK(std::abs(mc.mean - avg) <= 3.0 * mc.stderr_ + 1e-3);
    CHECK_THROWS(b.spec());
  }

  TEST_CASE("features on hand-built bases")
  {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(1, 2);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(1);
    Eigen::MatrixXd X = test::gaussian_matrix(4, 2, 1);
    CHECK((features(manual_basis(W, b), X).array() - std::sqrt(2.0)).abs().maxCoeff() < 1e-15);
    CHECK(feature_derivatives(manual_basis(W, b), X).norm() == 0.0);

    W << M_PI, 0.0;
    Eigen::MatrixXd x(1, 2);
    x << 1.0, 0.0;
    CHECK(features(manual_basis(W, b), x)(0, 0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-14));

    Eigen::MatrixXd w1(1, 1);
    w1 << 1.0;
    Eigen::MatrixXd xs(1, 1);
    xs << M_PI / 2;
    CHECK(feature_derivatives(manual_basis(w1, b), xs)(0, 0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-14));

    CHECK_THROWS(features(manual_basis(W, b), test::gaussian_matrix(3, 3, 2)));
  }

  TEST_CASE("feature bounds and determinism")
  {
    RffBasis a = sample_basis(KernelSpec(KernelFamily::Matern52, 0.7), 200, 3, 11);
    RffBasis b = sample_basis(KernelSpec(KernelFamily::Matern52, 0.7), 200, 3, 11);
    RffBasis c = sample_basis(KernelSpec(KernelFamily::Matern52, 0.7), 200, 3, 12);
    CHECK(a.frequencies == b.frequencies);
    CHECK(a.phases == b.phases);
    CHECK((a.frequencies - c.frequencies).norm() > 0.0);
    CHECK(a.phases.minCoeff() >= 0.0);
    CHECK(a.phases.maxCoeff() < 2 * M_PI);
    Eigen::MatrixXd S = features(a, test::gaussian_matrix(50, 3, 4));
    CHECK(S.cwiseAbs().maxCoeff() <= std::sqrt(2.0 / 200) + 1e-15);
  }

  TEST_CASE("json regenerates the basis")
  {
    RffBasis a = sample_basis(KernelSpec(KernelFamily::RatQuad2, 1.3), 64, 2, 99);
    nlohmann::json j = a.to_json();
    for (const char* key : { "seed", "family", "sigma", "p_rff", "d" })
      CHECK(j.contains(key));
    CHECK(!j.contains("frequencies"));
    RffBasis b = RffBasis::from_json(j);
    CHECK(a.frequencies == b.frequencies);
    CHECK(a.phases == b.phases);
  }

  TEST_CASE("derivatives match finite differences")
  {
    for (auto f : kAllFamilies) {
      RffBasis basis = sample_basis(KernelSpec(f, 0.9), 40, 3, 21);
      Eigen::MatrixXd X = test::gaussian_matrix(100, 3, 22);
      Eigen::MatrixXd D = feature_derivatives(basis, X);
      FeatureMatrices both = features_and_derivatives(basis, X);
      CHECK((both.D - D).norm() == 0.0);
      CHECK((both.S - features(basis, X)).norm() == 0.0);
      Eigen::MatrixXd Lap = feature_laplacians(basis, X);
      const double h = 1e-6, h2 = 1e-4;
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        Eigen::MatrixXd fd(3, basis.p());
        Eigen::RowVectorXd lap_fd = Eigen::RowVectorXd::Zero(basis.p());
        Eigen::MatrixXd x0 = X.row(i);
        Eigen::RowVectorXd s0 = features(basis, x0);
        for (int j = 0; j < 3; ++j) {
          Eigen::MatrixXd xp = x0, xm = x0, xp2 = x0, xm2 = x0;
          xp(0, j) += h;
          xm(0, j) -= h;
          xp2(0, j) += h2;
          xm2(0, j) -= h2;
          fd.row(j) = (features(basis, xp) - features(basis, xm)) / (2 * h);
          lap_fd += (features(basis, xp2) - 2 * s0 + features(basis, xm2)) / (h2 * h2);
        }
        Eigen::MatrixXd an = D.middleRows(3 * i, 3);
        CHECK((an - fd).norm() <= 1e-5 * an.norm());
        CHECK((Lap.row(i) - lap_fd).norm() <= 1e-4 * Lap.row(i).norm());
      }
    }
  }

  TEST_CASE("anisotropic rescaling")
  {
    RffBasis unit = sample_basis(KernelSpec(KernelFamily::Matern32, 1.0), 50, 2, 8);
    RffBasis same = rescale_anisotropic(unit, Eigen::Vector2d::Ones());
    CHECK(same.frequencies == unit.frequencies);
    CHECK(same.phases == unit.phases);

    RffBasis iso = rescale_anisotropic(unit, Eigen::Vector2d(2.5, 2.5));
    RffBasis direct = sample_basis(KernelSpec(KernelFamily::Matern32, 2.5), 50, 2, 8);
    CHECK((iso.frequencies - direct.frequencies).cwiseAbs().maxCoeff() <= 1e-15);

    RffBasis half = rescale_anisotropic(unit, Eigen::Vector2d(1.0, 2.0));
    CHECK(half.frequencies.col(0) == unit.frequencies.col(0));
    CHECK((half.frequencies.col(1) - 0.5 * unit.frequencies.col(1)).norm() == 0.0);

    RffBasis lap = sample_basis(KernelSpec(KernelFamily::Laplacian, 1.0), 10, 2, 1);
    CHECK_THROWS(rescale_anisotropic(lap, Eigen::Vector2d(1.0, 2.0)));
    CHECK_THROWS(rescale_anisotropic(unit, Eigen::Vector3d::Ones()));
  }
}
