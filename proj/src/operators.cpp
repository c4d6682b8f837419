#include "kdm/operators.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace kdm {

namespace {

void check_lambda(double lambda)
{
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("regularization lambda must be positive");
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& M)
{
  return 0.5 * (M + M.transpose());
}

} // namespace

NystromParts build_nystrom(const KernelSpec& spec,
                           const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& Z,
                           bool with_derivatives)
{
  if (X.cols() != Z.cols())
    throw std::invalid_argument("build_nystrom: samples and landmarks differ in dimension");
  if (with_derivatives && spec.family() != KernelFamily::Gaussian)
    throw std::invalid_argument(
      "Nystrom derivative matrices are only available for Gaussian kernels");
  const Eigen::Index N = X.rows(), d = X.cols(), p = Z.rows();
  NystromParts parts;
  parts.C = cross_gram(spec, X, Z);
  parts.W = cross_gram(spec, Z, Z);
  if (with_derivatives) {
    parts.J.resize(N * d, p);
    for (Eigen::Index m = 0; m < p; ++m) {
      for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
          double s = spec.bandwidth(j);
          parts.J(i * d + j, m) = -(X(i, j) - Z(m, j)) / (s * s) * parts.C(i, m);
        }
      }
    }
  }
  return parts;
}

std::vector<NystromParts> build_nystrom(const std::vector<KernelSpec>& dictionary,
                                        const Eigen::MatrixXd& X,
                                        const Eigen::MatrixXd& Z,
                                        bool with_derivatives)
{
  std::vector<NystromParts> parts;
  parts.reserve(dictionary.size());
  for (const auto& spec : dictionary)
    parts.push_back(build_nystrom(spec, X, Z, with_derivatives));
  return parts;
}

NystromMatrices aggregate_mixture(const std::vector<NystromParts>& parts,
                                  const Eigen::VectorXd& beta,
                                  const Eigen::MatrixXd& Z,
                                  double jitter)
{
  if (parts.empty() || static_cast<Eigen::Index>(parts.size()) != beta.size())
    throw std::invalid_argument("aggregate_mixture: weight count does not match kernels");
  const auto& first = parts.front();
  NystromMatrices m;
  m.C = Eigen::MatrixXd::Zero(first.C.rows(), first.C.cols());
  m.W = Eigen::MatrixXd::Zero(first.W.rows(), first.W.cols());
  m.J = Eigen::MatrixXd::Zero(first.J.rows(), first.J.cols());
  for (std::size_t l = 0; l < parts.size(); ++l) {
    const auto& p = parts[l];
    if (p.C.rows() != m.C.rows() || p.C.cols() != m.C.cols() ||
        p.W.rows() != m.W.rows() || p.J.rows() != m.J.rows() ||
        p.J.cols() != m.J.cols())
      throw std::invalid_argument("aggregate_mixture: kernel matrices differ in shape");
    double b = beta(static_cast<Eigen::Index>(l));
    m.C += b * p.C;
    m.W += b * p.W;
    if (m.J.size() > 0)
      m.J += b * p.J;
  }
  m.W = symmetrized(m.W);
  m.W.diagonal().array() += jitter;
  m.Z = Z;
  return m;
}

OperatorPair operator_pair_nystrom(const NystromMatrices& m, double lambda)
{
  check_lambda(lambda);
  const double N = static_cast<double>(m.C.rows());
  OperatorPair pair;
  pair.basis = BasisKind::Nystrom;
  pair.lambda = lambda;
  pair.Sigma = symmetrized(m.C.transpose() * m.C) / N;
  pair.Llam = lambda * m.W;
  if (m.J.size() > 0)
    pair.Llam += m.J.transpose() * m.J / N;
  pair.Llam = symmetrized(pair.Llam);
  return pair;
}

OperatorPair operator_pair_rff(const Eigen::MatrixXd& S,
                               const Eigen::MatrixXd& D,
                               double lambda)
{
  check_lambda(lambda);
  if (D.size() > 0 && D.cols() != S.cols())
    throw std::invalid_argument("operator_pair_rff: feature counts differ");
  const double N = static_cast<double>(S.rows());
  const Eigen::Index p = S.cols();
  OperatorPair pair;
  pair.basis = BasisKind::Rff;
  pair.lambda = lambda;
  pair.Sigma.noalias() = S.transpose() * S / N;
  pair.Llam = Eigen::MatrixXd::Identity(p, p) * lambda;
  if (D.size() > 0)
    pair.Llam.noalias() += D.transpose() * D / N;
  pair.Sigma = symmetrized(pair.Sigma);
  pair.Llam = symmetrized(pair.Llam);
  return pair;
}

RffGrams rff_grams(const RffBasis& basis, const Eigen::MatrixXd& X)
{
  if (X.cols() != basis.d())
    throw std::invalid_argument("rff_grams: dimension mismatch");
  const double c = std::sqrt(2.0 / basis.p());
  Eigen::MatrixXd A = X * basis.frequencies.transpose();
  A.rowwise() += basis.phases.transpose();
  Eigen::MatrixXd S = c * A.array().cos().matrix();
  Eigen::MatrixXd T = c * A.array().sin().matrix();
  RffGrams g;
  g.n = X.rows();
  g.SS.noalias() = S.transpose() * S;
  Eigen::MatrixXd TT = T.transpose() * T;
  Eigen::MatrixXd WW = basis.frequencies * basis.frequencies.transpose();
  g.DD = TT.cwiseProduct(WW);
  return g;
}

RffGrams complement(const RffGrams& all, const RffGrams& part)
{
  if (part.n >= all.n)
    throw std::invalid_argument("complement: subset is not smaller than the whole");
  return RffGrams{ all.SS - part.SS, all.DD - part.DD, all.n - part.n };
}

OperatorPair operator_pair_from_grams(const RffGrams& grams, double lambda)
{
  check_lambda(lambda);
  if (grams.n < 1)
    throw std::invalid_argument("operator_pair_from_grams: no samples");
  const double N = static_cast<double>(grams.n);
  OperatorPair pair;
  pair.basis = BasisKind::Rff;
  pair.lambda = lambda;
  pair.Sigma = symmetrized(grams.SS) / N;
  pair.Llam = symmetrized(grams.DD) / N;
  pair.Llam.diagonal().array() += lambda;
  return pair;
}

Eigen::MatrixXd kmeans_landmarks(const Eigen::MatrixXd& X,
                                 int p,
                                 std::uint64_t seed,
                                 int iterations)
{
  const Eigen::Index N = X.rows(), d = X.cols();
  if (p < 1 || p > N)
    throw std::invalid_argument("k-means needs 1 <= p <= N");
  std::mt19937_64 rng(seed);

  // k-means++ seeding
  Eigen::MatrixXd centers(p, d);
  std::uniform_int_distribution<Eigen::Index> pick(0, N - 1);
  centers.row(0) = X.row(pick(rng));
  Eigen::VectorXd dist2 = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < p; ++c) {
    double total = dist2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng), acc = 0.0;
      chosen = N - 1;
      for (Eigen::Index i = 0; i < N; ++i) {
        acc += dist2(i);
        if (acc >= target && dist2(i) > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = X.row(chosen);
    dist2 = dist2.cwiseMin((X.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  // Lloyd iterations; an empty cluster keeps its previous center.
  std::vector<int> label(N, -1);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < N; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - X.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (label[i] != static_cast<int>(best)) {
        label[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed && it > 0)
      break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(p, d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < N; ++i) {
      sums.row(label[i]) += X.row(i);
      counts(label[i]) += 1.0;
    }
    for (int c = 0; c < p; ++c) {
      if (counts(c) > 0)
        centers.row(c) = sums.row(c) / counts(c);
    }
  }
  return centers;
}

} // namespace kdm
