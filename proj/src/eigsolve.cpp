#include "kdm/eigsolve.hpp"
#include "kdm/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kdm {

namespace {

struct Reduced
{
  Eigen::MatrixXd L; // lower Cholesky factor of L_λ
  Eigen::MatrixXd M; // L⁻¹ Σ L⁻ᵀ
  bool floored = false;
};

void check_pair(const Eigen::MatrixXd& Sigma, const Eigen::MatrixXd& Llam, int r)
{
  if (Sigma.rows() != Sigma.cols() || Llam.rows() != Llam.cols() ||
      Sigma.rows() != Llam.rows())
    throw std::invalid_argument("generalized eigenproblem needs square matrices of equal size");
  if (r < 1 || r > Sigma.rows())
    throw std::invalid_argument("requested " + std::to_string(r) +
                                " eigenpairs from a problem of size " +
                                std::to_string(Sigma.rows()));
  if (!Sigma.allFinite() || !Llam.allFinite())
    throw NumericalError("operator matrices contain non-finite values");
}

Reduced reduce(const Eigen::MatrixXd& Sigma, const Eigen::MatrixXd& Llam)
{
  Reduced red;
  Eigen::LLT<Eigen::MatrixXd> llt(Llam);
  if (llt.info() != Eigen::Success) {
    // Floor the spectrum and retry once.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Llam);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(kPsdFloor);
    Eigen::MatrixXd floored =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    llt.compute(0.5 * (floored + floored.transpose()));
    if (llt.info() != Eigen::Success)
      throw NumericalError("Cholesky factorization of L_lambda failed after PSD flooring");
    red.floored = true;
  }
  red.L = llt.matrixL();
  const auto Lt = red.L.triangularView<Eigen::Lower>();
  Eigen::MatrixXd T = Lt.solve(Sigma);
  red.M = Lt.solve(T.transpose());
  red.M = 0.5 * (red.M + red.M.transpose());
  return red;
}

} // namespace

GevpResult solve_gevp(const Eigen::MatrixXd& Sigma, const Eigen::MatrixXd& Llam, int r)
{
  check_pair(Sigma, Llam, r);
  Reduced red = reduce(Sigma, Llam);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(red.M);
  if (es.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver did not converge");
  GevpResult out;
  out.floored = red.floored;
  out.mu = es.eigenvalues().tail(r).reverse();
  Eigen::MatrixXd V = es.eigenvectors().rightCols(r).rowwise().reverse();
  out.A = red.L.transpose().triangularView<Eigen::Upper>().solve(V);
  return out;
}

GevpResult solve_gevp(const OperatorPair& pair, int r)
{
  return solve_gevp(pair.Sigma, pair.Llam, r);
}

Eigen::VectorXd gevp_eigenvalues(const OperatorPair& pair, int k)
{
  check_pair(pair.Sigma, pair.Llam, k);
  Reduced red = reduce(pair.Sigma, pair.Llam);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(red.M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver did not converge");
  return es.eigenvalues().tail(k).reverse();
}

Eigen::MatrixXd lift(const Eigen::MatrixXd& basis_values, const Eigen::MatrixXd& A)
{
  if (basis_values.cols() != A.rows())
    throw std::invalid_argument("lift: basis has " + std::to_string(basis_values.cols()) +
                                " columns but coefficients have " +
                                std::to_string(A.rows()) + " rows");
  return basis_values * A;
}

int GaugeResult::dropped() const
{
  return input_columns - static_cast<int>(kept.size());
}

GaugeResult gauge_fix(const Eigen::MatrixXd& Phi_raw, double rank_tol)
{
  const Eigen::Index N = Phi_raw.rows(), r = Phi_raw.cols();
  if (N < 2)
    throw std::invalid_argument("gauge_fix needs at least two samples");
  const double sqrtN = std::sqrt(static_cast<double>(N));
  Eigen::MatrixXd centered = Phi_raw.rowwise() - Phi_raw.colwise().mean();

  GaugeResult out;
  out.input_columns = static_cast<int>(r);
  Eigen::MatrixXd Q(N, r); // Euclidean-orthonormal columns
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < r; ++c) {
    double scale = Phi_raw.col(c).norm();
    Eigen::VectorXd v = centered.col(c);
    // Two passes of classical Gram-Schmidt keep orthogonality at round-off.
    for (int pass = 0; pass < 2; ++pass) {
      if (k > 0)
        v -= Q.leftCols(k) * (Q.leftCols(k).transpose() * v);
    }
    // Re-center: projections onto earlier centered columns keep the mean at
    // round-off level, this removes it exactly.
    v.array() -= v.mean();
    double nv = v.norm();
    if (!(scale > 0.0) || !(nv > rank_tol * scale))
      continue;
    Q.col(k++) = v / nv;
    out.kept.push_back(static_cast<int>(c));
  }
  out.Phi = sqrtN * Q.leftCols(k);
  return out;
}

SignAnchorResult sign_anchor(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& anchors)
{
  if (Phi.rows() != anchors.rows() || Phi.cols() != anchors.cols())
    throw std::invalid_argument("sign_anchor: anchors must match Phi in shape");
  SignAnchorResult out{ Phi, {} };
  for (Eigen::Index k = 0; k < Phi.cols(); ++k) {
    double ip = anchors.col(k).dot(Phi.col(k));
    if (ip < 0.0)
      out.Phi.col(k) *= -1.0;
    else if (ip == 0.0)
      out.ambiguous.push_back(static_cast<int>(k));
  }
  return out;
}

ProcrustesResult procrustes_align(const Eigen::MatrixXd& U, const Eigen::MatrixXd& Utilde)
{
  if (U.rows() != Utilde.rows() || U.cols() != Utilde.cols())
    throw std::invalid_argument("procrustes_align: bases differ in shape");
  const double N = static_cast<double>(U.rows());
  const Eigen::Index r = U.cols();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(r, r);
  for (const auto* B : { &U, &Utilde }) {
    if (((B->transpose() * *B) / N - I).cwiseAbs().maxCoeff() > 1e-6)
      throw std::invalid_argument("procrustes_align: input is not orthonormal under <u,v>_N");
  }
  Eigen::MatrixXd M = Utilde.transpose() * U / N;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesResult out;
  out.Q = svd.matrixU() * svd.matrixV().transpose();
  out.residual = std::max(0.0, 2.0 * r - 2.0 * svd.singularValues().sum());
  return out;
}

EigenSolution solve_and_lift(const OperatorPair& pair,
                             const Eigen::MatrixXd& basis_values,
                             int r)
{
  return lift_and_fix(solve_gevp(pair, r), basis_values);
}

EigenSolution lift_and_fix(const GevpResult& g, const Eigen::MatrixXd& basis_values)
{
  GaugeResult gf = gauge_fix(lift(basis_values, g.A));
  if (gf.kept.empty())
    throw NumericalError("all lifted eigenfunctions are constant on the samples");
  return EigenSolution{ g.mu, g.A, gf.Phi, gf.kept };
}

} // namespace kdm
