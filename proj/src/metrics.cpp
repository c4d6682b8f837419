#include "kdm/metrics.hpp"
#include "kdm/eigsolve.hpp"
#include "kdm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kdm {

SubspaceScore subr2(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& PhiStar)
{
  if (Phi.rows() != PhiStar.rows())
    throw std::invalid_argument("subr2: learned and reference matrices differ in sample count");
  GaugeResult a = gauge_fix(Phi);
  GaugeResult b = gauge_fix(PhiStar);
  if (a.dropped() > 0 || b.dropped() > 0)
    throw NumericalError("subr2: input is rank deficient after re-orthonormalization");
  const double N = static_cast<double>(Phi.rows());
  Eigen::MatrixXd M = a.Phi.transpose() * b.Phi / N;
  SubspaceScore out;
  out.subr2 = M.squaredNorm() / static_cast<double>(PhiStar.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  out.cosines = svd.singularValues().cwiseMin(1.0);
  return out;
}

Eigen::MatrixXd column_correlations(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B)
{
  if (A.rows() != B.rows())
    throw std::invalid_argument("column_correlations: row counts differ");
  Eigen::MatrixXd Ac = A.rowwise() - A.colwise().mean();
  Eigen::MatrixXd Bc = B.rowwise() - B.colwise().mean();
  Eigen::VectorXd na = Ac.colwise().norm(), nb = Bc.colwise().norm();
  Eigen::MatrixXd C = Ac.transpose() * Bc;
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    for (Eigen::Index j = 0; j < C.cols(); ++j) {
      double den = na(i) * nb(j);
      C(i, j) = den > 0.0 ? C(i, j) / den : 0.0;
    }
  }
  return C;
}

AlignmentReport align_and_corr(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& PhiStar)
{
  const int r = static_cast<int>(PhiStar.cols());
  if (Phi.cols() != PhiStar.cols() || Phi.rows() != PhiStar.rows())
    throw std::invalid_argument("align_and_corr: shapes differ");
  if (r < 1 || r > 8)
    throw std::invalid_argument("align_and_corr supports 1 <= r <= 8");
  Eigen::MatrixXd C = column_correlations(Phi, PhiStar); // C(learned, reference)

  AlignmentReport out;
  Eigen::VectorXd spread = (Phi.rowwise() - Phi.colwise().mean()).colwise().norm();
  for (int k = 0; k < r; ++k) {
    if (!(spread(k) > 0.0))
      out.constant_columns.push_back(k);
  }

  std::vector<int> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  std::vector<int> best_perm = perm;
  do {
    double s = 0.0;
    for (int k = 0; k < r; ++k)
      s += std::abs(C(perm[k], k));
    if (s > best) {
      best = s;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  out.permutation = best_perm;
  out.avg_abs_corr = best / r;
  for (int k = 0; k < r; ++k)
    out.signs.push_back(C(best_perm[k], k) < 0.0 ? -1 : 1);
  return out;
}

} // namespace kdm
