#pragma once

#include <Eigen/Dense>
#include <vector>

namespace kdm {

struct SubspaceScore
{
  double subr2 = 0.0;
  Eigen::VectorXd cosines; // principal-angle cosines, descending
};

// Mean squared cosine of principal angles between the learned columns and
// the reference columns; both are re-orthonormalized first. Phi may have
// fewer columns than PhiStar (dropped modes count as zero). Throws
// NumericalError if re-orthonormalization finds either input rank deficient.
SubspaceScore subr2(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& PhiStar);

struct AlignmentReport
{
  double avg_abs_corr = 0.0;
  std::vector<int> permutation; // learned column assigned to reference k
  std::vector<int> signs;       // ±1 applied to the learned column
  std::vector<int> constant_columns;
};

// Column assignment maximizing Σ|corr| by exhaustive search over
// permutations (r <= 8).
AlignmentReport align_and_corr(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& PhiStar);

// Pearson correlations between columns of A and columns of B; a constant
// column yields zeros.
Eigen::MatrixXd column_correlations(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

} // namespace kdm
