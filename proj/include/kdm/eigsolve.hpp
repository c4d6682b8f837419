#pragma once

#include "kdm/operators.hpp"

#include <Eigen/Dense>
#include <vector>

namespace kdm {

struct GevpResult
{
  Eigen::VectorXd mu; // descending
  Eigen::MatrixXd A;  // p×r, columns normalized so a_kᵀ L_λ a_k = 1
  bool floored = false; // L_λ needed PSD flooring before factorization
};

//! Top-r generalized eigenpairs with gauge-fixed sample evaluations.
struct EigenSolution
{
  Eigen::VectorXd mu;
  Eigen::MatrixXd A;
  Eigen::MatrixXd Phi;
  // Columns of the raw lift that survived gauge fixing, in original order.
  std::vector<int> kept;
};

// Σa = μ L_λ a through a Cholesky reduction of L_λ. Requires 1 <= r <= p.
GevpResult solve_gevp(const OperatorPair& pair, int r);
GevpResult solve_gevp(const Eigen::MatrixXd& Sigma,
                      const Eigen::MatrixXd& Llam,
                      int r);

// Top-k generalized eigenvalues only (cheaper, used by CV scores).
Eigen::VectorXd gevp_eigenvalues(const OperatorPair& pair, int k);

// Phi_raw = basis_values · A.
Eigen::MatrixXd lift(const Eigen::MatrixXd& basis_values, const Eigen::MatrixXd& A);

struct GaugeResult
{
  Eigen::MatrixXd Phi;
  std::vector<int> kept;
  int dropped() const;
  int input_columns = 0;
};

// Center columns and orthonormalize them under ⟨u,v⟩_N = uᵀv/N by
// Gram-Schmidt in column order. Columns that are numerically dependent on
// earlier ones (or constant) are dropped and reported through `kept`.
GaugeResult gauge_fix(const Eigen::MatrixXd& Phi_raw, double rank_tol = 1e-8);

struct SignAnchorResult
{
  Eigen::MatrixXd Phi;
  std::vector<int> ambiguous; // columns whose anchor inner product was zero
};

SignAnchorResult sign_anchor(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& anchors);

struct ProcrustesResult
{
  Eigen::MatrixXd Q;
  double residual = 0.0;
};

// Orthogonal Q minimizing (1/N)‖Utilde·Q − U‖²_F for bases orthonormal under
// ⟨·,·⟩_N.
ProcrustesResult procrustes_align(const Eigen::MatrixXd& U, const Eigen::MatrixXd& Utilde);

// Lift solved coefficients through the basis values and gauge fix.
EigenSolution lift_and_fix(const GevpResult& gevp, const Eigen::MatrixXd& basis_values);

// Full pipeline after operator assembly: solve, lift through the basis
// values, gauge fix.
EigenSolution solve_and_lift(const OperatorPair& pair,
                             const Eigen::MatrixXd& basis_values,
                             int r);

} // namespace kdm
