#pragma once

#include "kdm/bench.hpp"
#include "kdm/eigsolve.hpp"
#include "kdm/kernels.hpp"
#include "kdm/operators.hpp"
#include "kdm/rff.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace kdm {

enum class Ablation
{
  SubOnly,
  EigOnly,
  Combined
};

std::string_view ablation_name(Ablation a);
Ablation ablation_from_name(std::string_view name);

struct OuterConfig
{
  double tau = 1.0;    // eigenvalue term
  double alpha = 1.0;  // subspace term
  double gamma = 1e-3; // RKHS term
  double zeta = 0.0;   // generator residual term
  double rho = 0.0;    // weight regularizer ‖β − 1/L‖²
  double eta = 1.0;    // pairwise orthogonality weight inside the subspace term
  int iterations = 200;
  double learning_rate = 0.05;
  double clip_norm = 10.0;
  double fd_step = 1e-4;
  int r = 4;
  double lambda = kDefaultLambda;
  double simplex_floor = kDefaultSimplexFloor;
  double jitter = kDefaultJitter;

  static OuterConfig preset(Ablation ablation);
  void validate() const;
};

struct VarRffConfig
{
  double sigma_cv = 1.0;
  int iterations = 100;
  double learning_rate = 0.05;
  double clip_norm = 10.0;
  double rkhs_weight = 1e-3;
  double fd_step = 1e-4;
  int r = 4;
  double lambda = kDefaultLambda;
  int p_rff = kDefaultRffFeatures;
};

double loss_eig(const Eigen::VectorXd& mu);

// Centering, normalization and η-weighted pairwise orthogonality penalties on
// the raw lift.
double loss_sub(const Eigen::MatrixXd& Phi_raw, double eta);

// Σ_k a_kᵀ W a_k.
double loss_rkhs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W);
// Σ_k ‖a_k‖², the identity-metric case.
double loss_rkhs(const Eigen::MatrixXd& A);

struct PdeLoss
{
  double value = 0.0;
  Eigen::VectorXd lambda_hat;
};

// (1/N) Σ_k ‖Gφ_k + λ̂_k φ_k‖² with λ̂_k = −⟨φ_k, Gφ_k⟩/⟨φ_k, φ_k⟩.
PdeLoss loss_pde(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& GPhi);

// ∂μ_k/∂β_ℓ as an L×r matrix from first-order perturbation of the pencil.
// A must be L_λ-normalized.
Eigen::MatrixXd grad_eig_analytic(const std::vector<NystromParts>& parts,
                                  const NystromMatrices& aggregated,
                                  double lambda,
                                  const Eigen::VectorXd& mu,
                                  const Eigen::MatrixXd& A);

struct FdGradient
{
  Eigen::VectorXd grad;
  std::vector<int> one_sided; // coordinates where a probe failed
};

// Central differences; falls back to a one-sided difference when the
// objective throws at one of the probes.
FdGradient grad_finite_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x,
                                  double h);

struct AdamState
{
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  int t = 0;
};

// One Adam update of x in place. The gradient is rescaled to clip_norm when
// its norm exceeds it (clip_norm <= 0 disables clipping).
void adam_step(AdamState& state,
               Eigen::VectorXd& x,
               const Eigen::VectorXd& grad,
               double lr,
               double clip_norm = 0.0,
               double beta1 = 0.9,
               double beta2 = 0.999,
               double eps = 1e-8);

struct TraceRow
{
  int iteration = 0;
  double total = 0.0;
  double eig = 0.0;
  double sub = 0.0;
  double rkhs = 0.0;
  double pde = 0.0;
  double omega = 0.0;
  Eigen::VectorXd params; // β for VMKL, σ for VarRFF
};

struct VmklResult
{
  MixtureWeights weights;
  EigenSolution solution;
  std::vector<TraceRow> trace;
  int best_iteration = 0;
  int fd_fallbacks = 0; // iterations where the eigen-gradient used finite differences
};

struct VarRffResult
{
  Eigen::VectorXd sigma;
  RffBasis basis;
  EigenSolution solution;
  std::vector<TraceRow> trace;
  int best_iteration = 0;
};

// Gaussian-dictionary mixture learning through the Nyström eigenproblem.
// `generator` may be null; the residual term then requires zeta = 0.
VmklResult run_vmkl(const Eigen::MatrixXd& X,
                    const Eigen::MatrixXd& Z,
                    const std::vector<KernelSpec>& dictionary,
                    const OuterConfig& config,
                    const Generator* generator = nullptr);

// Per-coordinate Matérn-3/2 bandwidths σ_j = σ_CV·exp(tanh θ_j) learned by
// eigenvalue maximization with a small coefficient penalty. The unit basis is
// drawn once from `seed`.
VarRffResult run_varrff(const Eigen::MatrixXd& X,
                        const VarRffConfig& config,
                        std::uint64_t seed);

Eigen::VectorXd varrff_bandwidths(double sigma_cv, const Eigen::VectorXd& theta);

} // namespace kdm
