#pragma once

#include "kdm/kernels.hpp"
#include "kdm/rff.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace kdm {

inline constexpr double kDefaultJitter = 1e-8;
inline constexpr double kPsdFloor = 1e-10;
inline constexpr double kDefaultLambda = 0.01;
inline constexpr int kDefaultLandmarks = 60;

//! Per-kernel Nyström matrices for one dictionary element.
struct NystromParts
{
  Eigen::MatrixXd C; // N×p, C_im = k(x_i, z_m)
  Eigen::MatrixXd W; // p×p landmark Gram
  Eigen::MatrixXd J; // (N·d)×p, row i·d + j holds ∂_{x_j} k(x_i, z_m)
};

//! Mixture-aggregated Nyström matrices; W is symmetrized and jittered.
struct NystromMatrices
{
  Eigen::MatrixXd C;
  Eigen::MatrixXd W;
  Eigen::MatrixXd J;
  Eigen::MatrixXd Z;
};

enum class BasisKind
{
  Nystrom,
  Rff
};

struct OperatorPair
{
  Eigen::MatrixXd Sigma;
  Eigen::MatrixXd Llam;
  BasisKind basis = BasisKind::Rff;
  double lambda = kDefaultLambda;
};

// Derivatives are only available for Gaussian kernels; pass
// with_derivatives = false to build C and W for other families.
NystromParts build_nystrom(const KernelSpec& spec,
                           const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& Z,
                           bool with_derivatives = true);

std::vector<NystromParts> build_nystrom(const std::vector<KernelSpec>& dictionary,
                                        const Eigen::MatrixXd& X,
                                        const Eigen::MatrixXd& Z,
                                        bool with_derivatives = true);

NystromMatrices aggregate_mixture(const std::vector<NystromParts>& parts,
                                  const Eigen::VectorXd& beta,
                                  const Eigen::MatrixXd& Z,
                                  double jitter = kDefaultJitter);

// Σ = CᵀC/N and L_λ = JᵀJ/N + λW, with N the row count of C.
OperatorPair operator_pair_nystrom(const NystromMatrices& m, double lambda);

// Σ = SᵀS/N and L_λ = DᵀD/N + λI.
OperatorPair operator_pair_rff(const Eigen::MatrixXd& S,
                               const Eigen::MatrixXd& D,
                               double lambda);

// Unnormalized Gram sums over the rows of X: SS = SᵀS and DD = DᵀD. DD is
// formed without D through DᵀD = (TᵀT) ∘ (WWᵀ), T_im = √(2/p)·sin(w_m·x_i + b_m).
struct RffGrams
{
  Eigen::MatrixXd SS;
  Eigen::MatrixXd DD;
  Eigen::Index n = 0;
};

RffGrams rff_grams(const RffBasis& basis, const Eigen::MatrixXd& X);
// Grams of the rows in `all` that are not in `part` (part must be a subset).
RffGrams complement(const RffGrams& all, const RffGrams& part);
OperatorPair operator_pair_from_grams(const RffGrams& grams, double lambda);

// k-means++ seeding followed by Lloyd iterations. Returns p×d centers.
Eigen::MatrixXd kmeans_landmarks(const Eigen::MatrixXd& X,
                                 int p,
                                 std::uint64_t seed,
                                 int iterations = 50);

} // namespace kdm
