#pragma once

#include "kdm/kernels.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <vector>

namespace kdm {

inline constexpr int kDefaultRffFeatures = 300;

//! Random Fourier feature basis φ_m(x) = √(2/p)·cos(w_m·x + b_m).
//!
//! Frequencies are stored twice: the raw draws at unit bandwidth and the
//! scaled ones actually used. Every supported family is a scale family, so
//! changing bandwidths never requires new random draws.
struct RffBasis
{
  // One entry per mixture component; a plain basis has exactly one.
  std::vector<KernelSpec> components;
  std::vector<int> component_sizes;
  std::uint64_t seed = 0;
  Eigen::MatrixXd unit_frequencies; // p×d
  Eigen::MatrixXd frequencies;      // p×d
  Eigen::VectorXd phases;           // p

  int p() const { return static_cast<int>(frequencies.rows()); }
  int d() const { return static_cast<int>(frequencies.cols()); }
  const KernelSpec& spec() const;

  nlohmann::json to_json() const;
  static RffBasis from_json(const nlohmann::json& j);
};

RffBasis sample_basis(const KernelSpec& spec, int p, int d, std::uint64_t seed);

// Equal-weight mixture: the p features are split as evenly as possible among
// the components, so the feature inner product approximates the average of
// the component kernels.
RffBasis sample_mixture_basis(const std::vector<KernelSpec>& specs,
                              int p,
                              int d,
                              std::uint64_t seed);

// S_{im} = √(2/p)·cos(w_m·x_i + b_m), N×p.
Eigen::MatrixXd features(const RffBasis& basis, const Eigen::MatrixXd& X);

// Gradients of the features at the samples, (N·d)×p with row i·d + j holding
// ∂_j φ_m(x_i).
Eigen::MatrixXd feature_derivatives(const RffBasis& basis,
                                    const Eigen::MatrixXd& X);

struct FeatureMatrices
{
  Eigen::MatrixXd S;
  Eigen::MatrixXd D;
};

// Both matrices from one pass over the phase angles.
FeatureMatrices features_and_derivatives(const RffBasis& basis,
                                         const Eigen::MatrixXd& X);

// Laplacian of each feature at the samples, N×p.
Eigen::MatrixXd feature_laplacians(const RffBasis& basis,
                                   const Eigen::MatrixXd& X);

// Divide frequency coordinate j by σ_j. The basis must come from a single
// Gaussian or Matérn-3/2 component; the raw unit draws are reused.
RffBasis rescale_anisotropic(const RffBasis& basis, const Eigen::VectorXd& sigma);

} // namespace kdm
