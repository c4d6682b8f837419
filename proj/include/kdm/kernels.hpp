#pragma once

#include <Eigen/Dense>
#include <array>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace kdm {

enum class KernelFamily
{
  Gaussian,
  Laplacian,
  Matern32,
  Matern52,
  RatQuad2,
  RatQuad5
};

inline constexpr std::array<KernelFamily, 6> kAllFamilies = {
  KernelFamily::Gaussian, KernelFamily::Laplacian, KernelFamily::Matern32,
  KernelFamily::Matern52, KernelFamily::RatQuad2,  KernelFamily::RatQuad5
};

inline constexpr double kDefaultSimplexFloor = 0.01;

std::string_view family_name(KernelFamily family);
KernelFamily family_from_name(std::string_view name);
bool allows_anisotropy(KernelFamily family);

//! One kernel family with either a scalar or a per-coordinate bandwidth.
class KernelSpec
{
public:
  KernelSpec(KernelFamily family, double sigma);
  KernelSpec(KernelFamily family, Eigen::VectorXd sigmas);

  KernelFamily family() const { return family_; }
  bool anisotropic() const { return anisotropic_; }
  // Scalar bandwidth; for anisotropic specs this is the geometric mean.
  double sigma() const;
  const Eigen::VectorXd& bandwidths() const { return sigma_; }
  // Bandwidth for coordinate j (the scalar one if isotropic).
  double bandwidth(Eigen::Index j) const
  {
    return anisotropic_ ? sigma_(j) : sigma_(0);
  }
  // Throws if an anisotropic bandwidth does not have length d.
  void check_dimension(Eigen::Index d) const;

  nlohmann::json to_json() const;
  static KernelSpec from_json(const nlohmann::json& j);

  bool operator==(const KernelSpec& other) const;

private:
  KernelFamily family_;
  bool anisotropic_;
  Eigen::VectorXd sigma_;
};

using PointRef = Eigen::Ref<const Eigen::VectorXd>;

double eval_kernel(const KernelSpec& spec, const PointRef& x, const PointRef& z);

// Kernel value as a function of the scaled residual. For isotropic specs
// `scaled_sq` is ‖r‖²/σ² and `scaled_l1` is ‖r‖₁/σ; anisotropic specs divide
// per coordinate.
double kernel_profile(KernelFamily family, double scaled_sq, double scaled_l1);

Eigen::VectorXd grad_kernel_gaussian(const KernelSpec& spec,
                                     const PointRef& x,
                                     const PointRef& z);
double laplacian_kernel_gaussian(const KernelSpec& spec,
                                 const PointRef& x,
                                 const PointRef& z);

// K_{ik} = k(X_i, Z_k) for rows of X and Z.
Eigen::MatrixXd cross_gram(const KernelSpec& spec,
                           const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& Z);

//! Point on the probability simplex together with its softmax preimage.
struct MixtureWeights
{
  Eigen::VectorXd u;
  Eigen::VectorXd beta;
  double floor = kDefaultSimplexFloor;
};

MixtureWeights mixture_weights_from_u(const Eigen::VectorXd& u,
                                      double floor = kDefaultSimplexFloor);

// Jacobian dβ/du, an L×L matrix (1−τ)(diag(s) − s sᵀ) with s = softmax(u).
Eigen::MatrixXd mixture_jacobian(const MixtureWeights& weights);

// Gram matrix of the mixture Σ_ℓ β_ℓ K_ℓ.
Eigen::MatrixXd mixture_gram(const std::vector<KernelSpec>& dictionary,
                             const Eigen::VectorXd& beta,
                             const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& Z);

} // namespace kdm
