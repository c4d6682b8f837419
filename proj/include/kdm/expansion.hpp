#pragma once

#include "kdm/kernels.hpp"
#include "kdm/rff.hpp"

#include <Eigen/Dense>
#include <vector>

namespace kdm {

//! A finite family of functions f_k = Σ_m A_mk ψ_m that can be evaluated,
//! differentiated and Laplaced at arbitrary points.
class Expansion
{
public:
  virtual ~Expansion() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual Eigen::Index size() const = 0;
  // n×r
  virtual Eigen::MatrixXd values(const Eigen::MatrixXd& pts) const = 0;
  // (n·d)×r, row i·d + j holds ∂_j f_k(pts_i)
  virtual Eigen::MatrixXd gradients(const Eigen::MatrixXd& pts) const = 0;
  // n×r
  virtual Eigen::MatrixXd laplacians(const Eigen::MatrixXd& pts) const = 0;
};

class RffExpansion : public Expansion
{
public:
  RffExpansion(RffBasis basis, Eigen::MatrixXd A);

  Eigen::Index dimension() const override { return basis_.d(); }
  Eigen::Index size() const override { return A_.cols(); }
  Eigen::MatrixXd values(const Eigen::MatrixXd& pts) const override;
  Eigen::MatrixXd gradients(const Eigen::MatrixXd& pts) const override;
  Eigen::MatrixXd laplacians(const Eigen::MatrixXd& pts) const override;

private:
  RffBasis basis_;
  Eigen::MatrixXd A_;
};

// f_k(x) = Σ_m A_mk Σ_ℓ β_ℓ k_ℓ(x, z_m) over a Gaussian dictionary.
class NystromExpansion : public Expansion
{
public:
  NystromExpansion(std::vector<KernelSpec> dictionary,
                   Eigen::VectorXd beta,
                   Eigen::MatrixXd Z,
                   Eigen::MatrixXd A);

  Eigen::Index dimension() const override { return Z_.cols(); }
  Eigen::Index size() const override { return A_.cols(); }
  Eigen::MatrixXd values(const Eigen::MatrixXd& pts) const override;
  Eigen::MatrixXd gradients(const Eigen::MatrixXd& pts) const override;
  Eigen::MatrixXd laplacians(const Eigen::MatrixXd& pts) const override;

private:
  std::vector<KernelSpec> dictionary_;
  Eigen::VectorXd beta_;
  Eigen::MatrixXd Z_;
  Eigen::MatrixXd A_;
};

} // namespace kdm
