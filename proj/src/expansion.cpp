#include "kdm/expansion.hpp"
#include "kdm/operators.hpp"

#include <stdexcept>

namespace kdm {

RffExpansion::RffExpansion(RffBasis basis, Eigen::MatrixXd A)
  : basis_(std::move(basis))
  , A_(std::move(A))
{
  if (A_.rows() != basis_.p())
    throw std::invalid_argument("RffExpansion: coefficient rows must equal p_rff");
}

Eigen::MatrixXd RffExpansion::values(const Eigen::MatrixXd& pts) const
{
  return features(basis_, pts) * A_;
}

Eigen::MatrixXd RffExpansion::gradients(const Eigen::MatrixXd& pts) const
{
  return feature_derivatives(basis_, pts) * A_;
}

Eigen::MatrixXd RffExpansion::laplacians(const Eigen::MatrixXd& pts) const
{
  return feature_laplacians(basis_, pts) * A_;
}

NystromExpansion::NystromExpansion(std::vector<KernelSpec> dictionary,
                                   Eigen::VectorXd beta,
                                   Eigen::MatrixXd Z,
                                   Eigen::MatrixXd A)
  : dictionary_(std::move(dictionary))
  , beta_(std::move(beta))
  , Z_(std::move(Z))
  , A_(std::move(A))
{
  if (static_cast<Eigen::Index>(dictionary_.size()) != beta_.size())
    throw std::invalid_argument("NystromExpansion: weight count mismatch");
  if (A_.rows() != Z_.rows())
    throw std::invalid_argument("NystromExpansion: coefficient rows must equal landmark count");
}

Eigen::MatrixXd NystromExpansion::values(const Eigen::MatrixXd& pts) const
{
  return mixture_gram(dictionary_, beta_, pts, Z_) * A_;
}

Eigen::MatrixXd NystromExpansion::gradients(const Eigen::MatrixXd& pts) const
{
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(pts.rows() * pts.cols(), A_.cols());
  for (std::size_t l = 0; l < dictionary_.size(); ++l) {
    NystromParts parts = build_nystrom(dictionary_[l], pts, Z_, true);
    G += beta_(static_cast<Eigen::Index>(l)) * parts.J * A_;
  }
  return G;
}

Eigen::MatrixXd NystromExpansion::laplacians(const Eigen::MatrixXd& pts) const
{
  const Eigen::Index n = pts.rows(), p = Z_.rows();
  Eigen::MatrixXd Lk = Eigen::MatrixXd::Zero(n, p);
  for (std::size_t l = 0; l < dictionary_.size(); ++l) {
    const auto& spec = dictionary_[l];
    double b = beta_(static_cast<Eigen::Index>(l));
    for (Eigen::Index m = 0; m < p; ++m) {
      for (Eigen::Index i = 0; i < n; ++i)
        Lk(i, m) += b * laplacian_kernel_gaussian(spec, pts.row(i).transpose(),
                                                  Z_.row(m).transpose());
    }
  }
  return Lk * A_;
}

} // namespace kdm
