#include "kdm/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace kdm {

namespace {

void check_positive(const Eigen::VectorXd& s)
{
  if (s.size() == 0)
    throw std::invalid_argument("kernel bandwidth is empty");
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (!std::isfinite(s(j)) || s(j) <= 0.0)
      throw std::invalid_argument("kernel bandwidth must be positive and finite");
  }
}

void require_gaussian(const KernelSpec& spec)
{
  if (spec.family() != KernelFamily::Gaussian)
    throw std::invalid_argument(
      "kernel derivatives are only available for the Gaussian family");
}

void check_points(const KernelSpec& spec, const PointRef& x, const PointRef& z)
{
  if (x.size() != z.size())
    throw std::invalid_argument("kernel arguments have different dimensions");
  spec.check_dimension(x.size());
}

} // namespace

std::string_view family_name(KernelFamily family)
{
  switch (family) {
    case KernelFamily::Gaussian:
      return "gaussian";
    case KernelFamily::Laplacian:
      return "laplacian";
    case KernelFamily::Matern32:
      return "matern32";
    case KernelFamily::Matern52:
      return "matern52";
    case KernelFamily::RatQuad2:
      return "ratquad2";
    case KernelFamily::RatQuad5:
      return "ratquad5";
  }
  throw std::invalid_argument("unknown kernel family");
}

KernelFamily family_from_name(std::string_view name)
{
  for (auto f : kAllFamilies) {
    if (family_name(f) == name)
      return f;
  }
  throw std::invalid_argument("unknown kernel family '" + std::string(name) +
                              "'");
}

bool allows_anisotropy(KernelFamily family)
{
  return family == KernelFamily::Gaussian || family == KernelFamily::Matern32;
}

KernelSpec::KernelSpec(KernelFamily family, double sigma)
  : family_(family)
  , anisotropic_(false)
  , sigma_(Eigen::VectorXd::Constant(1, sigma))
{
  check_positive(sigma_);
}

KernelSpec::KernelSpec(KernelFamily family, Eigen::VectorXd sigmas)
  : family_(family)
  , anisotropic_(true)
  , sigma_(std::move(sigmas))
{
  check_positive(sigma_);
  if (!allows_anisotropy(family_))
    throw std::invalid_argument("anisotropic bandwidth not supported for " +
                                std::string(family_name(family_)));
}

double KernelSpec::sigma() const
{
  if (!anisotropic_)
    return sigma_(0);
  return std::exp(sigma_.array().log().mean());
}

void KernelSpec::check_dimension(Eigen::Index d) const
{
  if (anisotropic_ && sigma_.size() != d)
    throw std::invalid_argument("anisotropic bandwidth length " +
                                std::to_string(sigma_.size()) +
                                " does not match dimension " +
                                std::to_string(d));
}

nlohmann::json KernelSpec::to_json() const
{
  nlohmann::json j;
  j["family"] = std::string(family_name(family_));
  if (anisotropic_)
    j["sigma"] = std::vector<double>(sigma_.data(), sigma_.data() + sigma_.size());
  else
    j["sigma"] = sigma_(0);
  return j;
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j)
{
  auto family = family_from_name(j.at("family").get<std::string>());
  const auto& s = j.at("sigma");
  if (s.is_array()) {
    auto v = s.get<std::vector<double>>();
    return KernelSpec(family, Eigen::Map<Eigen::VectorXd>(v.data(), v.size()));
  }
  return KernelSpec(family, s.get<double>());
}

bool KernelSpec::operator==(const KernelSpec& other) const
{
  return family_ == other.family_ && anisotropic_ == other.anisotropic_ &&
         sigma_ == other.sigma_;
}

double kernel_profile(KernelFamily family, double scaled_sq, double scaled_l1)
{
  switch (family) {
    case KernelFamily::Gaussian:
      return std::exp(-0.5 * scaled_sq);
    case KernelFamily::Laplacian:
      return std::exp(-scaled_l1);
    case KernelFamily::Matern32: {
      double t = std::sqrt(3.0 * scaled_sq);
      return (1.0 + t) * std::exp(-t);
    }
    case KernelFamily::Matern52: {
      double t = std::sqrt(5.0 * scaled_sq);
      return (1.0 + t + 5.0 * scaled_sq / 3.0) * std::exp(-t);
    }
    case KernelFamily::RatQuad2:
      return std::pow(1.0 + scaled_sq / 4.0, -2.0);
    case KernelFamily::RatQuad5:
      return std::pow(1.0 + scaled_sq / 10.0, -5.0);
  }
  throw std::invalid_argument("unknown kernel family");
}

double eval_kernel(const KernelSpec& spec, const PointRef& x, const PointRef& z)
{
  check_points(spec, x, z);
  double sq = 0.0, l1 = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double r = (x(j) - z(j)) / spec.bandwidth(j);
    sq += r * r;
    l1 += std::abs(r);
  }
  return kernel_profile(spec.family(), sq, l1);
}

Eigen::VectorXd grad_kernel_gaussian(const KernelSpec& spec,
                                     const PointRef& x,
                                     const PointRef& z)
{
  require_gaussian(spec);
  double k = eval_kernel(spec, x, z);
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double s = spec.bandwidth(j);
    g(j) = -(x(j) - z(j)) / (s * s) * k;
  }
  return g;
}

double laplacian_kernel_gaussian(const KernelSpec& spec,
                                 const PointRef& x,
                                 const PointRef& z)
{
  require_gaussian(spec);
  double k = eval_kernel(spec, x, z);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double s2 = spec.bandwidth(j) * spec.bandwidth(j);
    double r = x(j) - z(j);
    acc += r * r / (s2 * s2) - 1.0 / s2;
  }
  return acc * k;
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec,
                           const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& Z)
{
  if (X.cols() != Z.cols())
    throw std::invalid_argument("cross_gram: dimension mismatch");
  const Eigen::Index d = X.cols();
  spec.check_dimension(d);
  Eigen::VectorXd inv(d);
  for (Eigen::Index j = 0; j < d; ++j)
    inv(j) = 1.0 / spec.bandwidth(j);
  Eigen::MatrixXd Xs = X * inv.asDiagonal();
  Eigen::MatrixXd Zs = Z * inv.asDiagonal();

  Eigen::MatrixXd K(X.rows(), Z.rows());
  for (Eigen::Index k = 0; k < Z.rows(); ++k) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double sq = 0.0, l1 = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        double r = Xs(i, j) - Zs(k, j);
        sq += r * r;
        l1 += std::abs(r);
      }
      K(i, k) = kernel_profile(spec.family(), sq, l1);
    }
  }
  return K;
}

MixtureWeights mixture_weights_from_u(const Eigen::VectorXd& u, double floor)
{
  if (!(floor >= 0.0 && floor < 1.0))
    throw std::invalid_argument("simplex floor must lie in [0, 1)");
  if (u.size() == 0)
    throw std::invalid_argument("mixture weights need at least one component");
  Eigen::ArrayXd e = (u.array() - u.maxCoeff()).exp();
  Eigen::VectorXd s = e / e.sum();
  const double L = static_cast<double>(u.size());
  MixtureWeights w;
  w.u = u;
  w.floor = floor;
  w.beta = (1.0 - floor) * s.array() + floor / L;
  return w;
}

Eigen::MatrixXd mixture_jacobian(const MixtureWeights& weights)
{
  Eigen::ArrayXd e = (weights.u.array() - weights.u.maxCoeff()).exp();
  Eigen::VectorXd s = e / e.sum();
  Eigen::MatrixXd J = Eigen::MatrixXd(s.asDiagonal()) - s * s.transpose();
  return (1.0 - weights.floor) * J;
}

Eigen::MatrixXd mixture_gram(const std::vector<KernelSpec>& dictionary,
                             const Eigen::VectorXd& beta,
                             const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& Z)
{
  if (static_cast<Eigen::Index>(dictionary.size()) != beta.size())
    throw std::invalid_argument("mixture_gram: weight count mismatch");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(X.rows(), Z.rows());
  for (std::size_t l = 0; l < dictionary.size(); ++l)
    K += beta(static_cast<Eigen::Index>(l)) * cross_gram(dictionary[l], X, Z);
  return K;
}

} // namespace kdm
