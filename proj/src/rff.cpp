#include "kdm/rff.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace kdm {

namespace {

// Unit-bandwidth spectral draws for one family, appended to rows
// [row0, row0 + count) of W.
void draw_unit_frequencies(KernelFamily family,
                           Eigen::MatrixXd& W,
                           Eigen::Index row0,
                           Eigen::Index count,
                           std::mt19937_64& rng)
{
  const Eigen::Index d = W.cols();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index m = row0; m < row0 + count; ++m) {
    switch (family) {
      case KernelFamily::Gaussian:
        for (Eigen::Index j = 0; j < d; ++j)
          W(m, j) = normal(rng);
        break;
      case KernelFamily::Laplacian: {
        std::cauchy_distribution<double> cauchy(0.0, 1.0);
        for (Eigen::Index j = 0; j < d; ++j)
          W(m, j) = cauchy(rng);
        break;
      }
      case KernelFamily::Matern32:
      case KernelFamily::Matern52: {
        // Multivariate t with 2ν degrees of freedom.
        double dof = family == KernelFamily::Matern32 ? 3.0 : 5.0;
        for (Eigen::Index j = 0; j < d; ++j)
          W(m, j) = normal(rng);
        std::chi_squared_distribution<double> chi2(dof);
        double g = chi2(rng) / dof;
        W.row(m) /= std::sqrt(g);
        break;
      }
      case KernelFamily::RatQuad2:
      case KernelFamily::RatQuad5: {
        double alpha = family == KernelFamily::RatQuad2 ? 2.0 : 5.0;
        // Precision τ ~ Gamma(shape α, rate α) at unit bandwidth.
        std::gamma_distribution<double> gamma(alpha, 1.0 / alpha);
        double tau = gamma(rng);
        for (Eigen::Index j = 0; j < d; ++j)
          W(m, j) = normal(rng);
        W.row(m) *= std::sqrt(tau);
        break;
      }
    }
  }
}

void scale_rows(const KernelSpec& spec,
                const Eigen::MatrixXd& unit,
                Eigen::MatrixXd& W,
                Eigen::Index row0,
                Eigen::Index count)
{
  for (Eigen::Index j = 0; j < unit.cols(); ++j) {
    double s = spec.bandwidth(j);
    W.block(row0, j, count, 1) = unit.block(row0, j, count, 1) / s;
  }
}

void check_sizes(int p, int d)
{
  if (p < 1 || d < 1)
    throw std::invalid_argument("RFF basis needs p >= 1 and d >= 1");
}

void check_input(const RffBasis& basis, const Eigen::MatrixXd& X)
{
  if (X.cols() != basis.frequencies.cols())
    throw std::invalid_argument("RFF input has " + std::to_string(X.cols()) +
                                " columns, basis expects " +
                                std::to_string(basis.frequencies.cols()));
}

Eigen::MatrixXd phase_angles(const RffBasis& basis, const Eigen::MatrixXd& X)
{
  Eigen::MatrixXd A = X * basis.frequencies.transpose();
  A.rowwise() += basis.phases.transpose();
  return A;
}

} // namespace

const KernelSpec& RffBasis::spec() const
{
  if (components.size() != 1)
    throw std::logic_error("RFF basis is a mixture; it has no single spec");
  return components.front();
}

nlohmann::json RffBasis::to_json() const
{
  nlohmann::json j;
  j["seed"] = seed;
  j["p_rff"] = p();
  j["d"] = d();
  if (components.size() == 1) {
    auto s = components.front().to_json();
    j["family"] = s["family"];
    j["sigma"] = s["sigma"];
  } else {
    j["components"] = nlohmann::json::array();
    for (const auto& c : components)
      j["components"].push_back(c.to_json());
  }
  return j;
}

RffBasis RffBasis::from_json(const nlohmann::json& j)
{
  auto seed = j.at("seed").get<std::uint64_t>();
  int p = j.at("p_rff").get<int>();
  int d = j.at("d").get<int>();
  if (j.contains("components")) {
    std::vector<KernelSpec> specs;
    for (const auto& c : j.at("components"))
      specs.push_back(KernelSpec::from_json(c));
    return sample_mixture_basis(specs, p, d, seed);
  }
  return sample_basis(KernelSpec::from_json(j), p, d, seed);
}

RffBasis sample_basis(const KernelSpec& spec, int p, int d, std::uint64_t seed)
{
  return sample_mixture_basis({ spec }, p, d, seed);
}

RffBasis sample_mixture_basis(const std::vector<KernelSpec>& specs,
                              int p,
                              int d,
                              std::uint64_t seed)
{
  check_sizes(p, d);
  if (specs.empty())
    throw std::invalid_argument("RFF basis needs at least one kernel");
  if (static_cast<int>(specs.size()) > p)
    throw std::invalid_argument("more mixture components than features");
  for (const auto& s : specs)
    s.check_dimension(d);

  RffBasis basis;
  basis.components = specs;
  basis.seed = seed;
  basis.unit_frequencies.resize(p, d);
  basis.frequencies.resize(p, d);
  basis.phases.resize(p);

  std::mt19937_64 rng(seed);
  const int L = static_cast<int>(specs.size());
  Eigen::Index row = 0;
  for (int l = 0; l < L; ++l) {
    int count = p / L + (l < p % L ? 1 : 0);
    basis.component_sizes.push_back(count);
    draw_unit_frequencies(specs[l].family(), basis.unit_frequencies, row, count, rng);
    scale_rows(specs[l], basis.unit_frequencies, basis.frequencies, row, count);
    row += count;
  }
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int m = 0; m < p; ++m)
    basis.phases(m) = phase(rng);
  return basis;
}

Eigen::MatrixXd features(const RffBasis& basis, const Eigen::MatrixXd& X)
{
  check_input(basis, X);
  const double c = std::sqrt(2.0 / basis.p());
  return c * phase_angles(basis, X).array().cos().matrix();
}

Eigen::MatrixXd feature_derivatives(const RffBasis& basis,
                                    const Eigen::MatrixXd& X)
{
  return features_and_derivatives(basis, X).D;
}

FeatureMatrices features_and_derivatives(const RffBasis& basis,
                                         const Eigen::MatrixXd& X)
{
  check_input(basis, X);
  const Eigen::Index N = X.rows(), d = X.cols(), p = basis.p();
  const double c = std::sqrt(2.0 / p);
  Eigen::MatrixXd A = phase_angles(basis, X);
  FeatureMatrices out;
  out.S = c * A.array().cos().matrix();
  Eigen::MatrixXd negsin = -c * A.array().sin().matrix();
  out.D.resize(N * d, p);
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::MatrixXd block = negsin * basis.frequencies.col(j).asDiagonal();
    for (Eigen::Index i = 0; i < N; ++i)
      out.D.row(i * d + j) = block.row(i);
  }
  return out;
}

Eigen::MatrixXd feature_laplacians(const RffBasis& basis,
                                   const Eigen::MatrixXd& X)
{
  Eigen::VectorXd sq = basis.frequencies.rowwise().squaredNorm();
  return -(features(basis, X) * sq.asDiagonal());
}

RffBasis rescale_anisotropic(const RffBasis& basis, const Eigen::VectorXd& sigma)
{
  const auto& spec = basis.spec();
  if (!allows_anisotropy(spec.family()))
    throw std::invalid_argument("anisotropic rescaling requires a Gaussian or "
                                "Matern-3/2 basis");
  if (sigma.size() != basis.d())
    throw std::invalid_argument("rescale_anisotropic: bandwidth length mismatch");
  RffBasis out = basis;
  out.components = { KernelSpec(spec.family(), sigma) };
  scale_rows(out.components.front(), out.unit_frequencies, out.frequencies, 0,
             out.p());
  return out;
}

} // namespace kdm
