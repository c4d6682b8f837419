#include "kdm/outer.hpp"
#include "kdm/errors.hpp"
#include "kdm/expansion.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace kdm {

namespace {

// Eigen-gap below this fraction of μ_1 makes the eigen-gradient unreliable.
constexpr double kRelativeGapTolerance = 1e-8;

bool gap_is_resolved(const Eigen::VectorXd& mu, int r)
{
  if (mu.size() <= r)
    return true;
  double scale = std::max(std::abs(mu(0)), 1e-300);
  return mu(r - 1) - mu(r) > kRelativeGapTolerance * scale;
}

// Coefficient transform T with gauge_fix(Phi_raw).Phi = centered(Phi_raw)·T.
Eigen::MatrixXd gauge_transform(const Eigen::MatrixXd& Phi_raw, const Eigen::MatrixXd& Phi)
{
  Eigen::MatrixXd centered = Phi_raw.rowwise() - Phi_raw.colwise().mean();
  return centered.colPivHouseholderQr().solve(Phi);
}

struct VmklEval
{
  MixtureWeights weights;
  NystromMatrices matrices;
  GevpResult gevp; // r+1 pairs when the basis allows it
  Eigen::MatrixXd Phi_raw;
  TraceRow row;
  bool gap_ok = true;
};

class VmklObjective
{
public:
  VmklObjective(const Eigen::MatrixXd& X,
                const Eigen::MatrixXd& Z,
                const std::vector<KernelSpec>& dictionary,
                const OuterConfig& config,
                const Generator* generator)
    : X_(X)
    , Z_(Z)
    , dictionary_(dictionary)
    , config_(config)
    , generator_(generator)
    , parts_(build_nystrom(dictionary, X, Z, true))
  {}

  const std::vector<NystromParts>& parts() const { return parts_; }

  VmklEval evaluate(const Eigen::VectorXd& u) const
  {
    const int r = config_.r;
    VmklEval e;
    e.weights = mixture_weights_from_u(u, config_.simplex_floor);
    e.matrices = aggregate_mixture(parts_, e.weights.beta, Z_, config_.jitter);
    OperatorPair pair = operator_pair_nystrom(e.matrices, config_.lambda);
    int k = std::min<int>(r + 1, static_cast<int>(pair.Sigma.rows()));
    e.gevp = solve_gevp(pair, k);
    e.gap_ok = gap_is_resolved(e.gevp.mu, r);
    Eigen::VectorXd mu = e.gevp.mu.head(r);
    Eigen::MatrixXd A = e.gevp.A.leftCols(r);
    e.Phi_raw = lift(e.matrices.C, A);

    TraceRow& row = e.row;
    row.eig = loss_eig(mu);
    row.sub = loss_sub(e.Phi_raw, config_.eta);
    row.rkhs = loss_rkhs(A, e.matrices.W);
    if (config_.zeta > 0.0) {
      GaugeResult gf = gauge_fix(e.Phi_raw);
      Eigen::MatrixXd T = gauge_transform(e.Phi_raw.leftCols(r), gf.Phi);
      NystromExpansion f(dictionary_, e.weights.beta, Z_, A * T);
      row.pde = loss_pde(gf.Phi, generator_->apply(f, X_)).value;
    }
    const double L = static_cast<double>(e.weights.beta.size());
    row.omega = (e.weights.beta.array() - 1.0 / L).square().sum();
    row.total = config_.tau * row.eig + rest(row);
    if (!std::isfinite(row.total))
      throw NumericalError("VMKL objective is not finite");
    row.params = e.weights.beta;
    return e;
  }

  // Everything except the eigenvalue term.
  double rest(const TraceRow& row) const
  {
    return config_.alpha * row.sub + config_.gamma * row.rkhs + config_.zeta * row.pde +
           config_.rho * row.omega;
  }

  bool has_rest() const
  {
    return config_.alpha > 0.0 || config_.gamma > 0.0 || config_.zeta > 0.0 || config_.rho > 0.0;
  }

private:
  const Eigen::MatrixXd& X_;
  const Eigen::MatrixXd& Z_;
  const std::vector<KernelSpec>& dictionary_;
  const OuterConfig& config_;
  const Generator* generator_;
  std::vector<NystromParts> parts_;
};

} // namespace

std::string_view ablation_name(Ablation a)
{
  switch (a) {
    case Ablation::SubOnly:
      return "subonly";
    case Ablation::EigOnly:
      return "eigonly";
    case Ablation::Combined:
      return "combined";
  }
  throw std::invalid_argument("unknown ablation");
}

Ablation ablation_from_name(std::string_view name)
{
  for (auto a : { Ablation::SubOnly, Ablation::EigOnly, Ablation::Combined }) {
    if (ablation_name(a) == name)
      return a;
  }
  throw std::invalid_argument("unknown ablation '" + std::string(name) + "'");
}

OuterConfig OuterConfig::preset(Ablation ablation)
{
  OuterConfig c;
  switch (ablation) {
    case Ablation::SubOnly:
      c.tau = 0.0;
      c.gamma = 0.0;
      break;
    case Ablation::EigOnly:
      c.alpha = 0.0;
      c.gamma = 0.0;
      break;
    case Ablation::Combined:
      break;
  }
  return c;
}

void OuterConfig::validate() const
{
  for (double w : { tau, alpha, gamma, zeta, rho, eta }) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("outer-loop weights must be finite and non-negative");
  }
  if (iterations < 0 || r < 1 || !(learning_rate > 0.0) || !(fd_step > 0.0))
    throw std::invalid_argument("invalid outer-loop settings");
  if (!(lambda > 0.0))
    throw std::invalid_argument("regularization lambda must be positive");
}

double loss_eig(const Eigen::VectorXd& mu)
{
  return -mu.sum();
}

double loss_sub(const Eigen::MatrixXd& Phi_raw, double eta)
{
  const double N = static_cast<double>(Phi_raw.rows());
  if (N < 1)
    throw std::invalid_argument("loss_sub needs at least one sample");
  Eigen::MatrixXd G = Phi_raw.transpose() * Phi_raw / N;
  double center = Phi_raw.colwise().mean().squaredNorm();
  double norm = (G.diagonal().array() - 1.0).square().sum();
  double ortho = 0.0;
  for (Eigen::Index k = 0; k < G.rows(); ++k) {
    for (Eigen::Index j = k + 1; j < G.cols(); ++j)
      ortho += G(k, j) * G(k, j);
  }
  return center + norm + eta * ortho;
}

double loss_rkhs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W)
{
  if (W.rows() != A.rows() || W.cols() != A.rows())
    throw std::invalid_argument("loss_rkhs: metric does not match coefficients");
  return (A.transpose() * W * A).trace();
}

double loss_rkhs(const Eigen::MatrixXd& A)
{
  return A.squaredNorm();
}

PdeLoss loss_pde(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& GPhi)
{
  if (Phi.rows() != GPhi.rows() || Phi.cols() != GPhi.cols())
    throw std::invalid_argument("loss_pde: Phi and G·Phi differ in shape");
  const double N = static_cast<double>(Phi.rows());
  PdeLoss out;
  out.lambda_hat.resize(Phi.cols());
  for (Eigen::Index k = 0; k < Phi.cols(); ++k) {
    double nn = Phi.col(k).squaredNorm();
    if (!(nn > 0.0))
      throw std::invalid_argument("loss_pde: eigenfunction vanishes on the samples");
    out.lambda_hat(k) = -Phi.col(k).dot(GPhi.col(k)) / nn;
    out.value += (GPhi.col(k) + out.lambda_hat(k) * Phi.col(k)).squaredNorm() / N;
  }
  return out;
}

Eigen::MatrixXd grad_eig_analytic(const std::vector<NystromParts>& parts,
                                  const NystromMatrices& aggregated,
                                  double lambda,
                                  const Eigen::VectorXd& mu,
                                  const Eigen::MatrixXd& A)
{
  const Eigen::Index L = static_cast<Eigen::Index>(parts.size());
  const Eigen::Index r = mu.size();
  if (A.cols() != r)
    throw std::invalid_argument("grad_eig_analytic: mu and A disagree on r");
  const double N = static_cast<double>(aggregated.C.rows());
  const bool has_J = aggregated.J.size() > 0;
  Eigen::MatrixXd Cb = aggregated.C * A;
  Eigen::MatrixXd Jb = has_J ? Eigen::MatrixXd(aggregated.J * A) : Eigen::MatrixXd();
  Eigen::MatrixXd grad(L, r);
  for (Eigen::Index l = 0; l < L; ++l) {
    const auto& p = parts[l];
    Eigen::MatrixXd Cl = p.C * A;
    Eigen::MatrixXd Wl = 0.5 * (p.W + p.W.transpose());
    for (Eigen::Index k = 0; k < r; ++k) {
      double dS = 2.0 * Cl.col(k).dot(Cb.col(k)) / N;
      double dL = lambda * A.col(k).dot(Wl * A.col(k));
      if (has_J)
        dL += 2.0 * (p.J * A.col(k)).dot(Jb.col(k)) / N;
      grad(l, k) = dS - mu(k) * dL;
    }
  }
  return grad;
}

FdGradient grad_finite_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x,
                                  double h)
{
  FdGradient out;
  out.grad.resize(x.size());
  std::optional<double> f0;
  auto center = [&] {
    if (!f0)
      f0 = f(x);
    return *f0;
  };
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    std::optional<double> fp, fm;
    try {
      fp = f(xp);
    } catch (const NumericalError&) {
    }
    try {
      fm = f(xm);
    } catch (const NumericalError&) {
    }
    if (fp && fm) {
      out.grad(i) = (*fp - *fm) / (2.0 * h);
    } else if (fp) {
      out.grad(i) = (*fp - center()) / h;
      out.one_sided.push_back(static_cast<int>(i));
    } else if (fm) {
      out.grad(i) = (center() - *fm) / h;
      out.one_sided.push_back(static_cast<int>(i));
    } else {
      throw NumericalError("objective failed on both sides of a finite-difference probe");
    }
  }
  return out;
}

void adam_step(AdamState& state,
               Eigen::VectorXd& x,
               const Eigen::VectorXd& grad,
               double lr,
               double clip_norm,
               double beta1,
               double beta2,
               double eps)
{
  if (grad.size() != x.size())
    throw std::invalid_argument("adam_step: gradient and parameters differ in size");
  if (state.m.size() != x.size()) {
    state.m = Eigen::VectorXd::Zero(x.size());
    state.v = Eigen::VectorXd::Zero(x.size());
    state.t = 0;
  }
  Eigen::VectorXd g = grad;
  double gn = g.norm();
  if (clip_norm > 0.0 && gn > clip_norm)
    g *= clip_norm / gn;
  ++state.t;
  state.m = beta1 * state.m + (1.0 - beta1) * g;
  state.v = beta2 * state.v + (1.0 - beta2) * g.cwiseProduct(g);
  Eigen::ArrayXd mhat = state.m.array() / (1.0 - std::pow(beta1, state.t));
  Eigen::ArrayXd vhat = state.v.array() / (1.0 - std::pow(beta2, state.t));
  x.array() -= lr * mhat / (vhat.sqrt() + eps);
}

VmklResult run_vmkl(const Eigen::MatrixXd& X,
                    const Eigen::MatrixXd& Z,
                    const std::vector<KernelSpec>& dictionary,
                    const OuterConfig& config,
                    const Generator* generator)
{
  config.validate();
  if (dictionary.empty())
    throw std::invalid_argument("VMKL needs a nonempty kernel dictionary");
  if (config.zeta > 0.0 && generator == nullptr)
    throw std::invalid_argument("generator residual requested but no generator supplied");
  if (Z.rows() < config.r + 1)
    throw std::invalid_argument("VMKL needs at least r+1 landmarks");

  VmklObjective obj(X, Z, dictionary, config, generator);
  const Eigen::Index L = static_cast<Eigen::Index>(dictionary.size());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(L);
  AdamState adam;
  VmklResult res;
  VmklEval best;
  double best_loss = std::numeric_limits<double>::infinity();

  for (int t = 0; t <= config.iterations; ++t) {
    VmklEval e = obj.evaluate(u);
    e.row.iteration = t;
    res.trace.push_back(e.row);
    if (e.row.total < best_loss) {
      best_loss = e.row.total;
      best = e;
      res.best_iteration = t;
    }
    if (t == config.iterations)
      break;

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(L);
    if (config.tau > 0.0) {
      if (e.gap_ok) {
        Eigen::MatrixXd dmu = grad_eig_analytic(obj.parts(), e.matrices, config.lambda,
                                                e.gevp.mu.head(config.r),
                                                e.gevp.A.leftCols(config.r));
        Eigen::VectorXd dbeta = -config.tau * dmu.rowwise().sum();
        grad += mixture_jacobian(e.weights).transpose() * dbeta;
      } else {
        ++res.fd_fallbacks;
        grad += grad_finite_difference(
                  [&](const Eigen::VectorXd& v) { return config.tau * obj.evaluate(v).row.eig; },
                  u, config.fd_step)
                  .grad;
      }
    }
    if (obj.has_rest()) {
      grad += grad_finite_difference(
                [&](const Eigen::VectorXd& v) { return obj.rest(obj.evaluate(v).row); }, u,
                config.fd_step)
                .grad;
    }
    adam_step(adam, u, grad, config.learning_rate, config.clip_norm);
  }

  res.weights = best.weights;
  GaugeResult gf = gauge_fix(best.Phi_raw);
  if (gf.kept.empty())
    throw NumericalError("VMKL eigenfunctions are constant on the samples");
  res.solution = EigenSolution{ best.gevp.mu.head(config.r), best.gevp.A.leftCols(config.r), gf.Phi,
                                gf.kept };
  return res;
}

Eigen::VectorXd varrff_bandwidths(double sigma_cv, const Eigen::VectorXd& theta)
{
  return sigma_cv * theta.array().tanh().exp().matrix();
}

VarRffResult run_varrff(const Eigen::MatrixXd& X, const VarRffConfig& config, std::uint64_t seed)
{
  if (!(config.sigma_cv > 0.0))
    throw std::invalid_argument("VarRFF needs a positive anchor bandwidth");
  if (config.iterations < 0 || config.r < 1 || config.r >= config.p_rff)
    throw std::invalid_argument("invalid VarRFF settings");
  const Eigen::Index d = X.cols();
  const RffBasis unit =
    sample_basis(KernelSpec(KernelFamily::Matern32, 1.0), config.p_rff, static_cast<int>(d), seed);

  struct Eval
  {
    GevpResult gevp;
    RffBasis basis;
    TraceRow row;
  };
  auto evaluate = [&](const Eigen::VectorXd& theta) {
    Eval e;
    Eigen::VectorXd sigma = varrff_bandwidths(config.sigma_cv, theta);
    e.basis = rescale_anisotropic(unit, sigma);
    OperatorPair pair = operator_pair_from_grams(rff_grams(e.basis, X), config.lambda);
    e.gevp = solve_gevp(pair, config.r);
    e.row.eig = loss_eig(e.gevp.mu);
    e.row.rkhs = loss_rkhs(e.gevp.A);
    e.row.total = e.row.eig + config.rkhs_weight * e.row.rkhs;
    if (!std::isfinite(e.row.total))
      throw NumericalError("VarRFF objective is not finite");
    e.row.params = sigma;
    return e;
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  AdamState adam;
  VarRffResult res;
  Eval best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int t = 0; t <= config.iterations; ++t) {
    Eval e = evaluate(theta);
    e.row.iteration = t;
    res.trace.push_back(e.row);
    if (e.row.total < best_loss) {
      best_loss = e.row.total;
      best = e;
      res.best_iteration = t;
    }
    if (t == config.iterations)
      break;
    FdGradient g = grad_finite_difference(
      [&](const Eigen::VectorXd& v) { return evaluate(v).row.total; }, theta, config.fd_step);
    adam_step(adam, theta, g.grad, config.learning_rate, config.clip_norm);
  }

  res.sigma = best.row.params;
  res.basis = best.basis;
  res.solution = lift_and_fix(best.gevp, features(best.basis, X));
  return res;
}

} // namespace kdm
