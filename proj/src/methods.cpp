#include "kdm/methods.hpp"
#include "kdm/errors.hpp"
#include "kdm/seeding.hpp"

#include <stdexcept>

namespace kdm {

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v)
{
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json selections_json(const CvResult& cv)
{
  nlohmann::json j;
  for (auto rule : { CvRule::Eigsum, CvRule::Rayleigh, CvRule::Gap }) {
    int idx = select(cv, rule);
    j[std::string(rule_name(rule))] = cv.grid[idx].spec.to_json();
  }
  return j;
}

std::vector<KernelSpec> gaussian_dictionary(const Eigen::MatrixXd& X,
                                            int L,
                                            const MethodOptions& options)
{
  std::vector<KernelSpec> dict;
  for (double s : grid_bandwidths(median_pairwise_distance(X), L, options.lo_exp, options.hi_exp))
    dict.emplace_back(KernelFamily::Gaussian, s);
  return dict;
}

nlohmann::json dictionary_json(const std::vector<KernelSpec>& dict)
{
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : dict)
    j.push_back(s.sigma());
  return j;
}

} // namespace

std::string_view method_name(MethodTag m)
{
  switch (m) {
    case MethodTag::CvRff:
      return "cv-rff";
    case MethodTag::UniformNystrom:
      return "uniform-nystrom";
    case MethodTag::UniformRff:
      return "uniform-rff";
    case MethodTag::Vmkl:
      return "vmkl";
    case MethodTag::VarRff:
      return "varrff";
  }
  throw std::invalid_argument("unknown method");
}

MethodTag method_from_name(std::string_view name)
{
  for (auto m : { MethodTag::CvRff, MethodTag::UniformNystrom, MethodTag::UniformRff,
                  MethodTag::Vmkl, MethodTag::VarRff }) {
    if (method_name(m) == name)
      return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

double default_lambda(const std::string& problem)
{
  return problem == "circle" ? 0.005 : kDefaultLambda;
}

int default_p_rff(int d)
{
  return d >= 20 ? 400 : kDefaultRffFeatures;
}

std::uint64_t fit_basis_seed(std::uint64_t seed)
{
  return seed_stream(seed, "fit-basis");
}

CvOptions make_cv_options(const MethodOptions& options, std::uint64_t seed)
{
  CvOptions c;
  c.n_sigma = options.n_sigma;
  c.lo_exp = options.lo_exp;
  c.hi_exp = options.hi_exp;
  c.folds = options.folds;
  c.r = options.r;
  c.lambda = options.lambda;
  c.p_rff = options.p_rff;
  c.seed = seed;
  c.threads = options.threads;
  return c;
}

CvResult run_method_cv(const Eigen::MatrixXd& X, const MethodOptions& options, std::uint64_t seed)
{
  return run_cv(X, make_cv_options(options, seed));
}

EigenSolution fit_rff_spec(const Eigen::MatrixXd& X,
                           const KernelSpec& spec,
                           int r,
                           double lambda,
                           int p_rff,
                           std::uint64_t seed)
{
  RffBasis basis = sample_basis(spec, p_rff, static_cast<int>(X.cols()), fit_basis_seed(seed));
  OperatorPair pair = operator_pair_from_grams(rff_grams(basis, X), lambda);
  return solve_and_lift(pair, features(basis, X), r);
}

FitResult fit_method(MethodTag method,
                     const BenchmarkDataset& data,
                     const MethodOptions& options,
                     std::uint64_t seed)
{
  const Eigen::MatrixXd& X = data.X;
  FitResult out;
  out.method = method;
  out.details["method"] = std::string(method_name(method));
  out.details["r"] = options.r;
  out.details["lambda"] = options.lambda;

  auto cv_result = [&]() -> const CvResult& {
    if (options.cv)
      return *options.cv;
    out.cv = run_method_cv(X, options, seed);
    return *out.cv;
  };

  switch (method) {
    case MethodTag::CvRff: {
      const CvResult& cv = cv_result();
      const KernelSpec& spec = cv.grid[select(cv, options.rule)].spec;
      out.solution = fit_rff_spec(X, spec, options.r, options.lambda, options.p_rff, seed);
      out.details["rule"] = std::string(rule_name(options.rule));
      out.details["selected"] = spec.to_json();
      out.details["selections"] = selections_json(cv);
      out.details["median_distance"] = cv.median_distance;
      out.details["p_rff"] = options.p_rff;
      break;
    }
    case MethodTag::UniformRff: {
      auto dict = gaussian_dictionary(X, options.uniform_kernels, options);
      RffBasis basis = sample_mixture_basis(dict, options.p_rff, static_cast<int>(X.cols()),
                                            fit_basis_seed(seed));
      OperatorPair pair = operator_pair_from_grams(rff_grams(basis, X), options.lambda);
      out.solution = solve_and_lift(pair, features(basis, X), options.r);
      out.details["bandwidths"] = dictionary_json(dict);
      out.details["p_rff"] = options.p_rff;
      break;
    }
    case MethodTag::UniformNystrom: {
      auto dict = gaussian_dictionary(X, options.uniform_kernels, options);
      Eigen::MatrixXd Z =
        kmeans_landmarks(X, options.landmarks, seed_stream(seed, "landmarks"));
      Eigen::VectorXd beta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dict.size()),
                                                       1.0 / static_cast<double>(dict.size()));
      NystromMatrices m = aggregate_mixture(build_nystrom(dict, X, Z, true), beta, Z);
      out.solution = solve_and_lift(operator_pair_nystrom(m, options.lambda), m.C, options.r);
      out.details["bandwidths"] = dictionary_json(dict);
      out.details["landmarks"] = options.landmarks;
      break;
    }
    case MethodTag::Vmkl: {
      auto dict = gaussian_dictionary(X, options.vmkl_kernels, options);
      Eigen::MatrixXd Z =
        kmeans_landmarks(X, options.landmarks, seed_stream(seed, "landmarks"));
      OuterConfig cfg = options.outer ? *options.outer : OuterConfig::preset(options.ablation);
      cfg.r = options.r;
      cfg.lambda = options.lambda;
      const Generator* gen = cfg.zeta > 0.0 ? data.generator.get() : nullptr;
      if (cfg.zeta > 0.0 && gen == nullptr)
        throw std::invalid_argument("problem '" + data.problem +
                                    "' has no generator; set zeta = 0");
      VmklResult res = run_vmkl(X, Z, dict, cfg, gen);
      out.solution = res.solution;
      out.trace = res.trace;
      out.details["ablation"] = options.outer ? "custom" : std::string(ablation_name(options.ablation));
      out.details["bandwidths"] = dictionary_json(dict);
      out.details["beta"] = vec_json(res.weights.beta);
      out.details["best_iteration"] = res.best_iteration;
      out.details["fd_fallbacks"] = res.fd_fallbacks;
      out.details["weights"] = { { "tau", cfg.tau },     { "alpha", cfg.alpha }, { "gamma", cfg.gamma },
                                 { "zeta", cfg.zeta },   { "rho", cfg.rho },     { "eta", cfg.eta },
                                 { "iterations", cfg.iterations }, { "lr", cfg.learning_rate } };
      break;
    }
    case MethodTag::VarRff: {
      VarRffConfig cfg = options.varrff;
      cfg.r = options.r;
      cfg.lambda = options.lambda;
      cfg.p_rff = options.p_rff;
      if (options.sigma_cv) {
        cfg.sigma_cv = *options.sigma_cv;
      } else {
        const CvResult& cv = cv_result();
        cfg.sigma_cv = cv.grid[select(cv, options.rule)].spec.sigma();
      }
      VarRffResult res = run_varrff(X, cfg, fit_basis_seed(seed));
      out.solution = res.solution;
      out.trace = res.trace;
      out.details["sigma_cv"] = cfg.sigma_cv;
      out.details["sigma"] = vec_json(res.sigma);
      out.details["best_iteration"] = res.best_iteration;
      out.details["p_rff"] = options.p_rff;
      break;
    }
  }
  out.details["mu"] = vec_json(out.solution.mu);
  return out;
}

MetricReport evaluate(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& PhiStar)
{
  if (Phi.rows() != PhiStar.rows())
    throw std::invalid_argument("evaluate: fit and reference differ in sample count");
  MetricReport rep;
  SubspaceScore s = subr2(Phi, PhiStar);
  rep.subr2 = s.subr2;
  rep.cosines = Eigen::VectorXd::Zero(PhiStar.cols());
  rep.cosines.head(s.cosines.size()) = s.cosines;
  rep.dropped_modes = static_cast<int>(PhiStar.cols() - Phi.cols());
  if (PhiStar.cols() <= 8) {
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(Phi.rows(), PhiStar.cols());
    padded.leftCols(std::min(Phi.cols(), PhiStar.cols())) =
      Phi.leftCols(std::min(Phi.cols(), PhiStar.cols()));
    AlignmentReport a = align_and_corr(padded, PhiStar);
    rep.avg_abs_corr = a.avg_abs_corr;
    rep.permutation = a.permutation;
    rep.signs = a.signs;
  }
  return rep;
}

} // namespace kdm
