#pragma once

#include "kdm/bench.hpp"
#include "kdm/cv.hpp"
#include "kdm/eigsolve.hpp"
#include "kdm/metrics.hpp"
#include "kdm/outer.hpp"

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kdm {

enum class MethodTag
{
  CvRff,
  UniformNystrom,
  UniformRff,
  Vmkl,
  VarRff
};

std::string_view method_name(MethodTag m);
MethodTag method_from_name(std::string_view name);

struct MethodOptions
{
  int r = 4;
  double lambda = kDefaultLambda;
  int p_rff = kDefaultRffFeatures;
  int landmarks = kDefaultLandmarks;
  int uniform_kernels = 10;
  int vmkl_kernels = 5;
  CvRule rule = CvRule::Eigsum;
  int folds = 3;
  int n_sigma = 10;
  double lo_exp = -1.0;
  double hi_exp = 2.0;
  Ablation ablation = Ablation::Combined;
  // Overrides the ablation preset when set.
  std::optional<OuterConfig> outer;
  VarRffConfig varrff;
  // Reuse an earlier CV run on the same data (cv-rff, varrff).
  const CvResult* cv = nullptr;
  // Anchor bandwidth for varrff; taken from CV when absent.
  std::optional<double> sigma_cv;
  unsigned threads = 0;
};

struct FitResult
{
  MethodTag method = MethodTag::CvRff;
  EigenSolution solution;
  nlohmann::json details;
  std::vector<TraceRow> trace;
  std::optional<CvResult> cv; // set when the method ran its own CV
};

struct MetricReport
{
  double subr2 = 0.0;
  Eigen::VectorXd cosines;
  double avg_abs_corr = 0.0;
  std::vector<int> permutation;
  std::vector<int> signs;
  int dropped_modes = 0;
};

// Benchmark defaults: λ = 0.005 on the circle, 0.01 elsewhere; 400 features
// from d = 20 on, 300 below.
double default_lambda(const std::string& problem);
int default_p_rff(int d);

CvOptions make_cv_options(const MethodOptions& options, std::uint64_t seed);
CvResult run_method_cv(const Eigen::MatrixXd& X, const MethodOptions& options, std::uint64_t seed);

// Seed of the RFF basis used for the final fit (shared by cv-rff and varrff so
// a frozen VarRFF run reproduces the CV+RFF fit).
std::uint64_t fit_basis_seed(std::uint64_t seed);

// Fit on full data with one kernel spec through the RFF basis.
EigenSolution fit_rff_spec(const Eigen::MatrixXd& X,
                           const KernelSpec& spec,
                           int r,
                           double lambda,
                           int p_rff,
                           std::uint64_t seed);

FitResult fit_method(MethodTag method,
                     const BenchmarkDataset& data,
                     const MethodOptions& options,
                     std::uint64_t seed);

// SubR², principal cosines and correlation alignment against the reference.
MetricReport evaluate(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& PhiStar);

} // namespace kdm
