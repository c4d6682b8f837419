#pragma once

#include "kdm/kernels.hpp"
#include "kdm/operators.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kdm {

inline constexpr double kGapCap = 1e12;

enum class CvRule
{
  Eigsum,
  Rayleigh,
  Gap
};

std::string_view rule_name(CvRule rule);
CvRule rule_from_name(std::string_view name);

struct CvCandidate
{
  KernelSpec spec;
  int index = 0;       // position in the grid
  int sigma_index = 0; // position along the bandwidth axis
};

struct CvOptions
{
  std::vector<KernelFamily> families{ kAllFamilies.begin(), kAllFamilies.end() };
  int n_sigma = 10;
  double lo_exp = -1.0;
  double hi_exp = 2.0;
  int folds = 3;
  int r = 4;
  double lambda = kDefaultLambda;
  int p_rff = kDefaultRffFeatures;
  std::uint64_t seed = 42;
  unsigned threads = 0;
};

struct CandidateScore
{
  Eigen::MatrixXd fold_eigenvalues; // F×(r+1), per-fold top eigenvalues
  Eigen::VectorXd fold_eigsum;
  Eigen::VectorXd fold_rayleigh;
  Eigen::VectorXd fold_gap;
  double eigsum = 0.0;
  double rayleigh = 0.0;
  double gap = 0.0;
  bool failed = false;
  bool gap_capped = false;
  std::string message;

  double score(CvRule rule) const;
};

struct CvResult
{
  CvOptions options;
  double median_distance = 0.0;
  std::vector<CvCandidate> grid;
  std::vector<CandidateScore> scores;
  std::vector<std::vector<int>> folds;
};

// Median Euclidean distance over all pairs of an evenly strided subsample of
// at most max_points rows.
double median_pairwise_distance(const Eigen::MatrixXd& X, int max_points = 1000);

std::vector<CvCandidate> make_grid(const Eigen::MatrixXd& X,
                                   const std::vector<KernelFamily>& families,
                                   int n_sigma,
                                   double lo_exp,
                                   double hi_exp);

// Bandwidths of the grid for a given median distance.
std::vector<double> grid_bandwidths(double median, int n_sigma, double lo_exp, double hi_exp);

// Random permutation of 0..N-1 cut into F contiguous blocks.
std::vector<std::vector<int>> make_folds(int N, int F, std::uint64_t seed);

// All three scores for one candidate. Each fold f uses its own RFF basis,
// shared by the eigenvalue-sum evaluation (operators on fold f alone) and the
// held-out Rayleigh evaluation (train on the other folds, test on fold f).
CandidateScore score_candidate(const CvCandidate& candidate,
                               const Eigen::MatrixXd& X,
                               const std::vector<std::vector<int>>& folds,
                               const CvOptions& options);

double score_eigsum(const CvCandidate& candidate,
                    const Eigen::MatrixXd& X,
                    const std::vector<std::vector<int>>& folds,
                    const CvOptions& options);
double score_rayleigh(const CvCandidate& candidate,
                      const Eigen::MatrixXd& X,
                      const std::vector<std::vector<int>>& folds,
                      const CvOptions& options);
double score_gap(const CvCandidate& candidate,
                 const Eigen::MatrixXd& X,
                 const std::vector<std::vector<int>>& folds,
                 const CvOptions& options);

// μ_r/μ_{r+1} with the denominator guard; sets `capped` when the cap applies.
double gap_ratio(const Eigen::VectorXd& mu, int r, bool* capped = nullptr);

CvResult run_cv(const Eigen::MatrixXd& X, const CvOptions& options);

// Argmax of the rule's mean score. Ties go to the smaller bandwidth, then to
// the earlier family. Throws if every candidate failed.
int select(const CvResult& result, CvRule rule);

// Seed of the RFF basis used for a candidate family on fold f.
std::uint64_t cv_basis_seed(std::uint64_t master, KernelFamily family, int fold);

} // namespace kdm
