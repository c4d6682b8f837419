#include "kdm/cv.hpp"
#include "kdm/eigsolve.hpp"
#include "kdm/errors.hpp"
#include "kdm/parallel.hpp"
#include "kdm/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace kdm {

namespace {

constexpr double kGapDenominatorFloor = 1e-14;

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, const std::vector<int>& idx)
{
  return X(idx, Eigen::all);
}

void check_folds(const std::vector<std::vector<int>>& folds, int r)
{
  if (folds.size() < 2)
    throw std::invalid_argument("cross-validation needs at least two folds");
  for (const auto& f : folds) {
    if (static_cast<int>(f.size()) < r + 1)
      throw std::invalid_argument("every fold needs at least r+1 samples");
  }
}

} // namespace

std::string_view rule_name(CvRule rule)
{
  switch (rule) {
    case CvRule::Eigsum:
      return "eigsum";
    case CvRule::Rayleigh:
      return "rayleigh";
    case CvRule::Gap:
      return "gap";
  }
  throw std::invalid_argument("unknown CV rule");
}

CvRule rule_from_name(std::string_view name)
{
  for (auto r : { CvRule::Eigsum, CvRule::Rayleigh, CvRule::Gap }) {
    if (rule_name(r) == name)
      return r;
  }
  throw std::invalid_argument("unknown CV rule '" + std::string(name) + "'");
}

double CandidateScore::score(CvRule rule) const
{
  if (failed)
    return -std::numeric_limits<double>::infinity();
  switch (rule) {
    case CvRule::Eigsum:
      return eigsum;
    case CvRule::Rayleigh:
      return rayleigh;
    case CvRule::Gap:
      return gap;
  }
  throw std::invalid_argument("unknown CV rule");
}

double median_pairwise_distance(const Eigen::MatrixXd& X, int max_points)
{
  const Eigen::Index N = X.rows();
  if (N < 2)
    throw std::invalid_argument("median pairwise distance needs N >= 2");
  const Eigen::Index n = std::min<Eigen::Index>(N, max_points);
  std::vector<Eigen::Index> idx(n);
  for (Eigen::Index k = 0; k < n; ++k)
    idx[k] = (k * N) / n;
  std::vector<double> dist;
  dist.reserve(n * (n - 1) / 2);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b)
      dist.push_back((X.row(idx[a]) - X.row(idx[b])).norm());
  }
  const std::size_t m = dist.size();
  std::nth_element(dist.begin(), dist.begin() + m / 2, dist.end());
  double med = dist[m / 2];
  if (m % 2 == 0) {
    double lower = *std::max_element(dist.begin(), dist.begin() + m / 2);
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0))
    throw std::invalid_argument("degenerate data: median pairwise distance is zero");
  return med;
}

std::vector<double> grid_bandwidths(double median, int n_sigma, double lo_exp, double hi_exp)
{
  if (n_sigma < 1)
    throw std::invalid_argument("bandwidth grid needs at least one value");
  std::vector<double> s(n_sigma);
  for (int k = 0; k < n_sigma; ++k) {
    double t = n_sigma == 1 ? 0.0 : static_cast<double>(k) / (n_sigma - 1);
    s[k] = median * std::pow(10.0, lo_exp + t * (hi_exp - lo_exp));
  }
  return s;
}

std::vector<CvCandidate> make_grid(const Eigen::MatrixXd& X,
                                   const std::vector<KernelFamily>& families,
                                   int n_sigma,
                                   double lo_exp,
                                   double hi_exp)
{
  auto sigmas = grid_bandwidths(median_pairwise_distance(X), n_sigma, lo_exp, hi_exp);
  std::vector<CvCandidate> grid;
  for (auto f : families) {
    for (int k = 0; k < n_sigma; ++k)
      grid.push_back(CvCandidate{ KernelSpec(f, sigmas[k]), static_cast<int>(grid.size()), k });
  }
  return grid;
}

std::vector<std::vector<int>> make_folds(int N, int F, std::uint64_t seed)
{
  if (F < 2 || F > N)
    throw std::invalid_argument("fold count must lie in [2, N]");
  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed_stream(seed, "cv-folds"));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<int>> folds(F);
  int start = 0;
  for (int f = 0; f < F; ++f) {
    int size = N / F + (f < N % F ? 1 : 0);
    folds[f].assign(perm.begin() + start, perm.begin() + start + size);
    start += size;
  }
  return folds;
}

std::uint64_t cv_basis_seed(std::uint64_t master, KernelFamily family, int fold)
{
  return seed_stream(master, "cv-basis",
                     { static_cast<std::uint64_t>(family), static_cast<std::uint64_t>(fold) });
}

double gap_ratio(const Eigen::VectorXd& mu, int r, bool* capped)
{
  if (mu.size() < r + 1)
    throw std::invalid_argument("gap ratio needs r+1 eigenvalues");
  double num = mu(r - 1), den = mu(r);
  bool cap = !(den > kGapDenominatorFloor) || num / den > kGapCap;
  if (capped)
    *capped = cap;
  return cap ? kGapCap : num / den;
}

CandidateScore score_candidate(const CvCandidate& candidate,
                               const Eigen::MatrixXd& X,
                               const std::vector<std::vector<int>>& folds,
                               const CvOptions& options)
{
  const int F = static_cast<int>(folds.size());
  const int r = options.r;
  check_folds(folds, r);
  if (r + 1 > options.p_rff)
    throw std::invalid_argument("p_rff must exceed r");

  CandidateScore out;
  out.fold_eigenvalues.resize(F, r + 1);
  out.fold_eigsum.resize(F);
  out.fold_rayleigh.resize(F);
  out.fold_gap.resize(F);
  try {
    for (int f = 0; f < F; ++f) {
      RffBasis basis = sample_basis(candidate.spec, options.p_rff, static_cast<int>(X.cols()),
                                    cv_basis_seed(options.seed, candidate.spec.family(), f));
      RffGrams all = rff_grams(basis, X);
      RffGrams test = rff_grams(basis, rows_of(X, folds[f]));
      OperatorPair test_pair = operator_pair_from_grams(test, options.lambda);
      OperatorPair train_pair = operator_pair_from_grams(complement(all, test), options.lambda);

      Eigen::VectorXd mu = gevp_eigenvalues(test_pair, r + 1);
      out.fold_eigenvalues.row(f) = mu.transpose();
      out.fold_eigsum(f) = mu.head(r).sum();
      bool capped = false;
      out.fold_gap(f) = gap_ratio(mu, r, &capped);
      out.gap_capped = out.gap_capped || capped;

      GevpResult train = solve_gevp(train_pair, r);
      double acc = 0.0;
      for (int k = 0; k < r; ++k) {
        const auto a = train.A.col(k);
        acc += a.dot(test_pair.Sigma * a) / a.dot(test_pair.Llam * a);
      }
      out.fold_rayleigh(f) = acc / r;
    }
    out.eigsum = out.fold_eigsum.mean();
    out.rayleigh = out.fold_rayleigh.mean();
    out.gap = out.fold_gap.mean();
    if (!std::isfinite(out.eigsum) || !std::isfinite(out.rayleigh) || !std::isfinite(out.gap))
      throw NumericalError("non-finite CV score");
  } catch (const NumericalError& e) {
    out.failed = true;
    out.message = e.what();
  }
  return out;
}

double score_eigsum(const CvCandidate& candidate,
                    const Eigen::MatrixXd& X,
                    const std::vector<std::vector<int>>& folds,
                    const CvOptions& options)
{
  return score_candidate(candidate, X, folds, options).score(CvRule::Eigsum);
}

double score_rayleigh(const CvCandidate& candidate,
                      const Eigen::MatrixXd& X,
                      const std::vector<std::vector<int>>& folds,
                      const CvOptions& options)
{
  return score_candidate(candidate, X, folds, options).score(CvRule::Rayleigh);
}

double score_gap(const CvCandidate& candidate,
                 const Eigen::MatrixXd& X,
                 const std::vector<std::vector<int>>& folds,
                 const CvOptions& options)
{
  return score_candidate(candidate, X, folds, options).score(CvRule::Gap);
}

CvResult run_cv(const Eigen::MatrixXd& X, const CvOptions& options)
{
  CvResult res;
  res.options = options;
  res.median_distance = median_pairwise_distance(X);
  res.grid = make_grid(X, options.families, options.n_sigma, options.lo_exp, options.hi_exp);
  res.folds = make_folds(static_cast<int>(X.rows()), options.folds, options.seed);
  res.scores.resize(res.grid.size());
  parallel_for(
    res.grid.size(),
    [&](std::size_t i) { res.scores[i] = score_candidate(res.grid[i], X, res.folds, options); },
    options.threads);
  return res;
}

int select(const CvResult& result, CvRule rule)
{
  int best = -1;
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    const auto& s = result.scores[i];
    if (s.failed)
      continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    double a = s.score(rule), b = result.scores[best].score(rule);
    const auto& ci = result.grid[i].spec;
    const auto& cb = result.grid[best].spec;
    bool better = a > b;
    if (a == b) {
      if (ci.sigma() != cb.sigma())
        better = ci.sigma() < cb.sigma();
      else
        better = static_cast<int>(ci.family()) < static_cast<int>(cb.family());
    }
    if (better)
      best = static_cast<int>(i);
  }
  if (best < 0)
    throw NumericalError("every CV candidate failed");
  return best;
}

} // namespace kdm
