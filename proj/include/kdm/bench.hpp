#pragma once

#include "kdm/expansion.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

namespace kdm {

inline constexpr int kGridNodes = 4000;
inline constexpr double kGridLo = -2.5;
inline constexpr double kGridHi = 2.5;
inline constexpr double kAsymmetricTilt = 0.25;
inline constexpr double kFastVariance = 0.04;

//! Finite-difference discretization of the 1D Langevin generator
//! (Gf)(x) = −V′(x)f′(x) + f″(x) on a uniform grid with reflecting ends.
//!
//! The stencil is written in flux form, (Gf)_i = e^{V_i}[a_{i+½}(f_{i+1} − f_i)
//! − a_{i−½}(f_i − f_{i−1})]/h² with a = e^{−V} at the midpoints, which keeps
//! it self-adjoint under the weights e^{−V_i}. The similarity transform
//! M = Π^{1/2} G Π^{−1/2} is symmetric tridiagonal.
struct LangevinGrid
{
  Eigen::VectorXd nodes;
  double h = 0.0;
  Eigen::VectorXd V;
  Eigen::VectorXd diag;    // diagonal of M
  Eigen::VectorXd offdiag; // sub/super diagonal of M

  Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
};

struct GridEigenpairs
{
  Eigen::VectorXd rates;     // λ_0 ≤ λ_1 ≤ …, where G e_j = −λ_j e_j
  Eigen::MatrixXd functions; // grid values of e_j, columns
  Eigen::MatrixXd symmetric_vectors; // orthonormal eigenvectors of M
};

LangevinGrid make_langevin_grid(const std::function<double(double)>& V,
                                double lo,
                                double hi,
                                int nodes);

// The k eigenpairs of G closest to zero (k = node count gives all).
GridEigenpairs grid_eigenpairs(const LangevinGrid& grid, int k);

// Piecewise-linear interpolation, clamped to the end values outside the grid.
Eigen::VectorXd interpolate(const Eigen::VectorXd& nodes,
                            const Eigen::VectorXd& values,
                            const Eigen::VectorXd& x);

double double_well_potential(double x, double tilt = 0.0);

class Generator
{
public:
  virtual ~Generator() = default;
  // G applied to each function of the expansion, evaluated at the rows of X.
  virtual Eigen::MatrixXd apply(const Expansion& f, const Eigen::MatrixXd& X) const = 0;
};

// Ornstein-Uhlenbeck generator −(Ax)·∇f + Δf with A = diag(α).
class OuGenerator : public Generator
{
public:
  explicit OuGenerator(Eigen::VectorXd alphas);
  Eigen::MatrixXd apply(const Expansion& f, const Eigen::MatrixXd& X) const override;
  const Eigen::VectorXd& alphas() const { return alphas_; }

private:
  Eigen::VectorXd alphas_;
};

// 1D Langevin generator through the grid stencil.
class GridGenerator : public Generator
{
public:
  explicit GridGenerator(LangevinGrid grid);
  // Evaluates f on the grid nodes, applies G_h, interpolates back to X.
  Eigen::MatrixXd apply(const Expansion& f, const Eigen::MatrixXd& X) const override;
  // Same from sample values only: f' and f'' come from local cubic fits
  // over the 21 nearest samples.
  Eigen::MatrixXd apply_samples(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& X) const;
  const LangevinGrid& grid() const { return grid_; }

private:
  LangevinGrid grid_;
};

//! Sample matrix with gauge-fixed reference eigenfunctions.
struct BenchmarkDataset
{
  std::string problem;
  nlohmann::json params;
  std::uint64_t seed = 0;
  Eigen::MatrixXd X;
  Eigen::MatrixXd phi_star;
  Eigen::VectorXd reference_rates; // generator eigenvalues of the references, if known
  std::shared_ptr<const Generator> generator;

  int r() const { return static_cast<int>(phi_star.cols()); }
  nlohmann::json metadata() const;
};

// Multi-indices of the first r nonconstant OU eigenfunctions, ordered by
// Σ n_j α_j with lexicographic ties.
std::vector<std::vector<int>> ou_multi_indices(const Eigen::VectorXd& alphas, int r);

// Probabilists' Hermite polynomial He_n.
double hermite_he(int n, double x);

// Π_j He_{n_j}(√α_j x_j) for each multi-index, with exact derivatives.
class OuReferenceExpansion : public Expansion
{
public:
  OuReferenceExpansion(Eigen::VectorXd alphas, std::vector<std::vector<int>> indices);

  Eigen::Index dimension() const override { return alphas_.size(); }
  Eigen::Index size() const override { return static_cast<Eigen::Index>(indices_.size()); }
  Eigen::MatrixXd values(const Eigen::MatrixXd& pts) const override;
  Eigen::MatrixXd gradients(const Eigen::MatrixXd& pts) const override;
  Eigen::MatrixXd laplacians(const Eigen::MatrixXd& pts) const override;

private:
  Eigen::VectorXd alphas_;
  std::vector<std::vector<int>> indices_;
};

BenchmarkDataset gen_ou(const Eigen::VectorXd& alphas, int N, std::uint64_t seed, int r = 4);
BenchmarkDataset gen_doublewell(int N, std::uint64_t seed, bool asymmetric, int r = 4);
BenchmarkDataset gen_circle(int N, double noise_sigma, std::uint64_t seed);
BenchmarkDataset gen_mdlike(int d_slow, int d_fast, int N, std::uint64_t seed);

// Draws from the density ∝ exp(−V) by inverse CDF on the grid.
Eigen::VectorXd sample_potential(const LangevinGrid& grid, int n, std::uint64_t seed);

// Dispatch by problem name: ou1d, ou2d, ou3d, ou, dw1d, adw1d, circle, mdlike.
// Missing params take the benchmark defaults.
BenchmarkDataset generate(const std::string& problem,
                          const nlohmann::json& params,
                          int N,
                          std::uint64_t seed);
BenchmarkDataset generate_from_metadata(const nlohmann::json& meta);
std::vector<std::string> problem_names();

// G applied to the expansion at the samples. Throws for problems without a
// generator.
Eigen::MatrixXd apply_generator(const BenchmarkDataset& data, const Expansion& f);

} // namespace kdm
