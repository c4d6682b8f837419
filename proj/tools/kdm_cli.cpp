// Command-line driver: dataset generation, bandwidth CV, fitting, evaluation
// and table reproduction.

#include "kdm/bench.hpp"
#include "kdm/cv.hpp"
#include "kdm/errors.hpp"
#include "kdm/io.hpp"
#include "kdm/methods.hpp"
#include "kdm/reproduce.hpp"
#include "kdm/version.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using kdm::format_double;

namespace {

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

std::string path_in(const std::string& dir, const std::string& name)
{
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw UsageError("cannot create output directory '" + dir + "': " + ec.message());
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void finish(kdm::RunManifest& manifest, const std::string& dir, std::chrono::steady_clock::time_point t0)
{
  manifest.wall_clock_seconds = seconds_since(t0);
  std::string path = path_in(dir, "manifest.json");
  manifest.outputs.push_back(path);
  manifest.write(path);
  std::cout << manifest.to_json().dump(2) << '\n';
}

//! Dataset on disk: dataset.json, X.csv and phi_star.csv in one directory.
struct LoadedData
{
  nlohmann::json meta;
  kdm::BenchmarkDataset data;
};

LoadedData load_dataset(const std::string& dir, bool need_generator)
{
  LoadedData out;
  out.meta = kdm::read_json(path_in(dir, "dataset.json"));
  kdm::BenchmarkDataset& d = out.data;
  d.problem = out.meta.value("problem", std::string());
  d.params = out.meta.value("params", nlohmann::json::object());
  d.seed = out.meta.value("seed", std::uint64_t{ 0 });
  d.X = kdm::read_matrix_csv(path_in(dir, "X.csv"));
  std::string ref = path_in(dir, "phi_star.csv");
  if (fs::exists(ref))
    d.phi_star = kdm::read_matrix_csv(ref);
  if (need_generator) {
    kdm::BenchmarkDataset regen = kdm::generate_from_metadata(out.meta);
    if (regen.X.rows() != d.X.rows() || regen.X.cols() != d.X.cols() || regen.X != d.X)
      throw UsageError("X.csv in '" + dir + "' does not match its dataset.json; cannot attach a generator");
    d.generator = regen.generator;
  }
  return out;
}

nlohmann::json cv_selection_json(const kdm::CvResult& cv, kdm::CvRule rule)
{
  nlohmann::json j;
  j["rule"] = std::string(kdm::rule_name(rule));
  j["selected"] = cv.grid[kdm::select(cv, rule)].spec.to_json();
  j["median_distance"] = cv.median_distance;
  nlohmann::json all;
  for (auto rr : { kdm::CvRule::Eigsum, kdm::CvRule::Rayleigh, kdm::CvRule::Gap })
    all[std::string(kdm::rule_name(rr))] = cv.grid[kdm::select(cv, rr)].spec.to_json();
  j["selections"] = all;
  j["options"] = { { "folds", cv.options.folds },   { "r", cv.options.r },
                   { "lambda", cv.options.lambda }, { "p_rff", cv.options.p_rff },
                   { "seed", cv.options.seed },     { "n_sigma", cv.options.n_sigma },
                   { "lo_exp", cv.options.lo_exp }, { "hi_exp", cv.options.hi_exp } };
  return j;
}

kdm::CsvWriter cv_scores_csv(const kdm::CvResult& cv)
{
  const int F = cv.options.folds;
  std::vector<std::string> header{ "family", "sigma", "sigma_index", "rule", "score" };
  for (int f = 0; f < F; ++f)
    header.push_back("fold" + std::to_string(f) + "_eigsum");
  header.insert(header.end(), { "failed", "gap_capped", "message" });
  kdm::CsvWriter w(header);
  for (std::size_t i = 0; i < cv.grid.size(); ++i) {
    const auto& c = cv.grid[i];
    const auto& s = cv.scores[i];
    for (auto rule : { kdm::CvRule::Eigsum, kdm::CvRule::Rayleigh, kdm::CvRule::Gap }) {
      std::vector<std::string> row{ std::string(kdm::family_name(c.spec.family())),
                                    format_double(c.spec.sigma()), std::to_string(c.sigma_index),
                                    std::string(kdm::rule_name(rule)),
                                    s.failed ? std::string() : format_double(s.score(rule)) };
      for (int f = 0; f < F; ++f)
        row.push_back(!s.failed && f < s.fold_eigsum.size() ? format_double(s.fold_eigsum(f)) : "");
      row.push_back(s.failed ? "1" : "0");
      row.push_back(s.gap_capped ? "1" : "0");
      row.push_back(s.message);
      w.add_row(std::move(row));
    }
  }
  return w;
}

void write_solution(const kdm::EigenSolution& sol, const std::string& dir, kdm::RunManifest& manifest)
{
  kdm::CsvWriter mu({ "k", "mu" });
  for (Eigen::Index k = 0; k < sol.mu.size(); ++k)
    mu.add_row({ std::to_string(k + 1), format_double(sol.mu(k)) });
  std::string mu_path = path_in(dir, "mu.csv");
  mu.write(mu_path);
  std::string phi_path = path_in(dir, "phi.csv");
  kdm::write_matrix_csv(phi_path, sol.Phi, {}, "phi");
  manifest.outputs.push_back(mu_path);
  manifest.outputs.push_back(phi_path);
}

void write_trace(const std::vector<kdm::TraceRow>& trace, const std::string& dir, kdm::RunManifest& manifest)
{
  if (trace.empty())
    return;
  const Eigen::Index P = trace.front().params.size();
  std::vector<std::string> header{ "iteration", "total", "eig", "sub", "rkhs", "pde", "omega" };
  for (Eigen::Index j = 0; j < P; ++j)
    header.push_back("param" + std::to_string(j));
  kdm::CsvWriter w(header);
  for (const auto& t : trace) {
    std::vector<std::string> row{ std::to_string(t.iteration), format_double(t.total), format_double(t.eig),
                                  format_double(t.sub),        format_double(t.rkhs),  format_double(t.pde),
                                  format_double(t.omega) };
    for (Eigen::Index j = 0; j < P; ++j)
      row.push_back(j < t.params.size() ? format_double(t.params(j)) : "");
    w.add_row(std::move(row));
  }
  std::string path = path_in(dir, "trace.csv");
  w.write(path);
  manifest.outputs.push_back(path);
}

std::vector<std::string> metric_header(int r)
{
  std::vector<std::string> h{ "problem", "method", "seed", "subr2", "avg_abs_corr" };
  for (int k = 1; k <= r; ++k)
    h.push_back("cos_" + std::to_string(k));
  return h;
}

void append_metric_row(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<std::string>& row)
{
  kdm::CsvWriter w(header);
  w.add_row(row);
  std::string text = w.str();
  if (fs::exists(path) && fs::file_size(path) > 0) {
    kdm::CsvTable existing = kdm::read_csv(path);
    if (existing.header != header)
      throw UsageError("'" + path + "' has a different column layout");
    text = text.substr(text.find('\n') + 1);
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out)
    throw UsageError("cannot append to '" + path + "'");
  out << text;
}

std::vector<std::uint64_t> parse_seeds(const std::vector<std::uint64_t>& given)
{
  if (!given.empty())
    return given;
  return { std::begin(kdm::kDefaultSeeds), std::end(kdm::kDefaultSeeds) };
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Kernelized diffusion maps with adaptive kernel selection" };
  app.set_version_flag("--version", std::string(kdm::kVersion));
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  // gen
  auto* gen = app.add_subcommand("gen", "Sample a benchmark dataset");
  std::string g_problem, g_out = "data";
  int g_n = 500, g_r = -1;
  std::uint64_t g_seed = 42;
  std::optional<double> g_alpha, g_alpha_x, g_alpha_y, g_noise;
  std::optional<int> g_d, g_d_slow, g_d_fast;
  std::vector<double> g_alphas;
  gen->add_option("--problem", g_problem, "ou1d | ou2d | ou3d | ou | dw1d | adw1d | circle | mdlike")->required();
  gen->add_option("--n", g_n, "Sample count")->check(CLI::PositiveNumber);
  gen->add_option("--seed", g_seed, "Master seed");
  gen->add_option("--r", g_r, "Number of reference eigenfunctions");
  gen->add_option("--alpha", g_alpha, "OU rate (ou1d)");
  gen->add_option("--alpha-x", g_alpha_x, "OU rate along x (ou2d)");
  gen->add_option("--alpha-y", g_alpha_y, "OU rate along y (ou2d)");
  gen->add_option("--alphas", g_alphas, "OU rates (ou3d, ou)")->delimiter(',');
  gen->add_option("--d", g_d, "Dimension (ou, rates 2^j)");
  gen->add_option("--noise", g_noise, "Radial noise (circle)");
  gen->add_option("--d-slow", g_d_slow, "Slow coordinates (mdlike)");
  gen->add_option("--d-fast", g_d_fast, "Fast coordinates (mdlike)");
  gen->add_option("--out", g_out, "Output directory");

  // cv
  auto* cv = app.add_subcommand("cv", "Cross-validate kernel family and bandwidth");
  std::string c_data, c_out = "cv", c_rule = "eigsum";
  int c_folds = 3, c_r = 4, c_p = -1;
  std::optional<double> c_lambda;
  std::uint64_t c_seed = 42;
  cv->add_option("--data", c_data, "Dataset directory")->required();
  cv->add_option("--rule", c_rule, "eigsum | rayleigh | gap");
  cv->add_option("--folds", c_folds)->check(CLI::Range(2, 1000));
  cv->add_option("--r", c_r)->check(CLI::PositiveNumber);
  cv->add_option("--lambda", c_lambda);
  cv->add_option("--p-rff", c_p, "Random features per candidate");
  cv->add_option("--seed", c_seed);
  cv->add_option("--out", c_out, "Output directory");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit eigenfunctions with one method");
  std::string f_data, f_out = "fit", f_method, f_rule = "eigsum", f_cv, f_ablation = "combined";
  int f_r = -1, f_p = -1, f_landmarks = kdm::kDefaultLandmarks, f_iters = -1;
  std::optional<double> f_lambda, f_lr, f_tau, f_alpha, f_gamma, f_zeta, f_rho, f_eta;
  std::uint64_t f_seed = 42;
  fit->add_option("--data", f_data, "Dataset directory")->required();
  fit->add_option("--method", f_method, "cv-rff | uniform-nystrom | uniform-rff | vmkl | varrff")->required();
  fit->add_option("--seed", f_seed);
  fit->add_option("--r", f_r);
  fit->add_option("--lambda", f_lambda);
  fit->add_option("--p-rff", f_p);
  fit->add_option("--landmarks", f_landmarks);
  fit->add_option("--rule", f_rule, "CV rule for cv-rff");
  fit->add_option("--cv", f_cv, "Selection JSON from the cv command");
  fit->add_option("--ablation", f_ablation, "subonly | eigonly | combined (vmkl)");
  fit->add_option("--iterations", f_iters);
  fit->add_option("--lr", f_lr);
  fit->add_option("--tau", f_tau);
  fit->add_option("--alpha", f_alpha);
  fit->add_option("--gamma", f_gamma);
  fit->add_option("--zeta", f_zeta);
  fit->add_option("--rho", f_rho);
  fit->add_option("--eta", f_eta);
  fit->add_option("--out", f_out, "Output directory");

  // eval
  auto* ev = app.add_subcommand("eval", "Score a fit against the reference eigenfunctions");
  std::string e_fit, e_data, e_out = "results.csv", e_method;
  ev->add_option("--fit", e_fit, "Fit directory")->required();
  ev->add_option("--data", e_data, "Dataset directory")->required();
  ev->add_option("--out", e_out, "Results CSV (appended)");
  ev->add_option("--method", e_method, "Method label (defaults to the fit's method)");

  // reproduce
  auto* rep = app.add_subcommand("reproduce", "Run a benchmark table over seeds");
  std::string r_table, r_out = "results";
  std::vector<std::uint64_t> r_seeds;
  std::vector<std::string> r_rows, r_methods;
  std::vector<int> r_sizes;
  rep->add_option("--table", r_table, "table1 | table3 | table5 | table7 | scaling")->required();
  rep->add_option("--seeds", r_seeds)->delimiter(',');
  rep->add_option("--rows", r_rows, "Restrict to these rows")->delimiter(',');
  rep->add_option("--methods", r_methods, "Restrict to these methods")->delimiter(',');
  rep->add_option("--sizes", r_sizes, "Scaling sample sizes")->delimiter(',');
  rep->add_option("--out", r_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    kdm::RunManifest manifest;
    if (*gen) {
      nlohmann::json params = nlohmann::json::object();
      if (g_alpha)
        params["alpha"] = *g_alpha;
      if (g_alpha_x)
        params["alpha_x"] = *g_alpha_x;
      if (g_alpha_y)
        params["alpha_y"] = *g_alpha_y;
      if (!g_alphas.empty())
        params["alphas"] = g_alphas;
      if (g_d)
        params["d"] = *g_d;
      if (g_noise)
        params["noise"] = *g_noise;
      if (g_d_slow)
        params["d_slow"] = *g_d_slow;
      if (g_d_fast)
        params["d_fast"] = *g_d_fast;
      if (g_r > 0)
        params["r"] = g_r;
      kdm::BenchmarkDataset data = kdm::generate(g_problem, params, g_n, g_seed);
      ensure_dir(g_out);
      std::string x_path = path_in(g_out, "X.csv");
      std::string ref_path = path_in(g_out, "phi_star.csv");
      std::string meta_path = path_in(g_out, "dataset.json");
      kdm::write_matrix_csv(x_path, data.X, {}, "x");
      kdm::write_matrix_csv(ref_path, data.phi_star, {}, "phi");
      kdm::write_json(meta_path, data.metadata());
      manifest.command = "gen";
      manifest.config = data.metadata();
      manifest.seeds = { g_seed };
      manifest.outputs = { x_path, ref_path, meta_path };
      finish(manifest, g_out, t0);
    } else if (*cv) {
      LoadedData ld = load_dataset(c_data, false);
      kdm::CvRule rule = kdm::rule_from_name(c_rule);
      kdm::MethodOptions opt;
      opt.folds = c_folds;
      opt.r = c_r;
      opt.lambda = c_lambda.value_or(kdm::default_lambda(ld.data.problem));
      opt.p_rff = c_p > 0 ? c_p : kdm::default_p_rff(static_cast<int>(ld.data.X.cols()));
      opt.threads = threads;
      kdm::CvResult res = kdm::run_method_cv(ld.data.X, opt, c_seed);
      ensure_dir(c_out);
      std::string scores = path_in(c_out, "cv_scores.csv");
      std::string sel = path_in(c_out, "cv_selected.json");
      cv_scores_csv(res).write(scores);
      nlohmann::json sj = cv_selection_json(res, rule);
      kdm::write_json(sel, sj);
      manifest.command = "cv";
      manifest.config = { { "data", c_data }, { "dataset", ld.meta }, { "cv", sj["options"] }, { "rule", c_rule } };
      manifest.seeds = { c_seed };
      manifest.outputs = { scores, sel };
      finish(manifest, c_out, t0);
    } else if (*fit) {
      kdm::MethodTag method = kdm::method_from_name(f_method);
      kdm::MethodOptions opt;
      kdm::OuterConfig outer = kdm::OuterConfig::preset(kdm::ablation_from_name(f_ablation));
      if (f_iters > 0)
        outer.iterations = f_iters;
      if (f_lr)
        outer.learning_rate = *f_lr;
      if (f_tau)
        outer.tau = *f_tau;
      if (f_alpha)
        outer.alpha = *f_alpha;
      if (f_gamma)
        outer.gamma = *f_gamma;
      if (f_zeta)
        outer.zeta = *f_zeta;
      if (f_rho)
        outer.rho = *f_rho;
      if (f_eta)
        outer.eta = *f_eta;
      outer.validate();
      LoadedData ld = load_dataset(f_data, method == kdm::MethodTag::Vmkl && outer.zeta > 0.0);
      opt.r = f_r > 0 ? f_r : (ld.data.phi_star.cols() > 0 ? static_cast<int>(ld.data.phi_star.cols()) : 4);
      opt.lambda = f_lambda.value_or(kdm::default_lambda(ld.data.problem));
      opt.p_rff = f_p > 0 ? f_p : kdm::default_p_rff(static_cast<int>(ld.data.X.cols()));
      opt.landmarks = f_landmarks;
      opt.rule = kdm::rule_from_name(f_rule);
      opt.ablation = kdm::ablation_from_name(f_ablation);
      opt.outer = outer;
      if (f_iters > 0)
        opt.varrff.iterations = f_iters;
      if (f_lr)
        opt.varrff.learning_rate = *f_lr;
      opt.threads = threads;
      if (!f_cv.empty()) {
        nlohmann::json sj = kdm::read_json(f_cv);
        opt.sigma_cv = kdm::KernelSpec::from_json(sj.at("selected")).sigma();
      } else if (method == kdm::MethodTag::VarRff) {
        throw UsageError("varrff needs --cv with a prior cv selection");
      }
      kdm::FitResult res;
      if (method == kdm::MethodTag::CvRff && !f_cv.empty()) {
        nlohmann::json sj = kdm::read_json(f_cv);
        kdm::KernelSpec spec = kdm::KernelSpec::from_json(sj.at("selected"));
        res.method = method;
        res.solution = kdm::fit_rff_spec(ld.data.X, spec, opt.r, opt.lambda, opt.p_rff, f_seed);
        res.details = { { "method", f_method }, { "r", opt.r }, { "lambda", opt.lambda },
                        { "selected", spec.to_json() }, { "p_rff", opt.p_rff }, { "cv", f_cv } };
      } else {
        res = kdm::fit_method(method, ld.data, opt, f_seed);
      }
      res.details["seed"] = f_seed;
      res.details["problem"] = ld.data.problem;
      res.details["dataset_seed"] = ld.data.seed;
      res.details["kept"] = res.solution.kept;
      ensure_dir(f_out);
      write_solution(res.solution, f_out, manifest);
      write_trace(res.trace, f_out, manifest);
      std::string fit_json = path_in(f_out, "fit.json");
      kdm::write_json(fit_json, res.details);
      manifest.outputs.push_back(fit_json);
      manifest.command = "fit";
      manifest.config = { { "data", f_data }, { "dataset", ld.meta }, { "method", f_method }, { "details", res.details } };
      manifest.seeds = { f_seed };
      finish(manifest, f_out, t0);
    } else if (*ev) {
      nlohmann::json fj = kdm::read_json(path_in(e_fit, "fit.json"));
      Eigen::MatrixXd Phi = kdm::read_matrix_csv(path_in(e_fit, "phi.csv"));
      LoadedData ld = load_dataset(e_data, false);
      if (ld.data.phi_star.size() == 0)
        throw UsageError("dataset '" + e_data + "' has no phi_star.csv");
      if (Phi.rows() != ld.data.X.rows())
        throw UsageError("fit has " + std::to_string(Phi.rows()) + " samples, dataset has " +
                         std::to_string(ld.data.X.rows()));
      kdm::MetricReport m = kdm::evaluate(Phi, ld.data.phi_star);
      const int r = static_cast<int>(ld.data.phi_star.cols());
      std::string method = e_method.empty() ? fj.value("method", std::string("unknown")) : e_method;
      std::vector<std::string> row{ ld.data.problem, method, std::to_string(fj.value("seed", std::uint64_t{ 0 })),
                                    format_double(m.subr2), format_double(m.avg_abs_corr) };
      for (int k = 0; k < r; ++k)
        row.push_back(format_double(m.cosines(k)));
      append_metric_row(e_out, metric_header(r), row);
      manifest.command = "eval";
      manifest.config = { { "fit", e_fit }, { "data", e_data }, { "subr2", m.subr2 }, { "avg_abs_corr", m.avg_abs_corr } };
      manifest.seeds = { fj.value("seed", std::uint64_t{ 0 }) };
      manifest.outputs = { e_out };
      manifest.wall_clock_seconds = seconds_since(t0);
      std::cout << manifest.to_json().dump(2) << '\n';
    } else if (*rep) {
      kdm::Table table = kdm::table_from_name(r_table);
      kdm::ReproduceOptions opt;
      opt.seeds = parse_seeds(r_seeds);
      opt.rows = r_rows;
      opt.methods = r_methods;
      opt.sizes = r_sizes;
      opt.threads = threads;
      opt.on_cell = [](const kdm::CellRecord& c) {
        std::cerr << c.row << ' ' << c.method << " seed=" << c.seed << ' '
                  << (c.ok ? "subr2=" + format_double(c.metrics.subr2) : "failed: " + c.error) << '\n';
      };
      kdm::ReproduceResult res = kdm::reproduce(table, opt);
      ensure_dir(r_out);
      std::string cells = path_in(r_out, r_table + "_cells.csv");
      std::string summary = path_in(r_out, r_table + "_summary.csv");
      kdm::cells_csv(res).write(cells);
      kdm::summary_csv(res).write(summary);
      manifest.command = "reproduce";
      manifest.config = { { "table", r_table }, { "rows", r_rows }, { "methods", r_methods }, { "sizes", r_sizes } };
      manifest.seeds = opt.seeds;
      manifest.outputs = { cells, summary };
      finish(manifest, r_out, t0);
    }
  } catch (const kdm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
