#include "kdm/reproduce.hpp"
#include "kdm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kdm {

namespace {

RowSpec make_row(std::string name, std::string problem, nlohmann::json params, int N = 500)
{
  RowSpec row;
  row.name = std::move(name);
  row.problem = std::move(problem);
  row.params = std::move(params);
  row.N = N;
  row.lambda = default_lambda(row.problem);
  return row;
}

RowSpec mdlike_row(int d_fast)
{
  RowSpec row = make_row("mdlike-d" + std::to_string(2 + d_fast), "mdlike",
                         { { "d_slow", 2 }, { "d_fast", d_fast } });
  row.r = 2;
  row.p_rff = default_p_rff(2 + d_fast);
  return row;
}

bool wanted(const std::vector<std::string>& filter, const std::string& name)
{
  return filter.empty() || std::find(filter.begin(), filter.end(), name) != filter.end();
}

std::string join_doubles(const std::vector<double>& v)
{
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i)
      s += ';';
    s += format_double(v[i]);
  }
  return s;
}

// Table-specific summary annotation computed from successful cells.
std::string summary_extra(Table table, const std::vector<const CellRecord*>& cells)
{
  if (cells.empty())
    return {};
  if (table == Table::Table5 || table == Table::Table7 || table == Table::Table1) {
    std::vector<double> sum;
    int count = 0;
    for (const auto* c : cells) {
      std::vector<double> sigma;
      if (c->details.contains("sigma") && c->details["sigma"].is_array()) {
        sigma = c->details["sigma"].get<std::vector<double>>();
      } else if (c->details.contains("selected")) {
        const auto& s = c->details["selected"]["sigma"];
        sigma = s.is_array() ? s.get<std::vector<double>>() : std::vector<double>{ s.get<double>() };
      } else {
        return {};
      }
      if (sum.empty())
        sum.assign(sigma.size(), 0.0);
      if (sigma.size() != sum.size())
        return {};
      for (std::size_t j = 0; j < sigma.size(); ++j)
        sum[j] += sigma[j];
      ++count;
    }
    for (double& s : sum)
      s /= count;
    return "sigma_mean=" + join_doubles(sum);
  }
  return {};
}

} // namespace

std::string_view table_name(Table t)
{
  switch (t) {
    case Table::Table1:
      return "table1";
    case Table::Table3:
      return "table3";
    case Table::Table5:
      return "table5";
    case Table::Table7:
      return "table7";
    case Table::Scaling:
      return "scaling";
  }
  throw std::invalid_argument("unknown table");
}

Table table_from_name(std::string_view name)
{
  for (auto t : { Table::Table1, Table::Table3, Table::Table5, Table::Table7, Table::Scaling })
    if (table_name(t) == name)
      return t;
  throw std::invalid_argument("unknown table '" + std::string(name) + "'");
}

std::vector<RowSpec> table_rows(Table t)
{
  const RowSpec dw = make_row("dw1d", "dw1d", nlohmann::json::object());
  const RowSpec adw = make_row("adw1d", "adw1d", nlohmann::json::object());
  const RowSpec circle = make_row("circle", "circle", { { "noise", 0.05 } });
  const RowSpec ou4 = make_row("ou2d-a4", "ou2d", { { "alpha_x", 1.0 }, { "alpha_y", 4.0 } });
  const RowSpec ou16 = make_row("ou2d-a16", "ou2d", { { "alpha_x", 1.0 }, { "alpha_y", 16.0 } });
  const RowSpec ou3 = make_row("ou3d", "ou3d", nlohmann::json::object());
  switch (t) {
    case Table::Table1:
      return { dw, adw, circle, ou4, ou16, ou3 };
    case Table::Table3:
      return { dw, ou16, circle };
    case Table::Table5:
      return { ou4, ou16, ou3 };
    case Table::Table7:
      return { mdlike_row(4), mdlike_row(8), mdlike_row(18) };
    case Table::Scaling: {
      std::vector<RowSpec> rows;
      for (int n : { 100, 250, 500, 1000, 2000 }) {
        RowSpec row = ou4;
        row.name = "ou2d-a4-n" + std::to_string(n);
        row.N = n;
        rows.push_back(row);
      }
      return rows;
    }
  }
  return {};
}

std::vector<MethodVariant> table_methods(Table t)
{
  const MethodVariant cv{ "cv-rff", MethodTag::CvRff, CvRule::Eigsum, Ablation::Combined };
  const MethodVariant unys{ "uniform-nystrom", MethodTag::UniformNystrom, CvRule::Eigsum,
                            Ablation::Combined };
  const MethodVariant urff{ "uniform-rff", MethodTag::UniformRff, CvRule::Eigsum, Ablation::Combined };
  switch (t) {
    case Table::Table1:
      return { cv, urff, unys };
    case Table::Table3:
      return { unys,
               { "subonly", MethodTag::Vmkl, CvRule::Eigsum, Ablation::SubOnly },
               { "eigonly", MethodTag::Vmkl, CvRule::Eigsum, Ablation::EigOnly },
               { "combined", MethodTag::Vmkl, CvRule::Eigsum, Ablation::Combined },
               cv };
    case Table::Table5:
      return { cv, { "varrff", MethodTag::VarRff, CvRule::Eigsum, Ablation::Combined } };
    case Table::Table7:
      return { { "eigsum-cv", MethodTag::CvRff, CvRule::Eigsum, Ablation::Combined },
               { "gap-cv", MethodTag::CvRff, CvRule::Gap, Ablation::Combined },
               urff };
    case Table::Scaling:
      return { cv, unys };
  }
  return {};
}

std::string ReproduceContext::key(const RowSpec& row, std::uint64_t seed)
{
  std::ostringstream ss;
  ss << row.problem << '|' << row.params.dump() << '|' << row.N << '|' << row.r << '|'
     << format_double(row.lambda) << '|' << row.p_rff << '|' << seed;
  return ss.str();
}

const BenchmarkDataset& ReproduceContext::dataset(const RowSpec& row, std::uint64_t seed)
{
  std::ostringstream ss;
  ss << row.problem << '|' << row.params.dump() << '|' << row.N << '|' << seed;
  auto& slot = datasets_[ss.str()];
  if (!slot)
    slot = std::make_unique<BenchmarkDataset>(generate(row.problem, row.params, row.N, seed));
  return *slot;
}

const CvResult& ReproduceContext::cv(const RowSpec& row, std::uint64_t seed, unsigned threads)
{
  auto& slot = cvs_[key(row, seed)];
  if (!slot) {
    MethodOptions opt = row_method_options(row, {});
    opt.threads = threads;
    slot = std::make_unique<CvResult>(run_method_cv(dataset(row, seed).X, opt, seed));
  }
  return *slot;
}

const CellSummary* ReproduceResult::find(const std::string& row, const std::string& method) const
{
  for (const auto& s : summary)
    if (s.row == row && s.method == method)
      return &s;
  return nullptr;
}

std::vector<const CellRecord*> ReproduceResult::cells_for(const std::string& row,
                                                          const std::string& method) const
{
  std::vector<const CellRecord*> out;
  for (const auto& c : cells)
    if (c.row == row && c.method == method)
      out.push_back(&c);
  return out;
}

MethodOptions row_method_options(const RowSpec& row, const MethodVariant& variant)
{
  MethodOptions opt;
  opt.r = row.r;
  opt.lambda = row.lambda;
  opt.p_rff = row.p_rff;
  opt.rule = variant.rule;
  opt.ablation = variant.ablation;
  return opt;
}

CellRecord run_cell(const RowSpec& row,
                    const MethodVariant& variant,
                    std::uint64_t seed,
                    ReproduceContext& context,
                    unsigned threads)
{
  CellRecord cell;
  cell.row = row.name;
  cell.problem = row.problem;
  cell.N = row.N;
  cell.method = variant.label;
  cell.seed = seed;
  try {
    const BenchmarkDataset& data = context.dataset(row, seed);
    MethodOptions opt = row_method_options(row, variant);
    opt.threads = threads;
    if (variant.tag == MethodTag::CvRff || variant.tag == MethodTag::VarRff)
      opt.cv = &context.cv(row, seed, threads);
    FitResult fit = fit_method(variant.tag, data, opt, seed);
    cell.metrics = evaluate(fit.solution.Phi, data.phi_star);
    cell.details = fit.details;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

std::pair<double, double> mean_std(const std::vector<double>& v)
{
  if (v.empty())
    return { std::nan(""), std::nan("") };
  double m = 0.0;
  for (double x : v)
    m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v)
    s += (x - m) * (x - m);
  return { m, std::sqrt(s / static_cast<double>(v.size())) };
}

ReproduceResult reproduce(Table table, const ReproduceOptions& options, ReproduceContext* context)
{
  ReproduceContext local;
  ReproduceContext& ctx = context ? *context : local;
  ReproduceResult result;
  result.table = table;

  std::vector<RowSpec> rows;
  for (const auto& row : table_rows(table)) {
    if (!wanted(options.rows, row.name))
      continue;
    if (table == Table::Scaling && !options.sizes.empty() &&
        std::find(options.sizes.begin(), options.sizes.end(), row.N) == options.sizes.end())
      continue;
    rows.push_back(row);
  }
  std::vector<MethodVariant> methods;
  for (const auto& m : table_methods(table))
    if (wanted(options.methods, m.label))
      methods.push_back(m);

  for (const auto& row : rows) {
    for (const auto& method : methods) {
      for (auto seed : options.seeds) {
        result.cells.push_back(run_cell(row, method, seed, ctx, options.threads));
        if (options.on_cell)
          options.on_cell(result.cells.back());
      }
    }
  }

  for (const auto& row : rows) {
    for (const auto& method : methods) {
      CellSummary s;
      s.row = row.name;
      s.method = method.label;
      std::vector<double> sub, corr;
      std::vector<const CellRecord*> good;
      for (const auto* c : result.cells_for(row.name, method.label)) {
        ++s.n_total;
        if (!c->ok)
          continue;
        ++s.n_ok;
        sub.push_back(c->metrics.subr2);
        corr.push_back(c->metrics.avg_abs_corr);
        good.push_back(c);
      }
      std::tie(s.subr2_mean, s.subr2_std) = mean_std(sub);
      std::tie(s.corr_mean, s.corr_std) = mean_std(corr);
      s.extra = summary_extra(table, good);
      result.summary.push_back(s);
    }
  }
  return result;
}

CsvWriter cells_csv(const ReproduceResult& result)
{
  int r = 0;
  for (const auto& c : result.cells)
    r = std::max(r, static_cast<int>(c.metrics.cosines.size()));
  std::vector<std::string> header{ "table", "row",    "problem", "N",       "method",
                                   "seed",  "status", "error",   "subr2",   "avg_abs_corr" };
  for (int k = 1; k <= r; ++k)
    header.push_back("cos_" + std::to_string(k));
  header.insert(header.end(), { "selected_family", "selected_sigma", "details" });
  CsvWriter w(header);
  for (const auto& c : result.cells) {
    std::vector<std::string> row{ std::string(table_name(result.table)),
                                  c.row,
                                  c.problem,
                                  std::to_string(c.N),
                                  c.method,
                                  std::to_string(c.seed),
                                  c.ok ? "ok" : "failed",
                                  c.error,
                                  c.ok ? format_double(c.metrics.subr2) : "",
                                  c.ok ? format_double(c.metrics.avg_abs_corr) : "" };
    for (int k = 0; k < r; ++k)
      row.push_back(c.ok && k < c.metrics.cosines.size() ? format_double(c.metrics.cosines(k)) : "");
    std::string family, sigma;
    if (c.ok && c.details.contains("selected")) {
      family = c.details["selected"]["family"].get<std::string>();
      const auto& s = c.details["selected"]["sigma"];
      sigma = s.is_array() ? join_doubles(s.get<std::vector<double>>()) : format_double(s.get<double>());
    } else if (c.ok && c.details.contains("sigma")) {
      family = "matern32";
      sigma = join_doubles(c.details["sigma"].get<std::vector<double>>());
    }
    row.push_back(family);
    row.push_back(sigma);
    row.push_back(c.ok ? c.details.dump() : "");
    w.add_row(std::move(row));
  }
  return w;
}

CsvWriter summary_csv(const ReproduceResult& result)
{
  CsvWriter w({ "table", "row", "method", "n_ok", "n_total", "subr2_mean", "subr2_std", "corr_mean",
                "corr_std", "extra" });
  for (const auto& s : result.summary) {
    bool any = s.n_ok > 0;
    w.add_row({ std::string(table_name(result.table)), s.row, s.method, std::to_string(s.n_ok),
                std::to_string(s.n_total), any ? format_double(s.subr2_mean) : "",
                any ? format_double(s.subr2_std) : "", any ? format_double(s.corr_mean) : "",
                any ? format_double(s.corr_std) : "", s.extra });
  }
  return w;
}

} // namespace kdm
