#pragma once

#include "kdm/bench.hpp"
#include "kdm/cv.hpp"
#include "kdm/io.hpp"
#include "kdm/methods.hpp"
#include "kdm/seeding.hpp"

#include <cstdint>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace kdm {

enum class Table
{
  Table1,
  Table3,
  Table5,
  Table7,
  Scaling
};

std::string_view table_name(Table t);
Table table_from_name(std::string_view name);

//! One benchmark configuration (a table row).
struct RowSpec
{
  std::string name;
  std::string problem;
  nlohmann::json params;
  int N = 500;
  int r = 4;
  double lambda = kDefaultLambda;
  int p_rff = kDefaultRffFeatures;
};

//! A fitting method as it appears in a table column.
struct MethodVariant
{
  std::string label;
  MethodTag tag = MethodTag::CvRff;
  CvRule rule = CvRule::Eigsum;
  Ablation ablation = Ablation::Combined;
};

std::vector<RowSpec> table_rows(Table t);
std::vector<MethodVariant> table_methods(Table t);

struct CellRecord
{
  std::string row;
  std::string problem;
  int N = 0;
  std::string method;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricReport metrics;
  nlohmann::json details;
};

struct CellSummary
{
  std::string row;
  std::string method;
  int n_ok = 0;
  int n_total = 0;
  double subr2_mean = 0.0;
  double subr2_std = 0.0;
  double corr_mean = 0.0;
  double corr_std = 0.0;
  std::string extra; // table-specific: selected σ or learned σ
};

struct ReproduceOptions
{
  std::vector<std::uint64_t> seeds{ std::begin(kDefaultSeeds), std::end(kDefaultSeeds) };
  std::vector<std::string> rows;    // restrict to these row names; empty means all
  std::vector<std::string> methods; // restrict to these method labels; empty means all
  std::vector<int> sizes;           // scaling sample sizes; empty means the full sweep
  unsigned threads = 0;
  std::function<void(const CellRecord&)> on_cell;
};

//! Datasets and CV runs shared between tables with identical inputs.
class ReproduceContext
{
public:
  const BenchmarkDataset& dataset(const RowSpec& row, std::uint64_t seed);
  const CvResult& cv(const RowSpec& row, std::uint64_t seed, unsigned threads);

private:
  static std::string key(const RowSpec& row, std::uint64_t seed);
  std::map<std::string, std::unique_ptr<BenchmarkDataset>> datasets_;
  std::map<std::string, std::unique_ptr<CvResult>> cvs_;
};

struct ReproduceResult
{
  Table table = Table::Table1;
  std::vector<CellRecord> cells;
  std::vector<CellSummary> summary;

  const CellSummary* find(const std::string& row, const std::string& method) const;
  std::vector<const CellRecord*> cells_for(const std::string& row, const std::string& method) const;
};

MethodOptions row_method_options(const RowSpec& row, const MethodVariant& variant);

CellRecord run_cell(const RowSpec& row,
                    const MethodVariant& variant,
                    std::uint64_t seed,
                    ReproduceContext& context,
                    unsigned threads = 0);

ReproduceResult reproduce(Table table,
                          const ReproduceOptions& options,
                          ReproduceContext* context = nullptr);

// Population mean and standard deviation (ddof = 0).
std::pair<double, double> mean_std(const std::vector<double>& v);

CsvWriter cells_csv(const ReproduceResult& result);
CsvWriter summary_csv(const ReproduceResult& result);

} // namespace kdm
