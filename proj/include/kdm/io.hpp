#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

namespace kdm {

// Shortest round-trip decimal form of a double.
std::string format_double(double x);

// RFC 4180 CSV writer with LF line endings. Fields are quoted only when they
// contain a comma, quote or line break.
class CsvWriter
{
public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

  std::string str() const;
  void write(const std::string& path) const;

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const; // −1 if absent
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

// Numeric matrix with a header row. Columns default to prefix0, prefix1, ...
void write_matrix_csv(const std::string& path,
                      const Eigen::MatrixXd& M,
                      const std::vector<std::string>& header = {},
                      const std::string& prefix = "c");
Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>* header = nullptr);

// Columns of the table whose header starts with `prefix`, in order.
Eigen::MatrixXd columns_with_prefix(const CsvTable& table, const std::string& prefix);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

struct RunManifest
{
  std::string command;
  nlohmann::json config;
  std::vector<std::uint64_t> seeds;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
  void write(const std::string& path) const;
};

} // namespace kdm
