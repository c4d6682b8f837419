#include "kdm/io.hpp"
#include "kdm/version.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace kdm {

namespace {

std::string quote(const std::string& field)
{
  if (field.find_first_of(",\"\r\n") == std::string::npos)
    return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string slurp(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out)
    throw std::runtime_error("write failed for '" + path + "'");
}

double parse_double(const std::string& s)
{
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ')
    ++b;
  if (b < e && *b == '+')
    ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e)
    throw std::runtime_error("not a number: '" + s + "'");
  return v;
}

} // namespace

std::string format_double(double x)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc())
    throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header)
  : header_(std::move(header))
{
}

void CsvWriter::add_row(std::vector<std::string> row)
{
  if (row.size() != header_.size())
    throw std::invalid_argument("csv row has " + std::to_string(row.size()) + " fields, header has " +
                                std::to_string(header_.size()));
  rows_.push_back(std::move(row));
}

std::string CsvWriter::str() const
{
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i)
        out += ',';
      out += quote(fields[i]);
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_)
    line(r);
  return out;
}

void CsvWriter::write(const std::string& path) const
{
  spit(path, str());
}

int CsvTable::column(const std::string& name) const
{
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name)
      return static_cast<int>(i);
  return -1;
}

CsvTable parse_csv(const std::string& text)
{
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty()))
      records.push_back(record);
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
        ++i;
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes)
    throw std::runtime_error("csv: unterminated quoted field");
  if (field_started || !field.empty() || !record.empty())
    end_record();

  CsvTable t;
  if (records.empty())
    return t;
  t.header = records.front();
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.header.size())
      throw std::runtime_error("csv: record " + std::to_string(i) + " has " +
                               std::to_string(records[i].size()) + " fields, expected " +
                               std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

CsvTable read_csv(const std::string& path)
{
  return parse_csv(slurp(path));
}

void write_matrix_csv(const std::string& path,
                      const Eigen::MatrixXd& M,
                      const std::vector<std::string>& header,
                      const std::string& prefix)
{
  std::vector<std::string> h = header;
  if (h.empty())
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      h.push_back(prefix + std::to_string(j));
  if (static_cast<Eigen::Index>(h.size()) != M.cols())
    throw std::invalid_argument("write_matrix_csv: header size does not match column count");
  CsvWriter w(h);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(M.cols()));
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      row.push_back(format_double(M(i, j)));
    w.add_row(std::move(row));
  }
  w.write(path);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>* header)
{
  CsvTable t = read_csv(path);
  Eigen::MatrixXd M(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.header.size(); ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(t.rows[i][j]);
  if (header)
    *header = t.header;
  return M;
}

Eigen::MatrixXd columns_with_prefix(const CsvTable& table, const std::string& prefix)
{
  std::vector<int> cols;
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (table.header[j].rfind(prefix, 0) == 0)
      cols.push_back(static_cast<int>(j));
  Eigen::MatrixXd M(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t k = 0; k < cols.size(); ++k)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
        parse_double(table.rows[i][static_cast<std::size_t>(cols[k])]);
  return M;
}

void write_json(const std::string& path, const nlohmann::json& j)
{
  spit(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::string& path)
{
  try {
    return nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("invalid json in '" + path + "': " + e.what());
  }
}

nlohmann::json RunManifest::to_json() const
{
  return { { "command", command },
           { "config", config },
           { "seeds", seeds },
           { "version", kVersion },
           { "wall_clock_seconds", wall_clock_seconds },
           { "outputs", outputs } };
}

void RunManifest::write(const std::string& path) const
{
  write_json(path, to_json());
}

} // namespace kdm
