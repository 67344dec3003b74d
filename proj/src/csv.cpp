#include "intervalq/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "intervalq/errors.hpp"

namespace intervalq {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_cell(const std::string& cell, double& out) {
  if (cell == "-inf") {
    out = -std::numeric_limits<double>::infinity();
    return true;
  }
  if (cell == "+inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  if (cell.empty()) return false;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, out);
  if (res.ec != std::errc() || res.ptr != end) return false;
  return std::isfinite(out);
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw io_error("missing column '" + name + "'");
}

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CsvLoadResult load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw io_error("empty file '" + path + "'");
  const auto header = split_line(line);
  const std::size_t lower_col = column_index(header, schema.lower);
  const std::size_t upper_col = column_index(header, schema.upper);
  std::vector<std::size_t> cov_cols;
  for (const auto& name : schema.covariates) cov_cols.push_back(column_index(header, name));

  std::vector<IntervalObs> intervals;
  std::vector<std::vector<double>> cov_rows;
  std::size_t skipped = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_line(line);
    const auto fail = [&](const std::string& what) {
      if (schema.skip_malformed) {
        ++skipped;
        return true;
      }
      throw io_error(what + " at row " + std::to_string(row));
    };
    if (cells.size() < header.size()) {
      if (fail("short row")) continue;
    }
    IntervalObs obs;
    std::vector<double> cov(cov_cols.size());
    bool bad = false;
    if (!parse_cell(cells[lower_col], obs.lower)) bad = true;
    if (!bad && !parse_cell(cells[upper_col], obs.upper)) bad = true;
    for (std::size_t j = 0; !bad && j < cov_cols.size(); ++j) {
      double v = 0;
      if (!parse_cell(cells[cov_cols[j]], v) || !std::isfinite(v))
        bad = true;
      else
        cov[j] = v;
    }
    if (bad) {
      if (fail("unparseable cell")) continue;
    }
    if (obs.lower > obs.upper) {
      if (fail("inverted interval")) continue;
    }
    try {
      validate_interval(obs, row);
    } catch (const invariant_error& e) {
      if (fail(e.what())) continue;
    }
    intervals.push_back(obs);
    cov_rows.push_back(std::move(cov));
  }
  if (intervals.empty()) throw io_error("no usable data rows in '" + path + "'");

  Eigen::MatrixXd cov;
  if (!cov_cols.empty()) {
    cov.resize(static_cast<Eigen::Index>(cov_rows.size()),
               static_cast<Eigen::Index>(cov_cols.size()));
    for (std::size_t i = 0; i < cov_rows.size(); ++i)
      for (std::size_t j = 0; j < cov_cols.size(); ++j)
        cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov_rows[i][j];
  }
  return CsvLoadResult{IntervalDataset(std::move(intervals), std::move(cov)), skipped};
}

void write_csv(const std::string& path, const IntervalDataset& ds, const CsvSchema& schema) {
  std::vector<std::string> cov_names = schema.covariates;
  if (cov_names.empty() && ds.p() > 0)
    for (std::size_t j = 1; j <= ds.p(); ++j) cov_names.push_back("x" + std::to_string(j));
  if (cov_names.size() != ds.p())
    throw invariant_error("covariate name count does not match dataset");

  std::ofstream out(path);
  if (!out) throw io_error("cannot write '" + path + "'");
  out << schema.lower << ',' << schema.upper;
  for (const auto& name : cov_names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out << format_value(ds.obs(i).lower) << ',' << format_value(ds.obs(i).upper);
    for (std::size_t j = 0; j < ds.p(); ++j)
      out << ',' << format_value(ds.covariates()(static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(j)));
    out << '\n';
  }
  if (!out) throw io_error("write failed for '" + path + "'");
}

}  // namespace intervalq
