#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <krrinf/krr.hpp>

namespace krrinf::cli {

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Comma-separated numeric table with a mandatory header row. Blank lines are
/// skipped; every other line must have as many cells as the header. Errors are
/// reported as DataError with the 1-based line number.
NumericTable parse_numeric_csv(const std::string& text, const std::string& source);
NumericTable read_numeric_csv(const std::filesystem::path& path);

/// Feature columns followed by one response column.
Dataset dataset_from_table(const NumericTable& table, const std::string& source);
Dataset read_dataset(const std::filesystem::path& path);

/// Piecewise-linear interpolant through (x_i, h_i) sorted by x. Values beyond the
/// table ends are held constant.
class LinearTable {
 public:
  LinearTable(std::vector<double> xs, std::vector<double> hs);
  double operator()(double x) const;
  double lo() const { return xs_.front(); }
  double hi() const { return xs_.back(); }

 private:
  std::vector<double> xs_;
  std::vector<double> hs_;
};

LinearTable read_linear_table(const std::filesystem::path& path);

}  // namespace krrinf::cli
