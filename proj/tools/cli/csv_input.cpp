#include "csv_input.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cli_errors.hpp"

namespace krrinf::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos
                                                                   ? std::string::npos
                                                                   : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

NumericTable parse_numeric_csv(const std::string& text, const std::string& source) {
  NumericTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_cells(line);
    if (!have_header) {
      for (const auto& c : cells) {
        if (c.empty()) throw DataError(source + ":" + std::to_string(line_no) + ": empty header cell");
      }
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      const char* first = c.data();
      const char* last = c.data() + c.size();
      if (first != last && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, row[j]);
      if (c.empty() || ec != std::errc() || ptr != last || !std::isfinite(row[j])) {
        throw DataError(source + ":" + std::to_string(line_no) + ": non-numeric cell '" + c +
                        "' in column " + std::to_string(j + 1));
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw DataError(source + ": no header row");
  if (table.rows.empty()) throw DataError(source + ": no data rows");
  return table;
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  return parse_numeric_csv(slurp(path), path.string());
}

Dataset dataset_from_table(const NumericTable& table, const std::string& source) {
  const std::size_t cols = table.header.size();
  if (cols < 2) throw DataError(source + ": need at least one feature column and one response column");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto d = static_cast<Eigen::Index>(cols - 1);
  Dataset data{Design(n, d), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < d; ++k) data.X(i, k) = row[static_cast<std::size_t>(k)];
    data.Y[i] = row[cols - 1];
  }
  return data;
}

Dataset read_dataset(const std::filesystem::path& path) {
  return dataset_from_table(read_numeric_csv(path), path.string());
}

LinearTable::LinearTable(std::vector<double> xs, std::vector<double> hs) {
  if (xs.size() != hs.size() || xs.size() < 2) {
    throw DataError("h table needs at least two (x, h) rows");
  }
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  for (std::size_t i : order) {
    xs_.push_back(xs[i]);
    hs_.push_back(hs[i]);
  }
  for (std::size_t i = 1; i < xs_.size(); ++i) {
    if (!(xs_[i] > xs_[i - 1])) throw DataError("h table has repeated x values");
  }
}

double LinearTable::operator()(double x) const {
  if (x <= xs_.front()) return hs_.front();
  if (x >= xs_.back()) return hs_.back();
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - xs_.begin());
  const double t = (x - xs_[j - 1]) / (xs_[j] - xs_[j - 1]);
  return hs_[j - 1] + t * (hs_[j] - hs_[j - 1]);
}

LinearTable read_linear_table(const std::filesystem::path& path) {
  const NumericTable t = read_numeric_csv(path);
  if (t.header.size() != 2) throw DataError(path.string() + ": h table needs exactly two columns (x, h)");
  std::vector<double> xs, hs;
  for (const auto& r : t.rows) {
    xs.push_back(r[0]);
    hs.push_back(r[1]);
  }
  return LinearTable(std::move(xs), std::move(hs));
}

}  // namespace krrinf::cli
