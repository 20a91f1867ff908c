#include "smoothdiv/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace smoothdiv {

Matrix read_csv(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);

  std::vector<Vec> rows;
  std::string line;
  long cols = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    // Trim trailing carriage returns and skip blank lines.
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;

    Vec row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      require(end != field.c_str() && end != nullptr, ErrorCode::InvalidArgument,
              path + ": non-numeric field '" + field + "'");
      row.push_back(v);
    }
    require(!row.empty(), ErrorCode::InvalidArgument, path + ": empty row");
    if (cols < 0) cols = static_cast<long>(row.size());
    require(static_cast<long>(row.size()) == cols, ErrorCode::InvalidArgument,
            path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorCode::InvalidArgument, path + ": no data rows");

  Matrix m(static_cast<long>(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), m.row(static_cast<long>(i)));
  return m;
}

void write_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError, "cannot open " + path + " for writing");
  char buf[40];
  for (long i = 0; i < m.rows; ++i) {
    for (long j = 0; j < m.cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.at(i, j));
      out << buf;
      if (j + 1 < m.cols) out << ',';
    }
    out << '\n';
  }
}

}  // namespace smoothdiv
