#ifndef SMOOTHDIV_CSV_HPP
#define SMOOTHDIV_CSV_HPP

#include <string>

#include "smoothdiv/common.hpp"

namespace smoothdiv {

// Headerless numeric CSV, one point per row; skip_header drops row 1.
// Throws IoError on missing files and InvalidArgument on ragged rows or
// non-numeric fields.
Matrix read_csv(const std::string& path, bool skip_header = false);

void write_csv(const std::string& path, const Matrix& m);

}  // namespace smoothdiv

#endif
