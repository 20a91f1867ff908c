#ifndef SMOOTHDIV_COMMON_HPP
#define SMOOTHDIV_COMMON_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smoothdiv {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  SigmaMismatch,
  UnsupportedCoupling,
  UnsupportedGenerator,
  DomainError,
  NonFiniteIntegrand,
  SingularDensity,
  CholeskyFailure,
  InsufficientReplicates,
  SigmaTooLarge,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

// Dense row-major matrix, just enough for sample blocks and kernels.
struct Matrix {
  long rows = 0;
  long cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(long r, long c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double* row(long i) { return data.data() + static_cast<size_t>(i) * cols; }
  const double* row(long i) const { return data.data() + static_cast<size_t>(i) * cols; }
  ConstSpan row_span(long i) const { return {row(i), static_cast<size_t>(cols)}; }
  double& at(long i, long j) { return data[static_cast<size_t>(i) * cols + j]; }
  double at(long i, long j) const { return data[static_cast<size_t>(i) * cols + j]; }
};

}  // namespace smoothdiv

#endif
