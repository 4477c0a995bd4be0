#ifndef ILTI_ERRORS_HPP
#define ILTI_ERRORS_HPP

#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace ilti {

/// Base class of every domain error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

/// Precondition violation on user-supplied data (negative time, bad sizes, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "InvalidArgument"; }
};

/// A pairing against the zero-trace dual (H^{-1}) met a test function
/// with a nonzero endpoint trace, or an atom sitting on an endpoint.
class EndpointObstruction : public Error {
public:
  EndpointObstruction(std::string what, double endpoint, double trace)
      : Error(std::move(what)), endpoint_(endpoint), trace_(trace) {}
  const char* kind() const noexcept override { return "EndpointObstruction"; }
  double endpoint() const noexcept { return endpoint_; }
  double trace() const noexcept { return trace_; }

private:
  double endpoint_;
  double trace_;
};

class InsufficientSupport : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "InsufficientSupport"; }
};

/// The output map vanishes on the truncation, so no ratio can be formed.
class DegenerateOutput : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "DegenerateOutput"; }
};

class SingularGramian : public Error {
public:
  SingularGramian(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  const char* kind() const noexcept override { return "SingularGramian"; }
  double condition_estimate() const noexcept { return condition_; }

private:
  double condition_;
};

class RootNotConverged : public Error {
public:
  RootNotConverged(std::complex<double> seed, std::complex<double> last, double residual)
      : Error(message(seed, last, residual)), seed_(seed), last_(last), residual_(residual) {}
  const char* kind() const noexcept override { return "RootNotConverged"; }
  std::complex<double> seed() const noexcept { return seed_; }
  std::complex<double> last_iterate() const noexcept { return last_; }
  double residual() const noexcept { return residual_; }

private:
  static std::string message(std::complex<double> seed, std::complex<double> last, double res) {
    std::ostringstream os;
    os.precision(12);
    os << "root search did not converge: seed " << seed << ", last iterate " << last
       << ", residual " << res;
    return os.str();
  }
  std::complex<double> seed_;
  std::complex<double> last_;
  double residual_;
};

}  // namespace ilti

#endif  // ILTI_ERRORS_HPP
