#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace wkb {

// Error taxonomy mirrored by the CLI exit codes:
//   config_error -> 2, numerical_error -> 3, geometry_error -> 4.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

class config_error : public error {
 public:
  explicit config_error(const std::string& msg) : error(msg) {}
};

// Quadrature/iteration/root-finding failures.
class numerical_error : public error {
 public:
  explicit numerical_error(const std::string& msg) : error(msg) {}
};

// Unsupported or degenerate Stokes geometry.
class geometry_error : public error {
 public:
  explicit geometry_error(const std::string& msg) : error(msg) {}
};

// Root refinement that ran out of iterations still reports what it found.
class root_convergence_error : public numerical_error {
 public:
  root_convergence_error(const std::string& msg,
                         std::vector<std::complex<double>> partial)
      : numerical_error(msg), partial_roots(std::move(partial)) {}

  std::vector<std::complex<double>> partial_roots;
};

}  // namespace wkb
