#pragma once

#include <stdexcept>
#include <string>

namespace elliprmt {

// Base of all library errors; `what()` carries the human readable detail.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside an operation's domain (bad measure, z inside the bulk, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Iterative method hit its budget. Carries the last residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual, long iterations)
      : Error(what), last_residual_(last_residual), iterations_(iterations) {}
  double last_residual() const { return last_residual_; }
  long iterations() const { return iterations_; }

 private:
  double last_residual_;
  long iterations_;
};

// A resolvent or (I + g2 Sigma)^{-1} was requested at a pole.
class PoleError : public Error {
 public:
  using Error::Error;
};

// Singular linear system at a degenerate point (derivative system, kernels at z1 == z2).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Spike below the detectability threshold; `threshold()` is the smallest
// detectable spike for the given measures.
class SubcriticalSpikeError : public Error {
 public:
  SubcriticalSpikeError(const std::string& what, double threshold)
      : Error(what), threshold_(threshold) {}
  double threshold() const { return threshold_; }

 private:
  double threshold_;
};

// Malformed configuration, CSV, or CLI argument.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace elliprmt
