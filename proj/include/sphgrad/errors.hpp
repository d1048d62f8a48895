#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sphgrad {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// log_map (or anything built on it) was asked for a point at the cut locus.
class AntipodalError : public Error {
 public:
  explicit AntipodalError(double distance)
      : Error("points are antipodal (distance " + std::to_string(distance) + ")"),
        distance_(distance) {}
  double distance() const { return distance_; }

 private:
  double distance_;
};

/// A potential violates the l1 admissibility bound. margin() is negative.
class InadmissibleSpec : public Error {
 public:
  InadmissibleSpec(const std::string& what, double margin) : Error(what), margin_(margin) {}
  double margin() const { return margin_; }

 private:
  double margin_;
};

/// |grad phi(x)| reached pi: the gradient map is not wrapping at x.
class WrapViolation : public Error {
 public:
  explicit WrapViolation(double gradient_norm)
      : Error("gradient norm " + std::to_string(gradient_norm) + " too close to pi"),
        gradient_norm_(gradient_norm) {}
  double gradient_norm() const { return gradient_norm_; }

 private:
  double gradient_norm_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

class EmptyData : public Error {
 public:
  EmptyData() : Error("data set is empty") {}
};

class MismatchedData : public Error {
 public:
  using Error::Error;
};

/// Raised when an invariant that should hold by construction is broken,
/// e.g. a negative Jacobian determinant for an admissible potential.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// The inverse gradient map solver did not converge. index() is the sample
/// index inside a batch, or npos for a single solve.
class SolverError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  SolverError(const std::string& what, std::size_t index = npos) : Error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// Malformed input file; line() is 1-based, 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace sphgrad
