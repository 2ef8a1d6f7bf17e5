#pragma once

#include <stdexcept>
#include <string>

namespace dkb {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// k <= 2*delta: no purely imaginary root exists.
class NoHopfError : public Error {
 public:
  using Error::Error;
};

class BranchIndexError : public Error {
 public:
  using Error::Error;
};

/// Hopf frequency at (or within 1e-8 of) zero.
class DegenerateFrequencyError : public Error {
 public:
  using Error::Error;
};

/// |1 + (k tau / 2) exp(-i beta tau)| vanishes.
class SingularNormalizerError : public Error {
 public:
  using Error::Error;
};

/// Argument-principle contour kept hitting a root.
class RootOnContourError : public Error {
 public:
  using Error::Error;
};

/// Nontrivial root of the co-rotating characteristic function on the imaginary axis.
class MarginalStabilityError : public Error {
 public:
  using Error::Error;
};

class ResonanceError : public Error {
 public:
  using Error::Error;
};

class DegenerateUnfoldingError : public Error {
 public:
  using Error::Error;
};

class StepTooLargeError : public Error {
 public:
  using Error::Error;
};

class HistoryRangeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state during integration; carries the time stamp of the failure.
class DivergenceError : public Error {
 public:
  DivergenceError(double t, const std::string& what)
      : Error(what + " (t = " + std::to_string(t) + ")"), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace dkb
