#pragma once

#include <stdexcept>
#include <string>

namespace protip {

// Pipeline errors carry a stage name so CLI messages can point at the
// failing step.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

class InvalidArgument : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

// File or directory contents do not match the expected layout.
class FormatError : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

// The requested trajectory cannot cover the phantom with the given imaging
// geometry.
class CoverageError : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

// Fewer tip matches than the solver or sampler needs.
class InsufficientMatches : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

// No RANSAC hypothesis ever passed the residual gate.
class NoConsensus : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

// The linear system does not determine the calibration (rank deficiency).
class DegenerateConfiguration : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

// Fewer than two identified fiducials; no pair statistics possible.
class InsufficientFiducials : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

}  // namespace protip
