#pragma once

#include <stdexcept>
#include <string>

namespace incmap {

// Error categories map onto CLI exit codes: config = 2, data = 3, pipeline = 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normal-equation rank failure; carries the deficiency so callers can tell a
// missing anchor (deficiency 3) from a disconnected graph.
struct RankDeficiencyError : PipelineError {
  RankDeficiencyError(int deficiency, const std::string& context)
      : PipelineError("rank-deficient system (deficiency " +
                      std::to_string(deficiency) + ") in " + context),
        deficiency(deficiency) {}
  int deficiency;
};

}  // namespace incmap
