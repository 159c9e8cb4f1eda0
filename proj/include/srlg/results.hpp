#pragma once

#include <limits>
#include <string>
#include <vector>

namespace srlg {

// Outcome of a full filter pass. A failed run keeps the step index and reason
// so experiment tables can render the failure instead of aborting a sweep.
template <class S>
struct LoglikResult {
  S loglik = std::numeric_limits<S>::quiet_NaN();
  bool failed = false;
  int fail_step = 0;  // 1-based step at which the run failed
  std::string fail_reason;
  std::vector<S> cond_re;  // per-step innovation-covariance condition estimate
};

template <class S>
struct ScoreResult {
  S loglik = std::numeric_limits<S>::quiet_NaN();
  std::vector<S> gradient;
  bool failed = false;
  int fail_step = 0;
  std::string fail_reason;
  std::vector<S> cond_re;
};

}  // namespace srlg
