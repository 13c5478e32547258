#pragma once

#include <cstdint>
#include <string>

namespace lisvar {

struct RunConfig {
  std::string mode;  // fit, check-id, identify-set, irf, posterior, confsets, hsvar, simulate
  std::string data_path;
  std::string spec_path;
  int lags = 1;
  int h_max = 8;
  int draws = 1000;
  double alpha = 0.9;
  std::uint64_t seed = 1;
  int t_break = 0;                  // 0: single regime
  std::string label_mode = "both";  // confsets: switching, fixed, both
  int anchor_variable = 1;
  int anchor_shock = 1;
  int anchor_horizon = 0;
  std::string out_dir = ".";
  int threads = 1;

  void validate() const;
};

// Runs the selected pipeline and writes its artifacts into out_dir.
// Returns 0 on success, 2 when the identified set (or every posterior draw's
// identified set) is empty. Errors are thrown.
int run(const RunConfig& config);

}  // namespace lisvar
