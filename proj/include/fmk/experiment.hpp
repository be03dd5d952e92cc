#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fmk {

// Shared run controls; command-line flags override config values.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> n_max;
  std::string out_dir;  // empty = do not write files (in-process use)
  bool quiet = false;
};

struct ExperimentOutcome {
  int exit_code = 1;
  std::string report_json;      // primary JSON report
  std::string trace_csv;        // selfint/quasi traces
  std::string diagnostics_csv;  // simulate rows
  std::string summary;          // one-line human summary
  std::string error;            // set when exit_code is an error code
  std::vector<std::string> written_files;
};

// Run one experiment from a JSON config text. Commands: selfint, quasi,
// simulate, tensor, catalog. Exit codes: 0 converged/ok, 2 tag-dependent,
// 3 unbounded, 4 factorization failure, 1 any other error. Unknown config
// keys are rejected. When opts.out_dir is non-empty the report and CSV
// files are written there.
ExperimentOutcome run_experiment(const std::string& command, const std::string& config_text,
                                 const RunOptions& opts);

// Full command-line front end (flag parsing, config file loading, output
// directory resolution: --out flag, then FMK_OUT_DIR, then ".").
int run_cli(int argc, char** argv);

}  // namespace fmk
