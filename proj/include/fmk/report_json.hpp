#pragma once

#include <string>
#include <vector>

#include "fmk/selfint.hpp"

namespace fmk {

// Self-integral report as pretty-printed JSON with sorted keys. The
// timestamp field is the only run-dependent part; drop it (or strip it
// later) when comparing runs.
std::string report_to_json(const SelfIntegralReport& r, bool with_timestamp = true);

// Every trace of the report as "system,n,sum" rows.
std::string traces_to_csv(const SelfIntegralReport& r);

struct DiagnosticsRow {
  int n = 0;
  double mean = 0.0;
  double se_mean = 0.0;
  double var = 0.0;
  double l2_gap = 0.0;
};

// Fixed-column Monte Carlo diagnostics: "n,mean,se_mean,var,l2_gap".
std::string diagnostics_to_csv(const std::vector<DiagnosticsRow>& rows);

// Remove lines carrying a "timestamp" key so byte comparisons see only
// the reproducible content.
std::string strip_timestamp(const std::string& text);

// Current UTC time as an ISO-8601 string (the same stamp the reports carry).
std::string iso_timestamp();

}  // namespace fmk
