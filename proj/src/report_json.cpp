#include "fmk/report_json.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace fmk {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

std::string report_to_json(const SelfIntegralReport& r, bool with_timestamp) {
  nlohmann::json j;
  j["kernel"] = r.kernel_name;
  j["domain"] = {{"lo", r.domain.lo}, {"hi", r.domain.hi}};
  if (r.domain_b)
    j["domain_b"] = {{"lo", r.domain_b->lo}, {"hi", r.domain_b->hi}};
  j["verdict"] = to_string(r.verdict);
  if (r.value) j["value"] = *r.value;
  j["tol"] = r.tol;
  j["n_max"] = r.n_max;
  j["bound"] = r.bound;
  j["system_values"] = nlohmann::json::object();
  for (const auto& [label, v] : r.system_values) j["system_values"][label] = v;
  j["traces"] = nlohmann::json::array();
  for (const auto& t : r.traces) {
    nlohmann::json jt;
    jt["system"] = t.label;
    jt["final"] = t.final_sum;
    jt["extrapolated"] = t.extrapolated;
    jt["cauchy"] = t.cauchy;
    jt["flagged_unbounded"] = t.flagged_unbounded;
    jt["points"] = nlohmann::json::array();
    for (const auto& [n, s] : t.points) jt["points"].push_back({n, s});
    j["traces"].push_back(std::move(jt));
  }
  if (with_timestamp) j["timestamp"] = iso_now();
  return j.dump(2) + "\n";
}

std::string traces_to_csv(const SelfIntegralReport& r) {
  std::ostringstream out;
  out << "system,n,sum\n";
  for (const auto& t : r.traces)
    for (const auto& [n, s] : t.points) out << t.label << ',' << n << ',' << fmt_double(s) << '\n';
  return out.str();
}

std::string diagnostics_to_csv(const std::vector<DiagnosticsRow>& rows) {
  std::ostringstream out;
  out << "n,mean,se_mean,var,l2_gap\n";
  for (const auto& row : rows)
    out << row.n << ',' << fmt_double(row.mean) << ',' << fmt_double(row.se_mean) << ','
        << fmt_double(row.var) << ',' << fmt_double(row.l2_gap) << '\n';
  return out.str();
}

std::string iso_timestamp() { return iso_now(); }

std::string strip_timestamp(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find("\"timestamp\"") != std::string::npos) continue;
    out << line << '\n';
  }
  return out.str();
}

}  // namespace fmk
