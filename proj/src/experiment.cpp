#include "fmk/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fmk/gaussian.hpp"
#include "fmk/kernel.hpp"
#include "fmk/report_json.hpp"
#include "fmk/riemann.hpp"
#include "fmk/rng.hpp"
#include "fmk/selfint.hpp"
#include "fmk/tensorprod.hpp"

namespace fmk {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require_keys(const json& obj, const std::string& ctx,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail("config: " + ctx + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail("config: unknown key '" + it.key() + "' in " + ctx);
  }
}

double jnum(const json& o, const char* k, double dflt) {
  if (!o.contains(k)) return dflt;
  if (!o.at(k).is_number()) fail(std::string("config: ") + k + " must be a number");
  return o.at(k).get<double>();
}

int jint(const json& o, const char* k, int dflt) {
  if (!o.contains(k)) return dflt;
  if (!o.at(k).is_number_integer()) fail(std::string("config: ") + k + " must be an integer");
  return o.at(k).get<int>();
}

std::uint64_t ju64(const json& o, const char* k, std::uint64_t dflt) {
  if (!o.contains(k)) return dflt;
  if (!o.at(k).is_number_unsigned() && !o.at(k).is_number_integer())
    fail(std::string("config: ") + k + " must be a non-negative integer");
  return o.at(k).get<std::uint64_t>();
}

std::string jstr(const json& o, const char* k, const std::string& dflt) {
  if (!o.contains(k)) return dflt;
  if (!o.at(k).is_string()) fail(std::string("config: ") + k + " must be a string");
  return o.at(k).get<std::string>();
}

std::function<double(double)> named_fn(const std::string& name) {
  if (name == "one") return [](double) { return 1.0; };
  if (name == "identity") return [](double x) { return x; };
  if (name == "square") return [](double x) { return x * x; };
  if (name == "sin2pi") return [](double x) { return std::sin(2.0 * M_PI * x); };
  fail("config: unknown function name '" + name + "'");
}

std::function<double(double, double)> named_psi(const std::string& name) {
  if (name == "one") return [](double, double) { return 1.0; };
  if (name == "xy") return [](double x, double y) { return x * y; };
  if (name == "x_plus_y") return [](double x, double y) { return x + y; };
  if (name == "asym") return [](double x, double y) { return std::exp(x) * y * y + 0.5 * y; };
  fail("config: unknown psi name '" + name + "'");
}

Measure1D named_measure(const std::string& name, double scale) {
  if (name == "lebesgue") return Measure1D::lebesgue(scale);
  fail("config: unknown measure name '" + name + "'");
}

KernelHandle kernel_from_config(const json& k) {
  if (!k.is_object() || !k.contains("name")) fail("config: kernel needs a name");
  const std::string name = k.at("name").get<std::string>();
  if (name == "brownian_wn") {
    require_keys(k, "kernel", {"name"});
    return brownian_wn_kernel();
  }
  if (name == "fbm") {
    require_keys(k, "kernel", {"name", "hurst"});
    return fbm_kernel(jnum(k, "hurst", 0.75));
  }
  if (name == "singular") {
    require_keys(k, "kernel", {"name"});
    return singular_kernel();
  }
  if (name == "orthogonal") {
    require_keys(k, "kernel", {"name", "nu", "scale"});
    return orthogonal_kernel(named_measure(jstr(k, "nu", "lebesgue"), jnum(k, "scale", 1.0)));
  }
  if (name == "tensor") {
    require_keys(k, "kernel", {"name", "f", "mu", "scale"});
    return tensor_kernel(named_fn(jstr(k, "f", "identity")),
                         named_measure(jstr(k, "mu", "lebesgue"), jnum(k, "scale", 1.0)),
                         Interval{0.0, 1.0});
  }
  fail("config: unknown kernel '" + name + "'");
}

SchemeKind scheme_from_name(const std::string& s) {
  if (s == "uniform") return SchemeKind::Uniform;
  if (s == "dyadic") return SchemeKind::Dyadic;
  if (s == "random") return SchemeKind::Random;
  if (s == "adversarial_geometric") return SchemeKind::AdversarialGeometric;
  fail("config: unknown scheme '" + s + "'");
}

TagKind tag_from_name(const std::string& s) {
  if (s == "left") return TagKind::Left;
  if (s == "right") return TagKind::Right;
  if (s == "midpoint") return TagKind::Midpoint;
  if (s == "random") return TagKind::Random;
  if (s == "near_right") return TagKind::NearRight;
  fail("config: unknown tag rule '" + s + "'");
}

std::vector<RiemannSystem> ensemble_from_config(const json& e, const Interval& D,
                                                std::uint64_t seed, bool quasi_default) {
  require_keys(e, "ensemble", {"kind", "seed", "systems"});
  const std::string kind = jstr(e, "kind", quasi_default ? "quasi" : "default");
  if (kind == "default") return default_ensemble(D, seed);
  if (kind == "quasi") return default_quasi_ensemble(D, seed);
  if (kind == "custom") {
    if (!e.contains("systems") || !e.at("systems").is_array() || e.at("systems").empty())
      fail("config: custom ensemble needs a non-empty systems array");
    std::vector<RiemannSystem> out;
    for (const auto& s : e.at("systems")) {
      require_keys(s, "ensemble system", {"scheme", "tags"});
      out.push_back(make_system(D, scheme_from_name(jstr(s, "scheme", "uniform")),
                                tag_from_name(jstr(s, "tags", "left")), seed));
      seed = derive_seed(seed, 0x5151u);
    }
    return out;
  }
  fail("config: unknown ensemble kind '" + kind + "'");
}

Interval domain_from_config(const json& cfg, const char* key, Interval dflt) {
  if (!cfg.contains(key)) return dflt;
  const json& d = cfg.at(key);
  require_keys(d, key, {"lo", "hi"});
  return Interval{jnum(d, "lo", dflt.lo), jnum(d, "hi", dflt.hi)};
}

struct Payload {
  std::string name;
  std::string content;
};

json report_json_with(const SelfIntegralReport& rep, const char* command, std::uint64_t seed) {
  json j = json::parse(report_to_json(rep, true));
  j["command"] = command;
  j["seed"] = seed;
  return j;
}

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::Converged: return 0;
    case Verdict::TagDependent: return 2;
    case Verdict::Unbounded: return 3;
  }
  return 1;
}

void do_selfint(const json& cfg, const RunOptions& opts, ExperimentOutcome& o,
                std::vector<Payload>& files) {
  require_keys(cfg, "config",
               {"kernel", "domain", "ensemble", "n_max", "tol", "bound_factor", "out"});
  if (!cfg.contains("kernel")) fail("config: kernel required");
  KernelHandle K = kernel_from_config(cfg.at("kernel"));
  Interval D = domain_from_config(cfg, "domain", K.domain);
  const int n_max = opts.n_max ? *opts.n_max : jint(cfg, "n_max", 4096);
  const double tol = jnum(cfg, "tol", 0.02);
  const double bf = jnum(cfg, "bound_factor", 3.0);
  const json ens = cfg.contains("ensemble") ? cfg.at("ensemble") : json{{"kind", "default"}};
  const std::uint64_t seed = opts.seed ? *opts.seed : ju64(ens, "seed", 17);

  auto rep = estimate_self_integral(K, D, ensemble_from_config(ens, D, seed, false), n_max, tol,
                                    bf);
  json j = report_json_with(rep, "selfint", seed);
  o.report_json = j.dump(2) + "\n";
  o.trace_csv = traces_to_csv(rep);
  o.exit_code = verdict_exit(rep.verdict);
  std::ostringstream s;
  s << "selfint " << rep.kernel_name << ": " << to_string(rep.verdict);
  if (rep.value) s << " value=" << *rep.value;
  o.summary = s.str();

  const json out = cfg.contains("out") ? cfg.at("out") : json::object();
  require_keys(out, "out", {"report", "traces"});
  files.push_back({jstr(out, "report", "selfint_report.json"), o.report_json});
  files.push_back({jstr(out, "traces", "selfint_traces.csv"), o.trace_csv});
}

void do_quasi(const json& cfg, const RunOptions& opts, ExperimentOutcome& o,
              std::vector<Payload>& files) {
  require_keys(cfg, "config",
               {"kernel", "domain", "domain_b", "ensemble", "n_max", "tol", "bound_factor",
                "out"});
  if (!cfg.contains("kernel")) fail("config: kernel required");
  KernelHandle K = kernel_from_config(cfg.at("kernel"));
  Interval A = domain_from_config(cfg, "domain", K.domain);
  Interval B = domain_from_config(cfg, "domain_b", A);
  const int n_max = opts.n_max ? *opts.n_max : jint(cfg, "n_max", 256);
  const double tol = jnum(cfg, "tol", 0.03);
  const double bf = jnum(cfg, "bound_factor", 3.0);
  const json ens = cfg.contains("ensemble") ? cfg.at("ensemble") : json{{"kind", "quasi"}};
  const std::uint64_t seed = opts.seed ? *opts.seed : ju64(ens, "seed", 17);

  SecondOrderKernel K2{K};
  auto rep = estimate_quasi_self_integral(K2, A, B, ensemble_from_config(ens, A, seed, true),
                                          ensemble_from_config(ens, B, seed + 1, true), n_max,
                                          tol, bf);
  json j = report_json_with(rep, "quasi", seed);
  o.report_json = j.dump(2) + "\n";
  o.trace_csv = traces_to_csv(rep);
  o.exit_code = verdict_exit(rep.verdict);
  std::ostringstream s;
  s << "quasi " << rep.kernel_name << ": " << to_string(rep.verdict);
  if (rep.value) s << " value=" << *rep.value;
  o.summary = s.str();

  const json out = cfg.contains("out") ? cfg.at("out") : json::object();
  require_keys(out, "out", {"report", "traces"});
  files.push_back({jstr(out, "report", "quasi_report.json"), o.report_json});
  files.push_back({jstr(out, "traces", "quasi_traces.csv"), o.trace_csv});
}

void do_simulate(const json& cfg, const RunOptions& opts, ExperimentOutcome& o,
                 std::vector<Payload>& files) {
  require_keys(cfg, "config", {"model", "mc", "out"});
  if (!cfg.contains("model")) fail("config: model required");
  const json& mj = cfg.at("model");
  require_keys(mj, "model", {"family", "hurst", "cross", "quad_per_cell"});
  const std::string family = jstr(mj, "family", "");
  if (family.empty()) fail("config: model family required");
  const double hurst = jnum(mj, "hurst", 0.75);
  const std::string cross = jstr(mj, "cross", "min");

  if (!cfg.contains("mc")) fail("config: simulate needs an mc section");
  const json& mc = cfg.at("mc");
  require_keys(mc, "mc", {"samples", "seed", "n", "levels", "tags"});
  if (!opts.seed && !mc.contains("seed")) fail("config: mc.seed is mandatory");
  const std::uint64_t seed = opts.seed ? *opts.seed : ju64(mc, "seed", 0);
  const int samples = jint(mc, "samples", 20000);
  if (samples < 2) fail("config: mc.samples must be >= 2");

  std::vector<int> levels;
  if (mc.contains("levels")) {
    if (!mc.at("levels").is_array()) fail("config: mc.levels must be an array");
    for (const auto& v : mc.at("levels")) levels.push_back(v.get<int>());
  } else {
    levels.push_back(jint(mc, "n", 256));
  }
  std::string tag_a = "midpoint", tag_b = "left";
  if (mc.contains("tags")) {
    const auto& t = mc.at("tags");
    if (!t.is_array() || t.size() != 2) fail("config: mc.tags must list exactly two tag rules");
    tag_a = t.at(0).get<std::string>();
    tag_b = t.at(1).get<std::string>();
  }
  const TagKind ta = tag_from_name(tag_a), tb = tag_from_name(tag_b);

  std::vector<DiagnosticsRow> rows;
  json jrows = json::array();
  constexpr int kBlock = 8192;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const int n = levels[li];
    if (n < 2) fail("config: simulate levels must be >= 2");
    auto model = make_uniform_model(family, n, hurst, cross);
    const std::uint64_t level_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
    auto la = build_level(make_system(model.domain, SchemeKind::Uniform, ta,
                                      derive_seed(level_seed, 1)),
                          n);
    auto lb = build_level(make_system(model.domain, SchemeKind::Uniform, tb,
                                      derive_seed(level_seed, 2)),
                          n);

    std::vector<double> sums_a, sums_b;
    sums_a.reserve(static_cast<std::size_t>(samples));
    sums_b.reserve(static_cast<std::size_t>(samples));
    for (int s0 = 0, blk = 0; s0 < samples; s0 += kBlock, ++blk) {
      const int bs = std::min(kBlock, samples - s0);
      auto batch = sample(model, bs, derive_seed(level_seed, static_cast<std::uint64_t>(blk)));
      auto pa = mc_stochastic_sums(model, batch, la.tags);
      auto pb = mc_stochastic_sums(model, batch, lb.tags);
      sums_a.insert(sums_a.end(), pa.begin(), pa.end());
      sums_b.insert(sums_b.end(), pb.begin(), pb.end());
    }
    double mean = 0.0;
    for (double v : sums_a) mean += v;
    mean /= static_cast<double>(sums_a.size());
    double ss = 0.0;
    for (double v : sums_a) ss += (v - mean) * (v - mean);
    const double var = ss / (static_cast<double>(sums_a.size()) - 1.0);
    const double se = std::sqrt(var / static_cast<double>(sums_a.size()));
    const auto gap = l2_gap(sums_a, sums_b);

    rows.push_back({n, mean, se, var, gap.gap});
    jrows.push_back({{"n", n},
                     {"mean", mean},
                     {"se_mean", se},
                     {"var", var},
                     {"l2_gap", gap.gap},
                     {"l2_gap_se", gap.se}});
  }

  json j;
  j["command"] = "simulate";
  j["family"] = family;
  if (family == "fbm") j["hurst"] = hurst;
  if (family == "abs_continuous") j["cross"] = cross;
  j["samples"] = samples;
  j["seed"] = seed;
  j["tag_a"] = tag_a;
  j["tag_b"] = tag_b;
  j["rows"] = jrows;
  j["timestamp"] = iso_timestamp();
  o.report_json = j.dump(2) + "\n";
  o.diagnostics_csv = diagnostics_to_csv(rows);
  o.exit_code = 0;
  std::ostringstream s;
  s << "simulate " << family << ": " << levels.size() << " level(s), " << samples << " samples";
  o.summary = s.str();

  const json out = cfg.contains("out") ? cfg.at("out") : json::object();
  require_keys(out, "out", {"report", "diagnostics"});
  files.push_back({jstr(out, "report", "simulate_report.json"), o.report_json});
  files.push_back({jstr(out, "diagnostics", "simulate_diagnostics.csv"), o.diagnostics_csv});
}

void do_tensor(const json& cfg, const RunOptions& opts, ExperimentOutcome& o,
               std::vector<Payload>& files) {
  require_keys(cfg, "config", {"tensor", "out"});
  if (!cfg.contains("tensor")) fail("config: tensor section required");
  const json& tj = cfg.at("tensor");
  require_keys(tj, "tensor", {"same_measure", "psi", "n", "samples", "seed"});
  const bool same = tj.contains("same_measure") ? tj.at("same_measure").get<bool>() : true;
  const int n = jint(tj, "n", 16);
  const int samples = jint(tj, "samples", 20000);
  if (!opts.seed && !tj.contains("seed")) fail("config: tensor.seed is mandatory");
  const std::uint64_t seed = opts.seed ? *opts.seed : ju64(tj, "seed", 0);

  PsiSpec psi = PsiSpec::indicator(true);
  std::string psi_label = "indicator_closed";
  if (tj.contains("psi")) {
    const json& pj = tj.at("psi");
    require_keys(pj, "psi", {"kind", "closed", "name"});
    const std::string kind = jstr(pj, "kind", "indicator");
    if (kind == "indicator") {
      const bool closed = pj.contains("closed") ? pj.at("closed").get<bool>() : true;
      psi = PsiSpec::indicator(closed);
      psi_label = closed ? "indicator_closed" : "indicator_open";
    } else if (kind == "function") {
      const std::string nm = jstr(pj, "name", "one");
      psi = PsiSpec::function(named_psi(nm));
      psi_label = nm;
    } else {
      fail("config: psi.kind must be indicator or function");
    }
  }

  auto model = wn_pair_model(same);
  const double mean_closed = tensor_mean(model, PsiSpec::indicator(true), n);
  const double mean_open = tensor_mean(model, PsiSpec::indicator(false), n);
  auto fub = fubini_mc_check(model, psi, n, samples, seed);

  json rowsj = json::array();
  rowsj.push_back({{"psi", "indicator_closed"}, {"analytic", mean_closed}});
  rowsj.push_back({{"psi", "indicator_open"}, {"analytic", mean_open}});
  rowsj.push_back({{"psi", psi_label},
                   {"order_a", fub.order_a},
                   {"order_b", fub.order_b},
                   {"se", fub.se},
                   {"analytic", fub.analytic}});
  json j;
  j["command"] = "tensor";
  j["same_measure"] = same;
  j["n"] = n;
  j["samples"] = samples;
  j["seed"] = seed;
  j["rows"] = rowsj;
  j["diagonal_gap"] = mean_closed - mean_open;
  j["timestamp"] = iso_timestamp();
  o.report_json = j.dump(2) + "\n";
  o.exit_code = 0;
  std::ostringstream s;
  s << "tensor demo: closed=" << mean_closed << " open=" << mean_open << " psi=" << psi_label
    << " |order_a-order_b|=" << std::abs(fub.order_a - fub.order_b);
  o.summary = s.str();

  const json out = cfg.contains("out") ? cfg.at("out") : json::object();
  require_keys(out, "out", {"report"});
  files.push_back({jstr(out, "report", "tensor_report.json"), o.report_json});
}

void do_catalog(ExperimentOutcome& o, std::vector<Payload>& files) {
  json j;
  j["command"] = "catalog";
  j["kernels"] = json::array(
      {{{"name", "tensor"},
        {"params", {{"f", "one|identity|square|sin2pi"}, {"mu", "lebesgue"}, {"scale", "number"}}},
        {"about", "f(x) * mu(A); converges to the midpoint value for smooth f"}},
       {{"name", "brownian_wn"},
        {"params", json::object()},
        {"about", "lebesgue(A ∩ [0,x]) on [0,1]; tag-dependent self-integral"}},
       {{"name", "fbm"},
        {"params", {{"hurst", "(0.5, 1.0)"}}},
        {"about", "fractional covariance surface increments; self-integral 1/2"}},
       {{"name", "orthogonal"},
        {"params", {{"nu", "lebesgue"}, {"scale", "number"}}},
        {"about", "nu([0,t] ∩ A); left sums 0, near-right sums approach nu(D)"}},
       {{"name", "singular"},
        {"params", json::object()},
        {"about", "integrable diagonal singularity on [-1,1]; sums diverge like n^{1/8}"}},
       {{"name", "psi_mu"},
        {"params", {{"psi", "two-variable function"}, {"mu", "measure"}, {"panels", "integer"}}},
        {"about", "composition kernel for iterated integrals"}}});
  o.report_json = j.dump(2) + "\n";
  o.exit_code = 0;
  o.summary = "catalog: 6 kernel families";
  files.push_back({"catalog.json", o.report_json});
}

void write_payloads(ExperimentOutcome& o, const RunOptions& opts,
                    const std::vector<Payload>& files) {
  if (opts.out_dir.empty()) return;
  namespace fs = std::filesystem;
  fs::create_directories(opts.out_dir);
  for (const auto& p : files) {
    fs::path path = fs::path(opts.out_dir) / p.name;
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write " + path.string());
    out << p.content;
    o.written_files.push_back(path.string());
  }
}

}  // namespace

ExperimentOutcome run_experiment(const std::string& command, const std::string& config_text,
                                 const RunOptions& opts) {
  ExperimentOutcome o;
  std::vector<Payload> files;
  try {
    json cfg = json::object();
    if (command != "catalog") {
      if (config_text.empty()) fail("config: empty config text");
      cfg = json::parse(config_text);
    }
    if (command == "selfint")
      do_selfint(cfg, opts, o, files);
    else if (command == "quasi")
      do_quasi(cfg, opts, o, files);
    else if (command == "simulate")
      do_simulate(cfg, opts, o, files);
    else if (command == "tensor")
      do_tensor(cfg, opts, o, files);
    else if (command == "catalog")
      do_catalog(o, files);
    else
      fail("unknown command '" + command + "'");
    write_payloads(o, opts, files);
  } catch (const FactorizationError& e) {
    o.exit_code = 4;
    o.error = e.what();
  } catch (const std::exception& e) {
    o.exit_code = 1;
    o.error = e.what();
  }
  return o;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"function-measure kernels: self-integrals, quasi integrals, Monte Carlo checks"};
  app.require_subcommand(1);

  std::string config_path, out_flag;
  bool quiet = false;
  std::uint64_t seed_val = 0;
  int nmax_val = 0;

  const char* names[] = {"selfint", "quasi", "simulate", "tensor", "catalog"};
  const char* descs[] = {"estimate a self-integral over a Riemann ensemble",
                         "estimate a quasi-self-integral (second-order double sums)",
                         "Monte Carlo sums on a Gaussian model with diagnostics",
                         "tensor-product mean/covariance and Fubini checks",
                         "list the kernel catalog"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descs[i]);
    if (std::string(names[i]) != "catalog")
      sub->add_option("--config", config_path, "JSON config file")
          ->required()
          ->check(CLI::ExistingFile);
    sub->add_option("--out", out_flag, "output directory (default: FMK_OUT_DIR or '.')");
    sub->add_option("--seed", seed_val, "override every seed in the config");
    sub->add_option("--n-max", nmax_val, "override the refinement ceiling");
    sub->add_flag("--quiet", quiet, "suppress the summary line");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* sub = app.get_subcommands().front();
  RunOptions opts;
  opts.quiet = quiet;
  if (sub->count("--seed") > 0) opts.seed = seed_val;
  if (sub->count("--n-max") > 0) opts.n_max = nmax_val;
  if (!out_flag.empty()) {
    opts.out_dir = out_flag;
  } else if (const char* env = std::getenv("FMK_OUT_DIR"); env != nullptr && *env != '\0') {
    opts.out_dir = env;
  } else {
    opts.out_dir = ".";
  }

  std::string text;
  if (sub->get_name() != "catalog") {
    std::ifstream in(config_path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }

  auto o = run_experiment(sub->get_name(), text, opts);
  if (!o.error.empty()) {
    std::cerr << "error: " << o.error << '\n';
  } else if (!quiet) {
    std::cout << o.summary << '\n';
    if (sub->get_name() == "catalog") std::cout << o.report_json;
    for (const auto& f : o.written_files) std::cout << "wrote " << f << '\n';
  }
  return o.exit_code;
}

}  // namespace fmk
