#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "hsn/data.hpp"
#include "hsn/errors.hpp"
#include "hsn/experiments.hpp"
#include "hsn/oracle.hpp"
#include "hsn/report_io.hpp"
#include "hsn/rng.hpp"
#include "selftest.hpp"

namespace hsnbench {

namespace fs = std::filesystem;
using hsn::Json;

const std::vector<Profile>& profiles() {
  static const std::vector<Profile> table = {
      {"paper-d10", 10, 1e-10, 1.0 - 1e-10, 10, 100000, 100},
      {"paper-d50", 50, 1e-10, 1.0 - 1e-10, 10, 100000, 100},
      {"paper-d100", 100, 0.25, 0.75, 10, 100000, 100},
      {"paper-d200", 200, 0.9, 0.1, 10, 100000, 100},
      {"paper-real", 0, 1.0 - 1e-10, 1e-10, 10, 0, 100},
  };
  return table;
}

namespace {

/// Invalid configuration attributed to one field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string profile;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string out_dir;
  std::string name;

  std::string algo = "hsn";
  std::string algos = "hsn,ons,sn,tsn,sgd";
  double alpha = 0.5;
  double beta = 0.5;
  double tsn_nu0 = 1.0;
  double tsn_gamma = 0.49;
  double sgd_scale = 1.0;

  long dim = 10;
  int theta_bound = 10;
  std::uint64_t n = 100000;
  std::uint64_t reps = 100;
  std::string cadence = "pow2";

  std::uint64_t mc_samples = 1000000;
  std::uint64_t null_reps = 1000;
  double null_quantile = 0.99;
  std::uint64_t risk_samples = 100000;
  std::uint64_t window_lo = 1000;
  std::uint64_t window_hi = 100000;

  std::string train;
  std::string test;
  std::string label;
  std::vector<std::string> positive;
  std::vector<std::string> categorical;
  std::vector<std::string> ignore;
  std::string delimiter = ",";
  double test_fraction = 0.01;

  std::vector<std::string> files;
};

/// Options whose value a profile may supply when neither flag nor config file did.
struct ProfileTargets {
  CLI::Option* dim = nullptr;
  CLI::Option* alpha = nullptr;
  CLI::Option* beta = nullptr;
  CLI::Option* theta_bound = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* reps = nullptr;
};

struct Derived {
  std::uint64_t theta_seed, stream_seed, oracle_seed, null_seed, risk_seed, order_seed, split_seed;
};

Derived derive(std::uint64_t seed) {
  return {hsn::derive_seed(seed, "theta-model"), hsn::derive_seed(seed, "streams"),
          hsn::derive_seed(seed, "oracle"),      hsn::derive_seed(seed, "null"),
          hsn::derive_seed(seed, "risk"),        hsn::derive_seed(seed, "order"),
          hsn::derive_seed(seed, "split")};
}

Json seeds_json(const Settings& s) {
  const auto d = derive(s.seed);
  return {{"seed", s.seed},         {"theta", d.theta_seed}, {"streams", d.stream_seed},
          {"oracle", d.oracle_seed}, {"null", d.null_seed},   {"risk", d.risk_seed},
          {"order", d.order_seed},  {"split", d.split_seed}};
}

// --- validation ----------------------------------------------------------------

hsn::Algorithm parse_algo(const std::string& field, const std::string& text) {
  try {
    return hsn::parse_algorithm(text);
  } catch (const std::exception& e) {
    throw ConfigError(field, e.what());
  }
}

std::vector<hsn::Algorithm> parse_algo_list(const std::string& text) {
  std::vector<hsn::Algorithm> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = parse_algo("algos", item);
    if (std::find(out.begin(), out.end(), a) != out.end()) {
      throw ConfigError("algos", "algorithm '" + item + "' listed twice");
    }
    out.push_back(a);
  }
  if (out.empty()) throw ConfigError("algos", "no algorithms given");
  return out;
}

hsn::OptimizerConfig optimizer_for(const Settings& s, hsn::Algorithm algo) {
  hsn::OptimizerConfig cfg;
  cfg.algorithm = algo;
  if (!std::isfinite(s.alpha) || s.alpha < 0.0) throw ConfigError("alpha", "alpha must be finite and >= 0");
  if (!std::isfinite(s.beta) || s.beta <= 0.0) throw ConfigError("beta", "beta must be finite and > 0");
  cfg.weights = hsn::HybridWeights(s.alpha, s.beta);
  cfg.truncation = {s.tsn_nu0, s.tsn_gamma};
  try {
    cfg.truncation.validate();
  } catch (const std::exception& e) {
    throw ConfigError("tsn-gamma", e.what());
  }
  if (!(s.sgd_scale > 0.0) || !std::isfinite(s.sgd_scale)) {
    throw ConfigError("sgd-scale", "sgd step scale must be finite and > 0");
  }
  cfg.step_scale = s.sgd_scale;
  return cfg;
}

Json optimizer_json(const hsn::OptimizerConfig& o) {
  Json j = {{"algorithm", std::string(hsn::to_string(o.algorithm))}};
  switch (o.algorithm) {
    case hsn::Algorithm::HSN:
      j["alpha"] = o.weights.alpha();
      j["beta"] = o.weights.beta();
      break;
    case hsn::Algorithm::TSN:
      j["tsn_nu0"] = o.truncation.floor_scale;
      j["tsn_gamma"] = o.truncation.exponent;
      break;
    case hsn::Algorithm::SGD: j["sgd_step_scale"] = o.step_scale; break;
    default: break;
  }
  return j;
}

hsn::Cadence parse_cadence(const std::string& text) {
  try {
    return hsn::Cadence::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("cadence", e.what());
  }
}

void validate_synthetic(const Settings& s) {
  if (s.dim < 1) throw ConfigError("dim", "dim must be >= 1");
  if (s.theta_bound < 0) throw ConfigError("theta-bound", "theta bound must be >= 0");
  if (s.reps < 1) throw ConfigError("reps", "replication count must be >= 1");
  if (s.mc_samples < 1) throw ConfigError("mc-samples", "oracle sample count must be >= 1");
}

void require_unit_sum(const Settings& s) {
  if (std::abs(s.alpha + s.beta - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "alpha + beta must equal 1 for this diagnostic (got " << s.alpha + s.beta << ")";
    throw ConfigError("alpha+beta", msg.str());
  }
}

hsn::ExperimentConfig experiment(const Settings& s, hsn::Algorithm algo) {
  validate_synthetic(s);
  const auto d = derive(s.seed);
  hsn::ExperimentConfig cfg;
  cfg.optimizer = optimizer_for(s, algo);
  cfg.spec = hsn::SyntheticSpec{s.dim, d.theta_seed, d.stream_seed, s.theta_bound, std::nullopt};
  cfg.n = s.n;
  cfg.cadence = parse_cadence(s.cadence);
  cfg.workers = s.workers;
  return cfg;
}

Json base_config(const Settings& s, const std::string& subcommand) {
  return {{"tool", "hsnbench"},
          {"version", "0.1.0"},
          {"subcommand", subcommand},
          {"profile", s.profile.empty() ? Json(nullptr) : Json(s.profile)},
          {"seeds", seeds_json(s)}};
}

Json synthetic_json(const Settings& s) {
  return {{"dim", s.dim},
          {"theta_law", "uniform integers in [-theta_bound, theta_bound]"},
          {"theta_bound", s.theta_bound},
          {"feature_law", "uniform on [0,1]^dim"},
          {"n", s.n},
          {"replications", s.reps},
          {"cadence", s.cadence}};
}

// --- output --------------------------------------------------------------------

struct PendingFile {
  fs::path path;
  std::string contents;
};

fs::path output_dir(const Settings& s) {
  if (!s.out_dir.empty()) return s.out_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return ".";
}

void commit(const std::vector<PendingFile>& files, std::ostream& out) {
  for (const auto& f : files) {
    std::error_code ec;
    if (f.path.has_parent_path()) fs::create_directories(f.path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + f.path.parent_path().string() + ": " + ec.message());
    const fs::path tmp = f.path.string() + ".tmp";
    {
      std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
      if (!o) throw IoError("cannot open " + tmp.string() + " for writing");
      o << f.contents;
      o.flush();
      if (!o) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, f.path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + f.path.string() + ": " + ec.message());
    out << "wrote " << f.path.string() << '\n';
  }
}

std::string stem(const Settings& s, const std::string& fallback) { return s.name.empty() ? fallback : s.name; }

PendingFile series_file(const Settings& s, const std::string& suffix,
                        const std::vector<std::pair<std::string, hsn::Series>>& cols, const Json& config) {
  std::ostringstream buf;
  hsn::write_series_csv(buf, cols, config);
  return {output_dir(s) / (stem(s, config.at("subcommand").get<std::string>()) + suffix), buf.str()};
}

PendingFile report_file(const Settings& s, const hsn::DiagnosticReport& rep, const Json& config) {
  std::ostringstream buf;
  hsn::write_report_json(buf, rep, config);
  return {output_dir(s) / (stem(s, config.at("subcommand").get<std::string>()) + ".json"), buf.str()};
}

PendingFile json_file(const Settings& s, Json body, const Json& config) {
  std::ostringstream buf;
  hsn::write_json_document(buf, std::move(body), config);
  return {output_dir(s) / (stem(s, config.at("subcommand").get<std::string>()) + ".json"), buf.str()};
}

void print_header(std::ostream& out, const Settings& s, const Json& config) {
  out << "seed " << s.seed << '\n';
  out << "config_hash " << hsn::hash_hex(hsn::config_hash(config)) << '\n';
}

void print_report(std::ostream& out, const hsn::DiagnosticReport& rep) {
  for (const auto& c : rep.checks) {
    out << (c.pass ? "PASS " : "FAIL ") << rep.name << '.' << c.name << " statistic=" << hsn::format_number(c.statistic)
        << " range=[" << hsn::format_number(c.lower) << ',' << hsn::format_number(c.upper) << "]\n";
  }
}

// --- subcommands ---------------------------------------------------------------

int cmd_synth(const Settings& s, std::ostream& out) {
  const auto algo = parse_algo("algo", s.algo);
  const auto cfg = experiment(s, algo);
  Json config = base_config(s, "synth");
  config["model"] = synthetic_json(s);
  config["optimizer"] = optimizer_json(cfg.optimizer);
  print_header(out, s, config);
  const auto curve = hsn::mse_curve(cfg, s.reps);
  commit({series_file(s, ".csv", {{"mse", curve}}, config)}, out);
  out << "final mse " << hsn::format_number(curve.back().value) << '\n';
  return kOk;
}

int cmd_compare(const Settings& s, std::ostream& out) {
  const auto algos = parse_algo_list(s.algos);
  auto base = experiment(s, algos.front());
  std::vector<hsn::OptimizerConfig> optimizers;
  Json opt_json = Json::array();
  for (auto a : algos) {
    optimizers.push_back(optimizer_for(s, a));
    opt_json.push_back(optimizer_json(optimizers.back()));
  }
  Json config = base_config(s, "compare");
  config["model"] = synthetic_json(s);
  config["optimizers"] = opt_json;
  print_header(out, s, config);

  const auto curves = hsn::compare_algorithms(base, optimizers, s.reps);
  std::vector<std::pair<std::string, hsn::Series>> cols;
  Json finals = Json::object();
  std::map<std::string, std::string> tag_of;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    std::string tag(hsn::to_string(algos[i]));
    std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::tolower(c); });
    tag_of[curves[i].label] = tag;
    cols.emplace_back(tag, curves[i].mse);
    finals[tag] = curves[i].mse.back().value;
  }
  Json ordering = Json::array();
  for (const auto& label : hsn::final_ordering(curves)) ordering.push_back(tag_of[label]);
  commit({series_file(s, ".csv", cols, config),
          json_file(s, {{"final_mse", finals}, {"ordering", ordering}}, config)},
         out);
  out << "ordering (best first):";
  for (const auto& t : ordering) out << ' ' << t.get<std::string>();
  out << '\n';
  return kOk;
}

int cmd_rates(const Settings& s, std::ostream& out) {
  const auto algo = parse_algo("algo", s.algo);
  const auto cfg = experiment(s, algo);
  if (s.window_lo < 1 || s.window_hi <= s.window_lo) throw ConfigError("window", "need 1 <= window-lo < window-hi");
  if (s.window_hi > s.n) throw ConfigError("window-hi", "window must end at or before n");
  for (const auto k : {s.window_lo, s.window_hi}) {
    if (k != s.n && !cfg.cadence.contains(k)) {
      throw ConfigError("cadence", "cadence must contain window endpoint " + std::to_string(k));
    }
  }
  Json config = base_config(s, "rates");
  config["model"] = synthetic_json(s);
  config["optimizer"] = optimizer_json(cfg.optimizer);
  config["window"] = {s.window_lo, s.window_hi};
  print_header(out, s, config);

  const auto curve = hsn::mse_curve(cfg, s.reps);
  auto value_at = [&](std::uint64_t k) {
    for (const auto& p : curve) {
      if (p.iteration == k) return p.value;
    }
    throw ConfigError("cadence", "cadence must contain window endpoint " + std::to_string(k));
  };
  const double lo_value = value_at(s.window_lo);
  const double hi_value = value_at(s.window_hi);
  hsn::DiagnosticReport rep;
  rep.name = "rates";
  rep.replications = s.reps;
  for (std::uint64_t r = 0; r < s.reps; ++r) rep.seeds.push_back(hsn::replication_seed(cfg.spec.stream_seed, r));
  rep.checks.push_back(hsn::DiagnosticCheck::band("mse_slope", hsn::rate_slope(curve, s.window_lo, s.window_hi), -1.0,
                                                  -1.2, -0.7, "log-log slope of mean squared error over the window"));
  rep.checks.push_back(hsn::DiagnosticCheck::band("mse_drop", lo_value / hi_value, 10.0, 10.0,
                                                  std::numeric_limits<double>::infinity(),
                                                  "mse at window start divided by mse at window end"));
  for (const auto& p : curve) rep.trend.push_back({p.iteration, {{"mse", p.value}}});
  commit({series_file(s, ".csv", {{"mse", curve}}, config), report_file(s, rep, config)}, out);
  print_report(out, rep);
  return rep.pass() ? kOk : kDiagnosticFailure;
}

hsn::GroundTruth oracle_for(const Settings& s, const hsn::ExperimentConfig& cfg) {
  const hsn::UniformCubeSampler sampler(cfg.spec.dim);
  return hsn::synthetic_ground_truth(hsn::gen_theta(cfg.spec), sampler, s.mc_samples, derive(s.seed).oracle_seed,
                                     s.workers);
}

int cmd_hessian(const Settings& s, std::ostream& out) {
  const auto algo = parse_algo("algo", s.algo);
  if (!hsn::is_second_order(algo)) throw ConfigError("algo", "hessian needs a second-order algorithm");
  const auto cfg = experiment(s, algo);
  if (s.window_lo < 1 || s.window_hi <= s.window_lo) throw ConfigError("window", "need 1 <= window-lo < window-hi");
  Json config = base_config(s, "hessian");
  config["model"] = synthetic_json(s);
  config["optimizer"] = optimizer_json(cfg.optimizer);
  config["window"] = {s.window_lo, s.window_hi};
  config["oracle_samples"] = s.mc_samples;
  print_header(out, s, config);

  const auto truth = oracle_for(s, cfg);
  const auto res = hsn::hessian_convergence(cfg, truth, s.reps, {s.window_lo, s.window_hi});
  commit({series_file(s, ".csv",
                      {{"mse", res.mse},
                       {"sbar_sq", res.sbar_sq},
                       {"sbar_inv_sq", res.sbar_inv_sq},
                       {"hbar_sq", res.hbar_sq},
                       {"sigbar_sq", res.sigbar_sq},
                       {"hbar_sigbar_sq", res.hbar_sigbar_sq}},
                      config),
          report_file(s, res.report, config)},
         out);
  print_report(out, res.report);
  return res.report.pass() ? kOk : kDiagnosticFailure;
}

int cmd_clt(const Settings& s, std::ostream& out) {
  require_unit_sum(s);
  if (s.reps < 100) throw ConfigError("reps", "clt needs at least 100 replications");
  if (s.n < 1) throw ConfigError("n", "clt needs n >= 1");
  const auto cfg = experiment(s, hsn::Algorithm::HSN);
  const auto d = derive(s.seed);
  Json config = base_config(s, "clt");
  config["model"] = synthetic_json(s);
  config["optimizer"] = optimizer_json(cfg.optimizer);
  config["oracle_samples"] = s.mc_samples;
  config["null_replicates"] = s.null_reps;
  config["null_quantile"] = s.null_quantile;
  print_header(out, s, config);

  const auto truth = oracle_for(s, cfg);
  hsn::CltOptions opts;
  opts.replications = s.reps;
  opts.null_replicates = s.null_reps;
  opts.null_quantile = s.null_quantile;
  opts.null_seed = d.null_seed;
  const auto rep = hsn::clt_diagnostic(cfg, truth, opts);
  commit({report_file(s, rep, config)}, out);
  print_report(out, rep);
  return rep.pass() ? kOk : kDiagnosticFailure;
}

int cmd_qsl(const Settings& s, std::ostream& out) {
  require_unit_sum(s);
  if (s.n < 10000) throw ConfigError("n", "qsl needs n >= 10000");
  if (s.risk_samples < 1) throw ConfigError("risk-samples", "risk sample count must be >= 1");
  const auto cfg = experiment(s, hsn::Algorithm::HSN);
  const auto d = derive(s.seed);
  Json config = base_config(s, "qsl");
  Json model = synthetic_json(s);
  model.erase("replications");
  model.erase("cadence");
  config["model"] = model;
  config["optimizer"] = optimizer_json(cfg.optimizer);
  config["oracle_samples"] = s.mc_samples;
  config["risk_samples"] = s.risk_samples;
  config["null_replicates"] = s.null_reps;
  config["null_quantile"] = s.null_quantile;
  print_header(out, s, config);

  const auto truth = oracle_for(s, cfg);
  hsn::QslOptions opts;
  opts.risk_samples = s.risk_samples;
  opts.risk_seed = d.risk_seed;
  opts.null_replicates = s.null_reps;
  opts.null_quantile = s.null_quantile;
  opts.null_seed = d.null_seed;
  const auto rep = hsn::qsl_diagnostic(cfg, truth, opts);
  commit({report_file(s, rep, config)}, out);
  print_report(out, rep);
  return rep.pass() ? kOk : kDiagnosticFailure;
}

int cmd_real(const Settings& s, std::ostream& out) {
  if (s.train.empty()) throw ConfigError("train", "a training CSV is required");
  if (s.label.empty()) throw ConfigError("label", "the label column is required");
  if (s.positive.empty()) throw ConfigError("positive", "at least one positive label is required");
  if (s.delimiter.size() != 1) throw ConfigError("delimiter", "delimiter must be one character");
  if (s.test.empty() && !(s.test_fraction > 0.0 && s.test_fraction < 1.0)) {
    throw ConfigError("test-fraction", "test fraction must lie in (0, 1)");
  }
  if (s.reps < 1) throw ConfigError("reps", "replication count must be >= 1");
  const auto algos = parse_algo_list(s.algos);
  std::vector<hsn::OptimizerConfig> optimizers;
  Json opt_json = Json::array();
  for (auto a : algos) {
    optimizers.push_back(optimizer_for(s, a));
    opt_json.push_back(optimizer_json(optimizers.back()));
  }
  const auto cadence = parse_cadence(s.cadence);
  const auto d = derive(s.seed);

  hsn::CsvOptions csv;
  csv.label_column = s.label;
  csv.positive_labels = s.positive;
  csv.categorical_columns = s.categorical;
  csv.ignored_columns = s.ignore;
  csv.delimiter = s.delimiter.front();

  hsn::Dataset train, test;
  if (s.test.empty()) {
    std::tie(train, test) = hsn::split(hsn::load_csv(s.train, csv), 1.0 - s.test_fraction, d.split_seed);
  } else {
    train = hsn::load_csv(s.train, csv);
    csv.vocabularies = train.vocabularies;
    test = hsn::load_csv(s.test, csv);
  }
  if (test.dim() != train.dim()) throw hsn::DataError("train and test files have different feature columns");
  const auto scaling = hsn::fit_standardizer(train);
  train = hsn::apply_standardizer(scaling, std::move(train));
  test = hsn::apply_standardizer(scaling, std::move(test));

  Json config = base_config(s, "real");
  config["data"] = {{"train", fs::path(s.train).filename().string()},
                    {"test", s.test.empty() ? Json(nullptr) : Json(fs::path(s.test).filename().string())},
                    {"test_fraction", s.test.empty() ? Json(s.test_fraction) : Json(nullptr)},
                    {"label", s.label},
                    {"positive", s.positive},
                    {"categorical", s.categorical},
                    {"ignore", s.ignore},
                    {"delimiter", s.delimiter},
                    {"dim", train.dim()},
                    {"train_rows", train.size()},
                    {"test_rows", test.size()}};
  config["optimizers"] = opt_json;
  config["replications"] = s.reps;
  config["cadence"] = s.cadence;
  print_header(out, s, config);

  const auto truth = hsn::batch_newton_fit(train.samples);
  const auto evaluator = hsn::ExcessRiskEvaluator::empirical(test.samples, truth.theta_star);
  std::vector<std::pair<std::string, hsn::Series>> cols;
  Json finals = Json::object();
  for (std::size_t i = 0; i < optimizers.size(); ++i) {
    std::string tag(hsn::to_string(algos[i]));
    std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::tolower(c); });
    cols.emplace_back(tag, hsn::risk_curve(optimizers[i], train.samples, evaluator, s.reps, cadence, d.order_seed,
                                           s.workers));
    finals[tag] = cols.back().second.back().value;
  }
  Json body = {{"reference", {{"provenance", std::string(hsn::to_string(truth.provenance))},
                              {"train_loss", truth.g_at_star},
                              {"test_loss", evaluator.reference_risk()},
                              {"theta_norm", truth.theta_star.norm()},
                              {"design_rank", truth.design_rank}}},
               {"final_excess_risk", finals}};
  commit({series_file(s, ".csv", cols, config), json_file(s, body, config)}, out);
  return kOk;
}

int cmd_selftest(const Settings& s, std::ostream& out) {
  Json files = Json::array();
  bool pass = true;
  for (const auto& f : s.files) {
    const auto check = hsn::verify_embedded_hash(f);
    files.push_back({{"file", f}, {"stored", check.stored}, {"recomputed", check.recomputed}, {"pass", check.ok()}});
    pass = pass && check.ok();
  }
  Json suites = Json::array();
  for (const auto& r : run_invariant_suites(s.seed)) {
    suites.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    pass = pass && r.pass;
  }
  out << Json{{"seed", s.seed}, {"hash_checks", files}, {"invariants", suites}, {"pass", pass}}.dump(2) << '\n';
  return pass ? kOk : kDiagnosticFailure;
}

// --- argument wiring -----------------------------------------------------------

struct Subcommand {
  CLI::App* app = nullptr;
  Settings settings;
  ProfileTargets targets;
  std::function<int(const Settings&, std::ostream&)> handler;
};

void add_common(CLI::App* app, Settings& s) {
  app->add_option("--seed", s.seed, "Master seed; every derived seed is recorded in the outputs")->capture_default_str();
  app->add_option("--workers", s.workers, "Worker threads (0 = hardware concurrency); outputs do not depend on it")
      ->capture_default_str();
  app->add_option("--out", s.out_dir, std::string("Output directory (default: $") + kOutputDirEnv + " or .)");
  app->add_option("--name", s.name, "Output file stem (default: the subcommand name)");
}

void add_synthetic(CLI::App* app, Settings& s, ProfileTargets& t, bool with_reps) {
  app->add_option("--profile", s.profile, "Named preset: paper-d10, paper-d50, paper-d100, paper-d200");
  t.dim = app->add_option("--dim", s.dim, "Feature dimension d")->capture_default_str();
  t.theta_bound = app->add_option("--theta-bound", s.theta_bound, "theta coordinates uniform on {-B..B}")
                      ->capture_default_str();
  t.n = app->add_option("--n", s.n, "Horizon (samples per replication)")->capture_default_str();
  if (with_reps) t.reps = app->add_option("--reps", s.reps, "Replications")->capture_default_str();
  app->add_option("--cadence", s.cadence, "Checkpoints: pow2, log:K, every:S or at:p1,p2,...")->capture_default_str();
}

void add_weights(CLI::App* app, Settings& s, ProfileTargets& t) {
  t.alpha = app->add_option("--alpha", s.alpha, "HSN weight on pi(1 - pi)")->capture_default_str();
  t.beta = app->add_option("--beta", s.beta, "HSN weight on (pi - y)^2")->capture_default_str();
  app->add_option("--tsn-nu0", s.tsn_nu0, "TSN floor scale")->capture_default_str();
  app->add_option("--tsn-gamma", s.tsn_gamma, "TSN floor exponent")->capture_default_str();
  app->add_option("--sgd-scale", s.sgd_scale, "SGD step is scale / n")->capture_default_str();
}

void apply_profile(Subcommand& sub, bool real) {
  Settings& s = sub.settings;
  if (s.profile.empty()) return;
  const auto& table = profiles();
  const auto it = std::find_if(table.begin(), table.end(), [&](const Profile& p) { return p.name == s.profile; });
  if (it == table.end()) throw ConfigError("profile", "unknown profile '" + s.profile + "'");
  if (real != (it->name == "paper-real")) {
    throw ConfigError("profile", "profile '" + s.profile + "' does not apply to " + sub.app->get_name());
  }
  auto unset = [](CLI::Option* o) { return o && o->count() == 0; };
  if (unset(sub.targets.alpha)) s.alpha = it->alpha;
  if (unset(sub.targets.beta)) s.beta = it->beta;
  if (unset(sub.targets.reps)) s.reps = it->replications;
  if (!real) {
    if (unset(sub.targets.dim)) s.dim = it->dim;
    if (unset(sub.targets.theta_bound)) s.theta_bound = it->theta_bound;
    if (unset(sub.targets.n)) s.n = it->n;
  }
}

void emit_error(std::ostream& err, const std::string& kind, const std::string& message,
                const std::optional<std::string>& field = std::nullopt) {
  Json e = {{"kind", kind}, {"message", message}};
  if (field) e["field"] = *field;
  err << Json{{"error", e}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming stochastic Newton benchmarks for logistic regression", "hsnbench"};
  app.set_config("--config", "", "Read options from a TOML/INI file; command-line flags take precedence");
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  std::map<std::string, Subcommand> subs;
  auto make = [&](const std::string& name, const std::string& help, auto handler) -> Subcommand& {
    auto& sub = subs[name];
    sub.app = app.add_subcommand(name, help);
    sub.handler = handler;
    add_common(sub.app, sub.settings);
    return sub;
  };

  {
    auto& sub = make("synth", "Mean squared error curve of one algorithm on a synthetic model", cmd_synth);
    sub.app->add_option("--algo", sub.settings.algo, "hsn, ons, sn, tsn or sgd")->capture_default_str();
    add_synthetic(sub.app, sub.settings, sub.targets, true);
    add_weights(sub.app, sub.settings, sub.targets);
  }
  {
    auto& sub = make("compare", "Aligned MSE curves of several algorithms on one synthetic model", cmd_compare);
    sub.app->add_option("--algos", sub.settings.algos, "Comma-separated algorithms")->capture_default_str();
    add_synthetic(sub.app, sub.settings, sub.targets, true);
    add_weights(sub.app, sub.settings, sub.targets);
  }
  {
    auto& sub = make("rates", "MSE decay rate over a window of iterations", cmd_rates);
    sub.settings.dim = 5;
    sub.settings.theta_bound = 1;
    sub.settings.reps = 20;
    sub.settings.cadence = "log:10";
    sub.app->add_option("--algo", sub.settings.algo, "hsn, ons, sn, tsn or sgd")->capture_default_str();
    add_synthetic(sub.app, sub.settings, sub.targets, true);
    add_weights(sub.app, sub.settings, sub.targets);
    sub.app->add_option("--window-lo", sub.settings.window_lo, "First iteration of the fit window")->capture_default_str();
    sub.app->add_option("--window-hi", sub.settings.window_hi, "Last iteration of the fit window")->capture_default_str();
  }
  {
    auto& sub = make("hessian", "Convergence of the averaged curvature matrices", cmd_hessian);
    sub.settings.dim = 5;
    sub.settings.theta_bound = 1;
    sub.settings.reps = 20;
    sub.settings.cadence = "log:10";
    sub.app->add_option("--algo", sub.settings.algo, "hsn, ons, sn or tsn")->capture_default_str();
    add_synthetic(sub.app, sub.settings, sub.targets, true);
    add_weights(sub.app, sub.settings, sub.targets);
    sub.app->add_option("--window-lo", sub.settings.window_lo, "First iteration of the fit window")->capture_default_str();
    sub.app->add_option("--window-hi", sub.settings.window_hi, "Last iteration of the fit window")->capture_default_str();
    sub.app->add_option("--mc-samples", sub.settings.mc_samples, "Oracle Monte-Carlo samples")->capture_default_str();
  }
  {
    auto& sub = make("clt", "Covariance and Mahalanobis checks of sqrt(n)(theta_n - theta)", cmd_clt);
    sub.settings.dim = 3;
    sub.settings.theta_bound = 1;
    sub.settings.n = 20000;
    sub.settings.reps = 500;
    add_synthetic(sub.app, sub.settings, sub.targets, true);
    add_weights(sub.app, sub.settings, sub.targets);
    sub.app->add_option("--mc-samples", sub.settings.mc_samples, "Oracle Monte-Carlo samples")->capture_default_str();
    sub.app->add_option("--null-reps", sub.settings.null_reps, "Null simulations for the tolerance")->capture_default_str();
    sub.app->add_option("--null-quantile", sub.settings.null_quantile, "Null quantile used as tolerance")
        ->capture_default_str();
  }
  {
    auto& sub = make("qsl", "Quadratic strong law and cumulative excess risk along one trajectory", cmd_qsl);
    sub.settings.dim = 3;
    sub.settings.theta_bound = 1;
    sub.settings.null_reps = 200;
    add_synthetic(sub.app, sub.settings, sub.targets, false);
    add_weights(sub.app, sub.settings, sub.targets);
    sub.app->add_option("--mc-samples", sub.settings.mc_samples, "Oracle Monte-Carlo samples")->capture_default_str();
    sub.app->add_option("--risk-samples", sub.settings.risk_samples, "Features used to evaluate G")->capture_default_str();
    sub.app->add_option("--null-reps", sub.settings.null_reps, "Null trajectories for the tolerance")->capture_default_str();
    sub.app->add_option("--null-quantile", sub.settings.null_quantile, "Null quantile used as tolerance")
        ->capture_default_str();
  }
  {
    auto& sub = make("real", "Test-set excess risk along one pass over a CSV dataset", cmd_real);
    auto& s = sub.settings;
    s.cadence = "log:10";
    sub.app->add_option("--profile", s.profile, "Named preset: paper-real");
    sub.app->add_option("--train", s.train, "Training CSV (or the full file when --test is absent)");
    sub.app->add_option("--test", s.test, "Test CSV; categories are encoded with the training vocabulary");
    sub.app->add_option("--test-fraction", s.test_fraction, "Held-out fraction when --test is absent")
        ->capture_default_str();
    sub.app->add_option("--label", s.label, "Label column name");
    sub.app->add_option("--positive", s.positive, "Label value(s) mapped to 1");
    sub.app->add_option("--categorical", s.categorical, "Columns to one-hot encode");
    sub.app->add_option("--ignore", s.ignore, "Columns to drop");
    sub.app->add_option("--delimiter", s.delimiter, "Field delimiter")->capture_default_str();
    sub.app->add_option("--algos", s.algos, "Comma-separated algorithms")->capture_default_str();
    sub.targets.reps = sub.app->add_option("--reps", s.reps, "Replications (training-order shuffles)")
                           ->capture_default_str();
    sub.app->add_option("--cadence", s.cadence, "Checkpoints: pow2, log:K, every:S or at:p1,p2,...")
        ->capture_default_str();
    add_weights(sub.app, s, sub.targets);
  }
  {
    auto& sub = make("selftest", "Re-derive config hashes of emitted files and run invariant suites", cmd_selftest);
    sub.app->add_option("files", sub.settings.files, "CSV or JSON files produced by hsnbench");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << "0.1.0\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "invalid_config", e.what());
    return kInvalidConfig;
  }

  try {
    for (auto& [name, sub] : subs) {
      if (!sub.app->parsed()) continue;
      apply_profile(sub, name == "real");
      return sub.handler(sub.settings, out);
    }
    emit_error(err, "invalid_config", "no subcommand given");
    return kInvalidConfig;
  } catch (const ConfigError& e) {
    emit_error(err, "invalid_config", e.what(), e.field());
    return kInvalidConfig;
  } catch (const hsn::PreconditionError& e) {
    emit_error(err, "invalid_config", e.what());
    return kInvalidConfig;
  } catch (const IoError& e) {
    emit_error(err, "io_error", e.what());
    return kIoError;
  } catch (const hsn::DataError& e) {
    emit_error(err, "io_error", e.what());
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    emit_error(err, "io_error", e.what());
    return kIoError;
  } catch (const std::exception& e) {
    emit_error(err, "runtime_error", e.what());
    return kRuntimeError;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace hsnbench
