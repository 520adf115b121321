// fungraph: fit, simulate, evaluate and shrinkage subcommands.

#include "fungraph/basis.hpp"
#include "fungraph/dataspace.hpp"
#include "fungraph/hypoexp.hpp"
#include "fungraph/io.hpp"
#include "fungraph/sampler.hpp"
#include "fungraph/simgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fungraph;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::IncompatibleGrid:
    case ErrorCode::DegenerateRates:
      return 2;
    case ErrorCode::DataError:
    case ErrorCode::DimensionMismatch:
      return 3;
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::RankDeficient:
    case ErrorCode::DomainError:
      return 4;
  }
  return 4;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::DataError, "cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " must not be empty");
  return out;
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::string basis = "wavelet-db2";
  std::string basis_file;
  int levels = 3;
  double energy_keep = 1.0;
  double epsilon = 1e-6;
  SamplerConfig sampler;
  std::string out_dir = "fungraph_fit";
  bool dump_chains = false;
  int lag_t = 1;
  std::string lag_pair = "1,2";
  bool normalize = false;
};

void add_fit_options(CLI::App* cmd, FitArgs& a) {
  cmd->add_option("--data", a.data, "long CSV or FGD1 binary data file")->required();
  cmd->add_option("--basis", a.basis, "wavelet-db2 | fourier | identity | external")->capture_default_str();
  cmd->add_option("--basis-file", a.basis_file, "K x T CSV basis for --basis external");
  cmd->add_option("--levels", a.levels, "wavelet decomposition depth")->capture_default_str();
  cmd->add_option("--energy-keep", a.energy_keep, "fraction of coefficient energy retained")->capture_default_str();
  cmd->add_option("--epsilon", a.epsilon, "per-curve relative reconstruction tolerance")->capture_default_str();
  cmd->add_option("--iters", a.sampler.iterations, "MCMC iterations")->capture_default_str();
  cmd->add_option("--burnin", a.sampler.burn_in, "iterations discarded")->capture_default_str();
  cmd->add_option("--thin", a.sampler.thin, "thinning interval")->capture_default_str();
  cmd->add_option("--ci", a.sampler.ci_level, "credible level")->capture_default_str();
  cmd->add_option("--seed", a.sampler.seed, "root seed")->capture_default_str();
  cmd->add_option("--workers", a.sampler.workers, "worker threads")->envname("FUNGRAPH_THREADS")->capture_default_str();
  cmd->add_option("--alpha-s", a.sampler.hyper.alpha_s)->capture_default_str();
  cmd->add_option("--beta-s", a.sampler.hyper.beta_s)->capture_default_str();
  cmd->add_option("--alpha-lambda", a.sampler.hyper.alpha_lambda)->capture_default_str();
  cmd->add_option("--beta-lambda", a.sampler.hyper.beta_lambda)->capture_default_str();
  cmd->add_option("--grid-points", a.sampler.grid_points, "cells of the rho proposal")->capture_default_str();
  cmd->add_option("--s-step", a.sampler.s_step, "log-scale random-walk step for s")->capture_default_str();
  cmd->add_flag("--random-scan", a.sampler.random_scan, "shuffle the update order every sweep");
  cmd->add_flag("--dump-chains", a.dump_chains, "write chains/chain_k<k>.csv");
  cmd->add_option("--out-dir", a.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--lag-t", a.lag_t, "reference grid point of lagprofile.csv (1-based)")->capture_default_str();
  cmd->add_option("--lag-pair", a.lag_pair, "variable pair j,l of lagprofile.csv (1-based)")->capture_default_str();
  cmd->add_flag("--normalize", a.normalize, "also write per-t normalized cross-covariances");
  cmd->add_option("--config", "flat key=value file; flags take precedence");
}

// Resolved options in the --config format.
std::string replay_config(const FitArgs& a) {
  std::ostringstream o;
  const auto& s = a.sampler;
  o << "data=\"" << a.data << "\"\n"
    << "basis=\"" << a.basis << "\"\n";
  if (!a.basis_file.empty()) o << "basis-file=\"" << a.basis_file << "\"\n";
  o << "levels=" << a.levels << "\n"
    << "energy-keep=" << format_double(a.energy_keep) << "\n"
    << "epsilon=" << format_double(a.epsilon) << "\n"
    << "iters=" << s.iterations << "\n"
    << "burnin=" << s.burn_in << "\n"
    << "thin=" << s.thin << "\n"
    << "ci=" << format_double(s.ci_level) << "\n"
    << "seed=" << s.seed << "\n"
    << "workers=" << s.workers << "\n"
    << "alpha-s=" << format_double(s.hyper.alpha_s) << "\n"
    << "beta-s=" << format_double(s.hyper.beta_s) << "\n"
    << "alpha-lambda=" << format_double(s.hyper.alpha_lambda) << "\n"
    << "beta-lambda=" << format_double(s.hyper.beta_lambda) << "\n"
    << "grid-points=" << s.grid_points << "\n"
    << "s-step=" << format_double(s.s_step) << "\n"
    << "random-scan=" << (s.random_scan ? "true" : "false") << "\n"
    << "dump-chains=" << (a.dump_chains ? "true" : "false") << "\n"
    << "out-dir=\"" << a.out_dir << "\"\n"
    << "lag-t=" << a.lag_t << "\n"
    << "lag-pair=\"" << a.lag_pair << "\"\n"
    << "normalize=" << (a.normalize ? "true" : "false") << "\n";
  return o.str();
}

int cmd_fit(const FitArgs& a) {
  Stopwatch clock;
  json timings = json::object();
  a.sampler.validate();

  BasisSpec spec;
  spec.kind = parse_basis_kind(a.basis);
  spec.levels = a.levels;
  spec.energy_keep = a.energy_keep;
  spec.epsilon = a.epsilon;
  if (spec.kind == BasisKind::External) {
    if (a.basis_file.empty()) throw Error(ErrorCode::InvalidConfig, "--basis external needs --basis-file");
    std::ifstream in(a.basis_file);
    if (!in) throw Error(ErrorCode::DataError, "cannot open " + a.basis_file);
    spec.external = read_matrix_csv(in);
  }
  spec.validate();
  const auto pair = parse_list(a.lag_pair, "--lag-pair");
  if (pair.size() != 2) throw Error(ErrorCode::InvalidConfig, "--lag-pair needs two variables");
  const auto lag_j = static_cast<Index>(pair[0]) - 1, lag_l = static_cast<Index>(pair[1]) - 1;

  const FunctionalDataset data = read_dataset(a.data);
  timings["load"] = clock.lap();

  if (lag_j < 0 || lag_l < 0 || lag_j >= data.p() || lag_l >= data.p() || lag_j == lag_l)
    throw Error(ErrorCode::InvalidConfig, "--lag-pair must name two distinct variables in 1..p");
  if (a.lag_t < 1 || a.lag_t > data.T()) throw Error(ErrorCode::InvalidConfig, "--lag-t must lie in 1..T");

  const BasisMatrix full = build_basis(spec, data.T());
  const BasisMatrix basis = truncate_basis(full, data, spec.energy_keep);
  const LosslessReport lossless = check_lossless(data, basis, spec.epsilon);
  if (lossless.lossy())
    std::cerr << "warning: " << lossless.flagged.size() << " curves exceed reconstruction error " << spec.epsilon
              << " (max " << lossless.max_error << ")\n";
  const BasisCoefficients coeffs = to_basis_space(data, basis);
  timings["transform"] = clock.lap();

  const PosteriorDraws draws = run_chain(coeffs, a.sampler);
  timings["sample"] = clock.lap();

  const CrossCovFunction summary = summarize(draws, basis, a.sampler.ci_level, a.sampler.workers);
  const EdgeFunction edges = select_edges(summary);
  std::vector<Index> tprimes(static_cast<std::size_t>(data.T()));
  for (Index t = 0; t < data.T(); ++t) tprimes[static_cast<std::size_t>(t)] = t;
  const Vector profile = lagged_profile(draws, basis, lag_j, lag_l, a.lag_t - 1, tprimes);
  timings["summarize"] = clock.lap();

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "edges.csv");
    write_edges_csv(out, summary, edges);
  }
  {
    auto out = open_out(dir / "lagprofile.csv");
    write_lagprofile_csv(out, a.lag_t - 1, tprimes, std::min(lag_j, lag_l), std::max(lag_j, lag_l), profile);
  }
  {
    auto out = open_out(dir / "acceptance.csv");
    write_acceptance(out, draws);
  }
  if (a.normalize) {
    const Matrix norm = normalized_cross_cov(draws, basis, summary);
    auto out = open_out(dir / "normalized.csv");
    out << "t,j,l,value\n";
    for (Index t = 0; t < summary.T; ++t)
      for (Index j = 0; j < summary.p; ++j)
        for (Index l = j + 1; l < summary.p; ++l)
          out << t + 1 << ',' << j + 1 << ',' << l + 1 << ',' << format_double(norm(t, pair_index(j, l, summary.p)))
              << '\n';
  }
  if (a.dump_chains) {
    fs::create_directories(dir / "chains");
    for (Index k = 0; k < draws.K(); ++k) {
      auto out = open_out(dir / "chains" / ("chain_k" + std::to_string(k + 1) + ".csv"));
      write_chain_csv(out, draws.chains[static_cast<std::size_t>(k)], draws.p);
    }
  }
  {
    auto out = open_out(dir / "run.cfg");
    out << replay_config(a);
  }
  timings["write"] = clock.lap();

  double rho_acc = 0.0, s_acc = 0.0;
  std::int64_t grid_zero = 0;
  for (const auto& ch : draws.chains) {
    rho_acc += ch.rho_acceptance.mean();
    s_acc += ch.s_acceptance.mean();
    grid_zero += ch.all_grid_zero;
  }
  if (grid_zero > 0) std::cerr << "warning: " << grid_zero << " rho updates found an all-zero proposal grid\n";

  json m;
  m["software"] = {{"name", "fungraph"}, {"version", kVersion}};
  m["command"] = "fit";
  m["config"] = {{"data", a.data},
                 {"basis", to_string(spec.kind)},
                 {"basis_file", a.basis_file},
                 {"levels", a.levels},
                 {"energy_keep", a.energy_keep},
                 {"epsilon", a.epsilon},
                 {"iterations", a.sampler.iterations},
                 {"burn_in", a.sampler.burn_in},
                 {"thin", a.sampler.thin},
                 {"ci_level", a.sampler.ci_level},
                 {"seed", a.sampler.seed},
                 {"workers", a.sampler.workers},
                 {"alpha_s", a.sampler.hyper.alpha_s},
                 {"beta_s", a.sampler.hyper.beta_s},
                 {"alpha_lambda", a.sampler.hyper.alpha_lambda},
                 {"beta_lambda", a.sampler.hyper.beta_lambda},
                 {"grid_points", a.sampler.grid_points},
                 {"s_step", a.sampler.s_step},
                 {"random_scan", a.sampler.random_scan},
                 {"dump_chains", a.dump_chains},
                 {"out_dir", a.out_dir},
                 {"lag_t", a.lag_t},
                 {"lag_pair", a.lag_pair},
                 {"normalize", a.normalize}};
  m["seed"] = a.sampler.seed;
  m["inputs"] = {{"data", {{"path", a.data}, {"fnv1a64", hex64(file_checksum(a.data))}}}};
  if (!a.basis_file.empty())
    m["inputs"]["basis_file"] = {{"path", a.basis_file}, {"fnv1a64", hex64(file_checksum(a.basis_file))}};
  m["dimensions"] = {{"n", data.n()}, {"p", data.p()}, {"T", data.T()}, {"K", basis.K()}, {"M", draws.M()}};
  m["lossless"] = {{"max_relative_error", lossless.max_error},
                   {"flagged_curves", lossless.flagged.size()},
                   {"dropped_energy", basis.dropped_energy}};
  m["diagnostics"] = {{"mean_rho_acceptance", rho_acc / static_cast<double>(draws.K())},
                      {"mean_s_acceptance", s_acc / static_cast<double>(draws.K())},
                      {"all_grid_zero_updates", grid_zero}};
  m["timings_seconds"] = timings;
  write_json(dir / "manifest.json", m);

  std::cout << "fit: n=" << data.n() << " p=" << data.p() << " T=" << data.T() << " K=" << basis.K()
            << " draws=" << draws.M() << " edges(t,pair)=" << edges.selected.count() << " -> " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario = "ar1";
  ScenarioConfig cfg;
  std::string format = "csv";
  std::string out_dir = "fungraph_sim";
};

void add_simulate_options(CLI::App* cmd, SimulateArgs& a) {
  auto& c = a.cfg;
  cmd->add_option("--scenario", a.scenario, "ar1 | changepoint")->capture_default_str();
  cmd->add_option("--dynamic", c.dynamic, "edge dynamics pattern 1 | 2")->capture_default_str();
  cmd->add_option("-n,--subjects", c.n, "number of subjects")->capture_default_str();
  cmd->add_option("-p,--variables", c.p, "number of variables")->capture_default_str();
  cmd->add_option("-T,--grid-length", c.T, "grid length")->capture_default_str();
  cmd->add_option("--seed", c.seed, "root seed")->capture_default_str();
  cmd->add_option("--t0", c.t0, "change point (default T/2)");
  cmd->add_option("--ar-coeff", c.ar_coeff, "A = ar-coeff * I")->capture_default_str();
  cmd->add_option("--cp-coeff1", c.cp_coeff1, "A1 = cp-coeff1 * I")->capture_default_str();
  cmd->add_option("--cp-coeff2", c.cp_coeff2, "A2 = cp-coeff2 * I")->capture_default_str();
  cmd->add_option("--burn-in", c.burn_in, "AR(1) steps discarded before t = 1")->capture_default_str();
  cmd->add_option("--e1-level", c.e1_level, "partial correlation of static edges")->capture_default_str();
  cmd->add_option("--peak-level", c.peak_level, "peak partial correlation of dynamic edges")->capture_default_str();
  cmd->add_option("--presence-threshold", c.presence_threshold, "level above which an edge is true")
      ->capture_default_str();
  cmd->add_option("--format", a.format, "csv | binary")->capture_default_str();
  cmd->add_option("--workers", c.workers, "worker threads")->envname("FUNGRAPH_THREADS")->capture_default_str();
  cmd->add_option("--out-dir", a.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--config", "flat key=value file; flags take precedence");
}

json pairs_json(const PairList& pairs) {
  json arr = json::array();
  for (const auto& [j, l] : pairs) arr.push_back({j + 1, l + 1});
  return arr;
}

int cmd_simulate(SimulateArgs a) {
  if (a.format != "csv" && a.format != "binary") throw Error(ErrorCode::InvalidConfig, "--format must be csv or binary");
  a.cfg.autocorrelation = parse_autocorrelation(a.scenario);
  a.cfg.resolve();
  const SimulatedData sim = generate(a.cfg);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const fs::path data_path = dir / (a.format == "csv" ? "data.csv" : "data.fgd");
  {
    auto out = open_out(data_path);
    if (a.format == "csv")
      write_long_csv(out, sim.data);
    else
      write_binary(out, sim.data);
  }
  {
    auto out = open_out(dir / "truth.csv");
    write_truth_csv(out, sim.truth);
  }
  const auto& c = a.cfg;
  json m;
  m["software"] = {{"name", "fungraph"}, {"version", kVersion}};
  m["scenario"] = to_string(c.autocorrelation);
  m["dynamic"] = c.dynamic;
  m["n"] = c.n;
  m["p"] = c.p;
  m["T"] = c.T;
  m["seed"] = c.seed;
  m["ar_coeff"] = c.ar_coeff;
  m["cp_coeff1"] = c.cp_coeff1;
  m["cp_coeff2"] = c.cp_coeff2;
  m["t0"] = c.change_point();
  m["burn_in"] = c.burn_in;
  m["e1_level"] = c.e1_level;
  m["peak_level"] = c.peak_level;
  m["presence_threshold"] = c.presence_threshold;
  m["e2_path"] = c.dynamic == 1 ? "peak*sin^2(pi*t/T)" : "peak*clamp((u-0.25)/0.5,0,1), u=(t-1)/(T-1)";
  m["e3_path"] = c.dynamic == 1 ? "peak*cos^2(pi*t/T)" : "peak*clamp((0.75-u)/0.5,0,1), u=(t-1)/(T-1)";
  m["x_draws"] = "per subject";
  m["edge_sets"] = {{"E1", pairs_json(c.e1)}, {"E2", pairs_json(c.e2)}, {"E3", pairs_json(c.e3)}};
  m["data_file"] = data_path.filename().string();
  m["data_fnv1a64"] = hex64(file_checksum(data_path.string()));
  write_json(dir / "scenario.json", m);
  std::cout << "simulate: " << to_string(c.autocorrelation) << " dynamic " << c.dynamic << " n=" << c.n << " p=" << c.p
            << " T=" << c.T << " -> " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string truth;
  std::string edges;
  std::string scores;
  std::string out_dir = ".";
};

int cmd_evaluate(const EvaluateArgs& a) {
  const std::string& table_path = a.edges.empty() ? a.scores : a.edges;
  std::ifstream table_in(table_path);
  if (!table_in) throw Error(ErrorCode::DataError, "cannot open " + table_path);
  const EdgeTable table = read_edge_table(table_in);
  std::ifstream truth_in(a.truth);
  if (!truth_in) throw Error(ErrorCode::DataError, "cannot open " + a.truth);
  const TruthGraph truth = read_truth_csv(truth_in, table.p, table.T);

  if (table.has_selection) {
    const EdgeRates rates = imtpr_imfpr(table.selected, truth);
    std::cout << "metric,value\n"
              << "IMTPR," << format_double(rates.imtpr) << "\n"
              << "IMFPR," << format_double(rates.imfpr) << "\n";
  } else {
    std::cout << "metric,value\n";
  }
  const RocCurve roc = roc_points(table.score, truth);
  std::cout << "AUC," << format_double(roc.auc) << "\n";
  fs::create_directories(a.out_dir);
  auto out = open_out(fs::path(a.out_dir) / "roc.csv");
  write_roc_csv(out, roc);
  return 0;
}

// ---------------------------------------------------------------- shrinkage

struct ShrinkageArgs {
  std::string rates = "1";
  double n = 1.0;
  double ybar_min = -50.0;
  double ybar_max = 50.0;
  int ybar_points = 201;
  double x_max = 10.0;
  int x_points = 1001;
  std::string out_dir = "fungraph_shrinkage";
};

int cmd_shrinkage(const ShrinkageArgs& a) {
  if (a.ybar_points < 2 || a.x_points < 2 || !(a.ybar_max > a.ybar_min) || !(a.x_max > 0.0))
    throw Error(ErrorCode::InvalidConfig, "grids need at least two points over a nonempty range");
  const std::vector<double> lambdas = parse_list(a.rates, "--rates");
  const Hypoexponential hypo(lambdas);
  const ShrinkageDiagnostic diag(a.n, lambdas);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "shrinkage.csv");
    out << "ybar,S,m,posterior_mean\n";
    for (int i = 0; i < a.ybar_points; ++i) {
      const double y = a.ybar_min + (a.ybar_max - a.ybar_min) * i / (a.ybar_points - 1);
      out << format_double(y) << ',' << format_double(diag.shrinkage(y)) << ','
          << format_double(diag.predictive_density(y)) << ',' << format_double(diag.posterior_mean(y)) << '\n';
    }
  }
  {
    auto out = open_out(dir / "pdf.csv");
    out << "x,pdf\n";
    for (int i = 0; i < a.x_points; ++i) {
      const double x = a.x_max * i / (a.x_points - 1);
      out << format_double(x) << ',' << format_double(hypo.pdf(x)) << '\n';
    }
  }
  std::cout << "shrinkage: K=" << lambdas.size() << " n=" << format_double(a.n) << " -> " << dir.string() << "\n";
  return 0;
}

// Splices the settings of `--config FILE` in front of the command-line flags.
// Options keep their last value, so explicit flags override the file.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::vector<std::string> out;
  std::vector<std::string> from_file;
  std::size_t insert_at = std::min<std::size_t>(2, args.size());
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string file;
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      out.push_back(args[i]);
      continue;
    }
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#' || line[first] == ';') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "config line without '=': " + line);
      auto trim = [](std::string v) {
        const auto b = v.find_first_not_of(" \t");
        const auto e = v.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
      from_file.push_back("--" + key + "=" + value);
    }
  }
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(std::min(insert_at, out.size())), from_file.begin(),
             from_file.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian functional graphical model: fit, simulate, evaluate, shrinkage"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit the model and select edges");
  add_fit_options(fit, fit_args);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset and its truth graph");
  add_simulate_options(simulate, sim_args);

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "score an edge estimate against a truth graph");
  evaluate->add_option("--truth", eval_args.truth, "truth.csv")->required();
  auto* edges_opt = evaluate->add_option("--edges", eval_args.edges, "edges.csv from fit");
  auto* scores_opt = evaluate->add_option("--scores", eval_args.scores, "t,j,l,score table");
  edges_opt->excludes(scores_opt);
  evaluate->add_option("--out-dir", eval_args.out_dir, "directory for roc.csv")->capture_default_str();
  evaluate->callback([&]() {
    if (eval_args.edges.empty() && eval_args.scores.empty()) throw CLI::RequiredError("--edges or --scores");
  });

  ShrinkageArgs shr_args;
  auto* shrinkage = app.add_subcommand("shrinkage", "tabulate S, m, posterior mean and the mixing pdf");
  shrinkage->add_option("--rates", shr_args.rates, "comma-separated lambda_k")->capture_default_str();
  shrinkage->add_option("--n", shr_args.n, "sample size")->capture_default_str();
  shrinkage->add_option("--ybar-min", shr_args.ybar_min)->capture_default_str();
  shrinkage->add_option("--ybar-max", shr_args.ybar_max)->capture_default_str();
  shrinkage->add_option("--ybar-points", shr_args.ybar_points)->capture_default_str();
  shrinkage->add_option("--x-max", shr_args.x_max)->capture_default_str();
  shrinkage->add_option("--x-points", shr_args.x_points)->capture_default_str();
  shrinkage->add_option("--out-dir", shr_args.out_dir, "output directory")->capture_default_str();

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_args);
    if (simulate->parsed()) return cmd_simulate(sim_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args);
    if (shrinkage->parsed()) return cmd_shrinkage(shr_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
