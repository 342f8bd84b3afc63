// Copyright 2026 The cpmbig Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cpmbig/cpmbig.hpp"

namespace {

using namespace cpmbig;
using nlohmann::json;

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kInput = 3, kData = 4, kFit = 5 };

/// Flat `key = value` lines; `#` starts a comment. Keys are long option
/// names without the leading dashes.
std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open config '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw IngestError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

/// Fills options the command line left unset. Flags given on the command
/// line win.
void apply_config(CLI::App& sub, const std::string& path) {
  for (const auto& [key, value] : read_config(path)) {
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) throw IngestError("config key '" + key + "' is not an option of '" + sub.get_name() + "'");
    if (opt->count() > 0) continue;
    if (opt->get_expected_max() > 1) {
      opt->add_result(CLI::detail::split(value, ','));
    } else {
      opt->add_result(value);
    }
    opt->run_callback();
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) throw std::runtime_error("cannot write '" + path.string() + "'");
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  RunConfig cfg;
  std::string approach = "whole";
  std::size_t seed_sweep = 0;
};

int cmd_fit(FitArgs& a) {
  a.cfg.approach = parse_approach(a.approach);
  const RunResult r = run(a.cfg);
  const auto& m = r.metadata;
  std::cout << "fit " << m["approach"].get<std::string>() << ": N=" << m["N"] << " p=" << m["p"]
            << " M=" << m["distinct_fitted"] << " in " << m["timings"]["fit_s"].get<double>() << " s\n";
  for (const auto& f : r.files) std::cout << "  wrote " << f << '\n';

  if (a.seed_sweep > 0) {
    if (a.cfg.approach != Approach::divide_combine) {
      throw std::invalid_argument("--seed-sweep applies to --approach divide-combine");
    }
    const Dataset data = ingest_csv(a.cfg.input, a.cfg.outcome, a.cfg.predictors);
    std::ostringstream csv;
    csv << "seed,name,beta,se\n";
    for (std::size_t s = 0; s < a.seed_sweep; ++s) {
      DivideCombineOptions o;
      o.K = a.cfg.subsets;
      o.seed = a.cfg.seed + s;
      o.workers = a.cfg.workers;
      o.fit = a.cfg.fit;
      const CombinedFit c = fit_divide_combine(data, parse_link(a.cfg.link), o);
      const Eigen::VectorXd se = c.beta_se();
      for (Eigen::Index j = 0; j < c.beta.size(); ++j) {
        csv << o.seed << ',' << data.predictor_name(static_cast<std::size_t>(j)) << ','
            << format_double(c.beta(j)) << ',' << format_double(se(j)) << '\n';
      }
    }
    const auto path = std::filesystem::path(a.cfg.output_dir) / "seed_sweep.csv";
    write_text(path, csv.str());
    std::cout << "  wrote " << path.string() << '\n';
  }
  return kOk;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  ScenarioSpec spec;
  std::string transform = "identity";
  std::string residual = "logistic";
  std::string output;
  std::string truth_at;
  std::size_t mc_draws = 10000;
};

int cmd_simulate(SimulateArgs& a) {
  a.spec.transform = parse_transform(a.transform);
  a.spec.residual = parse_residual(a.residual);
  const Simulated sim = simulate_dataset(a.spec);
  std::ostringstream csv;
  csv << 'y';
  for (std::size_t j = 0; j < sim.data.predictors(); ++j) csv << ',' << sim.data.predictor_name(j);
  csv << '\n';
  for (std::size_t i = 0; i < sim.data.size(); ++i) {
    csv << format_double(sim.data.y[i]);
    for (Eigen::Index j = 0; j < sim.data.X.cols(); ++j) {
      csv << ',' << format_double(sim.data.X(static_cast<Eigen::Index>(i), j));
    }
    csv << '\n';
  }
  const std::filesystem::path out(a.output);
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  write_text(out, csv.str());

  json truth;
  truth["N"] = a.spec.N;
  truth["p"] = a.spec.p;
  truth["seed"] = a.spec.seed;
  truth["transform"] = to_string(sim.transform);
  truth["residual"] = to_string(sim.residual);
  truth["link"] = std::string(to_string(matching_link(sim.residual)));
  truth["shift"] = sim.shift;
  truth["binary_predictors"] = sim.binary;
  truth["beta"] = std::vector<double>(sim.beta.data(), sim.beta.data() + sim.beta.size());
  switch (sim.transform) {
    case Transform::identity: truth["alpha_truth"] = "alpha(y) = y"; break;
    case Transform::exp: truth["alpha_truth"] = "alpha(y) = log(y)"; break;
    case Transform::log_shift: truth["alpha_truth"] = "alpha(y) = exp(y) - shift"; break;
  }
  if (!a.truth_at.empty()) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < sim.data.predictors(); ++j) names.push_back(sim.data.predictor_name(j));
    const Eigen::MatrixXd X = read_covariates(a.truth_at, names);
    json rows = json::array();
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const auto t = true_conditional(sim, X.row(r).transpose(), a.mc_draws, a.spec.seed);
      rows.push_back({{"row", r + 1}, {"mean", t.mean}, {"median", t.median}, {"invalid_draws", t.invalid_draws}});
    }
    truth["conditional"] = rows;
    truth["mc_draws"] = a.mc_draws;
  }
  const std::string sidecar = a.output + ".truth.json";
  write_text(sidecar, truth.dump(2) + "\n");
  std::cout << "wrote " << a.output << " and " << sidecar << '\n';
  return kOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  std::vector<std::size_t> Ns{500, 1000, 2000, 3000, 4000};
  std::vector<std::size_t> Ms{100, 500, 1000, 2000, 4000};
  std::vector<std::size_t> ps{5, 10, 25};
  std::uint64_t seed = 1;
  std::string link = "logit";
  std::string output = "bench";
  std::size_t memory_min_M = 1000;
  bool no_isolate = false;
};

json loglog_json(const LogLogFit& f, const std::vector<BenchPredictor>& preds) {
  json j;
  j["constant"] = f.constant;
  j["r2"] = f.r2;
  j["records"] = f.records;
  for (std::size_t k = 0; k < preds.size(); ++k) j["exponents"][to_string(preds[k])] = f.exponents[k];
  return j;
}

int cmd_bench(BenchArgs& a) {
  BenchOptions opts;
  opts.seed = a.seed;
  opts.isolate = !a.no_isolate;
  opts.link = parse_link(a.link);
  opts.on_record = [](const BenchRecord& r) {
    std::cerr << "N=" << r.N << " M=" << r.M << " p=" << r.p << "  " << r.time << " s  " << r.fit_mem()
              << " B" << (r.ok ? "" : "  FAILED: " + r.error) << '\n';
  };
  const auto records = run_grid(a.Ns, a.Ms, a.ps, opts);

  const std::filesystem::path dir(a.output);
  std::filesystem::create_directories(dir);
  std::ostringstream csv, tsv;
  csv << "N,M,p,achieved_M,time_s,peak_mem_bytes,baseline_mem_bytes,fit_mem_bytes,iterations,converged,ok,error\n";
  tsv << "N\tM\tp\tM_minus_1_plus_p\tlog10_N\tlog10_M\tlog10_p\tlog10_M_minus_1_plus_p\tlog10_time\tlog10_fit_mem\n";
  for (const auto& r : records) {
    csv << r.N << ',' << r.M << ',' << r.p << ',' << r.achieved_M << ',' << format_double(r.time) << ','
        << r.peak_mem << ',' << r.baseline_mem << ',' << r.fit_mem() << ',' << r.iterations << ','
        << r.fit_converged << ',' << r.ok << ",\"" << r.error << "\"\n";
    if (!r.ok || r.time <= 0.0 || r.fit_mem() == 0) continue;
    const auto mp = static_cast<double>(r.M - 1 + r.p);
    tsv << r.N << '\t' << r.M << '\t' << r.p << '\t' << r.M - 1 + r.p << '\t' << std::log10(double(r.N)) << '\t'
        << std::log10(double(r.M)) << '\t' << std::log10(double(r.p)) << '\t' << std::log10(mp) << '\t'
        << std::log10(r.time) << '\t' << std::log10(double(r.fit_mem())) << '\n';
  }
  write_text(dir / "bench_records.csv", csv.str());
  write_text(dir / "bench_loglog.tsv", tsv.str());

  json models;
  const std::vector<BenchPredictor> tp{BenchPredictor::N, BenchPredictor::M, BenchPredictor::p};
  const std::vector<BenchPredictor> mp{BenchPredictor::M_minus_1_plus_p};
  try {
    models["time"] = loglog_json(fit_loglog_model(records, BenchResponse::time, tp), tp);
  } catch (const std::invalid_argument& e) {
    models["time"] = {{"error", e.what()}};
  }
  try {
    models["memory"] = loglog_json(fit_loglog_model(records, BenchResponse::memory, mp, a.memory_min_M), mp);
    models["memory"]["min_M"] = a.memory_min_M;
  } catch (const std::invalid_argument& e) {
    models["memory"] = {{"error", e.what()}};
  }
  write_text(dir / "bench_models.json", models.dump(2) + "\n");
  std::cout << models.dump(2) << '\n';
  return kOk;
}

// ---- discretize -----------------------------------------------------------

struct DiscretizeArgs {
  std::string input;
  std::string outcome;
  std::string method = "bin";
  std::size_t target = 0;
  std::uint64_t seed = 1;
  std::string output;
  std::vector<double> report_edges;
};

int cmd_discretize(DiscretizeArgs& a) {
  IngestReport rep;
  const Dataset d = ingest_csv(a.input, a.outcome, {}, &rep);
  std::vector<double> out;
  json meta;
  meta["method"] = a.method;
  meta["N"] = d.size();
  meta["distinct_original"] = count_distinct(d.y);
  meta["target"] = a.target;
  meta["rejected_lines"] = rep.rejected_lines;
  std::vector<RegionRow> report;
  if (a.method == "bin") {
    Rng rng = make_stream(a.seed, Stream::binning);
    auto b = bin_equal_quantile(d.y, a.target, rng);
    meta["achieved"] = b.achieved;
    out = std::move(b.y_b);
  } else if (a.method == "round-decimal" || a.method == "round-sigdigit") {
    const auto mode = a.method == "round-decimal" ? RoundingMode::decimal : RoundingMode::sigdigit;
    auto c = choose_rounding(d.y, a.target, mode);
    meta["achieved"] = c.scheme.achieved;
    meta["s"] = c.scheme.s;
    meta["t"] = c.scheme.t();
    meta["off_target"] = c.off_target;
    meta["message"] = c.message;
    if (!a.report_edges.empty()) report = rounding_report(d.y, c.y_r, a.report_edges);
    out = std::move(c.y_r);
  } else {
    throw std::invalid_argument("unknown method '" + a.method + "' (bin, round-decimal, round-sigdigit)");
  }
  const std::filesystem::path dir(a.output);
  std::filesystem::create_directories(dir);
  std::ostringstream csv;
  csv << a.outcome << ',' << a.outcome << "_discretized\n";
  for (std::size_t i = 0; i < out.size(); ++i) csv << format_double(d.y[i]) << ',' << format_double(out[i]) << '\n';
  write_text(dir / "discretized.csv", csv.str());
  if (!report.empty()) {
    std::ostringstream r;
    r << "lower,upper,n,distinct_before,distinct_after\n";
    for (const auto& row : report) {
      r << format_double(row.lower) << ',' << format_double(row.upper) << ',' << row.observations << ','
        << row.distinct_before << ',' << row.distinct_after << '\n';
    }
    write_text(dir / "rounding_report.csv", r.str());
  }
  write_text(dir / "discretize.json", meta.dump(2) + "\n");
  std::cout << a.method << ": " << meta["distinct_original"] << " -> " << meta["achieved"] << " distinct values\n";
  return kOk;
}

// ---- predict --------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string at;
  std::string output;
};

int cmd_predict(PredictArgs& a) {
  for (const auto& f : predict_to(a.model, a.at, a.output)) std::cout << "wrote " << f << '\n';
  return kOk;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const IngestError*>(&e)) return kInput;
  if (dynamic_cast<const InvalidDataError*>(&e) || dynamic_cast<const DegenerateOutcomeError*>(&e) ||
      dynamic_cast<const std::invalid_argument*>(&e)) {
    return kData;
  }
  if (dynamic_cast<const Error*>(&e)) return kFit;
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cumulative probability models for large continuous-outcome data"};
  app.require_subcommand(1);
  std::string config;

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a CPM to a CSV file");
  f->add_option("--config", config, "key = value file; command-line flags override it");
  f->add_option("--input", fit.cfg.input, "CSV with a header row");
  f->add_option("--outcome", fit.cfg.outcome, "Outcome column");
  f->add_option("--predictors", fit.cfg.predictors, "Predictor columns (default: all others)")->delimiter(',');
  f->add_option("--link", fit.cfg.link, "logit, probit, loglog or cloglog")->capture_default_str();
  f->add_option("--approach", fit.approach, "whole, divide-combine, bin, round-decimal, round-sigdigit")
      ->capture_default_str();
  f->add_option("--subsets", fit.cfg.subsets, "K for divide-combine")->capture_default_str();
  f->add_option("--target", fit.cfg.target, "Target distinct count for bin and rounding");
  f->add_option("--seed", fit.cfg.seed, "Master seed")->capture_default_str();
  f->add_option("--workers", fit.cfg.workers, "Concurrent subset fits")->envname("CPMBIG_WORKERS")->capture_default_str();
  f->add_option("--output", fit.cfg.output_dir, "Output directory");
  f->add_option("--predict-at", fit.cfg.predict_at, "CSV of covariate rows to predict at");
  f->add_option("--report-edges", fit.cfg.report_edges, "Region edges for the rounding report")->delimiter(',');
  f->add_option("--score-tol", fit.cfg.fit.score_tol)->capture_default_str();
  f->add_option("--ll-tol", fit.cfg.fit.ll_tol)->capture_default_str();
  f->add_option("--max-iter", fit.cfg.fit.max_iter)->capture_default_str();
  f->add_option("--seed-sweep", fit.seed_sweep, "Repeat divide-combine over this many consecutive seeds");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a scenario dataset");
  s->add_option("--config", config);
  s->add_option("--n", sim.spec.N, "Observations")->capture_default_str();
  s->add_option("--p", sim.spec.p, "Predictors")->capture_default_str();
  s->add_option("--transform", sim.transform, "identity, exp or log-shift")->capture_default_str();
  s->add_option("--residual", sim.residual, "logistic or gumbel")->capture_default_str();
  s->add_option("--seed", sim.spec.seed)->capture_default_str();
  s->add_option("--output", sim.output, "CSV path; truth goes to <path>.truth.json");
  s->add_option("--truth-at", sim.truth_at, "CSV of covariate rows for Monte Carlo conditional truth");
  s->add_option("--mc-draws", sim.mc_draws)->capture_default_str();

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time and memory scaling grid");
  b->add_option("--config", config);
  b->add_option("--N", bench.Ns)->delimiter(',')->capture_default_str();
  b->add_option("--M", bench.Ms)->delimiter(',')->capture_default_str();
  b->add_option("--p", bench.ps)->delimiter(',')->capture_default_str();
  b->add_option("--seed", bench.seed)->capture_default_str();
  b->add_option("--link", bench.link)->capture_default_str();
  b->add_option("--memory-min-M", bench.memory_min_M, "Smallest M in the memory model")->capture_default_str();
  b->add_option("--output", bench.output, "Output directory")->capture_default_str();
  b->add_flag("--no-isolate", bench.no_isolate, "Run cells in-process");

  DiscretizeArgs disc;
  auto* d = app.add_subcommand("discretize", "Bin or round an outcome column");
  d->add_option("--config", config);
  d->add_option("--input", disc.input);
  d->add_option("--outcome", disc.outcome);
  d->add_option("--method", disc.method, "bin, round-decimal or round-sigdigit")->capture_default_str();
  d->add_option("--target", disc.target);
  d->add_option("--seed", disc.seed)->capture_default_str();
  d->add_option("--output", disc.output, "Output directory");
  d->add_option("--report-edges", disc.report_edges)->delimiter(',');

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "Conditional summaries from a saved fit");
  p->add_option("--config", config);
  p->add_option("--model", pred.model, "Output directory of a previous fit");
  p->add_option("--at", pred.at, "CSV of covariate rows");
  p->add_option("--output", pred.output, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    if (!config.empty()) apply_config(*active, config);
    auto need = [&](const std::string& v, const char* flag) {
      if (v.empty()) throw std::invalid_argument(std::string(flag) + " is required");
    };
    if (active == f) {
      need(fit.cfg.input, "--input");
      need(fit.cfg.outcome, "--outcome");
      need(fit.cfg.output_dir, "--output");
      return cmd_fit(fit);
    }
    if (active == s) {
      need(sim.output, "--output");
      return cmd_simulate(sim);
    }
    if (active == b) return cmd_bench(bench);
    if (active == d) {
      need(disc.input, "--input");
      need(disc.outcome, "--outcome");
      need(disc.output, "--output");
      return cmd_discretize(disc);
    }
    need(pred.model, "--model");
    need(pred.at, "--at");
    need(pred.output, "--output");
    return cmd_predict(pred);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
}
