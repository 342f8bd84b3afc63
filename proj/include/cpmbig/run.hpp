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

// End-to-end runs: ingest a CSV, fit with one approach, write results.
//
// Output directory layout:
//   alpha.csv            y, alpha, alpha_se (one row per cut, y ascending)
//   beta.csv             name, beta, se
//   metadata.json        approach, sizes, achieved M, timings, diagnostics,
//                        beta covariance, largest outcome value
//   predictions.csv      row, mean, median            (with --predict-at)
//   conditional_cdf.csv  row, y, cdf                  (with --predict-at)
//   rounding_report.csv  lower, upper, n, distinct_before, distinct_after
//                                                      (rounding with edges)

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "cpmbig/csv.hpp"
#include "cpmbig/discretize.hpp"
#include "cpmbig/divide_combine.hpp"
#include "cpmbig/fit.hpp"
#include "cpmbig/inference.hpp"
#include "cpmbig/random.hpp"

namespace cpmbig {

enum class Approach { whole, divide_combine, bin, round_decimal, round_sigdigit };

inline std::string to_string(Approach a) {
  switch (a) {
    case Approach::whole: return "whole";
    case Approach::divide_combine: return "divide-combine";
    case Approach::bin: return "bin";
    case Approach::round_decimal: return "round-decimal";
    case Approach::round_sigdigit: return "round-sigdigit";
  }
  return "";
}

inline Approach parse_approach(const std::string& s) {
  for (Approach a : {Approach::whole, Approach::divide_combine, Approach::bin, Approach::round_decimal,
                     Approach::round_sigdigit}) {
    if (s == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown approach '" + s +
                              "' (whole, divide-combine, bin, round-decimal, round-sigdigit)");
}

struct RunConfig {
  std::string input;
  std::string outcome;
  std::vector<std::string> predictors;  // empty: all other columns
  std::string link = "logit";
  Approach approach = Approach::whole;
  std::size_t subsets = 10;  // K
  std::size_t target = 0;    // M_b or M_r
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string output_dir;
  std::string predict_at;
  std::vector<double> report_edges;
  FitOptions fit;
};

/// What is needed to predict from any fitted model.
struct Estimates {
  std::vector<double> distinct;  // full outcome grid, length M
  Eigen::VectorXd alpha;
  Eigen::VectorXd alpha_se;
  Eigen::VectorXd beta;
  Eigen::VectorXd beta_se;
  Eigen::MatrixXd beta_cov;
  std::vector<std::string> names;
  LinkFamily link = LinkFamily::logit;
};

template <class Fit>
Estimates to_estimates(const Fit& fit, const std::vector<std::string>& names) {
  Estimates e;
  e.distinct = fit.distinct;
  e.alpha = fit.alpha;
  e.alpha_se = fit.alpha_se();
  e.beta = fit.beta;
  e.beta_se = fit.beta_se();
  e.beta_cov = fit.beta_cov;
  e.names = names;
  e.link = fit.link;
  return e;
}

struct RunResult {
  Estimates estimates;
  nlohmann::json metadata;
  std::vector<std::string> files;
};

namespace detail {

/// Tracks written files and deletes them unless the run commits.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::exists(dir_)) {
      std::filesystem::create_directories(dir_);
      created_dir_ = true;
    }
  }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(f, ec);
    if (created_dir_ && std::filesystem::is_empty(dir_, ec)) std::filesystem::remove(dir_, ec);
  }

  std::ofstream open(const std::string& name) {
    const auto path = dir_ / name;
    files_.push_back(path);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
  }
  void commit() { committed_ = true; }
  std::vector<std::string> names() const {
    std::vector<std::string> v;
    for (const auto& f : files_) v.push_back(f.string());
    return v;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  bool created_dir_ = false;
  bool committed_ = false;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_estimates(OutputSet& out, const Estimates& e) {
  {
    auto f = out.open("alpha.csv");
    f << "y,alpha,alpha_se\n";
    for (Eigen::Index j = 0; j < e.alpha.size(); ++j) {
      f << format_double(e.distinct[static_cast<std::size_t>(j)]) << ',' << format_double(e.alpha(j))
        << ',' << format_double(e.alpha_se(j)) << '\n';
    }
  }
  auto f = out.open("beta.csv");
  f << "name,beta,se\n";
  for (Eigen::Index j = 0; j < e.beta.size(); ++j) {
    f << e.names[static_cast<std::size_t>(j)] << ',' << format_double(e.beta(j)) << ','
      << format_double(e.beta_se(j)) << '\n';
  }
}

}  // namespace detail

/// Reads covariate rows for prediction, columns matched by name.
inline Eigen::MatrixXd read_covariates(const std::string& path, const std::vector<std::string>& names) {
  const CsvTable t = read_csv(path);
  std::vector<std::size_t> cols;
  for (const auto& n : names) cols.push_back(column_index(t, n));
  Eigen::MatrixXd X(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(names.size()));
  std::vector<std::size_t> bad;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto v = cols[j] < t.rows[r].size() ? parse_number(t.rows[r][cols[j]]) : std::nullopt;
      if (!v) {
        bad.push_back(t.line_numbers[r]);
        break;
      }
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  if (!bad.empty()) {
    std::string lines;
    for (std::size_t i = 0; i < bad.size() && i < 20; ++i) lines += (i ? ", " : "") + std::to_string(bad[i]);
    throw IngestError("'" + path + "': missing or non-numeric covariates on line(s) " + lines);
  }
  return X;
}

/// Writes predictions.csv and conditional_cdf.csv for each covariate row.
inline void write_predictions(detail::OutputSet& out, const Estimates& e, const Eigen::MatrixXd& X) {
  auto pred = out.open("predictions.csv");
  auto cdf = out.open("conditional_cdf.csv");
  pred << "row,mean,median\n";
  cdf << "row,y,cdf\n";
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const auto dist = conditional_distribution(e, Eigen::VectorXd(X.row(r).transpose()));
    pred << r + 1 << ',' << format_double(conditional_mean(dist)) << ','
         << format_double(conditional_median(dist)) << '\n';
    for (std::size_t j = 0; j < dist.grid.size(); ++j) {
      cdf << r + 1 << ',' << format_double(dist.grid[j]) << ',' << format_double(dist.cdf[j]) << '\n';
    }
  }
}

inline RunResult run(const RunConfig& cfg) {
  using nlohmann::json;
  const auto start = std::chrono::steady_clock::now();
  if (cfg.output_dir.empty()) throw std::invalid_argument("an output directory is required");
  const LinkFamily link = parse_link(cfg.link);
  if ((cfg.approach == Approach::bin || cfg.approach == Approach::round_decimal ||
       cfg.approach == Approach::round_sigdigit) &&
      cfg.target == 0) {
    throw std::invalid_argument("approach " + to_string(cfg.approach) + " needs a target count");
  }

  IngestReport ingest;
  Dataset data = ingest_csv(cfg.input, cfg.outcome, cfg.predictors, &ingest);
  validate(data);
  const double t_ingest = detail::seconds_since(start);
  const std::size_t distinct_original = count_distinct(data.y);

  json meta;
  meta["approach"] = to_string(cfg.approach);
  meta["link"] = std::string(to_string(link));
  meta["input"] = cfg.input;
  meta["outcome"] = cfg.outcome;
  meta["seed"] = cfg.seed;
  meta["N"] = data.size();
  meta["p"] = data.predictors();
  meta["rows_read"] = ingest.rows_read;
  meta["rows_rejected"] = ingest.rejected_lines.size();
  meta["rejected_lines"] = ingest.rejected_lines;
  meta["distinct_original"] = distinct_original;

  std::vector<RegionRow> report;
  const auto t_disc0 = std::chrono::steady_clock::now();
  if (cfg.approach == Approach::bin) {
    Rng rng = make_stream(cfg.seed, Stream::binning);
    auto b = bin_equal_quantile(data.y, cfg.target, rng);
    meta["target"] = cfg.target;
    meta["achieved"] = b.achieved;
    data.y = std::move(b.y_b);
  } else if (cfg.approach == Approach::round_decimal || cfg.approach == Approach::round_sigdigit) {
    const auto mode = cfg.approach == Approach::round_decimal ? RoundingMode::decimal : RoundingMode::sigdigit;
    auto c = choose_rounding(data.y, cfg.target, mode);
    meta["target"] = cfg.target;
    meta["achieved"] = c.scheme.achieved;
    meta["rounding"] = {{"mode", to_string(mode)}, {"s", c.scheme.s}, {"t", c.scheme.t()},
                        {"off_target", c.off_target}, {"message", c.message}};
    if (mode == RoundingMode::sigdigit &&
        std::any_of(data.y.begin(), data.y.end(), [](double v) { return v <= 0.0; })) {
      meta["rounding"]["nonpositive_outcomes"] =
          "zero kept as zero; negative values rounded by magnitude";
    }
    if (!cfg.report_edges.empty()) report = rounding_report(data.y, c.y_r, cfg.report_edges);
    data.y = std::move(c.y_r);
  }
  const double t_disc = detail::seconds_since(t_disc0);

  const auto t_fit0 = std::chrono::steady_clock::now();
  std::vector<std::string> names;
  for (std::size_t j = 0; j < data.predictors(); ++j) names.push_back(data.predictor_name(j));
  Estimates est;
  if (cfg.approach == Approach::divide_combine) {
    DivideCombineOptions o;
    o.K = cfg.subsets;
    o.seed = cfg.seed;
    o.workers = cfg.workers;
    o.fit = cfg.fit;
    const CombinedFit c = fit_divide_combine(data, link, o);
    est = to_estimates(c, names);
    meta["K"] = cfg.subsets;
    meta["workers"] = cfg.workers;
    meta["converged"] = true;
    meta["warnings"] = c.warnings;
    json subsets = json::array();
    for (std::size_t k = 0; k < c.subsets.size(); ++k) {
      const auto& s = c.subsets[k];
      subsets.push_back({{"subset", k + 1}, {"size", s.size}, {"distinct", s.distinct},
                         {"iterations", s.iterations}, {"converged", s.converged},
                         {"loglik", s.loglik}, {"max_score", s.max_score}});
    }
    meta["subsets"] = subsets;
  } else {
    const CpmFit f = fit_cpm(data, link, cfg.fit);
    if (!f.converged) throw Error("fit did not converge: " + f.message);
    est = to_estimates(f, names);
    meta["converged"] = true;
    meta["iterations"] = f.iterations;
    meta["loglik"] = f.loglik;
    meta["max_score"] = f.max_score;
  }
  const double t_fit = detail::seconds_since(t_fit0);
  meta["distinct_fitted"] = est.distinct.size();
  meta["y_max"] = est.distinct.back();
  meta["predictors"] = names;
  meta["beta_cov"] = detail::matrix_json(est.beta_cov);

  detail::OutputSet out(cfg.output_dir);
  detail::write_estimates(out, est);
  if (!cfg.predict_at.empty()) write_predictions(out, est, read_covariates(cfg.predict_at, names));
  if (!report.empty()) {
    auto f = out.open("rounding_report.csv");
    f << "lower,upper,n,distinct_before,distinct_after\n";
    for (const auto& r : report) {
      f << format_double(r.lower) << ',' << format_double(r.upper) << ',' << r.observations << ','
        << r.distinct_before << ',' << r.distinct_after << '\n';
    }
  }
  meta["timings"] = {{"ingest_s", t_ingest}, {"discretize_s", t_disc}, {"fit_s", t_fit},
                     {"total_s", detail::seconds_since(start)}};
  {
    auto f = out.open("metadata.json");
    f << meta.dump(2) << '\n';
  }
  RunResult res{std::move(est), std::move(meta), out.names()};
  out.commit();
  return res;
}

/// Reads back alpha.csv, beta.csv and metadata.json written by run().
inline Estimates load_estimates(const std::string& dir) {
  namespace fs = std::filesystem;
  Estimates e;
  std::ifstream mf(fs::path(dir) / "metadata.json");
  if (!mf) throw IngestError("no metadata.json in '" + dir + "'");
  const auto meta = nlohmann::json::parse(mf);
  e.link = parse_link(meta.at("link").get<std::string>());

  const CsvTable a = read_csv((fs::path(dir) / "alpha.csv").string());
  const CsvTable b = read_csv((fs::path(dir) / "beta.csv").string());
  e.alpha.resize(static_cast<Eigen::Index>(a.rows.size()));
  e.alpha_se.resize(e.alpha.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto y = parse_number(a.rows[i].at(0));
    const auto al = parse_number(a.rows[i].at(1));
    if (!y || !al) throw IngestError("alpha.csv line " + std::to_string(a.line_numbers[i]) + " is not numeric");
    e.distinct.push_back(*y);
    e.alpha(static_cast<Eigen::Index>(i)) = *al;
    e.alpha_se(static_cast<Eigen::Index>(i)) = parse_number(a.rows[i].at(2)).value_or(NAN);
  }
  e.distinct.push_back(meta.at("y_max").get<double>());
  e.beta.resize(static_cast<Eigen::Index>(b.rows.size()));
  e.beta_se.resize(e.beta.size());
  for (std::size_t j = 0; j < b.rows.size(); ++j) {
    e.names.push_back(b.rows[j].at(0));
    const auto v = parse_number(b.rows[j].at(1));
    if (!v) throw IngestError("beta.csv line " + std::to_string(b.line_numbers[j]) + " is not numeric");
    e.beta(static_cast<Eigen::Index>(j)) = *v;
    e.beta_se(static_cast<Eigen::Index>(j)) = parse_number(b.rows[j].at(2)).value_or(NAN);
  }
  return e;
}

/// Predicts from a saved run at the rows of a covariate CSV.
inline std::vector<std::string> predict_to(const std::string& model_dir, const std::string& at,
                                           const std::string& output_dir) {
  const Estimates e = load_estimates(model_dir);
  const Eigen::MatrixXd X = read_covariates(at, e.names);
  detail::OutputSet out(output_dir);
  write_predictions(out, e, X);
  out.commit();
  return out.names();
}

}  // namespace cpmbig
