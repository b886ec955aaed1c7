#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gpoid/driver.hpp"
#include "gpoid/inputs.hpp"
#include "gpoid/model.hpp"

namespace gpoid::cli {

struct ExperimentConfig {
  std::string model_id;
  Eigen::VectorXd theta0;

  std::string domain_kind;  // "markov" or "ar"
  std::vector<double> alphabet;
  int markov_n = 1;
  inputs::ArDomain ar;

  driver::GpoConfig gpo;
  std::optional<Eigen::VectorXd> design;  // fixed design for `evaluate` / normality
  int normality_replicates = 200;
  std::string out_dir = "run-output";

  std::unique_ptr<model::ModelSpec> make_model() const;
  std::unique_ptr<inputs::DesignDomain> make_domain() const;
  std::string resolved_json() const;  // fully populated, canonical key order
};

// Parses and validates a config file; unknown keys are rejected and every
// constraint violation names the offending key.
ExperimentConfig validate_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

// Runs Algorithm 3 per the config; writes trace.csv (streamed, so a partial
// trace survives an abort) and summary.json under out_dir. Returns 0.
int run(const ExperimentConfig& cfg);

// Evaluates the objective once at cfg.design; writes evaluate.json.
int evaluate(const ExperimentConfig& cfg);

struct NormalityReport {
  std::vector<double> nu;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks_statistic = 0.0;
  double ks_p_value = 0.0;
};

// R replicate evaluations at a fixed input law; writes nu-samples.csv and
// normality.json.
NormalityReport normality_report(const ExperimentConfig& cfg);

// Exact-oracle agreement smoke suite; returns true when every check passes.
bool oracle_check(std::uint64_t seed, std::string* log = nullptr);

// One pmf per row, blocks in lexicographic order.
std::string extreme_points_csv(const ExperimentConfig& cfg);

std::string trace_csv_header(const inputs::DesignDomain& domain);
std::string trace_csv_row(const driver::IterationRecord& rec);

}  // namespace gpoid::cli
