#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cclab/engine.hpp"

namespace cclab {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment;  // separations | gapmaj-bench | amplify | derand | certify
  std::string problem;
  std::string model;
  std::string scheme;
  size_t n = 0, t = 1;
  size_t N = 0, k = 0;
  std::vector<size_t> ks;
  mpq_class eps = 0, eps_target = 0, delta = 0;
  uint64_t trials = 0;
  uint64_t count = 0;   // instances / random protocols
  uint64_t inputs = 0;  // sampled input pairs for Monte Carlo
  unsigned flip_bits = 0;  // corrupted-base tape width; 0 picks the scheme default
  double confidence = 0.99;
  uint64_t seed = 1;
  std::string out, format = "csv";
};

// One JSON object; keys missing from it take per-experiment defaults.
ExperimentConfig parse_config(const std::string& json_text);
// {"suite": [...]} or a single object.
std::vector<ExperimentConfig> parse_suite(const std::string& json_text);

struct ReportRow {
  std::string case_id, model, scheme;
  double cost = 0, cost_bound = 0;
  double error = 0;
  std::optional<mpq_class> error_exact;
  double error_radius = 0;
  bool pass = false;
  std::map<std::string, std::string> extra;  // JSON only

  bool operator==(const ReportRow& o) const;
};

struct Report {
  std::string experiment;
  uint64_t seed = 0;
  std::vector<ReportRow> rows;

  bool all_pass() const;
  void sort_rows();
  bool operator==(const Report& o) const;
};

Report run_experiment(const ExperimentConfig& c);
Report run_suite(const std::vector<ExperimentConfig>& cs);

std::string render_csv(const Report& r);
std::string render_json(const Report& r);
Report parse_report_json(const std::string& text);
// Throws IoError.
void emit_report(const Report& r, const std::string& format, const std::string& path);

std::string rational_str(const mpq_class& q);
std::string decimal_str(double v);

// Worst per-input failure rate and largest cost over seeded runs.
struct Measurement {
  double error = 0;
  double radius = 0;
  uint64_t max_cost = 0;
  uint64_t trials = 0;
  size_t worst_input = 0;
};
Measurement measure(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs, uint64_t trials,
                    double confidence, uint64_t seed);
Measurement measure_serial(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                           uint64_t trials, double confidence, uint64_t seed);

std::vector<std::string> scheme_names();
int cli_main(int argc, char** argv);

}  // namespace cclab
