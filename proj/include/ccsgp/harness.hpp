#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccsgp/gp.hpp"
#include "ccsgp/optimizer.hpp"
#include "ccsgp/systems.hpp"

namespace ccsgp {

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
  SystemSpec system;
  int trajectory_count = 3;
  int trajectory_length = 100;  // transitions per trajectory (length + 1 measured states)
  std::vector<NoiseSpec> noise_grid;
  std::vector<std::uint64_t> seeds;
  std::uint64_t master_seed = 0;
  std::vector<Method> methods{Method::ST, Method::NI, Method::CCS};
  int iterations = 5;
  int test_count = 500;
  OptimizerOptions optimizer;
  std::string output = "results";
  int workers = 1;

  // Throws InputError when a field is out of range.
  void validate() const;
};

// Parses the JSON config format (see README). Throws InputError with the
// offending field on schema violations.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
// The JSON form of a config; parse_config(config_to_json(c)) == c.
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

struct ExperimentResult {
  std::string system;
  Method method = Method::ST;
  double sigma_w2 = 0.0;
  double sigma_r2 = 0.0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  double fit_ms = 0.0;
  double predict_ms = 0.0;
  long jitter_events = 0;
  long beta_events = 0;
  // Not part of the CSV.
  int noise_index = 0;
  std::string error;  // non-empty when the cell failed
  std::vector<Eigen::VectorXd> initial_conditions;

  bool ok() const { return error.empty(); }
};

// Fields that appear in the CSV.
bool same_row(const ExperimentResult& a, const ExperimentResult& b, bool include_timing = true);

// Mean over columns of the squared Euclidean error. Throws InputError on
// shape mismatch or empty input.
double mse(const Eigen::Ref<const Eigen::MatrixXd>& predictions, const Eigen::Ref<const Eigen::MatrixXd>& truths);

// Seed of the data-generating streams of a cell. Independent of the method
// so every method sees the same trajectories and test points.
std::uint64_t cell_data_seed(const ExperimentConfig& config, std::size_t noise_index, std::uint64_t seed);
// Seed of the hyperparameter search of a cell.
std::uint64_t cell_optimizer_seed(const ExperimentConfig& config, Method method, std::size_t noise_index,
                                  std::uint64_t seed);

struct CellOptions {
  bool record_timing = true;  // false writes 0 to fit_ms / predict_ms
};

// Generate data, fit `method`, evaluate on noise-free test targets. Errors
// are captured in the returned row.
ExperimentResult run_cell(const ExperimentConfig& config, Method method, std::size_t noise_index, std::uint64_t seed,
                          const CellOptions& opts = {});

struct SummaryRow {
  std::string system;
  Method method = Method::ST;
  double sigma_w2 = 0.0;
  double sigma_r2 = 0.0;
  int count = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double iqr() const { return q75 - q25; }
};

// Linear-interpolated quantile, p in [0, 1].
double quantile(std::vector<double> values, double p);
// Median/IQR of successful rows per (system, method, sigma_w2, sigma_r2),
// ordered by first appearance.
std::vector<SummaryRow> summarize(const std::vector<ExperimentResult>& rows);

struct SweepOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides config.output
  std::optional<int> workers;
  std::optional<std::vector<Method>> methods;
  CellOptions cell;
  bool write_files = true;
};

struct SweepOutput {
  std::vector<ExperimentResult> rows;      // successful cells, canonical order
  std::vector<ExperimentResult> failures;  // cells that raised
  std::vector<SummaryRow> summary;
  std::filesystem::path out_dir;
};

// Cartesian product methods x noise grid x seeds. Writes results.csv,
// results.json and summary.csv into the output directory; results.csv is
// appended as cells finish and rewritten in canonical order at the end.
SweepOutput run_sweep(const ExperimentConfig& config, const SweepOptions& opts = {});

inline constexpr const char* kCsvHeader =
    "system,method,sigma_w2,sigma_r2,seed,mse,fit_ms,predict_ms,jitter_events,beta_events";

std::string csv_row(const ExperimentResult& r);
void write_results_csv(const std::filesystem::path& path, const std::vector<ExperimentResult>& rows);
std::vector<ExperimentResult> read_results_csv(const std::filesystem::path& path);

// JSON mirror: {"schema_version", "config", "rows", "failures", "summary"}.
void write_results_json(const std::filesystem::path& path, const ExperimentConfig& config,
                        const std::vector<ExperimentResult>& rows, const std::vector<ExperimentResult>& failures,
                        const std::vector<SummaryRow>& summary);
std::vector<ExperimentResult> read_results_json(const std::filesystem::path& path);

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& summary);
std::string format_summary(const std::vector<SummaryRow>& summary);

}  // namespace ccsgp
