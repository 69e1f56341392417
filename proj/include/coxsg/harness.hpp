// Experiment harness: CSV ingest, train/test splitting, hyperparameter
// sweeps, subgroup selection and aggregation.  Every run is a pure function
// of (config, master seed); output files are byte-identical across reruns.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coxsg/dataset.hpp"
#include "coxsg/methods.hpp"

namespace coxsg {

struct ExperimentConfig {
  // CSV path, or a generator spec: "counter[:k=v,...]", "nonlinear[:k=v,...]",
  // "plaincox:..." (keys resolved by load_experiment_data; unknown keys are
  // rejected).
  std::string dataset;
  std::string time_col = "time";
  std::string event_col = "event";
  std::vector<std::string> adjust_cols;
  std::vector<std::string> subgroup_cols;
  std::vector<Method> methods;
  int replicates = 10;
  double test_fraction = 0.2;
  double size_filter = 0.10;  // minimum in-region fraction of training points
  std::string truth_region_path;  // optional sidecar for CSV datasets
  std::uint64_t seed = 0;
  int workers = 0;  // OpenMP threads; 0 keeps the runtime default
  enum class Select { MinTrainEpe, BestF1 };
  Select select = Select::MinTrainEpe;
};

struct RunRecord {
  std::string method;
  int replicate = 0;
  std::map<std::string, double> params;
  bool failed = false;
  std::string error;

  Region region;
  std::vector<double> beta;
  bool converged = false;
  double train_epe = 0.0;
  std::size_t n_in_region = 0;
  double size_fraction = 0.0;

  std::optional<double> test_epe, test_c_index, test_rej10;
  std::optional<double> precision, recall, f1;
};

// --- ingest -----------------------------------------------------------------
// Header-line CSV; all configured columns must exist and parse as numbers,
// the event column additionally as exactly 0 or 1.  The first offending cell
// raises IngestError::BadCell naming row and column; a file with no data rows
// raises IngestError::Empty.  Output rows are sorted by time; sort_index
// holds the original (0-based, header excluded) row numbers.
SurvivalDataset load_csv(const std::string& path, const std::string& time_col,
                         const std::string& event_col,
                         const std::vector<std::string>& adjust_cols,
                         const std::vector<std::string>& subgroup_cols);

// Feature columns x1..xd (the shared adjust/subgroup view), then time, event.
void save_csv(const SurvivalDataset& data, const std::string& path);

// One line per dimension: "lower upper".
void save_truth_region(const Region& region, const std::string& path);
Region load_truth_region(const std::string& path);

struct LoadedData {
  SurvivalDataset data;
  std::optional<Region> truth;
};
// Resolves config.dataset (path or generator spec) and any truth sidecar.
LoadedData load_experiment_data(const ExperimentConfig& config);

// --- protocol ---------------------------------------------------------------
// Seeded shuffle split; replicate r uses derive_seed(master, kShuffle, r).
// round(test_fraction * n) rows (clamped to [1, n-1]) go to test.
std::pair<SurvivalDataset, SurvivalDataset> split_train_test(
    const SurvivalDataset& data, std::uint64_t master, int replicate,
    double test_fraction);

// All grid settings of one method on one split.  Region discovery, the
// in-region refit and the test metrics all live here; any error becomes a
// failed record instead of aborting.
std::vector<RunRecord> run_method_sweep(Method method,
                                        const SurvivalDataset& train,
                                        const SurvivalDataset& test,
                                        const std::optional<Region>& truth,
                                        int replicate);

// One method at one hyperparameter setting (the `discover` CLI path).
RunRecord run_method_single(Method method, const MethodConfig& config,
                            const SurvivalDataset& train,
                            const SurvivalDataset& test,
                            const std::optional<Region>& truth, int replicate);

// Full protocol: replicates x methods x grid.
std::vector<RunRecord> run_sweep(const ExperimentConfig& config);

// Selection among one method+replicate's records: drop failed records and
// those with size_fraction below size_filter, then pick minimal train EPE
// (first on ties).  Throws SelectError::NoEligibleSubgroup when none remain.
const RunRecord& select_subgroup(const std::vector<RunRecord>& records,
                                 double size_filter);
// Counter-experiment mode: maximal f1 (first on ties) among non-failed
// records with an f1 value.
const RunRecord& select_best_f1(const std::vector<RunRecord>& records);

struct Stat {
  double mean = 0.0, se = 0.0;
  int n = 0;
};

struct MethodAggregate {
  std::string method;
  int replicates = 0;         // replicates with a selected record
  Stat train_epe, test_epe, test_c_index, test_rej10, size_fraction;
  Stat precision, recall, f1;
};

struct ExperimentResult {
  std::vector<RunRecord> records;   // every method x replicate x setting
  std::vector<RunRecord> selected;  // one per method x replicate
  std::vector<MethodAggregate> summary;
};

// run_sweep + per-replicate selection + aggregation (mean and standard error
// over replicates, sample std / sqrt(n)).
ExperimentResult run_experiment(const ExperimentConfig& config);

// --- emission ---------------------------------------------------------------
// One JSON object per line, stable field order, floats at 4 significant
// digits.  write_summary_csv emits one row per method.
void write_ndjson(const std::vector<RunRecord>& records,
                  const std::string& path);
void write_summary_csv(const std::vector<MethodAggregate>& summary,
                       const std::string& path);

// Round to 4 significant decimal digits (the emission precision).
double round4(double x);

// Saved model artifact for the discover/evaluate CLI round trip.
struct ModelFile {
  Region region;
  std::vector<double> beta;
};
void write_model_json(const ModelFile& model, const std::string& path);
ModelFile read_model_json(const std::string& path);

}  // namespace coxsg
