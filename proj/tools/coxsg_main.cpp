// coxsg: subgroup discovery for survival data.
//   gen       write a synthetic dataset as CSV (+ truth-region sidecar)
//   discover  run one method at one hyperparameter setting
//   sweep     full protocol: replicates x methods x hyperparameter grid
//   evaluate  score a saved region/beta on a dataset
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "coxsg/cox.hpp"
#include "coxsg/harness.hpp"
#include "coxsg/metrics.hpp"

namespace {

using namespace coxsg;

void add_data_flags(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--dataset", cfg.dataset,
                  "CSV path, or generator spec: counter[:n=..,m=..,b=..,c=..,"
                  "seed=..], nonlinear[:n=..,d=..,seed=..], "
                  "plaincox[:n=..,beta=1|1,lo=..,hi=..,censor=..,seed=..]")
      ->required();
  cmd->add_option("--time-col", cfg.time_col, "Time column name");
  cmd->add_option("--event-col", cfg.event_col, "Event column name (0/1)");
  cmd->add_option("--adjust-cols", cfg.adjust_cols,
                  "Adjustment covariate columns (comma separated)")
      ->delimiter(',');
  cmd->add_option("--subgroup-cols", cfg.subgroup_cols,
                  "Subgroup feature columns (comma separated)")
      ->delimiter(',');
  cmd->add_option("--truth-region", cfg.truth_region_path,
                  "Truth-region sidecar path (one 'lower upper' line per dim)");
  cmd->add_option("--seed", cfg.seed, "Master seed");
}

Method method_or_throw(const std::string& name) {
  const std::optional<Method> m = method_from_name(name);
  if (!m) throw std::invalid_argument("unknown method '" + name + "'");
  return *m;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const std::string& n : names) out.push_back(method_or_throw(n));
  return out;
}

std::map<std::string, double> default_params(Method method) {
  switch (method) {
    case Method::Base:
      return {};
    case Method::Random:
      return {{"seed", 0.0}};
    case Method::SurvivalTree:
    case Method::CoxTree:
      return {{"min_leaf", 10.0}, {"max_depth", 3.0}};
    case Method::Prim:
      return {{"alpha", 0.05}, {"beta0", 0.01}};
    case Method::DDGroup:
    case Method::DDGroupCI:
    case Method::DDGroupPL:
      return {{"core_frac", 0.1}, {"rej_quantile", 0.2}};
    case Method::DDGroupNE:
      return {{"core_frac", 0.1}};
  }
  return {};
}

void apply_params(std::map<std::string, double>& params,
                  const std::vector<std::string>& kv_list) {
  for (const std::string& kv : kv_list) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size())
      throw std::invalid_argument("--param expects key=value, got '" + kv + "'");
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(kv.substr(eq + 1), &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("--param: bad number in '" + kv + "'");
    }
    if (used != kv.size() - eq - 1)
      throw std::invalid_argument("--param: bad number in '" + kv + "'");
    params[kv.substr(0, eq)] = value;
  }
}

nlohmann::ordered_json record_json(const RunRecord& rec) {
  nlohmann::ordered_json j;
  j["method"] = rec.method;
  j["params"] = rec.params;
  j["failed"] = rec.failed;
  if (rec.failed) {
    j["error"] = rec.error;
    return j;
  }
  j["region"]["lower"] = rec.region.lower;
  j["region"]["upper"] = rec.region.upper;
  j["beta"] = rec.beta;
  j["converged"] = rec.converged;
  j["train_epe"] = round4(rec.train_epe);
  j["n_in_region"] = rec.n_in_region;
  j["size_fraction"] = round4(rec.size_fraction);
  if (rec.precision) j["precision"] = round4(*rec.precision);
  if (rec.recall) j["recall"] = round4(*rec.recall);
  if (rec.f1) j["f1"] = round4(*rec.f1);
  return j;
}

int cmd_gen(const ExperimentConfig& cfg, const std::string& out) {
  const LoadedData loaded = load_experiment_data(cfg);
  save_csv(loaded.data, out);
  std::printf("wrote %zu rows to %s\n", loaded.data.size(), out.c_str());
  if (loaded.truth) {
    save_truth_region(*loaded.truth, out + ".truth");
    std::printf("wrote truth region to %s.truth\n", out.c_str());
  }
  return 0;
}

int cmd_discover(const ExperimentConfig& cfg, const std::string& method_name_,
                 const std::vector<std::string>& param_kv,
                 const std::string& out) {
  const Method method = method_or_throw(method_name_);
  MethodConfig mc;
  mc.method = method;
  mc.params = default_params(method);
  apply_params(mc.params, param_kv);

  const LoadedData loaded = load_experiment_data(cfg);
  // In-sample discovery: the full dataset serves as train and test.
  const RunRecord rec =
      run_method_single(method, mc, loaded.data, loaded.data, loaded.truth, 0);
  std::printf("%s\n", record_json(rec).dump(2).c_str());
  if (rec.failed) return 1;
  if (!out.empty()) {
    write_model_json({rec.region, rec.beta}, out);
    std::printf("wrote model to %s\n", out.c_str());
  }
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  const ExperimentResult result = run_experiment(cfg);
  std::filesystem::create_directories(out_dir);
  const std::string records_path =
      (std::filesystem::path(out_dir) / "results.ndjson").string();
  const std::string summary_path =
      (std::filesystem::path(out_dir) / "summary.csv").string();
  write_ndjson(result.selected, records_path);
  write_summary_csv(result.summary, summary_path);
  for (const MethodAggregate& agg : result.summary) {
    std::printf("%-14s replicates=%d", agg.method.c_str(), agg.replicates);
    if (agg.test_epe.n > 0)
      std::printf("  test_epe=%.4g+-%.4g", agg.test_epe.mean, agg.test_epe.se);
    if (agg.f1.n > 0) std::printf("  f1=%.4g+-%.4g", agg.f1.mean, agg.f1.se);
    if (agg.size_fraction.n > 0)
      std::printf("  size=%.4g", agg.size_fraction.mean);
    std::printf("\n");
  }
  std::printf("wrote %s and %s\n", records_path.c_str(), summary_path.c_str());
  return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& model_path,
                 const std::string& out) {
  const ModelFile model = read_model_json(model_path);
  const LoadedData loaded = load_experiment_data(cfg);
  const SurvivalDataset& data = loaded.data;
  if (model.region.dim() != data.d_subgp())
    throw std::invalid_argument("evaluate: region dimension mismatch");
  if (model.beta.size() != data.d_adjust())
    throw std::invalid_argument("evaluate: beta dimension mismatch");

  nlohmann::ordered_json j;
  j["n"] = data.size();
  const std::vector<std::size_t> rows = data.rows_in(model.region);
  j["n_in_region"] = rows.size();
  j["size_fraction"] =
      round4(static_cast<double>(rows.size()) / static_cast<double>(data.size()));
  j["epe"] = nullptr;
  j["c_index"] = nullptr;
  j["rej10"] = nullptr;
  if (rows.size() >= 2) {
    const SurvivalDataset sub = data.subset(rows);
    try {
      j["epe"] = round4(empirical_epe(model.beta, sub));
    } catch (const std::exception&) {
    }
    try {
      j["c_index"] = round4(c_index(model.beta, sub));
    } catch (const std::exception&) {
    }
    try {
      j["rej10"] = round4(rejection_fraction(model.beta, sub, 0.1));
    } catch (const std::exception&) {
    }
  }
  std::printf("%s\n", j.dump(2).c_str());
  if (!out.empty()) {
    std::ofstream f(out);
    f << j.dump(2) << '\n';
    if (!f) throw std::runtime_error("evaluate: write failed for " + out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subgroup discovery for survival data with Cox models"};
  app.require_subcommand(1);
  // Key=value config file; keys live under a [subcommand] section and name
  // that subcommand's long flags.  Command-line values win over file values.
  app.set_config("--config", "",
                 "Config file: key=value lines under a [subcommand] section");

  ExperimentConfig gen_cfg;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "Write a synthetic dataset as CSV");
  add_data_flags(gen, gen_cfg);
  gen->add_option("--out", gen_out, "Output CSV path")->required();

  ExperimentConfig disc_cfg;
  std::string disc_method = "ddgroup", disc_out;
  std::vector<std::string> disc_params;
  CLI::App* disc = app.add_subcommand(
      "discover", "Run one method at one hyperparameter setting");
  add_data_flags(disc, disc_cfg);
  disc->add_option("--methods", disc_method,
                   "Method: base random survival_tree cox_tree prim ddgroup "
                   "ddgroup_ci ddgroup_pl ddgroup_ne");
  disc->add_option("--param", disc_params,
                   "Hyperparameter override key=value (repeatable)");
  disc->add_option("--out", disc_out, "Model JSON output path");

  ExperimentConfig sweep_cfg;
  std::vector<std::string> sweep_methods;
  std::string sweep_out = ".", sweep_select = "min_epe";
  CLI::App* sweep = app.add_subcommand("sweep", "Run the full protocol");
  add_data_flags(sweep, sweep_cfg);
  sweep->add_option("--methods", sweep_methods, "Methods (comma separated)")
      ->delimiter(',')
      ->required();
  sweep->add_option("--replicates", sweep_cfg.replicates,
                    "Train/test replicates");
  sweep->add_option("--test-frac", sweep_cfg.test_fraction,
                    "Test split fraction");
  sweep->add_option("--size-filter", sweep_cfg.size_filter,
                    "Minimum in-region training fraction for selection");
  sweep->add_option("--workers", sweep_cfg.workers,
                    "Worker threads (0 = runtime default)");
  sweep->add_option("--select", sweep_select, "Selection rule: min_epe|best_f1")
      ->check(CLI::IsMember({"min_epe", "best_f1"}));
  sweep->add_option("--out", sweep_out, "Output directory");

  ExperimentConfig eval_cfg;
  std::string eval_model, eval_out;
  CLI::App* eval =
      app.add_subcommand("evaluate", "Score a saved region/beta on a dataset");
  add_data_flags(eval, eval_cfg);
  eval->add_option("--model", eval_model, "Model JSON from discover")
      ->required();
  eval->add_option("--out", eval_out, "Metrics JSON output path");

  // Let `coxsg <sub> --config file` reach the top-level --config option.
  for (CLI::App* sub : {gen, disc, sweep, eval}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_cfg, gen_out);
    if (disc->parsed())
      return cmd_discover(disc_cfg, disc_method, disc_params, disc_out);
    if (sweep->parsed()) {
      sweep_cfg.methods = parse_methods(sweep_methods);
      sweep_cfg.select = sweep_select == "best_f1"
                             ? ExperimentConfig::Select::BestF1
                             : ExperimentConfig::Select::MinTrainEpe;
      return cmd_sweep(sweep_cfg, sweep_out);
    }
    if (eval->parsed()) return cmd_evaluate(eval_cfg, eval_model, eval_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
