#include "coxsg/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "json.hpp"

#include "coxsg/cox.hpp"
#include "coxsg/errors.hpp"
#include "coxsg/metrics.hpp"
#include "coxsg/synth.hpp"

namespace coxsg {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(std::string s) {
  const auto is_space = [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Whole-string double parse; nullopt on any leftover or failure.
std::optional<double> parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_g4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

// --- ingest -------------------------------------------------------------------

SurvivalDataset load_csv(const std::string& path, const std::string& time_col,
                         const std::string& event_col,
                         const std::vector<std::string>& adjust_cols,
                         const std::vector<std::string>& subgroup_cols) {
  if (adjust_cols.empty() || subgroup_cols.empty())
    throw std::invalid_argument("load_csv: feature column lists must be non-empty");
  for (const auto* cols : {&adjust_cols, &subgroup_cols})
    for (const std::string& c : *cols)
      if (c == time_col || c == event_col)
        throw std::invalid_argument(
            "load_csv: time/event columns must be disjoint from features: " + c);

  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    throw IngestError(IngestError::Code::Empty, "load_csv: " + path + " is empty");
  std::vector<std::string> header = split(line, ',');
  for (std::string& h : header) h = trim(h);

  const auto col_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw IngestError(IngestError::Code::MissingColumn,
                        "load_csv: missing column '" + name + "' in " + path);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t time_idx = col_index(time_col);
  const std::size_t event_idx = col_index(event_col);
  std::vector<std::size_t> adjust_idx, subgroup_idx;
  for (const std::string& c : adjust_cols) adjust_idx.push_back(col_index(c));
  for (const std::string& c : subgroup_cols) subgroup_idx.push_back(col_index(c));

  std::vector<double> adj_flat, sub_flat, times;
  std::vector<std::uint8_t> events;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = split(line, ',');
    const auto cell = [&](std::size_t idx, const std::string& name) {
      if (idx >= cells.size())
        throw IngestError(IngestError::Code::BadCell,
                          "load_csv: row " + std::to_string(row) + " column '" +
                              name + "': missing cell");
      const auto v = parse_double(cells[idx]);
      if (!v || !std::isfinite(*v))
        throw IngestError(IngestError::Code::BadCell,
                          "load_csv: row " + std::to_string(row) + " column '" +
                              name + "': bad cell '" + trim(cells[idx]) + "'");
      return *v;
    };
    times.push_back(cell(time_idx, time_col));
    const double ev = cell(event_idx, event_col);
    if (ev != 0.0 && ev != 1.0)
      throw IngestError(IngestError::Code::BadCell,
                        "load_csv: row " + std::to_string(row) + " column '" +
                            event_col + "': event must be 0 or 1");
    events.push_back(ev == 1.0 ? 1 : 0);
    for (std::size_t j = 0; j < adjust_idx.size(); ++j)
      adj_flat.push_back(cell(adjust_idx[j], adjust_cols[j]));
    for (std::size_t j = 0; j < subgroup_idx.size(); ++j)
      sub_flat.push_back(cell(subgroup_idx[j], subgroup_cols[j]));
  }
  if (row == 0)
    throw IngestError(IngestError::Code::Empty,
                      "load_csv: " + path + " has no data rows");

  Matrix adj(row, adjust_idx.size());
  Matrix sub(row, subgroup_idx.size());
  for (std::size_t i = 0; i < row; ++i) {
    for (std::size_t j = 0; j < adjust_idx.size(); ++j)
      adj(i, j) = adj_flat[i * adjust_idx.size() + j];
    for (std::size_t j = 0; j < subgroup_idx.size(); ++j)
      sub(i, j) = sub_flat[i * subgroup_idx.size() + j];
  }
  return make_dataset(std::move(adj), std::move(sub), std::move(times),
                      std::move(events));
}

void save_csv(const SurvivalDataset& data, const std::string& path) {
  const std::size_t n = data.size(), d = data.d_subgp();
  if (data.d_adjust() != d)
    throw std::invalid_argument("save_csv: adjust/subgroup views differ");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (data.x_adjust(i, j) != data.x_subgp(i, j))
        throw std::invalid_argument("save_csv: adjust/subgroup views differ");

  std::ofstream out(path);
  if (!out) throw std::invalid_argument("save_csv: cannot open " + path);
  for (std::size_t j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
  out << "time,event\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out << format_g17(data.x_subgp(i, j)) << ',';
    out << format_g17(data.times[i]) << ',' << (data.events[i] ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

void save_truth_region(const Region& region, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("save_truth_region: cannot open " + path);
  for (std::size_t j = 0; j < region.dim(); ++j)
    out << format_g17(region.lower[j]) << ' ' << format_g17(region.upper[j])
        << '\n';
  if (!out)
    throw std::runtime_error("save_truth_region: write failed for " + path);
}

Region load_truth_region(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_truth_region: cannot open " + path);
  Region r;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> parts;
    for (const std::string& p : split(line, ' '))
      if (!trim(p).empty()) parts.push_back(trim(p));
    if (parts.size() != 2)
      throw std::invalid_argument("load_truth_region: expected 'lower upper' in " +
                                  path);
    const auto lo = parse_double(parts[0]), hi = parse_double(parts[1]);
    if (!lo || !hi || *lo > *hi)
      throw std::invalid_argument("load_truth_region: bad line '" + line + "'");
    r.lower.push_back(*lo);
    r.upper.push_back(*hi);
  }
  if (r.dim() == 0)
    throw std::invalid_argument("load_truth_region: no dimensions in " + path);
  return r;
}

// --- generator specs ------------------------------------------------------------

namespace {

struct SpecKV {
  std::string kind;
  std::map<std::string, std::string> kv;
};

SpecKV parse_spec(const std::string& s) {
  SpecKV out;
  const std::size_t colon = s.find(':');
  out.kind = s.substr(0, colon);
  if (colon == std::string::npos) return out;
  for (const std::string& item : split(s.substr(colon + 1), ',')) {
    if (trim(item).empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("dataset spec: expected key=value, got '" +
                                  item + "'");
    out.kv[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  return out;
}

double spec_num(const SpecKV& spec, const std::string& key, double dflt) {
  const auto it = spec.kv.find(key);
  if (it == spec.kv.end()) return dflt;
  const auto v = parse_double(it->second);
  if (!v) throw std::invalid_argument("dataset spec: bad number for " + key);
  return *v;
}

long long spec_int(const SpecKV& spec, const std::string& key, long long dflt) {
  const auto it = spec.kv.find(key);
  if (it == spec.kv.end()) return dflt;
  const auto v = parse_int(it->second);
  if (!v) throw std::invalid_argument("dataset spec: bad integer for " + key);
  return *v;
}

void check_keys(const SpecKV& spec, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : spec.kv) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok)
      throw std::invalid_argument("dataset spec: unknown key '" + k + "' for " +
                                  spec.kind);
  }
}

}  // namespace

LoadedData load_experiment_data(const ExperimentConfig& config) {
  const SpecKV spec = parse_spec(config.dataset);
  std::optional<SyntheticData> synth;
  if (spec.kind == "counter") {
    check_keys(spec, {"n", "m", "b", "c", "seed"});
    synth = gen_counter(
        static_cast<std::size_t>(spec_int(spec, "n", 4000)),
        spec_num(spec, "m", 10.0), spec_num(spec, "b", 2.0),
        spec_num(spec, "c", 0.4),
        static_cast<std::uint64_t>(
            spec_int(spec, "seed", static_cast<long long>(config.seed))));
  } else if (spec.kind == "nonlinear") {
    check_keys(spec, {"n", "d", "seed"});
    synth = gen_nonlinear(
        static_cast<std::size_t>(spec_int(spec, "n", 4000)),
        static_cast<std::size_t>(spec_int(spec, "d", 2)),
        static_cast<std::uint64_t>(
            spec_int(spec, "seed", static_cast<long long>(config.seed))));
  } else if (spec.kind == "plaincox") {
    check_keys(spec, {"n", "beta", "lo", "hi", "censor", "seed"});
    std::vector<double> beta;
    const auto it = spec.kv.find("beta");
    for (const std::string& part : split(it == spec.kv.end() ? "1|1" : it->second, '|')) {
      const auto v = parse_double(part);
      if (!v) throw std::invalid_argument("dataset spec: bad beta component");
      beta.push_back(*v);
    }
    Region bounds;
    bounds.lower.assign(beta.size(), spec_num(spec, "lo", 0.0));
    bounds.upper.assign(beta.size(), spec_num(spec, "hi", 1.0));
    synth = gen_plain_cox(
        static_cast<std::size_t>(spec_int(spec, "n", 4000)), beta, bounds,
        spec_num(spec, "censor", 0.0),
        static_cast<std::uint64_t>(
            spec_int(spec, "seed", static_cast<long long>(config.seed))));
  }

  LoadedData out{synth ? std::move(synth->data)
                       : load_csv(config.dataset, config.time_col,
                                  config.event_col,
                                  config.adjust_cols.empty()
                                      ? config.subgroup_cols
                                      : config.adjust_cols,
                                  config.subgroup_cols.empty()
                                      ? config.adjust_cols
                                      : config.subgroup_cols),
                 std::nullopt};
  if (!config.truth_region_path.empty())
    out.truth = load_truth_region(config.truth_region_path);
  else if (synth && synth->has_truth)
    out.truth = std::move(synth->truth);
  return out;
}

// --- protocol --------------------------------------------------------------------

std::pair<SurvivalDataset, SurvivalDataset> split_train_test(
    const SurvivalDataset& data, std::uint64_t master, int replicate,
    double test_fraction) {
  const std::size_t n = data.size();
  if (n < 2)
    throw std::invalid_argument("split_train_test: need at least 2 rows");
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
    throw std::invalid_argument("split_train_test: test_fraction must be in (0, 1)");
  if (replicate < 0)
    throw std::invalid_argument("split_train_test: negative replicate");

  auto n_test = static_cast<std::size_t>(
      std::lround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(master, seed_tag::kShuffle,
                      static_cast<std::uint64_t>(replicate)));
  for (std::size_t i = 0; i + 1 < n; ++i)
    std::swap(idx[i], idx[i + rng.below(n - i)]);

  std::vector<std::size_t> test_rows(idx.begin(), idx.begin() + n_test);
  std::vector<std::size_t> train_rows(idx.begin() + n_test, idx.end());
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return {data.subset(train_rows), data.subset(test_rows)};
}

namespace {

// Refit inside the region, then score on train and (when populated enough)
// test; throws on anything that invalidates the record.
void score_region(RunRecord& rec, const Region& region,
                  const SurvivalDataset& train, const SurvivalDataset& test,
                  const std::optional<Region>& truth) {
  rec.region = region;
  const std::vector<std::size_t> rows = train.rows_in(region);
  rec.n_in_region = rows.size();
  rec.size_fraction =
      static_cast<double>(rows.size()) / static_cast<double>(train.size());
  if (rows.empty()) throw std::runtime_error("no training points in region");

  const SurvivalDataset sub = train.subset(rows);
  const CoxModel model = fit_cox(sub);
  rec.beta = model.beta;
  rec.converged = model.converged;
  rec.train_epe = empirical_epe(model.beta, sub);

  if (truth) {
    const RegionScore rs = region_f1(region, *truth, train.bounding_box());
    rec.precision = rs.precision;
    rec.recall = rs.recall;
    rec.f1 = rs.f1;
  }

  const std::vector<std::size_t> test_rows = test.rows_in(region);
  if (test_rows.size() >= 2) {
    const SurvivalDataset test_sub = test.subset(test_rows);
    try {
      rec.test_epe = empirical_epe(model.beta, test_sub);
    } catch (const std::runtime_error&) {
    }
    try {
      rec.test_c_index = c_index(model.beta, test_sub);
    } catch (const std::runtime_error&) {
    }
    try {
      rec.test_rej10 = rejection_fraction(model.beta, test_sub, 0.1);
    } catch (const std::runtime_error&) {
    }
  }
}

// State shared across the settings of one method on one split.  The neighbor
// ordering is reused by every DDGroup-family setting, and one core group plus
// its rejection-score vector serves all 50 thresholds of a core_frac.
struct SweepCache {
  std::optional<NeighborOrder> knn;
  double core_frac = -1.0;
  std::optional<CoreGroup> core;
  std::vector<double> scores;
  std::string core_error;
};

Region discover_region(Method method, const MethodConfig& cfg,
                       const SurvivalDataset& train, SweepCache& cache) {
  const auto knn_cache = [&]() -> const NeighborOrder& {
    if (!cache.knn) cache.knn = neighbor_order(train);
    return *cache.knn;
  };
  switch (method) {
    case Method::Base:
      return base_method(train);
    case Method::Random:
      return random_method(train,
                           static_cast<std::uint64_t>(cfg.params.at("seed")));
    case Method::SurvivalTree:
    case Method::CoxTree: {
      const int max_depth = static_cast<int>(cfg.params.at("max_depth"));
      const int min_leaf = static_cast<int>(cfg.params.at("min_leaf"));
      const std::vector<TreeLeaf> leaves =
          method == Method::SurvivalTree
              ? survival_tree(train, max_depth, min_leaf)
              : cox_tree(train, max_depth, min_leaf);
      // The tree's subgroup is its min-training-EPE leaf.
      double best = std::numeric_limits<double>::infinity();
      const TreeLeaf* chosen = nullptr;
      for (const TreeLeaf& leaf : leaves) {
        try {
          const SurvivalDataset sub = train.subset(leaf.rows);
          const double epe = empirical_epe(fit_cox(sub).beta, sub);
          if (epe < best) {
            best = epe;
            chosen = &leaf;
          }
        } catch (const std::runtime_error&) {
        }
      }
      if (chosen == nullptr)
        throw MethodError(MethodError::Code::NoValidLeaf,
                          "no tree leaf could be scored");
      return chosen->region;
    }
    case Method::Prim:
      return prim(train, cfg.params.at("alpha"), cfg.params.at("beta0"));
    case Method::DDGroup:
    case Method::DDGroupCI:
    case Method::DDGroupPL: {
      CoreQuality quality = CoreQuality::Epe;
      RejectionScore kind = RejectionScore::Crs;
      if (method == Method::DDGroupCI) {
        quality = CoreQuality::CIndex;
        kind = RejectionScore::CIndex;
      } else if (method == Method::DDGroupPL) {
        quality = CoreQuality::PartialLikelihood;
        kind = RejectionScore::PartialLikelihood;
      }
      const double frac = cfg.params.at("core_frac");
      if (frac != cache.core_frac) {
        cache.core_frac = frac;
        cache.core.reset();
        cache.core_error.clear();
        try {
          cache.core = core_group(train, frac, quality, knn_cache());
          const SurvivalDataset core_data = train.subset(cache.core->rows);
          cache.scores =
              rejection_scores(train, core_data, cache.core->model.beta, kind);
        } catch (const std::runtime_error& e) {
          cache.core.reset();
          cache.core_error = e.what();
        }
      }
      if (!cache.core) throw std::runtime_error(cache.core_error);
      const double threshold =
          quantile_linear(cache.scores, cfg.params.at("rej_quantile"));
      std::vector<std::uint8_t> labels(cache.scores.size());
      for (std::size_t i = 0; i < cache.scores.size(); ++i)
        labels[i] = cache.scores[i] < threshold ? 1 : 0;
      return ddgroup_expand(train, cache.core->rows, labels);
    }
    case Method::DDGroupNE: {
      const CoreGroup core = core_group(train, cfg.params.at("core_frac"),
                                        CoreQuality::Epe, knn_cache());
      return train.subset(core.rows).bounding_box();
    }
  }
  throw std::invalid_argument("discover_region: unknown method");
}

RunRecord run_one(Method method, const MethodConfig& cfg,
                  const SurvivalDataset& train, const SurvivalDataset& test,
                  const std::optional<Region>& truth, int replicate,
                  SweepCache& cache) {
  RunRecord rec;
  rec.method = method_name(method);
  rec.replicate = replicate;
  rec.params = cfg.params;
  try {
    score_region(rec, discover_region(method, cfg, train, cache), train, test,
                 truth);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

RunRecord run_method_single(Method method, const MethodConfig& config,
                            const SurvivalDataset& train,
                            const SurvivalDataset& test,
                            const std::optional<Region>& truth, int replicate) {
  SweepCache cache;
  return run_one(method, config, train, test, truth, replicate, cache);
}

std::vector<RunRecord> run_method_sweep(Method method,
                                        const SurvivalDataset& train,
                                        const SurvivalDataset& test,
                                        const std::optional<Region>& truth,
                                        int replicate) {
  const std::vector<MethodConfig> grid = method_grid(method);
  std::vector<RunRecord> out;
  out.reserve(grid.size());
  SweepCache cache;
  for (const MethodConfig& cfg : grid)
    out.push_back(run_one(method, cfg, train, test, truth, replicate, cache));
  return out;
}

std::vector<RunRecord> run_sweep(const ExperimentConfig& config) {
  if (config.methods.empty())
    throw std::invalid_argument("run_sweep: no methods configured");
  if (config.replicates < 1)
    throw std::invalid_argument("run_sweep: replicates must be positive");
  if (!(config.test_fraction > 0.0) || !(config.test_fraction < 1.0))
    throw std::invalid_argument("run_sweep: test_fraction must be in (0, 1)");
  if (!(config.size_filter > 0.0) || !(config.size_filter < 1.0))
    throw std::invalid_argument("run_sweep: size_filter must be in (0, 1)");
  if (config.workers > 0) omp_set_num_threads(config.workers);

  const LoadedData loaded = load_experiment_data(config);
  std::vector<RunRecord> records;
  for (int r = 0; r < config.replicates; ++r) {
    const auto [train, test] =
        split_train_test(loaded.data, config.seed, r, config.test_fraction);
    for (Method m : config.methods) {
      std::vector<RunRecord> part =
          run_method_sweep(m, train, test, loaded.truth, r);
      records.insert(records.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    }
  }
  return records;
}

const RunRecord& select_subgroup(const std::vector<RunRecord>& records,
                                 double size_filter) {
  const RunRecord* best = nullptr;
  for (const RunRecord& rec : records) {
    if (rec.failed || rec.size_fraction < size_filter) continue;
    if (best == nullptr || rec.train_epe < best->train_epe) best = &rec;
  }
  if (best == nullptr)
    throw SelectError(SelectError::Code::NoEligibleSubgroup,
                      "select_subgroup: no record passes the size filter");
  return *best;
}

const RunRecord& select_best_f1(const std::vector<RunRecord>& records) {
  const RunRecord* best = nullptr;
  for (const RunRecord& rec : records) {
    if (rec.failed || !rec.f1) continue;
    if (best == nullptr || *rec.f1 > *best->f1) best = &rec;
  }
  if (best == nullptr)
    throw SelectError(SelectError::Code::NoEligibleSubgroup,
                      "select_best_f1: no record carries an F1 score");
  return *best;
}

namespace {

Stat stat_of(const std::vector<double>& values) {
  Stat s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    s.se = std::sqrt(var / static_cast<double>(values.size()));
  }
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  result.records = run_sweep(config);

  for (Method m : config.methods) {
    const std::string name = method_name(m);
    for (int r = 0; r < config.replicates; ++r) {
      std::vector<RunRecord> slice;
      for (const RunRecord& rec : result.records)
        if (rec.method == name && rec.replicate == r) slice.push_back(rec);
      try {
        const RunRecord& chosen =
            config.select == ExperimentConfig::Select::BestF1
                ? select_best_f1(slice)
                : select_subgroup(slice, config.size_filter);
        result.selected.push_back(chosen);
      } catch (const SelectError&) {
        // Method scores as missing for this replicate.
      }
    }
  }

  for (Method m : config.methods) {
    const std::string name = method_name(m);
    MethodAggregate agg;
    agg.method = name;
    std::vector<double> train_epe, test_epe, test_ci, test_rej, size_frac;
    std::vector<double> precision, recall, f1;
    for (const RunRecord& rec : result.selected) {
      if (rec.method != name) continue;
      ++agg.replicates;
      train_epe.push_back(rec.train_epe);
      size_frac.push_back(rec.size_fraction);
      if (rec.test_epe) test_epe.push_back(*rec.test_epe);
      if (rec.test_c_index) test_ci.push_back(*rec.test_c_index);
      if (rec.test_rej10) test_rej.push_back(*rec.test_rej10);
      if (rec.precision) precision.push_back(*rec.precision);
      if (rec.recall) recall.push_back(*rec.recall);
      if (rec.f1) f1.push_back(*rec.f1);
    }
    agg.train_epe = stat_of(train_epe);
    agg.test_epe = stat_of(test_epe);
    agg.test_c_index = stat_of(test_ci);
    agg.test_rej10 = stat_of(test_rej);
    agg.size_fraction = stat_of(size_frac);
    agg.precision = stat_of(precision);
    agg.recall = stat_of(recall);
    agg.f1 = stat_of(f1);
    result.summary.push_back(std::move(agg));
  }
  return result;
}

// --- emission --------------------------------------------------------------------

double round4(double x) {
  if (!std::isfinite(x)) return x;
  return std::strtod(format_g4(x).c_str(), nullptr);
}

namespace {

ordered_json json_opt(const std::optional<double>& v) {
  if (!v) return nullptr;
  return round4(*v);
}

ordered_json json_region(const Region& region) {
  ordered_json j;
  j["lower"] = ordered_json::array();
  j["upper"] = ordered_json::array();
  for (double v : region.lower) j["lower"].push_back(round4(v));
  for (double v : region.upper) j["upper"].push_back(round4(v));
  return j;
}

}  // namespace

void write_ndjson(const std::vector<RunRecord>& records,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("write_ndjson: cannot open " + path);
  for (const RunRecord& rec : records) {
    ordered_json j;
    j["method"] = rec.method;
    j["replicate"] = rec.replicate;
    j["params"] = ordered_json::object();
    for (const auto& [k, v] : rec.params) j["params"][k] = v;
    j["failed"] = rec.failed;
    j["error"] = rec.error;
    if (rec.failed) {
      j["region"] = nullptr;
      j["beta"] = nullptr;
      j["converged"] = nullptr;
      j["train_epe"] = nullptr;
      j["n_in_region"] = nullptr;
      j["size_fraction"] = nullptr;
    } else {
      j["region"] = json_region(rec.region);
      j["beta"] = ordered_json::array();
      for (double b : rec.beta) j["beta"].push_back(round4(b));
      j["converged"] = rec.converged;
      j["train_epe"] = round4(rec.train_epe);
      j["n_in_region"] = rec.n_in_region;
      j["size_fraction"] = round4(rec.size_fraction);
    }
    j["test_epe"] = json_opt(rec.test_epe);
    j["test_c_index"] = json_opt(rec.test_c_index);
    j["test_rej10"] = json_opt(rec.test_rej10);
    j["precision"] = json_opt(rec.precision);
    j["recall"] = json_opt(rec.recall);
    j["f1"] = json_opt(rec.f1);
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write_ndjson: write failed for " + path);
}

void write_summary_csv(const std::vector<MethodAggregate>& summary,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("write_summary_csv: cannot open " + path);
  out << "method,replicates";
  for (const char* f : {"train_epe", "test_epe", "test_c_index", "test_rej10",
                        "size_fraction", "precision", "recall", "f1"})
    out << ',' << f << "_mean," << f << "_se";
  out << '\n';
  const auto emit = [&](const Stat& s) {
    if (s.n == 0) {
      out << ",,";
      return;
    }
    out << ',' << format_g4(s.mean) << ',' << format_g4(s.se);
  };
  for (const MethodAggregate& agg : summary) {
    out << agg.method << ',' << agg.replicates;
    emit(agg.train_epe);
    emit(agg.test_epe);
    emit(agg.test_c_index);
    emit(agg.test_rej10);
    emit(agg.size_fraction);
    emit(agg.precision);
    emit(agg.recall);
    emit(agg.f1);
    out << '\n';
  }
  if (!out)
    throw std::runtime_error("write_summary_csv: write failed for " + path);
}

void write_model_json(const ModelFile& model, const std::string& path) {
  ordered_json j;
  j["region"]["lower"] = model.region.lower;
  j["region"]["upper"] = model.region.upper;
  j["beta"] = model.beta;
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("write_model_json: cannot open " + path);
  out << j.dump(2) << '\n';
  if (!out)
    throw std::runtime_error("write_model_json: write failed for " + path);
}

ModelFile read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("read_model_json: cannot open " + path);
  ordered_json j;
  in >> j;
  ModelFile model;
  model.region.lower = j.at("region").at("lower").get<std::vector<double>>();
  model.region.upper = j.at("region").at("upper").get<std::vector<double>>();
  model.beta = j.at("beta").get<std::vector<double>>();
  if (model.region.lower.size() != model.region.upper.size())
    throw std::invalid_argument("read_model_json: ragged region in " + path);
  return model;
}

}  // namespace coxsg
