// End-to-end tests for the coxsg command line tool.  Each case shells out to
// the real binary (path injected by the build as COXSG_CLI_PATH) and checks
// exit codes and emitted files.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "coxsg/harness.hpp"
#include "coxsg/synth.hpp"

using namespace coxsg;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir() {
  static const std::string dir = [] {
    const fs::path p = fs::temp_directory_path() / "coxsg_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
  }();
  return dir;
}

std::string tmp_path(const std::string& name) { return tmp_dir() + "/" + name; }

// Runs the CLI with the given arguments, captures stdout+stderr into `log`,
// and returns the process exit code (-1 if it did not exit normally).
int run_cli(const std::string& args, std::string* log = nullptr) {
  static int counter = 0;
  const std::string log_path =
      tmp_path("log_" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string("\"") + COXSG_CLI_PATH + "\" " + args +
                          " > \"" + log_path + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  if (log != nullptr) {
    std::ifstream in(log_path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    *log = ss.str();
  }
  if (!WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

bool data_equal(const SurvivalDataset& a, const SurvivalDataset& b) {
  if (a.size() != b.size() || a.d_adjust() != b.d_adjust() ||
      a.d_subgp() != b.d_subgp())
    return false;
  if (a.times != b.times || a.events != b.events) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.d_subgp(); ++j)
      if (a.x_subgp(i, j) != b.x_subgp(i, j)) return false;
  return true;
}

}  // namespace

TEST_CASE("cli rejects empty and malformed invocations") {
  CHECK(run_cli("") != 0);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("frobnicate") != 0);
  CHECK(run_cli("gen --out " + tmp_path("x.csv")) != 0);  // --dataset required

  std::string log;
  CHECK(run_cli("sweep --dataset counter:n=50 --methods nope --out " +
                    tmp_path("bad_sweep"),
                &log) != 0);
  CHECK(log.find("unknown method") != std::string::npos);

  CHECK(run_cli("gen --dataset counter:q=3 --out " + tmp_path("x.csv"), &log) !=
        0);
  CHECK(log.find("unknown key") != std::string::npos);

  CHECK(run_cli("discover --dataset " + tmp_path("does_not_exist.csv") +
                " --subgroup-cols x1") != 0);
}

TEST_CASE("gen writes a loadable dataset with its truth sidecar") {
  const std::string csv = tmp_path("counter.csv");
  std::string log;
  REQUIRE(run_cli("gen --dataset counter:n=150,seed=3 --out " + csv, &log) == 0);
  CHECK(log.find("wrote 150 rows") != std::string::npos);

  const SurvivalDataset back = load_csv(csv, "time", "event", {"x1"}, {"x1"});
  const SyntheticData direct = gen_counter(150, 10.0, 2.0, 0.4, 3);
  CHECK(data_equal(back, direct.data));

  REQUIRE(fs::exists(csv + ".truth"));
  const Region truth = load_truth_region(csv + ".truth");
  CHECK(truth.lower == direct.truth.lower);
  CHECK(truth.upper == direct.truth.upper);
}

TEST_CASE("discover, model file and evaluate form a round trip") {
  const std::string model = tmp_path("model.json");

  SUBCASE("base region is the exact bounding box") {
    REQUIRE(run_cli("discover --dataset counter:n=150,seed=3 --methods base "
                    "--out " +
                    model) == 0);
    const ModelFile m = read_model_json(model);
    const SyntheticData direct = gen_counter(150, 10.0, 2.0, 0.4, 3);
    const Region bb = direct.data.bounding_box();
    CHECK(m.region.lower == bb.lower);
    CHECK(m.region.upper == bb.upper);
    REQUIRE(m.beta.size() == 1);
  }

  SUBCASE("default ddgroup discovery feeds evaluate") {
    std::string log;
    REQUIRE(run_cli("discover --dataset nonlinear:n=250,seed=5 --param "
                    "core_frac=0.1 --param rej_quantile=0.2 --out " +
                        model,
                    &log) == 0);
    CHECK(log.find("\"failed\": false") != std::string::npos);
    CHECK(log.find("\"f1\"") != std::string::npos);  // generator truth applied
    const ModelFile m = read_model_json(model);
    REQUIRE(m.region.dim() == 2);
    REQUIRE(m.beta.size() == 2);

    const std::string eval = tmp_path("eval.json");
    REQUIRE(run_cli("evaluate --dataset nonlinear:n=250,seed=5 --model " +
                    model + " --out " + eval) == 0);
    const nlohmann::json j = nlohmann::json::parse(read_file(eval));
    CHECK(j.at("n").get<std::size_t>() == 250);
    CHECK(j.at("n_in_region").get<std::size_t>() >= 2);
    CHECK(j.at("size_fraction").get<double>() > 0.0);
    CHECK(j.at("epe").is_number());
    CHECK(j.at("c_index").is_number());
  }

  SUBCASE("evaluate rejects dimension mismatches") {
    std::ofstream out(model);
    out << R"({"region":{"lower":[0,0,0],"upper":[1,1,1]},"beta":[0,0,0]})";
    out.close();
    std::string log;
    CHECK(run_cli("evaluate --dataset counter:n=50 --model " + model, &log) !=
          0);
    CHECK(log.find("dimension mismatch") != std::string::npos);
  }

  SUBCASE("bad --param values are rejected") {
    CHECK(run_cli("discover --dataset counter:n=50 --param core_frac") != 0);
    CHECK(run_cli("discover --dataset counter:n=50 --param core_frac=zz") != 0);
  }
}

TEST_CASE("a failing method surfaces as a failed record and exit 1") {
  const std::string csv = tmp_path("tied.csv");
  std::ofstream out(csv);
  out << "x1,time,event\n";
  for (int i = 1; i <= 6; ++i) out << i << ",1.0,1\n";
  out.close();

  std::string log;
  CHECK(run_cli("discover --dataset " + csv + " --subgroup-cols x1 "
                "--methods base",
                &log) == 1);
  CHECK(log.find("\"failed\": true") != std::string::npos);
}

TEST_CASE("sweep emits selected records and a summary") {
  const std::string dir = tmp_path("sweep_out");
  std::string log;
  REQUIRE(run_cli("sweep --dataset counter:n=150,seed=3 --methods base,random "
                  "--replicates 2 --seed 11 --out " +
                      dir,
                  &log) == 0);
  CHECK(log.find("wrote") != std::string::npos);

  const std::string nd = read_file(dir + "/results.ndjson");
  CHECK(count_lines(nd) == 4);  // 2 methods x 2 replicates, all eligible
  const std::string summary = read_file(dir + "/summary.csv");
  CHECK(count_lines(summary) == 3);  // header + one row per method
  CHECK(summary.find("base,2,") != std::string::npos);
  CHECK(summary.find("random,2,") != std::string::npos);

  // Every emitted line parses as a json object with the selected fields.
  std::istringstream lines(nd);
  std::string line;
  while (std::getline(lines, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    CHECK_FALSE(j.at("failed").get<bool>());
    CHECK(j.at("f1").is_number());  // counter data carries a truth region
  }
}

TEST_CASE("a config file reproduces the flag run byte for byte") {
  const std::string dir_flags = tmp_path("cfg_flags");
  const std::string dir_file = tmp_path("cfg_file");
  REQUIRE(run_cli("sweep --dataset counter:n=120,seed=7 --methods base,random "
                  "--replicates 2 --seed 4 --out " +
                  dir_flags) == 0);

  const std::string cfg = tmp_path("sweep.cfg");
  std::ofstream out(cfg);
  // Comma-bearing values need quotes: the INI reader otherwise splits them.
  out << "[sweep]\n"
      << "dataset=\"counter:n=120,seed=7\"\n"
      << "methods=base,random\n"
      << "replicates=2\n"
      << "seed=4\n"
      << "out=" << dir_file << "\n";
  out.close();
  REQUIRE(run_cli("sweep --config " + cfg) == 0);

  const std::string a = read_file(dir_flags + "/results.ndjson");
  CHECK_FALSE(a.empty());
  CHECK(a == read_file(dir_file + "/results.ndjson"));
  CHECK(read_file(dir_flags + "/summary.csv") ==
        read_file(dir_file + "/summary.csv"));

  SUBCASE("command-line flags override the file") {
    const std::string dir_mix = tmp_path("cfg_mixed");
    const std::string cfg2 = tmp_path("sweep2.cfg");
    std::ofstream out2(cfg2);
    out2 << "[sweep]\n"
         << "dataset=\"counter:n=120,seed=7\"\n"
         << "methods=base,random\n"
         << "replicates=2\n"
         << "seed=999\n"
         << "out=" << dir_mix << "\n";
    out2.close();
    REQUIRE(run_cli("sweep --config " + cfg2 + " --seed 4") == 0);
    CHECK(read_file(dir_mix + "/results.ndjson") == a);
  }
}
