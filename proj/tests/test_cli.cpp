#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rnml/rnml.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("rnml_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out_path = work_dir() / ("out" + std::to_string(counter) + ".txt");
  const fs::path err_path = work_dir() / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string(RNML_CLI_PATH) + " " + args + " > " + out_path.string() +
                          " 2> " + err_path.string();
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

fs::path six_point_data() {
  const fs::path p = work_dir() / "six.csv";
  spit(p, "-5\n-5.2\n-4.8\n5\n5.2\n4.8\n");
  return p;
}

fs::path six_point_labels() {
  const fs::path p = work_dir() / "six_labels.csv";
  spit(p, "1\n1\n1\n2\n2\n2\n");
  return p;
}

rnml::Matrix six_point_matrix() {
  rnml::Matrix data(6, 1);
  data << -5.0, -5.2, -4.8, 5.0, 5.2, 4.8;
  return data;
}

std::string tiny_config_json(bool with_seed) {
  nlohmann::ordered_json j;
  j["dims"] = {1};
  j["true_ks"] = {2};
  j["sample_sizes"] = {40, 80};
  j["trials"] = 2;
  j["restarts"] = 3;
  j["separation"] = 8.0;
  if (with_seed) j["seed"] = 9;
  j["k_min"] = 1;
  j["k_max"] = 3;
  j["thetas"] = {1e2, 1e4};
  return j.dump(2) + "\n";
}

}  // namespace

TEST_CASE("codelength gamma calibration point prints zero") {
  const fs::path data = work_dir() / "one.csv";
  spit(data, "1\n");
  auto r = run_cli("codelength --family gamma --k 1 --theta-min 1 --theta-max 2.718281828 --data " +
                   data.string());
  REQUIRE(r.status == 0);
  const double v = std::stod(r.out);
  // The band ratio on the command line carries nine decimals of e, so the
  // printed value may sit within rounding of zero rather than at it.
  CHECK(std::abs(v) <= 5e-9);
}

TEST_CASE("codelength gaussian matches the library digit for digit") {
  const fs::path data = work_dir() / "pair.csv";
  spit(data, "0\n2\n");
  auto r = run_cli("codelength --family gaussian --mean-sq-bound 1 --eigen-floor 1 --data " +
                   data.string());
  REQUIRE(r.status == 0);
  rnml::Matrix mat(2, 1);
  mat << 0.0, 2.0;
  const double expect = rnml::gaussian_nml_codelength(mat, rnml::DomainParams{1.0, rnml::Vector::Constant(1, 1.0)});
  CHECK(r.out == rnml::format_g9(expect) + "\n");

  auto rb = run_cli("codelength --family gaussian --mean-sq-bound 1 --eigen-floor 1 --bits --data " +
                    data.string());
  REQUIRE(rb.status == 0);
  CHECK(rb.out == rnml::format_g9(expect / std::log(2.0)) + "\n");
}

TEST_CASE("codelength logistic matches the library digit for digit") {
  const fs::path data = work_dir() / "zero.csv";
  spit(data, "0\n");
  auto r = run_cli("codelength --family logistic --theta-bound 2 --data " + data.string());
  REQUIRE(r.status == 0);
  rnml::LogisticModel model(2.0);
  std::vector<double> xs{0.0};
  CHECK(r.out == rnml::format_g9(rnml::nml_codelength(model, std::span<const double>(xs))) + "\n");
}

TEST_CASE("codelength mixture families match the library digit for digit") {
  const std::string data = six_point_data().string();
  const std::string labels = six_point_labels().string();
  rnml::Matrix mat = six_point_matrix();
  rnml::ClusterAssignment z{1, 1, 1, 2, 2, 2};

  auto rn = run_cli("codelength --family gmm-rnml --clusters 2 --data " + data + " --labels " + labels);
  REQUIRE(rn.status == 0);
  CHECK(rn.out == rnml::format_g9(rnml::gmm_rnml_codelength(mat, z, 2, rnml::HyperParams{})) + "\n");

  auto nm = run_cli("codelength --family gmm-nml --clusters 2 --mean-sq-bound 30 --eigen-floor 0.01 --data " +
                    data + " --labels " + labels);
  REQUIRE(nm.status == 0);
  CHECK(nm.out ==
        rnml::format_g9(rnml::gmm_nml_codelength(mat, z, 2,
                                                 rnml::DomainParams{30.0, rnml::Vector::Constant(1, 0.01)})) +
            "\n");
}

TEST_CASE("codelength reports file and domain failures distinctly") {
  auto missing = run_cli("codelength --family gamma --theta-min 1 --theta-max 2 --data " +
                         (work_dir() / "no_such_file.csv").string());
  CHECK(missing.status == 2);
  CHECK(missing.out.empty());

  const fs::path data = work_dir() / "one_b.csv";
  spit(data, "1\n");
  auto out_of_band = run_cli("codelength --family gamma --theta-min 2 --theta-max 3 --data " +
                             data.string());
  CHECK(out_of_band.status == 3);
  CHECK(out_of_band.out.empty());

  auto bad_family = run_cli("codelength --family cauchy --data " + data.string());
  CHECK(bad_family.status == 3);
}

TEST_CASE("usage errors exit with status one") {
  CHECK(run_cli("codelength").status == 1);
  CHECK(run_cli("no-such-command").status == 1);
  CHECK(run_cli("codelength --family gamma --data x --frobnicate").status == 1);
  const fs::path data = work_dir() / "one_c.csv";
  spit(data, "1\n2\n3\n4\n5\n6\n");
  // --seed is mandatory for the stochastic commands.
  CHECK(run_cli("cluster --clusters 2 --data " + data.string()).status == 1);
  CHECK(run_cli("select-k --k-max 2 --data " + data.string()).status == 1);
  CHECK(run_cli("--help").status == 0);
}

TEST_CASE("cluster matches a seeded library fit and writes labels") {
  const fs::path data = work_dir() / "blobs.csv";
  {
    rnml::Rng rng(303);
    std::ostringstream os;
    rnml::Matrix mat(30, 1);
    for (int i = 0; i < 30; ++i) {
      mat(i, 0) = (i < 15 ? 0.0 : 20.0) + rng.normal();
      os << rnml::format_g17(mat(i, 0)) << "\n";
    }
    spit(data, os.str());
    const fs::path labels_out = work_dir() / "labels_out.csv";
    auto r = run_cli("cluster --clusters 2 --seed 7 --data " + data.string() + " --labels-out " +
                     labels_out.string());
    REQUIRE(r.status == 0);
    rnml::Matrix parsed = rnml::read_matrix_csv(data.string());
    rnml::EmConfig cfg;
    cfg.seed = 7;
    auto fit = rnml::em_fit(parsed, 2, cfg);
    CHECK(r.out == rnml::format_g9(fit.complete_log_likelihood) + "\n");
    CHECK(rnml::read_labels_csv(labels_out.string()) == fit.labels);
    // Same invocation, same bytes.
    auto again = run_cli("cluster --clusters 2 --seed 7 --data " + data.string());
    CHECK(again.out == r.out);
  }
}

TEST_CASE("cluster refuses an infeasible request with status four") {
  const fs::path data = work_dir() / "short.csv";
  spit(data, "0,0\n1,0\n0,1\n5,5\n6,5\n");
  auto r = run_cli("cluster --clusters 4 --seed 1 --data " + data.string());
  CHECK(r.status == 4);
}

TEST_CASE("select-k prints one decision per criterion and writes artifacts") {
  const std::string data = six_point_data().string();
  const fs::path report = work_dir() / "report.csv";
  const fs::path manifest = work_dir() / "manifest.json";
  auto r = run_cli("select-k --k-min 1 --k-max 3 --seed 7 --restarts 8 --data " + data +
                   " --report " + report.string() + " --manifest " + manifest.string());
  REQUIRE(r.status == 0);

  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::string> names;
  while (std::getline(lines, line)) {
    auto sp = line.find(' ');
    REQUIRE(sp != std::string::npos);
    names.push_back(line.substr(0, sp));
    const int k = std::stoi(line.substr(sp + 1));
    CHECK(k >= 1);
    CHECK(k <= 3);
  }
  CHECK(names == std::vector<std::string>{"rnml", "nml", "aic", "bic"});

  std::istringstream rep(slurp(report));
  REQUIRE(std::getline(rep, line));
  CHECK(line == "K,criterion,score,chosen");
  int rows = 0;
  while (std::getline(rep, line)) ++rows;
  CHECK(rows == 12);

  auto man = nlohmann::json::parse(slurp(manifest));
  CHECK(man.at("command") == "select-k");
  CHECK(man.at("seed") == 7);
  CHECK(man.at("config").at("k_max") == 3);

  // Identical seeds give identical bytes.
  auto again = run_cli("select-k --k-min 1 --k-max 3 --seed 7 --restarts 8 --data " + data);
  CHECK(again.out == r.out);
}

TEST_CASE("sweep writes its tables and is reproducible across jobs") {
  const fs::path cfg = work_dir() / "sweep_config.json";
  spit(cfg, tiny_config_json(true));
  const fs::path out1 = work_dir() / "sweep1";
  const fs::path out2 = work_dir() / "sweep2";
  const fs::path out3 = work_dir() / "sweep3";
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --out " + out1.string()).status == 0);
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --out " + out2.string()).status == 0);
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --out " + out3.string() + " --jobs 2").status == 0);
  CHECK(fs::exists(out1 / "accuracy.csv"));
  CHECK(fs::exists(out1 / "least_n.csv"));
  CHECK(fs::exists(out1 / "manifest.json"));
  CHECK(slurp(out1 / "accuracy.csv") == slurp(out2 / "accuracy.csv"));
  CHECK(slurp(out1 / "accuracy.csv") == slurp(out3 / "accuracy.csv"));
  CHECK(slurp(out1 / "least_n.csv") == slurp(out2 / "least_n.csv"));
  CHECK(slurp(out1 / "least_n.csv") == slurp(out3 / "least_n.csv"));
  auto man = nlohmann::json::parse(slurp(out1 / "manifest.json"));
  CHECK(man.at("command") == "sweep");
  CHECK(man.at("seed") == 9);
}

TEST_CASE("sweep accepts a command line seed when the config has none") {
  const fs::path cfg = work_dir() / "sweep_config_noseed.json";
  spit(cfg, tiny_config_json(false));
  const fs::path out = work_dir() / "sweep_noseed";
  // Without any seed the run must be refused rather than silently defaulted.
  CHECK(run_cli("sweep --config " + cfg.string() + " --out " + out.string()).status == 2);
  CHECK(run_cli("sweep --config " + cfg.string() + " --out " + out.string() + " --seed 9").status == 0);
  CHECK(fs::exists(out / "accuracy.csv"));
}

TEST_CASE("sweep rejects a config with unknown keys") {
  const fs::path cfg = work_dir() / "bad_config.json";
  spit(cfg, "{\"seed\": 1, \"bogus\": true}\n");
  const fs::path out = work_dir() / "bad_out";
  auto r = run_cli("sweep --config " + cfg.string() + " --out " + out.string());
  CHECK(r.status == 2);
  CHECK_FALSE(fs::exists(out / "accuracy.csv"));
}

TEST_CASE("theta-sweep writes its table and is reproducible across jobs") {
  const fs::path cfg = work_dir() / "theta_config.json";
  spit(cfg, tiny_config_json(true));
  const fs::path out1 = work_dir() / "theta1";
  const fs::path out2 = work_dir() / "theta2";
  REQUIRE(run_cli("theta-sweep --config " + cfg.string() + " --out " + out1.string()).status == 0);
  REQUIRE(run_cli("theta-sweep --config " + cfg.string() + " --out " + out2.string() + " --jobs 2").status == 0);
  const std::string table = slurp(out1 / "theta_sweep.csv");
  CHECK(table.substr(0, table.find('\n')) == "theta,criterion,least_n");
  CHECK(table == slurp(out2 / "theta_sweep.csv"));
  auto man = nlohmann::json::parse(slurp(out1 / "manifest.json"));
  CHECK(man.at("command") == "theta-sweep");
}
