// Command line front end. Subcommands:
//   codelength   exact NML / RNML code-length of a data set (optionally with labels)
//   cluster      one seeded EM clustering at a fixed K
//   select-k     criterion comparison over a range of cluster counts
//   sweep        accuracy and least-n experiment over a (dim, K, n) grid
//   theta-sweep  hyperparameter sensitivity experiment
//
// Exit status: 0 success, 1 usage error, 2 unreadable or invalid input file,
// 3 domain or precondition violation, 4 infeasible request, 5 internal error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rnml/rnml.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitFile = 2;
constexpr int kExitDomain = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitInternal = 5;

double to_output_units(double nats, bool bits) { return bits ? nats / std::log(2.0) : nats; }

std::vector<double> column_of(const rnml::Matrix& data) {
  if (data.cols() != 1) throw rnml::DomainError("this family expects one-column data");
  std::vector<double> xs(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) xs[static_cast<std::size_t>(i)] = data(i, 0);
  return xs;
}

rnml::Vector expand_floor(const std::vector<double>& floors, int dim) {
  if (floors.empty()) throw rnml::DomainError("--eigen-floor is required for this family");
  if (floors.size() == 1) return rnml::Vector::Constant(dim, floors[0]);
  if (static_cast<int>(floors.size()) != dim)
    throw rnml::DomainError("--eigen-floor needs one value or one value per dimension");
  rnml::Vector v(dim);
  for (int j = 0; j < dim; ++j) v(j) = floors[static_cast<std::size_t>(j)];
  return v;
}

std::vector<rnml::Criterion> parse_criteria(const std::vector<std::string>& names) {
  std::vector<rnml::Criterion> out;
  for (const std::string& s : names) {
    auto c = rnml::criterion_from_name(s);
    if (!c) throw rnml::DomainError("unknown criterion '" + s + "'");
    out.push_back(*c);
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw rnml::ParseError("cannot open '" + path + "' for writing");
  out << content;
}

nlohmann::ordered_json em_json(const rnml::EmConfig& em) {
  return {{"max_iter", em.max_iter}, {"tol", em.tol}, {"n_restarts", em.n_restarts}, {"reg_eps", em.reg_eps}};
}

struct CodelengthArgs {
  std::string family;
  std::string data_path;
  std::string labels_path;
  bool header = false;
  bool bits = false;
  double shape = 1.0;
  double theta_min = 0.0;
  double theta_max = 0.0;
  double theta_bound = 0.0;
  double mean_sq_bound = 0.0;
  std::vector<double> eigen_floor;
  int clusters = 0;
  rnml::HyperParams hyper;
  int min_points = 0;
};

int run_codelength(const CodelengthArgs& a) {
  rnml::Matrix data = rnml::read_matrix_csv(a.data_path, a.header);
  const int m = static_cast<int>(data.cols());
  double nats = 0.0;
  if (a.family == "gamma") {
    rnml::GammaModel model(a.shape, a.theta_min, a.theta_max);
    auto xs = column_of(data);
    nats = rnml::nml_codelength(model, std::span<const double>(xs));
  } else if (a.family == "logistic") {
    rnml::LogisticModel model(a.theta_bound);
    auto xs = column_of(data);
    nats = rnml::nml_codelength(model, std::span<const double>(xs));
  } else if (a.family == "gaussian") {
    rnml::DomainParams dp{a.mean_sq_bound, expand_floor(a.eigen_floor, m)};
    nats = rnml::gaussian_nml_codelength(data, dp);
  } else if (a.family == "gmm-nml" || a.family == "gmm-rnml") {
    if (a.labels_path.empty()) throw rnml::DomainError("--labels is required for mixture families");
    if (a.clusters < 1) throw rnml::DomainError("--clusters is required for mixture families");
    rnml::ClusterAssignment z = rnml::read_labels_csv(a.labels_path, a.header);
    if (a.family == "gmm-nml") {
      rnml::DomainParams dp{a.mean_sq_bound, expand_floor(a.eigen_floor, m)};
      nats = rnml::gmm_nml_codelength(data, z, a.clusters, dp);
    } else {
      nats = rnml::gmm_rnml_codelength(data, z, a.clusters, a.hyper, a.min_points);
    }
  } else {
    throw rnml::DomainError("unknown family '" + a.family + "'");
  }
  std::printf("%s\n", rnml::format_g9(to_output_units(nats, a.bits)).c_str());
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Exact minimum description length model selection for exponential families and Gaussian mixtures"};
  app.require_subcommand(1);
  app.footer(
      "Exit status: 0 success, 1 usage error, 2 unreadable or invalid input file,\n"
      "3 domain or precondition violation, 4 infeasible request, 5 internal error.");

  // codelength
  CodelengthArgs ca;
  auto* code = app.add_subcommand("codelength", "Code-length of a data set under one model family");
  code->add_option("--family", ca.family, "gamma | logistic | gaussian | gmm-nml | gmm-rnml")->required();
  code->add_option("--data", ca.data_path, "CSV of observations, rows are points")->required();
  code->add_option("--labels", ca.labels_path, "CSV of cluster labels in 1..K (mixture families)");
  code->add_flag("--header", ca.header, "skip one header row in input CSVs");
  code->add_flag("--bits", ca.bits, "report bits instead of nats");
  code->add_option("--k,--shape", ca.shape, "gamma: known shape parameter");
  code->add_option("--theta-min", ca.theta_min, "gamma: lower scale bound");
  code->add_option("--theta-max", ca.theta_max, "gamma: upper scale bound");
  code->add_option("--theta-bound", ca.theta_bound, "logistic: upper bound on the MLE");
  code->add_option("--mean-sq-bound", ca.mean_sq_bound, "gaussian, gmm-nml: bound on the squared mean norm");
  code->add_option("--eigen-floor", ca.eigen_floor, "gaussian, gmm-nml: eigenvalue floor(s)")->delimiter(',');
  code->add_option("--clusters", ca.clusters, "mixture families: number of clusters K");
  code->add_option("--lambda-lo", ca.hyper.eigen_lo, "gmm-rnml: eigenvalue box lower end");
  code->add_option("--lambda-hi", ca.hyper.eigen_hi, "gmm-rnml: eigenvalue box upper end");
  code->add_option("--mean-sq-lo", ca.hyper.mean_sq_lo, "gmm-rnml: mean norm box lower end");
  code->add_option("--mean-sq-hi", ca.hyper.mean_sq_hi, "gmm-rnml: mean norm box upper end");
  code->add_option("--min-points", ca.min_points, "gmm-rnml: smallest encodable cluster (default dim+1)");

  // cluster
  std::string cl_data, cl_labels_out;
  bool cl_header = false;
  int cl_k = 0;
  rnml::EmConfig cl_em;
  std::optional<std::uint64_t> cl_seed;
  auto* cluster = app.add_subcommand("cluster", "Seeded EM clustering at a fixed K");
  cluster->add_option("--data", cl_data, "CSV of observations")->required();
  cluster->add_flag("--header", cl_header, "skip one header row");
  cluster->add_option("--clusters", cl_k, "number of clusters K")->required();
  cluster->add_option("--seed", cl_seed, "RNG seed (required; there is no silent default)")->required();
  cluster->add_option("--max-iter", cl_em.max_iter, "EM iteration cap");
  cluster->add_option("--tol", cl_em.tol, "relative log-likelihood improvement threshold");
  cluster->add_option("--reg-eps", cl_em.reg_eps, "covariance ridge scale");
  cluster->add_option("--labels-out", cl_labels_out, "write the hard assignment to this CSV");

  // select-k
  std::string sk_data, sk_report, sk_manifest;
  bool sk_header = false, sk_std_bic = false, sk_bits = false;
  int sk_kmin = 1, sk_kmax = 0, sk_minpts = 0;
  rnml::EmConfig sk_em;
  std::optional<std::uint64_t> sk_seed;
  std::vector<std::string> sk_crit_names{"rnml", "nml", "aic", "bic"};
  rnml::HyperParams sk_hyper;
  double sk_mean_sq_bound = 1e4;
  std::vector<double> sk_floor;
  auto* selk = app.add_subcommand("select-k", "Choose the cluster count under several criteria");
  selk->add_option("--data", sk_data, "CSV of observations")->required();
  selk->add_flag("--header", sk_header, "skip one header row");
  selk->add_option("--k-min", sk_kmin, "smallest candidate K");
  selk->add_option("--k-max", sk_kmax, "largest candidate K")->required();
  selk->add_option("--criteria", sk_crit_names, "subset of rnml,nml,aic,bic")->delimiter(',');
  selk->add_option("--seed", sk_seed, "RNG seed (required; there is no silent default)")->required();
  selk->add_option("--restarts", sk_em.n_restarts, "EM restarts per candidate K");
  selk->add_option("--max-iter", sk_em.max_iter, "EM iteration cap");
  selk->add_option("--tol", sk_em.tol, "relative log-likelihood improvement threshold");
  selk->add_option("--reg-eps", sk_em.reg_eps, "covariance ridge scale");
  selk->add_option("--lambda-lo", sk_hyper.eigen_lo, "RNML eigenvalue box lower end");
  selk->add_option("--lambda-hi", sk_hyper.eigen_hi, "RNML eigenvalue box upper end");
  selk->add_option("--mean-sq-lo", sk_hyper.mean_sq_lo, "RNML mean norm box lower end");
  selk->add_option("--mean-sq-hi", sk_hyper.mean_sq_hi, "RNML mean norm box upper end");
  selk->add_option("--mean-sq-bound", sk_mean_sq_bound, "NML bound on the squared mean norm");
  selk->add_option("--eigen-floor", sk_floor, "NML eigenvalue floor(s); default theta^(-1/m) with theta = bound")
      ->delimiter(',');
  selk->add_option("--min-points", sk_minpts, "smallest encodable RNML cluster (default dim+1)");
  selk->add_flag("--standard-bic", sk_std_bic, "use the textbook BIC penalty");
  selk->add_flag("--bits", sk_bits, "report bits instead of nats");
  selk->add_option("--report", sk_report, "write per-K scores to this CSV");
  selk->add_option("--manifest", sk_manifest, "write a JSON run manifest");

  // sweep / theta-sweep
  std::string sw_config, sw_out;
  int sw_jobs = 1;
  std::optional<std::uint64_t> sw_seed;
  auto* sweep = app.add_subcommand("sweep", "Accuracy and least-n experiment over a grid");
  sweep->add_option("--config", sw_config, "JSON sweep configuration")->required();
  sweep->add_option("--out", sw_out, "output directory")->required();
  sweep->add_option("--jobs", sw_jobs, "worker threads");
  sweep->add_option("--seed", sw_seed, "override the config seed");

  std::string ts_config, ts_out;
  int ts_jobs = 1;
  std::optional<std::uint64_t> ts_seed;
  auto* tsweep = app.add_subcommand("theta-sweep", "Hyperparameter sensitivity experiment");
  tsweep->add_option("--config", ts_config, "JSON sweep configuration")->required();
  tsweep->add_option("--out", ts_out, "output directory")->required();
  tsweep->add_option("--jobs", ts_jobs, "worker threads");
  tsweep->add_option("--seed", ts_seed, "override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (code->parsed()) return run_codelength(ca);

  if (cluster->parsed()) {
    rnml::Matrix data = rnml::read_matrix_csv(cl_data, cl_header);
    cl_em.seed = *cl_seed;
    rnml::ClusteringResult fit = rnml::em_fit(data, cl_k, cl_em);
    if (!cl_labels_out.empty()) {
      std::ostringstream os;
      rnml::write_labels_csv(os, fit.labels);
      write_text_file(cl_labels_out, os.str());
    }
    std::printf("%s\n", rnml::format_g9(fit.complete_log_likelihood).c_str());
    return 0;
  }

  if (selk->parsed()) {
    rnml::Matrix data = rnml::read_matrix_csv(sk_data, sk_header);
    const int m = static_cast<int>(data.cols());
    if (sk_kmax < sk_kmin) throw rnml::DomainError("--k-max must be at least --k-min");
    std::vector<int> k_range;
    for (int k = sk_kmin; k <= sk_kmax; ++k) k_range.push_back(k);
    auto criteria = parse_criteria(sk_crit_names);
    sk_em.seed = *sk_seed;
    rnml::Vector floor = sk_floor.empty()
                             ? rnml::Vector::Constant(m, std::pow(sk_mean_sq_bound, -1.0 / m))
                             : expand_floor(sk_floor, m);
    rnml::DomainParams domain{sk_mean_sq_bound, floor};
    rnml::SelectionReport rep = rnml::select_k(data, k_range, criteria, sk_em, sk_hyper, domain,
                                               nullptr, sk_minpts, sk_std_bic);
    if (sk_bits)
      for (auto& row : rep.scores)
        for (double& v : row) v = to_output_units(v, true);
    for (std::size_t c = 0; c < rep.criteria.size(); ++c)
      std::printf("%s %d\n", rnml::criterion_name(rep.criteria[c]), rep.chosen[c]);
    if (!sk_report.empty()) {
      std::ostringstream os;
      rnml::write_selection_csv(os, rep);
      write_text_file(sk_report, os.str());
    }
    if (!sk_manifest.empty()) {
      nlohmann::ordered_json man;
      man["command"] = "select-k";
      man["version"] = rnml::kVersion;
      man["seed"] = *sk_seed;
      man["config"] = {{"data", sk_data},
                       {"k_min", sk_kmin},
                       {"k_max", sk_kmax},
                       {"criteria", sk_crit_names},
                       {"em", em_json(sk_em)},
                       {"hyper",
                        {{"eigen_lo", sk_hyper.eigen_lo},
                         {"eigen_hi", sk_hyper.eigen_hi},
                         {"mean_sq_lo", sk_hyper.mean_sq_lo},
                         {"mean_sq_hi", sk_hyper.mean_sq_hi}}},
                       {"domain",
                        {{"mean_sq_bound", sk_mean_sq_bound},
                         {"eigen_floor", std::vector<double>(floor.data(), floor.data() + floor.size())}}},
                       {"min_points", sk_minpts},
                       {"standard_bic", sk_std_bic},
                       {"bits", sk_bits}};
      write_text_file(sk_manifest, man.dump(2) + "\n");
    }
    return 0;
  }

  if (sweep->parsed() || tsweep->parsed()) {
    const bool is_theta = tsweep->parsed();
    const std::string& cfg_path = is_theta ? ts_config : sw_config;
    const std::string& out_dir = is_theta ? ts_out : sw_out;
    const int jobs = is_theta ? ts_jobs : sw_jobs;
    const auto& seed_override = is_theta ? ts_seed : sw_seed;

    rnml::SweepConfig config = rnml::sweep_config_from_file(cfg_path);
    if (seed_override) {
      config.seed = *seed_override;
      config.has_seed = true;
    }
    std::filesystem::create_directories(out_dir);
    nlohmann::ordered_json man;
    man["command"] = is_theta ? "theta-sweep" : "sweep";
    man["version"] = rnml::kVersion;
    man["seed"] = config.seed;
    man["jobs"] = jobs;
    man["config"] = rnml::sweep_config_to_json(config);
    if (is_theta) {
      rnml::ThetaSweepResult result = rnml::run_theta_sweep(config, jobs);
      std::ostringstream os;
      rnml::write_theta_csv(os, result);
      write_text_file(out_dir + "/theta_sweep.csv", os.str());
    } else {
      rnml::SweepResult result = rnml::run_sweep(config, jobs);
      std::ostringstream acc, ln;
      rnml::write_accuracy_csv(acc, result);
      rnml::write_least_n_csv(ln, result);
      write_text_file(out_dir + "/accuracy.csv", acc.str());
      write_text_file(out_dir + "/least_n.csv", ln.str());
    }
    write_text_file(out_dir + "/manifest.json", man.dump(2) + "\n");
    return 0;
  }

  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const rnml::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFile;
  } catch (const rnml::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFile;
  } catch (const rnml::InfeasibleError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInfeasible;
  } catch (const rnml::CollapseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInfeasible;
  } catch (const rnml::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDomain;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
}
