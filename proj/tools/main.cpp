// Command-line front end: fom, train, rom and bench subcommands.
#include "polyrom/ecsw.hpp"
#include "polyrom/experiment.hpp"
#include "polyrom/hrf.hpp"
#include "polyrom/io.hpp"
#include "polyrom/metrics.hpp"
#include "polyrom/romref.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace polyrom;

namespace {

struct Options {
  std::string config;
  std::string model;
  std::vector<double> eps_pod;
  std::vector<double> eps_ecsw;
  std::vector<std::string> methods;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> repeats;
  // rom only
  std::string method = "hrf-g";
  std::vector<double> mu;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "built-in config name or JSON config file");
  app->add_option("--model", o.model, "burgers or heat-cubic (selects the matching built-in config)");
  app->add_option("--eps-pod", o.eps_pod, "truncated modal energies")->delimiter(',');
  app->add_option("--eps-ecsw", o.eps_ecsw, "ECSW tolerances")->delimiter(',');
  app->add_option("--methods", o.methods, "methods to run")->delimiter(',');
  app->add_option("--seed", o.seed, "residual snapshot sampling seed");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--repeats", o.repeats, "timing repeats");
}

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig c;
  if (!o.config.empty()) {
    c = load_config(o.config);
  } else if (o.model == "heat-cubic" || o.model == "heat") {
    c = builtin_config("heat-paper");
  } else if (o.model.empty() || o.model == "burgers") {
    c = builtin_config("burgers-paper");
  } else {
    throw std::invalid_argument("unknown model '" + o.model + "' (burgers or heat-cubic)");
  }
  if (!o.model.empty() && !o.config.empty()) c.model = o.model == "heat" ? "heat-cubic" : o.model;
  if (!o.eps_pod.empty()) c.eps_pod = o.eps_pod;
  if (!o.eps_ecsw.empty()) c.eps_ecsw = o.eps_ecsw;
  if (!o.methods.empty()) c.methods = o.methods;
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.repeats) c.repeats = *o.repeats;
  c.validate();
  return c;
}

fs::path cache_of(const ExperimentConfig& c) {
  return c.cache_dir.empty() ? fs::path(c.output_dir) / "cache" : fs::path(c.cache_dir);
}

std::vector<Trajectory> training_runs(const ExperimentConfig& c, const PolynomialSystem& sys,
                                      const MultistepScheme& scheme) {
  std::vector<Trajectory> out;
  for (std::size_t k = 0; k < c.training_mus.size(); ++k) {
    std::cerr << "training run " << k + 1 << "/" << c.training_mus.size() << " mu = "
              << to_string(c.training_mus[k]) << '\n';
    out.push_back(cached_fom_run(sys, scheme, c.newton, c.training_mus[k], c.train_steps, cache_of(c), c.grid));
  }
  return out;
}

std::string eps_tag(double e) {
  std::ostringstream os;
  os << e;
  return os.str();
}

int cmd_fom(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const PolynomialSystem sys = build_model(c.model, c.grid);
  const MultistepScheme scheme = scheme_by_name(c.scheme, c.dt);
  training_runs(c, sys, scheme);
  for (const auto& mu : c.test_mus) {
    std::cerr << "test run mu = " << to_string(mu) << '\n';
    cached_fom_run(sys, scheme, c.newton, mu, c.n_steps, cache_of(c), c.grid);
  }
  std::cout << "trajectories cached in " << cache_of(c).string() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const PolynomialSystem sys = build_model(c.model, c.grid);
  const MultistepScheme scheme = scheme_by_name(c.scheme, c.dt);
  const auto training = training_runs(c, sys, scheme);
  const ReducedBasis full = pod(assemble_snapshots(training, c.include_initial));
  int errors = 0;
  for (double eps : c.eps_pod) {
    const fs::path dir = fs::path(c.output_dir) / "train" / ("eps_pod_" + eps_tag(eps));
    const ReducedBasis basis = select_modes(full, eps);
    write_basis(dir / "basis", basis);
    std::cout << "eps_pod " << eps << ": n = " << basis.n << '\n';
    try {
      write_hrf_galerkin(dir / "hrf-g", precompute_hrf_galerkin(sys, basis));
      write_hrf_lspg(dir / "hrf-lspg", precompute_hrf_lspg(sys, basis));
    } catch (const std::exception& e) {
      std::cerr << "hrf precompute failed: " << e.what() << '\n';
      ++errors;
    }
    const ResidualSnapshotSet snaps =
        collect_residual_snapshots(sys, basis, scheme, training, c.ecsw_snapshots, c.seed);
    for (Projection p : {Projection::Galerkin, Projection::Lspg}) {
      const Matrix factor = compressed_nnls_factor(sys, basis, scheme, snaps, p);
      for (double ee : c.eps_ecsw) {
        try {
          const EcswWeights w = nnls_from_factor(factor, ee);
          write_weights_file(dir / ("ecsw-" + to_string(p) + "_" + eps_tag(ee) + ".txt"), w);
          std::cout << "  ecsw-" << to_string(p) << " eps_ecsw " << ee << ": " << w.size() << " samples\n";
        } catch (const std::exception& e) {
          std::cerr << "nnls failed: " << e.what() << '\n';
          ++errors;
        }
      }
    }
  }
  return errors == 0 ? 0 : 1;
}

int cmd_rom(const Options& o) {
  ExperimentConfig c = resolve(o);
  if (c.eps_pod.size() != 1) c.eps_pod = {c.eps_pod.back()};
  c.methods = {o.method};
  if (!o.mu.empty()) c.test_mus = {ParamVector(o.mu)};
  c.test_mus.resize(1);
  c.repeats = o.repeats.value_or(1);
  const MetricsReport report = run_experiment(c, &std::cerr);
  std::cout << report_csv(report);
  emit_results(report, fs::path(c.output_dir) / "rom");
  return report.has_errors() ? 1 : 0;
}

int cmd_bench(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const MetricsReport report = run_experiment(c, &std::cerr);
  emit_results(report, c.output_dir);
  std::cout << "wrote " << report.rows.size() << " rows to " << c.output_dir << '\n';
  return report.has_errors() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order models of polynomial systems"};
  app.require_subcommand(1);
  Options o;
  auto* fom = app.add_subcommand("fom", "run and cache the training and test FOM trajectories");
  auto* train = app.add_subcommand("train", "POD bases, HRF operators and ECSW weights");
  auto* rom = app.add_subcommand("rom", "one reduced run");
  auto* bench = app.add_subcommand("bench", "full sweep with metrics and figure series");
  for (auto* s : {fom, train, rom, bench}) add_common(s, o);
  rom->add_option("--method", o.method, "method to run");
  rom->add_option("--mu", o.mu, "test parameter")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  try {
    if (fom->parsed()) return cmd_fom(o);
    if (train->parsed()) return cmd_train(o);
    if (rom->parsed()) return cmd_rom(o);
    if (bench->parsed()) return cmd_bench(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
