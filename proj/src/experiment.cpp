#include "polyrom/experiment.hpp"

#include "polyrom/hrf.hpp"
#include "polyrom/io.hpp"
#include "polyrom/metrics.hpp"
#include "polyrom/romref.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace polyrom {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool ends_with(const std::string& s, const std::string& tail) {
  return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

bool lifted_method(const std::string& m) { return ends_with(m, "-lifted"); }

std::string base_method(const std::string& m) {
  return lifted_method(m) ? m.substr(0, m.size() - 7) : m;
}

bool is_reference(const std::string& m) {
  const std::string b = base_method(m);
  return b == "galerkin-rom" || b == "lspg-rom";
}

bool is_ecsw(const std::string& m) { return m == "ecsw-g" || m == "ecsw-lspg"; }

/// Reference method used for the ROM evaluation error, empty when undefined.
std::string reference_for(const std::string& m) {
  const std::string b = base_method(m);
  const std::string suffix = lifted_method(m) ? "-lifted" : "";
  if (b == "hrf-g" || b == "ecsw-g") return "galerkin-rom" + suffix;
  if (b == "hrf-lspg" || b == "ecsw-lspg") return "lspg-rom" + suffix;
  return "";
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ";" : "") + fmt(v[k]);
  return s;
}

std::string fmt_index_list(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ";" : "") + std::to_string(v[k]);
  return s;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& p : split(s, ';')) out.push_back(std::strtod(p.c_str(), nullptr));
  return out;
}

std::vector<Index> parse_index_list(const std::string& s) {
  std::vector<Index> out;
  if (s.empty()) return out;
  for (const auto& p : split(s, ';')) out.push_back(std::stoll(p));
  return out;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::strtod(s.c_str(), nullptr);
}

bool in_unit_interval(double v) { return v > 0.0 && v <= 1.0; }

}  // namespace

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods = {
      "fom",        "galerkin-rom",        "lspg-rom",        "hrf-g",
      "hrf-lspg",   "ecsw-g",              "ecsw-lspg",       "galerkin-rom-lifted",
      "lspg-rom-lifted", "hrf-g-lifted",   "hrf-lspg-lifted"};
  return methods;
}

void ExperimentConfig::validate() const {
  if (model != "burgers" && model != "heat-cubic")
    throw std::invalid_argument("model must be burgers or heat-cubic, got '" + model + "'");
  grid.validate();
  scheme_by_name(scheme, dt).validate();
  if (n_steps < 1 || train_steps < 1) throw std::invalid_argument("step counts must be positive");
  if (methods.empty()) throw std::invalid_argument("method list is empty");
  const auto& known = known_methods();
  bool needs_training = false;
  for (const auto& m : methods) {
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw std::invalid_argument("unknown method '" + m + "'");
    if (lifted_method(m) && model != "heat-cubic")
      throw std::invalid_argument("lifted methods need the heat-cubic model");
    if (m != "fom") needs_training = true;
  }
  if (test_mus.empty()) throw std::invalid_argument("no test parameters");
  if (needs_training && training_mus.empty()) throw std::invalid_argument("no training parameters");
  if (needs_training && eps_pod.empty()) throw std::invalid_argument("eps_pod list is empty");
  for (double e : eps_pod)
    if (!in_unit_interval(e)) throw std::invalid_argument("eps_pod values must lie in (0, 1]");
  for (double e : eps_ecsw)
    if (!in_unit_interval(e)) throw std::invalid_argument("eps_ecsw values must lie in (0, 1]");
  const bool any_ecsw = std::any_of(methods.begin(), methods.end(), is_ecsw);
  if (any_ecsw && (eps_ecsw.empty() || ecsw_snapshots == 0))
    throw std::invalid_argument("ECSW methods need eps_ecsw values and a snapshot count");
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  if (!(newton.tol > 0.0) || !(newton.step_length > 0.0) || newton.max_iter < 1)
    throw std::invalid_argument("invalid Newton settings");
}

ExperimentConfig builtin_config(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "burgers-paper") {
    c.model = "burgers";
    c.grid = {1.0, 1024};
    c.n_steps = 500;
    c.train_steps = 500;
    for (int i = 0; i <= 9; ++i)
      for (int j = 0; j <= 9; ++j) c.training_mus.push_back({1.0 + 0.25 * i, 0.01 + 0.01 * j});
    c.test_mus = {{3.125, 0.0175}, {1.375, 0.0825}};
    c.methods = {"fom", "galerkin-rom", "lspg-rom", "hrf-g", "hrf-lspg", "ecsw-g", "ecsw-lspg"};
    return c;
  }
  if (name == "heat-paper") {
    c.model = "heat-cubic";
    c.grid = {1.0, 1024};
    c.n_steps = 10000;
    c.train_steps = 2000;
    c.training_mus = {{-2.0, 0.0}, {-1.0, -2.0}, {0.0, 1.0}, {1.0, -1.0}, {2.0, 2.0}};
    c.test_mus = {{1.5, 0.5}};
    c.methods = {"fom",       "galerkin-rom", "lspg-rom",  "hrf-g",
                 "hrf-lspg",  "ecsw-g",       "ecsw-lspg", "galerkin-rom-lifted",
                 "lspg-rom-lifted", "hrf-g-lifted", "hrf-lspg-lifted"};
    return c;
  }
  throw std::invalid_argument("unknown built-in config '" + name + "'");
}

namespace {

std::vector<ParamVector> mus_from_json(const json& j) {
  std::vector<ParamVector> out;
  for (const auto& m : j) out.emplace_back(m.get<std::vector<double>>());
  return out;
}

json mus_to_json(const std::vector<ParamVector>& mus) {
  json j = json::array();
  for (const auto& m : mus) j.push_back(m.values());
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  ExperimentConfig c = j.contains("base") ? builtin_config(j["base"].get<std::string>()) : ExperimentConfig{};
  if (j.contains("name")) c.name = j["name"];
  if (j.contains("model")) c.model = j["model"];
  if (j.contains("grid")) {
    c.grid.length = j["grid"].value("length", c.grid.length);
    c.grid.n_points = j["grid"].value("n_points", c.grid.n_points);
  }
  if (j.contains("scheme")) c.scheme = j["scheme"];
  if (j.contains("dt")) c.dt = j["dt"];
  if (j.contains("n_steps")) c.n_steps = j["n_steps"];
  if (j.contains("train_steps")) c.train_steps = j["train_steps"];
  if (j.contains("training_mus")) c.training_mus = mus_from_json(j["training_mus"]);
  if (j.contains("test_mus")) c.test_mus = mus_from_json(j["test_mus"]);
  if (j.contains("eps_pod")) c.eps_pod = j["eps_pod"].get<std::vector<double>>();
  if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
  if (j.contains("eps_ecsw")) c.eps_ecsw = j["eps_ecsw"].get<std::vector<double>>();
  if (j.contains("ecsw_snapshots")) c.ecsw_snapshots = j["ecsw_snapshots"];
  if (j.contains("seed")) c.seed = j["seed"];
  if (j.contains("repeats")) c.repeats = j["repeats"];
  if (j.contains("include_initial")) c.include_initial = j["include_initial"];
  if (j.contains("newton")) {
    c.newton.step_length = j["newton"].value("step_length", c.newton.step_length);
    c.newton.tol = j["newton"].value("tol", c.newton.tol);
    c.newton.max_iter = j["newton"].value("max_iter", c.newton.max_iter);
  }
  if (j.contains("output_dir")) c.output_dir = j["output_dir"];
  if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"];
  return c;
}

std::string config_to_text(const ExperimentConfig& c) {
  json j = {{"name", c.name},
            {"model", c.model},
            {"grid", {{"length", c.grid.length}, {"n_points", c.grid.n_points}}},
            {"scheme", c.scheme},
            {"dt", c.dt},
            {"n_steps", c.n_steps},
            {"train_steps", c.train_steps},
            {"training_mus", mus_to_json(c.training_mus)},
            {"test_mus", mus_to_json(c.test_mus)},
            {"eps_pod", c.eps_pod},
            {"methods", c.methods},
            {"eps_ecsw", c.eps_ecsw},
            {"ecsw_snapshots", c.ecsw_snapshots},
            {"seed", c.seed},
            {"repeats", c.repeats},
            {"include_initial", c.include_initial},
            {"newton",
             {{"step_length", c.newton.step_length}, {"tol", c.newton.tol}, {"max_iter", c.newton.max_iter}}},
            {"output_dir", c.output_dir},
            {"cache_dir", c.cache_dir}};
  return j.dump(2);
}

ExperimentConfig load_config(const std::string& name_or_path) {
  if (name_or_path == "burgers-paper" || name_or_path == "heat-paper") return builtin_config(name_or_path);
  std::ifstream is(name_or_path);
  if (!is) throw std::runtime_error("cannot open config '" + name_or_path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

const MetricsRow* MetricsReport::find(const std::string& method, const ParamVector& mu,
                                      std::optional<double> eps_pod,
                                      std::optional<double> eps_ecsw) const {
  for (const auto& r : rows) {
    if (r.method == method && r.mu == mu && r.eps_pod == eps_pod && r.eps_ecsw == eps_ecsw) return &r;
  }
  return nullptr;
}

const BasisSummary* MetricsReport::basis(const std::string& variant, double eps_pod) const {
  for (const auto& b : bases)
    if (b.variant == variant && b.eps_pod == eps_pod) return &b;
  return nullptr;
}

bool MetricsReport::has_errors() const {
  return std::any_of(rows.begin(), rows.end(), [](const MetricsRow& r) { return r.errored(); });
}

Trajectory cached_fom_run(const PolynomialSystem& sys, const MultistepScheme& scheme,
                          const NewtonSettings& settings, const ParamVector& mu, Index n_steps,
                          const fs::path& cache_dir, const GridSpec& grid) {
  std::ostringstream key;
  key << sys.name << "_N" << grid.n_points << "_L" << fmt(grid.length) << "_dt" << fmt(scheme.dt) << "_"
      << scheme.name << "_s" << n_steps << "_tol" << fmt(settings.tol) << "_mu";
  for (double v : mu.values()) key << "_" << fmt(v);
  const fs::path stem = cache_dir / key.str();
  if (fs::exists(fs::path(stem.string() + ".bin")) && fs::exists(fs::path(stem.string() + ".json"))) {
    try {
      Trajectory t = read_trajectory(stem);
      if (t.mu == mu && t.steps() == n_steps && t.states.rows() == sys.dim_state && t.model == sys.name)
        return t;
    } catch (const std::exception&) {
      // Unreadable cache entries are recomputed.
    }
  }
  Trajectory t = integrate_fom(sys, scheme, settings, mu, n_steps);
  write_trajectory(stem, t);
  return t;
}

namespace {

struct TestCase {
  ParamVector mu;
  Trajectory fom;
  TimingSamples timing;
  std::string status = "converged";
};

struct Variant {
  const PolynomialSystem* sys;
  ReducedBasis basis;
  Matrix phi_q;  // basis rows of the original variable
};

class Sweep {
 public:
  Sweep(const ExperimentConfig& cfg, std::ostream* log) : cfg_(cfg), log_(log) {}

  MetricsReport run() {
    cfg_.validate();
    report_.config_name = cfg_.name;
    sys_ = build_model(cfg_.model, cfg_.grid);
    scheme_ = scheme_by_name(cfg_.scheme, cfg_.dt);
    const bool want_lifted = std::any_of(cfg_.methods.begin(), cfg_.methods.end(), lifted_method);
    if (want_lifted) lifted_ = build_heat_lifted(cfg_.grid).first;

    run_test_foms();
    const bool roms = std::any_of(cfg_.methods.begin(), cfg_.methods.end(),
                                  [](const std::string& m) { return m != "fom"; });
    if (!roms) return report_;

    train();
    for (double eps : cfg_.eps_pod) sweep_eps(eps);
    return report_;
  }

 private:
  void say(const std::string& s) {
    if (log_) *log_ << s << std::endl;
  }

  bool wants(const std::string& m) const {
    return std::find(cfg_.methods.begin(), cfg_.methods.end(), m) != cfg_.methods.end();
  }

  void run_test_foms() {
    for (const auto& mu : cfg_.test_mus) {
      TestCase tc;
      tc.mu = mu;
      say("fom test run mu = " + to_string(mu));
      try {
        tc.timing = time_runs([&] { tc.fom = integrate_fom(sys_, scheme_, cfg_.newton, mu, cfg_.n_steps); },
                              cfg_.repeats);
      } catch (const NonConvergence& e) {
        tc.status = "failed(" + std::to_string(e.step()) + ")";
      } catch (const std::exception& e) {
        tc.status = "error(" + sanitize(e.what()) + ")";
      }
      if (wants("fom")) {
        MetricsRow row;
        row.model = cfg_.model;
        row.method = "fom";
        row.mu = mu;
        row.n = sys_.dim_state;
        row.status = tc.status;
        if (tc.status == "converged") {
          row.times = tc.timing.seconds;
          row.mean_time = tc.timing.mean();
          row.speedup = 1.0;
        }
        report_.rows.push_back(row);
      }
      tests_.push_back(std::move(tc));
    }
  }

  void train() {
    const fs::path cache = cfg_.cache_dir.empty() ? fs::path(cfg_.output_dir) / "cache" : fs::path(cfg_.cache_dir);
    for (std::size_t k = 0; k < cfg_.training_mus.size(); ++k) {
      say("training run " + std::to_string(k + 1) + "/" + std::to_string(cfg_.training_mus.size()) +
          " mu = " + to_string(cfg_.training_mus[k]));
      training_.push_back(cached_fom_run(sys_, scheme_, cfg_.newton, cfg_.training_mus[k], cfg_.train_steps,
                                         cache, cfg_.grid));
    }
    say("POD of the training snapshots");
    SnapshotMatrix snaps = assemble_snapshots(training_, cfg_.include_initial);
    if (lifted_) {
      SnapshotMatrix w;
      w.data = snaps.data.array().square().matrix();
      w.provenance = snaps.provenance;
      pod_w_ = pod(w);
    }
    pod_ = pod(snaps);
  }

  Variant make_variant(bool lifted, double eps) {
    Variant v;
    const ReducedBasis q = select_modes(pod_, eps);
    if (!lifted) {
      v.sys = &sys_;
      v.basis = q;
      v.phi_q = q.phi;
      return v;
    }
    ReducedBasis w = select_modes(pod_w_, eps);
    v.sys = &*lifted_;
    v.basis = block_diagonal({q, w});
    v.basis.layout->variable_names = {"q", "w"};
    v.basis.eps_pod = eps;
    v.phi_q = q.phi;
    return v;
  }

  MetricsRow base_row(const std::string& method, const TestCase& tc, const Variant& v, double eps) const {
    MetricsRow row;
    row.model = cfg_.model;
    row.method = method;
    row.mu = tc.mu;
    row.eps_pod = eps;
    row.n = v.basis.n;
    row.block_modes = v.basis.block_modes.empty() ? std::vector<Index>{v.basis.n} : v.basis.block_modes;
    return row;
  }

  // Runs one cell; returns the reconstructed original-variable trajectory on success.
  std::optional<Matrix> run_cell(ReducedAssembler& assembler, const Variant& v, const TestCase& tc,
                                 MetricsRow& row, int repeats) {
    Matrix reduced;
    // Only prepare() and the reduced time loop are timed; projecting x_0 and
    // reconstructing the trajectory happen outside the online phase.
    const Vector xhat0 = v.basis.phi.transpose() * v.sys->initial(tc.mu);
    try {
      const TimingSamples t = time_runs(
          [&] {
            assembler.prepare(tc.mu);
            reduced = integrate_reduced(assembler, *v.sys, scheme_, cfg_.newton, tc.mu, xhat0, cfg_.n_steps);
          },
          repeats);
      row.times = t.seconds;
      row.mean_time = t.mean();
      if (tc.status == "converged" && t.mean() > 0.0) row.speedup = tc.timing.mean() / t.mean();
    } catch (const NonConvergence& e) {
      row.status = "failed(" + std::to_string(e.step()) + ")";
      return std::nullopt;
    } catch (const std::exception& e) {
      row.status = "error(" + sanitize(e.what()) + ")";
      return std::nullopt;
    }
    Matrix q = v.basis.phi.topRows(sys_.dim_state) * reduced;
    if (tc.status == "converged") {
      row.state_error = state_prediction_error(tc.fom.states, q);
      row.projection_error = projection_error(tc.fom.states, v.phi_q);
    }
    return q;
  }

  void sweep_eps(double eps) {
    say("eps_pod = " + fmt(eps));
    Variant state = make_variant(false, eps);
    report_.bases.push_back({"state", eps, state.basis.n, {state.basis.n}});
    std::optional<Variant> lifted;
    if (lifted_) {
      lifted = make_variant(true, eps);
      report_.bases.push_back({"lifted", eps, lifted->basis.n, lifted->basis.block_modes});
    }
    say("  n = " + std::to_string(state.basis.n) +
        (lifted ? ", lifted n = " + fmt_index_list(lifted->basis.block_modes) : std::string()));

    // Reference trajectories per (method, test index), filled lazily.
    std::map<std::pair<std::string, std::size_t>, std::optional<Matrix>> refs;

    auto reference = [&](const std::string& method, std::size_t t) -> const std::optional<Matrix>& {
      auto key = std::make_pair(method, t);
      auto it = refs.find(key);
      if (it != refs.end()) return it->second;
      const Variant& v = lifted_method(method) ? *lifted : state;
      auto assembler = base_method(method) == "galerkin-rom" ? galerkin_reference_assembler(*v.sys, v.basis)
                                                             : lspg_reference_assembler(*v.sys, v.basis);
      MetricsRow row = base_row(method, tests_[t], v, eps);
      const bool timed = wants(method);
      say("  " + method + " mu = " + to_string(tests_[t].mu));
      auto q = run_cell(*assembler, v, tests_[t], row, timed ? cfg_.repeats : 1);
      if (timed) report_.rows.push_back(row);
      return refs.emplace(key, std::move(q)).first->second;
    };

    auto finish = [&](const std::string& method, std::size_t t, MetricsRow& row, const std::optional<Matrix>& q) {
      const std::string ref = reference_for(method);
      if (q && !ref.empty()) {
        const auto& r = reference(ref, t);
        if (r) row.rom_eval_error = rom_evaluation_error(*r, *q);
      }
      report_.rows.push_back(row);
    };

    for (const auto& method : cfg_.methods) {
      if (method == "fom") continue;
      const Variant& v = lifted_method(method) ? *lifted : state;
      if (is_reference(method)) {
        for (std::size_t t = 0; t < tests_.size(); ++t) reference(method, t);
        continue;
      }
      if (is_ecsw(method)) {
        run_ecsw(method, v, eps, finish);
        continue;
      }
      std::unique_ptr<ReducedAssembler> assembler;
      std::string build_error;
      try {
        if (base_method(method) == "hrf-g") {
          assembler = std::make_unique<HrfGalerkinAssembler>(precompute_hrf_galerkin(*v.sys, v.basis));
        } else {
          assembler = std::make_unique<HrfLspgAssembler>(precompute_hrf_lspg(*v.sys, v.basis));
        }
      } catch (const std::exception& e) {
        build_error = "error(" + sanitize(e.what()) + ")";
      }
      for (std::size_t t = 0; t < tests_.size(); ++t) {
        MetricsRow row = base_row(method, tests_[t], v, eps);
        std::optional<Matrix> q;
        if (assembler) {
          say("  " + method + " mu = " + to_string(tests_[t].mu));
          q = run_cell(*assembler, v, tests_[t], row, cfg_.repeats);
        } else {
          row.status = build_error;
        }
        finish(method, t, row, q);
      }
    }
  }

  template <class Finish>
  void run_ecsw(const std::string& method, const Variant& v, double eps, Finish& finish) {
    const Projection proj = method == "ecsw-g" ? Projection::Galerkin : Projection::Lspg;
    Matrix factor;
    std::string train_error;
    try {
      say("  " + method + ": collecting residual snapshots");
      const ResidualSnapshotSet snaps =
          collect_residual_snapshots(*v.sys, v.basis, scheme_, training_, cfg_.ecsw_snapshots, cfg_.seed);
      factor = compressed_nnls_factor(*v.sys, v.basis, scheme_, snaps, proj);
    } catch (const std::exception& e) {
      train_error = "error(" + sanitize(e.what()) + ")";
    }
    for (double ee : cfg_.eps_ecsw) {
      std::optional<EcswWeights> weights;
      std::string err = train_error;
      if (err.empty()) {
        try {
          weights = nnls_from_factor(factor, ee);
        } catch (const std::exception& e) {
          err = "error(" + sanitize(e.what()) + ")";
        }
      }
      std::unique_ptr<EcswAssembler> assembler;
      if (weights) {
        say("  " + method + " eps_ecsw = " + fmt(ee) + ": " + std::to_string(weights->size()) + " samples");
        assembler = std::make_unique<EcswAssembler>(*v.sys, v.basis, *weights, proj);
      }
      for (std::size_t t = 0; t < tests_.size(); ++t) {
        MetricsRow row = base_row(method, tests_[t], v, eps);
        row.eps_ecsw = ee;
        std::optional<Matrix> q;
        if (assembler) {
          row.samples = static_cast<Index>(weights->size());
          row.training_ratio = weights->training_residual_ratio;
          q = run_cell(*assembler, v, tests_[t], row, cfg_.repeats);
        } else {
          row.status = err;
        }
        finish(method, t, row, q);
      }
    }
  }

  const ExperimentConfig& cfg_;
  std::ostream* log_;
  MetricsReport report_;
  PolynomialSystem sys_;
  std::optional<PolynomialSystem> lifted_;
  MultistepScheme scheme_;
  std::vector<TestCase> tests_;
  std::vector<Trajectory> training_;
  ReducedBasis pod_, pod_w_;
};

const char* kCsvHeader =
    "model,method,mu,eps_pod,eps_ecsw,n,block_modes,state_error,projection_error,rom_eval_error,"
    "mean_time,times,speedup,samples,training_ratio,status";

}  // namespace

MetricsReport run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  return Sweep(cfg, log).run();
}

std::string report_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : report.rows) {
    os << r.model << ',' << r.method << ',' << fmt_list(r.mu.values()) << ',' << fmt_opt(r.eps_pod) << ','
       << fmt_opt(r.eps_ecsw) << ',' << r.n << ',' << fmt_index_list(r.block_modes) << ','
       << fmt_opt(r.state_error) << ',' << fmt_opt(r.projection_error) << ',' << fmt_opt(r.rom_eval_error)
       << ',' << fmt_opt(r.mean_time) << ',' << fmt_list(r.times) << ',' << fmt_opt(r.speedup) << ','
       << (r.samples ? std::to_string(*r.samples) : "") << ',' << fmt_opt(r.training_ratio) << ','
       << sanitize(r.status) << '\n';
  }
  return os.str();
}

MetricsReport parse_report_csv(const std::string& text) {
  MetricsReport report;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw std::runtime_error("unexpected CSV header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 16) throw std::runtime_error("CSV row has " + std::to_string(f.size()) + " fields");
    MetricsRow r;
    r.model = f[0];
    r.method = f[1];
    r.mu = ParamVector(parse_list(f[2]));
    r.eps_pod = parse_opt(f[3]);
    r.eps_ecsw = parse_opt(f[4]);
    r.n = std::stoll(f[5]);
    r.block_modes = parse_index_list(f[6]);
    r.state_error = parse_opt(f[7]);
    r.projection_error = parse_opt(f[8]);
    r.rom_eval_error = parse_opt(f[9]);
    r.mean_time = parse_opt(f[10]);
    r.times = parse_list(f[11]);
    r.speedup = parse_opt(f[12]);
    if (!f[13].empty()) r.samples = std::stoll(f[13]);
    r.training_ratio = parse_opt(f[14]);
    r.status = f[15];
    report.rows.push_back(std::move(r));
  }
  return report;
}

namespace {

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << s;
  if (!os) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

void emit_results(const MetricsReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "results.csv", report_csv(report));

  json summary = {{"config", report.config_name}, {"rows", report.rows.size()}};
  json bases = json::array();
  for (const auto& b : report.bases)
    bases.push_back({{"variant", b.variant}, {"eps_pod", b.eps_pod}, {"n", b.n}, {"block_modes", b.block_modes}});
  summary["bases"] = bases;
  json rows = json::array();
  std::size_t failed = 0, errored = 0;
  for (const auto& r : report.rows) {
    if (r.errored()) ++errored;
    else if (!r.converged()) ++failed;
    rows.push_back({{"method", r.method},
                    {"mu", r.mu.values()},
                    {"eps_pod", opt_json(r.eps_pod)},
                    {"eps_ecsw", opt_json(r.eps_ecsw)},
                    {"n", r.n},
                    {"state_error", opt_json(r.state_error)},
                    {"rom_eval_error", opt_json(r.rom_eval_error)},
                    {"speedup", opt_json(r.speedup)},
                    {"samples", r.samples ? json(*r.samples) : json(nullptr)},
                    {"status", r.status}});
  }
  summary["failed_to_converge"] = failed;
  summary["errors"] = errored;
  summary["results"] = rows;
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  std::ostringstream err, spd, smp, modes;
  err << "model,method,mu,eps_pod,eps_ecsw,n,state_error,projection_error,rom_eval_error,status\n";
  spd << "model,method,mu,eps_pod,eps_ecsw,mean_time,speedup,status\n";
  for (const auto& r : report.rows) {
    if (!r.eps_pod) continue;
    const std::string key = r.model + ',' + r.method + ',' + fmt_list(r.mu.values()) + ',' + fmt_opt(r.eps_pod) +
                            ',' + fmt_opt(r.eps_ecsw);
    err << key << ',' << r.n << ',' << fmt_opt(r.state_error) << ',' << fmt_opt(r.projection_error) << ','
        << fmt_opt(r.rom_eval_error) << ',' << r.status << '\n';
    spd << key << ',' << fmt_opt(r.mean_time) << ',' << fmt_opt(r.speedup) << ',' << r.status << '\n';
  }
  write_text(dir / "fig_error_vs_eps_pod.csv", err.str());
  write_text(dir / "fig_speedup_vs_eps_pod.csv", spd.str());

  // One scatter point per (method, eps_pod, eps_ecsw), averaged over converged test parameters.
  struct Acc {
    double err = 0.0, speed = 0.0;
    int count = 0;
  };
  std::map<std::tuple<std::string, std::string, double, double>, Acc> scatter;
  std::map<std::tuple<std::string, std::string, double, double>, std::pair<Index, double>> samples;
  for (const auto& r : report.rows) {
    if (!r.eps_pod) continue;
    const auto key = std::make_tuple(r.model, r.method, *r.eps_pod, r.eps_ecsw.value_or(-1.0));
    auto& a = scatter[key];
    if (r.converged() && r.state_error && r.speedup) {
      a.err += *r.state_error;
      a.speed += *r.speedup;
      ++a.count;
    }
    if (r.samples && !samples.count(key)) samples[key] = {*r.samples, r.training_ratio.value_or(0.0)};
  }
  std::ostringstream sc;
  sc << "model,method,eps_pod,eps_ecsw,mean_state_error,mean_speedup,converged_runs\n";
  for (const auto& [k, a] : scatter) {
    const auto& [model, method, ep, ee] = k;
    sc << model << ',' << method << ',' << fmt(ep) << ',' << (ee < 0 ? "" : fmt(ee)) << ','
       << (a.count ? fmt(a.err / a.count) : "") << ',' << (a.count ? fmt(a.speed / a.count) : "") << ','
       << a.count << '\n';
  }
  write_text(dir / "fig_error_vs_speedup.csv", sc.str());
  smp << "model,method,eps_pod,eps_ecsw,samples,training_ratio\n";
  for (const auto& [k, s] : samples) {
    const auto& [model, method, ep, ee] = k;
    smp << model << ',' << method << ',' << fmt(ep) << ',' << fmt(ee) << ',' << s.first << ',' << fmt(s.second)
        << '\n';
  }
  write_text(dir / "fig_samples_vs_eps_pod.csv", smp.str());
  modes << "variant,eps_pod,n,block_modes\n";
  for (const auto& b : report.bases)
    modes << b.variant << ',' << fmt(b.eps_pod) << ',' << b.n << ',' << fmt_index_list(b.block_modes) << '\n';
  write_text(dir / "fig_modes_vs_eps_pod.csv", modes.str());
}

}  // namespace polyrom
