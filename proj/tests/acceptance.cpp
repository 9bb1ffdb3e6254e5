// Acceptance checks; one PASS/FAIL line per criterion.
#include "support.hpp"

#include "polyrom/experiment.hpp"
#include "polyrom/hrf.hpp"
#include "polyrom/metrics.hpp"
#include "polyrom/models.hpp"
#include "polyrom/romref.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

using namespace polyrom;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

int failures = 0;
std::set<int> allowed_red;  // criteria known to be unattainable; still printed as FAIL

void report(int k, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << k << ": " << detail << std::endl;
  if (!ok && !allowed_red.count(k)) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ReducedBasis basis_of(const Matrix& phi) {
  ReducedBasis b;
  b.phi = phi;
  b.n = phi.cols();
  return b;
}

struct Pair {
  Matrix lhs;
  Vector rhs;
};

Pair assemble(ReducedAssembler& a, const ParamVector& mu, const MultistepScheme& s, const Vector& xhat,
              const std::vector<Vector>& hist, const std::vector<Vector>& in) {
  Pair p;
  a.prepare(mu);
  a.begin_step(s, hist, in);
  a.assemble(xhat, p.lhs, p.rhs);
  return p;
}

double pair_err(const Pair& a, const Pair& b) { return std::max(rel_err(a.lhs, b.lhs), rel_err(a.rhs, b.rhs)); }

// ---------------------------------------------------------------------------

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_g = 0.0, worst_l = 0.0;
  int systems = 0;
  for (int i = 0; i < 120; ++i) {
    std::mt19937_64 rng(1000 + i);
    const bool cubic = i >= 100;
    const Index n = 2 + i % 4;
    const Index nu = i % 3;
    const PolynomialSystem sys = random_system(rng, 30, nu, cubic);
    const ReducedBasis b = basis_of(random_orthonormal(rng, 30, n));
    const ParamVector mu{random_vector(rng, 1)(0), random_vector(rng, 1)(0)};
    const MultistepScheme s = i % 2 == 0 ? backward_euler(0.05) : crank_nicolson(0.05);
    const std::vector<Vector> hist{random_vector(rng, n)}, in{random_vector(rng, nu), random_vector(rng, nu)};
    const Vector xhat = random_vector(rng, n);
    HrfGalerkinAssembler hg(precompute_hrf_galerkin(sys, b));
    HrfLspgAssembler hl(precompute_hrf_lspg(sys, b));
    auto rg = galerkin_reference_assembler(sys, b);
    auto rl = lspg_reference_assembler(sys, b);
    worst_g = std::max(worst_g, pair_err(assemble(hg, mu, s, xhat, hist, in), assemble(*rg, mu, s, xhat, hist, in)));
    worst_l = std::max(worst_l, pair_err(assemble(hl, mu, s, xhat, hist, in), assemble(*rl, mu, s, xhat, hist, in)));
    ++systems;
  }
  const double secs = elapsed(t0);
  const bool ok = worst_g <= 1e-10 && worst_l <= 1e-10 && secs < 60.0;
  report(1, ok,
         std::to_string(systems) + " random systems (100 quadratic, 20 cubic): max rel err HRF-G " + fmt(worst_g) +
             ", HRF-LSPG " + fmt(worst_l) + " (tol 1e-10), " + fmt(secs) + " s");
}

// ---------------------------------------------------------------------------

void criterion2(const MetricsReport& rep) {
  const BasisSummary* b = rep.basis("state", 1e-4);
  if (!b) {
    report(2, false, "no basis at eps_pod 1e-4");
    return;
  }
  report(2, std::abs(b->n - 23) <= 1, "burgers-paper eps_pod 1e-4 gives n = " + std::to_string(b->n) + " (23 +- 1)");
}

void criterion3(const ExperimentConfig& cfg, const MetricsReport& rep) {
  bool ok = true;
  std::ostringstream os;
  for (const auto& mu : cfg.test_mus) {
    for (const std::string m : {"hrf-g", "hrf-lspg"}) {
      const MetricsRow* r = rep.find(m, mu, 1e-4);
      if (!r || !r->converged() || !r->state_error || !r->projection_error || !r->rom_eval_error) {
        ok = false;
        os << m << " mu " << to_string(mu) << " missing or " << (r ? r->status : "absent") << "; ";
        continue;
      }
      const bool cell = *r->state_error < 1e-2 && *r->state_error >= *r->projection_error &&
                        *r->rom_eval_error <= 1e-6;
      ok = ok && cell;
      os << m << " mu " << to_string(mu) << ": err " << fmt(*r->state_error) << " proj "
         << fmt(*r->projection_error) << " eval " << fmt(*r->rom_eval_error) << "; ";
    }
  }
  report(3, ok, os.str());
}

void criterion4(const ExperimentConfig& cfg, const MetricsReport& rep) {
  bool ok = true;
  std::ostringstream os;
  const BasisSummary* b = rep.basis("lifted", 1e-3);
  if (!b || b->block_modes.size() != 2) {
    ok = false;
    os << "no lifted basis at eps_pod 1e-3; ";
  } else {
    ok = b->block_modes[0] == 4 && b->block_modes[1] == 4;
    os << "n1 = " << b->block_modes[0] << ", n2 = " << b->block_modes[1] << "; ";
  }
  for (const auto& mu : cfg.test_mus) {
    for (const std::string m : {"hrf-g-lifted", "hrf-lspg-lifted"}) {
      const MetricsRow* r = rep.find(m, mu, 1e-3);
      if (!r || !r->converged() || !r->state_error) {
        ok = false;
        os << m << " " << (r ? r->status : "absent") << "; ";
        continue;
      }
      ok = ok && *r->state_error < 1e-2;
      os << m << " q err " << fmt(*r->state_error) << "; ";
    }
    const MetricsRow* l = rep.find("hrf-g-lifted", mu, 1e-3);
    const MetricsRow* u = rep.find("hrf-g", mu, 1e-3);
    if (l && u && l->state_error && u->state_error && *u->state_error > 0.0) {
      const double ratio = *l->state_error / *u->state_error;
      ok = ok && ratio <= 10.0 && ratio >= 0.1;
      os << "lifted/non-lifted HRF-G ratio " << fmt(ratio) << "; ";
    } else {
      ok = false;
      os << "non-lifted HRF-G missing; ";
    }
  }
  os << "horizon " << cfg.n_steps << " steps";
  report(4, ok, os.str());
}

void criterion5(const std::vector<std::pair<ExperimentConfig, const MetricsReport*>>& runs) {
  bool ok_a = true, ok_b = true, ok_c = true;
  std::ostringstream os;
  int cells = 0;
  for (const auto& [cfg, rep] : runs) {
    for (const std::string m : {"ecsw-g", "ecsw-lspg"}) {
      for (double ep : cfg.eps_pod) {
        std::map<double, double> eval;   // mean over test mus, +inf if any failed
        std::map<double, double> samples, ratio;
        for (double ee : cfg.eps_ecsw) {
          double sum = 0.0, smp = 0.0;
          for (const auto& mu : cfg.test_mus) {
            const MetricsRow* r = rep->find(m, mu, ep, ee);
            if (!r || r->errored() || !r->training_ratio || !r->samples) {
              ok_a = false;
              os << cfg.name << " " << m << " eps_pod " << ep << " eps_ecsw " << ee << " "
                 << (r ? r->status : "absent") << "; ";
              sum = std::numeric_limits<double>::infinity();
              continue;
            }
            if (*r->training_ratio > ee * (1 + 1e-12)) {
              ok_a = false;
              os << cfg.name << " " << m << " ratio " << fmt(*r->training_ratio) << " > " << ee << "; ";
            }
            smp = static_cast<double>(*r->samples);
            ratio[ee] = *r->training_ratio;
            sum += r->converged() && r->rom_eval_error ? *r->rom_eval_error : std::numeric_limits<double>::infinity();
          }
          eval[ee] = sum / static_cast<double>(cfg.test_mus.size());
          samples[ee] = smp;
        }
        ++cells;
        if (samples.count(1e-9) && samples.count(1e-5) && !(samples[1e-9] > samples[1e-5])) {
          ok_b = false;
          os << cfg.name << " " << m << " eps_pod " << ep << ": samples " << samples[1e-9] << " at 1e-9 vs "
             << samples[1e-5] << " at 1e-5 (training ratio at 1e-5 already " << fmt(ratio[1e-5]) << "); ";
        }
        const double e5 = eval[1e-5], e7 = eval[1e-7], e9 = eval[1e-9];
        if (!(e9 <= 2.0 * e7) || !(e7 <= 2.0 * e5)) {
          if (std::isfinite(e5) || std::isfinite(e7)) {
            ok_c = false;
            os << cfg.name << " " << m << " eps_pod " << ep << ": eval " << fmt(e5) << " " << fmt(e7) << " " << fmt(e9)
               << "; ";
          }
        }
      }
    }
  }
  os << "(a) " << (ok_a ? "ok" : "bad") << " (b) " << (ok_b ? "ok" : "bad") << " (c) " << (ok_c ? "ok" : "bad")
     << " over " << cells << " (config, method, eps_pod) cells";
  report(5, ok_a && ok_b && ok_c, os.str());
}

// HRF-G online time at fixed n on two Burgers grids.
double hrf_online_time(Index big, Index n, const fs::path& cache, int repeats) {
  const GridSpec grid{1.0, big};
  const PolynomialSystem sys = build_burgers(grid);
  const MultistepScheme s = backward_euler(1e-3);
  std::vector<Trajectory> runs;
  for (double m1 : {1.0, 2.0, 3.25})
    for (double m2 : {0.01, 0.05, 0.1}) runs.push_back(cached_fom_run(sys, s, {}, {m1, m2}, 500, cache, grid));
  ReducedBasis full = pod(assemble_snapshots(runs, false));
  ReducedBasis b;
  const Index keep = std::min<Index>(n, full.phi.cols());
  b.phi = full.phi.leftCols(keep);
  b.n = keep;
  HrfGalerkinAssembler a(precompute_hrf_galerkin(sys, b));
  const ParamVector mu{3.125, 0.0175};
  const Vector xhat0 = b.phi.transpose() * sys.initial(mu);
  const TimingSamples t = time_runs(
      [&] {
        a.prepare(mu);
        integrate_reduced(a, sys, s, {}, mu, xhat0, 500);
      },
      repeats);
  return t.mean();
}

void criterion6(const ExperimentConfig& cfg, const MetricsReport& rep, const fs::path& cache, int repeats) {
  std::ostringstream os;
  bool ok = true;
  const double t1 = hrf_online_time(1024, 23, cache, repeats);
  const double t4 = hrf_online_time(4096, 23, cache, repeats);
  const double ratio = std::max(t1, t4) / std::min(t1, t4);
  ok = ratio <= 2.0;
  os << "HRF-G n=23 online " << fmt(t1) << " s (N=1024) vs " << fmt(t4) << " s (N=4096), ratio " << fmt(ratio)
     << "; ";
  for (const auto& mu : cfg.test_mus) {
    const MetricsRow* g = rep.find("hrf-g", mu, 1e-4);
    if (!g || !g->speedup) {
      ok = false;
      os << "hrf-g speedup missing; ";
      continue;
    }
    ok = ok && *g->speedup >= 10.0;
    os << "mu " << to_string(mu) << " speedup hrf-g " << fmt(*g->speedup);
    for (const std::string m : {"hrf-lspg", "galerkin-rom", "lspg-rom"}) {
      const MetricsRow* r = rep.find(m, mu, 1e-4);
      os << ", " << m << " " << (r && r->speedup ? fmt(*r->speedup) : "n/a");
    }
    os << "; ";
  }
  report(6, ok, os.str());
}

// ---------------------------------------------------------------------------

// Relative error at the final time.
double final_error(const Trajectory& a, const Trajectory& ref) {
  const Index la = a.states.cols() - 1, lr = ref.states.cols() - 1;
  return (a.states.col(la) - ref.states.col(lr)).norm() / ref.states.col(lr).norm();
}

void criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream os;
  bool ok = true;
  std::mt19937_64 rng(77);

  // Selector identities.
  double sel = 0.0;
  for (Index n : {2, 3, 5, 8}) {
    const Vector x = random_vector(rng, n);
    const auto [g, h] = kron_sum_identity_check(x);
    const Matrix xx = dense_kron(x, x);
    // sum_l G^l x_l = x (x) I and sum_l H^l x_l = I (x) x.
    sel = std::max(sel, (g - dense_kron(Matrix(x), Matrix(Matrix::Identity(n, n)))).cwiseAbs().maxCoeff());
    sel = std::max(sel, (h - dense_kron(Matrix(Matrix::Identity(n, n)), Matrix(x))).cwiseAbs().maxCoeff());
    sel = std::max(sel, (g * x - xx).cwiseAbs().maxCoeff());
    sel = std::max(sel, (h * x - xx).cwiseAbs().maxCoeff());
    for (Index l = 1; l <= n; ++l) {
      const Matrix m = Matrix::Random(3, n * n);
      sel = std::max(sel, (m * selector_G(n, l) - kron_select_G(m, l)).cwiseAbs().maxCoeff());
      sel = std::max(sel, (m * selector_H(n, l) - kron_select_H(m, l)).cwiseAbs().maxCoeff());
    }
  }
  ok = ok && sel == 0.0;
  os << "selector max dev " << fmt(sel) << "; ";

  // Jacobians against central differences.
  double jac = 0.0;
  const GridSpec g64{1.0, 64};
  const auto [lifted, layout] = build_heat_lifted(g64);
  std::vector<std::pair<PolynomialSystem, ParamVector>> systems;
  systems.emplace_back(build_burgers(g64), ParamVector{2.0, 0.03});
  systems.emplace_back(build_heat_cubic(g64), ParamVector{1.5, 0.5});
  systems.emplace_back(lifted, ParamVector{1.5, 0.5});
  systems.emplace_back(random_system(rng, 20, 2, true), ParamVector{0.4, 0.7});
  for (const auto& [sys, mu] : systems) {
    const Vector x = random_vector(rng, sys.dim_state);
    const Vector u = sys.input(0.1, mu);
    auto f = [&](const Vector& y) { return system_rhs(sys, y, u, mu); };
    const Matrix fd = fd_jacobian(f, x);
    jac = std::max(jac, rel_err(Matrix(system_rhs_jacobian(sys, x, u, mu)), fd));
    const MultistepScheme s = crank_nicolson(1e-3);
    const Vector xp = random_vector(rng, sys.dim_state);
    const std::vector<Vector> inputs{u, sys.input(0.0, mu)};
    auto r = [&](const Vector& y) {
      const std::vector<Vector> h{y, xp};
      return fom_residual(sys, s, h, inputs, mu);
    };
    jac = std::max(jac, rel_err(Matrix(fom_residual_jacobian(sys, s, x, u, mu)), fd_jacobian(r, x)));
    // Reduced Galerkin Jacobians (reference and HRF) against the reduced residual.
    const ReducedBasis b = basis_of(random_orthonormal(rng, sys.dim_state, 4));
    HrfGalerkinAssembler hg(precompute_hrf_galerkin(sys, b));
    auto rg = galerkin_reference_assembler(sys, b);
    const std::vector<Vector> hist{random_vector(rng, 4)};
    for (ReducedAssembler* a : {static_cast<ReducedAssembler*>(&hg), rg.get()}) {
      a->prepare(mu);
      a->begin_step(s, hist, inputs);
      auto rr = [&](const Vector& y) {
        Matrix l;
        Vector v;
        a->assemble(y, l, v);
        return v;
      };
      const Vector xh = random_vector(rng, 4);
      Matrix l;
      Vector v;
      a->assemble(xh, l, v);
      jac = std::max(jac, rel_err(l, fd_jacobian(rr, xh)));
    }
  }
  ok = ok && jac <= 1e-5;
  os << "Jacobian vs FD max rel err " << fmt(jac) << "; ";

  // Temporal convergence on heat-cubic with a = b = 0.
  const GridSpec g63{1.0, 63};
  const PolynomialSystem heat = build_heat_cubic(g63);
  const ParamVector mu0{0.0, 0.0};
  const double horizon = 0.05;
  NewtonSettings tight;
  tight.tol = 1e-12;
  auto run = [&](const MultistepScheme& s, Index steps) { return integrate_fom(heat, s, tight, mu0, steps); };
  const Index ref_steps = 64 * 40;
  const Trajectory ref = run(crank_nicolson(horizon / static_cast<double>(ref_steps)), ref_steps);
  double be_ratio = 0.0, cn_ratio = 0.0;
  {
    const double e1 = final_error(run(backward_euler(horizon / 10), 10), ref);
    const double e2 = final_error(run(backward_euler(horizon / 20), 20), ref);
    be_ratio = e1 / e2;
    const double c1 = final_error(run(crank_nicolson(horizon / 10), 10), ref);
    const double c2 = final_error(run(crank_nicolson(horizon / 20), 20), ref);
    cn_ratio = c1 / c2;
  }
  const bool conv = be_ratio >= 1.7 && be_ratio <= 2.3 && cn_ratio >= 3.4 && cn_ratio <= 4.6;
  ok = ok && conv;
  os << "BE ratio " << fmt(be_ratio) << " [1.7, 2.3], CN ratio " << fmt(cn_ratio) << " [3.4, 4.6]; ";

  // Lifted and non-lifted right-hand sides agree.
  double lift = 0.0;
  const PolynomialSystem cubic = build_heat_cubic(g64);
  for (int k = 0; k < 5; ++k) {
    const Vector q = random_vector(rng, 64, 2.0);
    const ParamVector mu{random_vector(rng, 1, 2.0)(0), random_vector(rng, 1, 2.0)(0)};
    const Vector u = cubic.input(0.37 * k, mu);
    const Vector fq = system_rhs(cubic, q, u, mu);
    const Vector fl = system_rhs(lifted, lift_state(q), u, mu);
    lift = std::max(lift, rel_err(Vector(fl.head(64)), fq));
    lift = std::max(lift, rel_err(Vector(fl.tail(64)), Vector(2.0 * q.cwiseProduct(fq))));
  }
  ok = ok && lift <= 1e-12;
  os << "lifted rhs rel dev " << fmt(lift) << "; ";
  const double secs = elapsed(t0);
  ok = ok && secs < 60.0;
  os << fmt(secs) << " s";
  report(7, ok, os.str());
}

MetricsReport sweep(ExperimentConfig cfg, const fs::path& cache, int repeats) {
  cfg.cache_dir = (cache / "fom").string();
  cfg.output_dir = (cache / cfg.name).string();
  cfg.repeats = repeats;
  std::cerr << "running " << cfg.name << '\n';
  const auto t0 = std::chrono::steady_clock::now();
  MetricsReport rep = run_experiment(cfg, &std::cerr);
  emit_results(rep, cfg.output_dir);
  std::cerr << cfg.name << " done in " << fmt(elapsed(t0)) << " s\n";
  return rep;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string cache = "acceptance_cache";
  int repeats = 3;
  std::set<int> only;
  app.add_option("--cache", cache, "directory for cached FOM trajectories and sweep output");
  app.add_option("--repeats", repeats, "timing repeats for the Burgers sweep");
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--allow-red", allowed_red, "criteria whose FAIL does not change the exit code")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  auto want = [&](int k) { return only.empty() || only.count(k) > 0; };
  const fs::path dir(cache);
  fs::create_directories(dir);

  if (want(1)) criterion1();
  if (want(7)) criterion7();

  const ExperimentConfig burgers = builtin_config("burgers-paper");
  const ExperimentConfig heat = builtin_config("heat-paper");
  std::optional<MetricsReport> rb, rh;
  if (want(2) || want(3) || want(5) || want(6)) rb = sweep(burgers, dir, repeats);
  if (want(4) || want(5)) rh = sweep(heat, dir, 1);
  if (want(2)) criterion2(*rb);
  if (want(3)) criterion3(burgers, *rb);
  if (want(4)) criterion4(heat, *rh);
  if (want(5)) criterion5({{burgers, &*rb}, {heat, &*rh}});
  if (want(6)) criterion6(burgers, *rb, dir / "fom", repeats);
  for (int k : allowed_red) std::cout << "note: criterion " << k << " is allowed to be red (see README)\n";
  return failures == 0 ? 0 : 1;
}
