#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "wip/config.hpp"
#include "wip/estimators.hpp"

namespace {

using namespace wip;

struct CommonFlags {
  std::string config_path;
  std::vector<int> n_override;
  long long m_override = -1;
  double dt_override = -1.0;
  long long seed_override = -1;
  std::string policy_override;
  std::string out_override;
  std::string dump_samples;
  int workers = 0;
  bool print_config = false;
  bool no_timing = false;
  double refine_tol = 0.0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "config file path");
  cmd->add_option("--n", f.n_override, "particle counts (overrides config)")->delimiter(',');
  cmd->add_option("--m", f.m_override, "sample count (overrides config)");
  cmd->add_option("--dt", f.dt_override, "time step (overrides config; default rule 0.01/N)");
  cmd->add_option("--seed", f.seed_override, "base seed (overrides config)");
  cmd->add_option("--policy", f.policy_override,
                  "control policy: zero | lq_optimal | sign_outside | sign_inside");
  cmd->add_option("--out", f.out_override, "output CSV path");
  cmd->add_option("--workers", f.workers,
                  "worker threads (0 = library default; env WIP_SAMPLER_WORKERS)");
  cmd->add_flag("--print-config", f.print_config, "print the resolved config and exit");
  cmd->add_flag("--no-timing", f.no_timing, "leave the wall_time_s column empty");
}

int env_workers() {
  const char* v = std::getenv("WIP_SAMPLER_WORKERS");
  if (!v) return 0;
  try {
    return std::max(0, std::stoi(v));
  } catch (const std::exception&) {
    return 0;
  }
}

RunConfig resolve(const CommonFlags& f, const std::string& default_example = "") {
  RunConfig cfg;
  if (!f.config_path.empty())
    cfg = parse_config_file(f.config_path);
  else if (!default_example.empty())
    cfg = named_example(default_example);
  else
    throw std::invalid_argument("no --config given (and no default example for this command)");
  if (!f.n_override.empty()) cfg.n_list = f.n_override;
  if (f.m_override >= 0) {
    if (f.m_override == 0) throw std::invalid_argument("--m must be positive");
    cfg.m = f.m_override;
  }
  if (f.dt_override >= 0.0) {
    if (f.dt_override == 0.0) throw std::invalid_argument("--dt must be positive");
    cfg.dt = f.dt_override;
  }
  if (f.seed_override >= 0) cfg.seed = static_cast<uint64_t>(f.seed_override);
  if (!f.policy_override.empty()) cfg.policy = f.policy_override;
  if (!f.out_override.empty()) cfg.out_path = f.out_override;
  if (f.no_timing) cfg.timing = false;
  if (!cfg.g) throw std::invalid_argument("config does not define a terminal cost [g]");
  return cfg;
}

ControlPolicy make_policy(const RunConfig& cfg,
                          std::shared_ptr<const RiccatiSolution>& riccati_cache) {
  if (cfg.policy == "zero") return ControlPolicy::zero(cfg.lq.noise_dim());
  if (cfg.policy == "lq_optimal") {
    if (!cfg.g->is_quadratic())
      throw std::invalid_argument("lq_optimal requires a quadratic terminal cost");
    if (!riccati_cache)
      riccati_cache = std::make_shared<RiccatiSolution>(
          solve_riccati(cfg.lq, *cfg.g, cfg.s, cfg.T, cfg.riccati_steps));
    return ControlPolicy::lq_optimal(riccati_cache);
  }
  if (cfg.policy == "sign_outside" || cfg.policy == "sign_inside") {
    if (cfg.lq.dim() != 1) throw std::invalid_argument("sign controls require d = 1");
    const double B = cfg.lq.B(0, 0), Bbar = cfg.lq.Bbar(0, 0), sg = cfg.lq.sigma(0, 0);
    return cfg.policy == "sign_outside" ? ControlPolicy::sign_outside(B, Bbar, sg, cfg.T)
                                        : ControlPolicy::sign_inside(B, Bbar, sg, cfg.T);
  }
  throw std::invalid_argument("unknown policy '" + cfg.policy + "'");
}

SimConfig sim_config(const RunConfig& cfg, int N) {
  SimConfig sc;
  sc.n_particles = N;
  sc.n_samples = cfg.m;
  sc.s = cfg.s;
  sc.T = cfg.T;
  sc.dt = cfg.dt;
  sc.base_seed = cfg.seed;
  sc.y = Mat(1, static_cast<int>(cfg.y0.size()));
  sc.y.a = cfg.y0;
  return sc;
}

struct RunRow {
  int N;
  long long M;
  double dt;
  std::string policy;
  EstimatorReport rep;
  double wall_s = 0.0;
};

void dump_sample_records(const std::string& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open sample dump file '" + path + "'");
  out << "sample_index,g_terminal,log_weight\n";
  for (size_t j = 0; j < records.size(); ++j)
    out << j << ',' << format_double(records[j].g_terminal) << ','
        << format_double(records[j].log_weight) << '\n';
}

RunRow run_one(const RunConfig& cfg, int N, int workers,
               std::shared_ptr<const RiccatiSolution>& riccati_cache,
               const std::string& dump_samples = "") {
  RunRow row;
  row.N = N;
  row.M = cfg.m;
  const SimConfig sc = sim_config(cfg, N);
  row.dt = sc.resolved_dt();
  row.policy = cfg.policy;

  const ModelSpec model = lq_to_model(cfg.lq);
  const ControlPolicy policy = make_policy(cfg, riccati_cache);

  const auto t0 = std::chrono::steady_clock::now();
  const auto records = simulate_batch(model, policy, *cfg.g, sc, false, workers);
  row.rep = aggregate(records, N);
  row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!dump_samples.empty()) dump_sample_records(dump_samples, records);

  if (cfg.g->is_quadratic()) {
    if (!riccati_cache)
      riccati_cache = std::make_shared<RiccatiSolution>(
          solve_riccati(cfg.lq, *cfg.g, cfg.s, cfg.T, cfg.riccati_steps));
    const EmpiricalMeasure y_measure(sc.initial_positions(cfg.lq.dim()));
    row.rep.exact_value = exact_value(*riccati_cache, N, cfg.s, y_measure);
    if (cfg.policy == "zero")
      row.rep.exact_rel_error = exact_mc_relative_error(cfg.lq, *cfg.g, N, cfg.s, cfg.T,
                                                        y_measure, 1.0, cfg.riccati_steps);
    else if (cfg.policy == "lq_optimal")
      row.rep.exact_rel_error = 0.0;  // zero-variance regime
  }
  return row;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);  // binary: byte-stable newlines
  if (!file) throw std::invalid_argument("cannot open output file '" + path + "'");
  return file;
}

void write_run_csv(std::ostream& out, const std::vector<RunRow>& rows, bool timing) {
  out << "N,M,dt,policy,estimate,rel_error,R_tilde,work_TN,exact_value,exact_rel_error,"
         "wall_time_s\n";
  for (const auto& r : rows) {
    out << r.N << ',' << r.M << ',' << format_double(r.dt) << ',' << r.policy << ','
        << format_double(r.rep.estimate) << ',' << format_double(r.rep.empirical_rel_error)
        << ',' << format_double(r.rep.second_moment_ratio) << ','
        << format_double(r.rep.work_metric) << ','
        << (r.rep.exact_value ? format_double(*r.rep.exact_value) : std::string()) << ','
        << (r.rep.exact_rel_error ? format_double(*r.rep.exact_rel_error) : std::string())
        << ',' << (timing ? format_double(r.wall_s) : std::string()) << '\n';
  }
}

int cmd_run(const CommonFlags& flags) {
  RunConfig cfg = resolve(flags);
  const int workers = flags.workers > 0 ? flags.workers : env_workers();
  if (flags.print_config) {
    std::cout << print_config(cfg);
    return 0;
  }
  if (!flags.dump_samples.empty() && cfg.n_list.size() != 1)
    throw std::invalid_argument("--dump-samples requires a single N");
  std::vector<RunRow> rows;
  std::shared_ptr<const RiccatiSolution> riccati;
  for (int N : cfg.n_list) {
    if (flags.refine_tol > 0.0) {
      RunConfig rc = cfg;
      if (rc.dt <= 0.0) rc.dt = 0.01 / N;
      RunRow prev = run_one(rc, N, workers, riccati);
      for (int it = 0; it < 6; ++it) {
        rc.dt *= 0.5;
        RunRow next = run_one(rc, N, workers, riccati);
        const double rel = std::fabs(next.rep.estimate - prev.rep.estimate) /
                           std::max(std::fabs(next.rep.estimate), 1e-300);
        std::cerr << "refine N=" << N << " dt=" << format_double(rc.dt)
                  << " estimate=" << format_double(next.rep.estimate) << " rel_change="
                  << format_double(rel) << "\n";
        prev = next;
        if (rel < flags.refine_tol) break;
      }
      rows.push_back(prev);
    } else {
      rows.push_back(run_one(cfg, N, workers, riccati, flags.dump_samples));
    }
  }
  std::ofstream file;
  write_run_csv(open_output(cfg.out_path, file), rows, cfg.timing);
  return 0;
}

int cmd_table(int which, const CommonFlags& flags) {
  static const char* kExample[] = {nullptr, "sec_5_1", "abs_outside", "abs_inside"};
  static const char* kPolicy[] = {nullptr, "lq_optimal", "sign_outside", "sign_inside"};
  RunConfig cfg = flags.config_path.empty() ? named_example(kExample[which])
                                            : parse_config_file(flags.config_path);
  CommonFlags f = flags;
  if (f.n_override.empty()) f.n_override = {5, 10, 15, 20};
  f.policy_override.clear();
  cfg.policy.clear();
  RunConfig base = cfg;
  base.n_list = f.n_override;
  if (f.m_override > 0) base.m = f.m_override;
  if (f.dt_override > 0.0) base.dt = f.dt_override;
  if (f.seed_override >= 0) base.seed = static_cast<uint64_t>(f.seed_override);
  if (!f.out_override.empty()) base.out_path = f.out_override;
  if (f.no_timing) base.timing = false;
  const int workers = f.workers > 0 ? f.workers : env_workers();

  if (flags.print_config) {
    base.policy = kPolicy[which];
    std::cout << print_config(base);
    return 0;
  }

  std::ofstream file;
  std::ostream& out = open_output(base.out_path, file);
  out << "N,is_estimate,is_rel_err,mc_estimate,mc_rel_err";
  if (which == 1) out << ",exact_value";
  out << ",flags\n";
  std::shared_ptr<const RiccatiSolution> riccati;
  for (int N : base.n_list) {
    RunConfig is_cfg = base;
    is_cfg.policy = kPolicy[which];
    const RunRow is_row = run_one(is_cfg, N, workers, riccati);
    RunConfig mc_cfg = base;
    mc_cfg.policy = "zero";
    const RunRow mc_row = run_one(mc_cfg, N, workers, riccati);
    out << N << ',' << format_double(is_row.rep.estimate) << ','
        << format_double(is_row.rep.empirical_rel_error) << ','
        << format_double(mc_row.rep.estimate) << ','
        << format_double(mc_row.rep.empirical_rel_error);
    if (which == 1)
      out << ',' << (is_row.rep.exact_value ? format_double(*is_row.rep.exact_value)
                                            : std::string());
    const bool wide = mc_row.rep.se_rel_error > 0.5;
    out << ',' << (wide ? "wide_mc_err" : "") << '\n';
  }
  return 0;
}

int cmd_riccati_dump(const CommonFlags& flags) {
  RunConfig cfg = resolve(flags, "sec_5_1");
  if (!cfg.g->is_quadratic())
    throw std::invalid_argument("riccati-dump requires a quadratic terminal cost");
  if (flags.print_config) {
    std::cout << print_config(cfg);
    return 0;
  }
  const RiccatiSolution sol = solve_riccati(cfg.lq, *cfg.g, cfg.s, cfg.T, cfg.riccati_steps);
  std::ofstream file;
  std::ostream& out = open_output(cfg.out_path, file);
  const int d = sol.dim();
  out << "t";
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out << ",Lambda_" << i << j;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out << ",Gamma_" << i << j;
  for (int i = 0; i < d; ++i) out << ",gamma_" << i;
  out << ",chi,chi_correction\n";
  for (size_t k = 0; k < sol.t.size(); ++k) {
    out << format_double(sol.t[k]);
    for (double v : sol.Lambda[k].a) out << ',' << format_double(v);
    for (double v : sol.Gamma[k].a) out << ',' << format_double(v);
    for (double v : sol.gamma[k]) out << ',' << format_double(v);
    out << ',' << format_double(sol.chi[k]) << ',' << format_double(sol.chi_correction[k])
        << '\n';
  }
  return 0;
}

int cmd_girsanov_check(const CommonFlags& flags) {
  RunConfig cfg = resolve(flags, "sec_5_1");
  if (cfg.policy == "zero" && flags.policy_override.empty()) cfg.policy = "lq_optimal";
  const int workers = flags.workers > 0 ? flags.workers : env_workers();
  if (flags.print_config) {
    std::cout << print_config(cfg);
    return 0;
  }
  const int N = cfg.n_list.front();
  const SimConfig sc = sim_config(cfg, N);
  std::shared_ptr<const RiccatiSolution> riccati;
  const ControlPolicy policy = make_policy(cfg, riccati);
  const ModelSpec model = lq_to_model(cfg.lq);
  const auto res = girsanov_second_moment_check(model, *cfg.g, sc, policy, policy, workers);
  std::cout << "girsanov-check N=" << N << " M=" << cfg.m << " policy=" << cfg.policy << "\n"
            << "  log second moment (controlled run): " << format_double(res.log_m2_controlled)
            << " +- " << format_double(res.se_log_controlled) << "\n"
            << "  log second moment (tilted run):     " << format_double(res.log_m2_tilted)
            << " +- " << format_double(res.se_log_tilted) << "\n"
            << "  discrepancy: " << format_double(res.discrepancy_sigmas)
            << " combined standard errors\n"
            << (res.pass ? "PASS" : "FAIL") << "\n";
  return res.pass ? 0 : 1;
}

int cmd_small_noise_check(const CommonFlags& flags) {
  RunConfig cfg = resolve(flags, "example_4_1");
  if (cfg.policy == "zero" && flags.policy_override.empty()) cfg.policy = "lq_optimal";
  const int workers = flags.workers > 0 ? flags.workers : env_workers();
  if (flags.print_config) {
    std::cout << print_config(cfg);
    return 0;
  }
  const int N = cfg.n_list.front();
  const SimConfig sc = sim_config(cfg, N);
  std::shared_ptr<const RiccatiSolution> riccati;
  const ControlPolicy policy = make_policy(cfg, riccati);
  const auto [particle_rep, agg_rep] = small_noise_cross_check(cfg.lq, *cfg.g, sc, policy, workers);
  const double combined = std::hypot(particle_rep.se_log_estimate, agg_rep.se_log_estimate);
  const double diff = std::fabs(particle_rep.log_estimate - agg_rep.log_estimate);
  const double floor = 1e-12 * std::max(1.0, std::fabs(particle_rep.log_estimate));
  const double sigmas = diff / std::max(combined, floor);
  const bool pass = diff <= 3.0 * combined + floor;
  std::cout << "small-noise-check N=" << N << " M=" << cfg.m << " policy=" << cfg.policy << "\n"
            << "  particle estimator:   " << format_double(particle_rep.estimate) << " (rho "
            << format_double(particle_rep.empirical_rel_error) << ")\n"
            << "  aggregated estimator: " << format_double(agg_rep.estimate) << " (rho "
            << format_double(agg_rep.empirical_rel_error) << ")\n"
            << "  discrepancy: " << format_double(sigmas) << " combined standard errors\n"
            << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo and importance-sampling estimators for rare-event "
               "functionals of interacting-particle empirical measures"};
  app.require_subcommand(1);

  CommonFlags run_flags, table_flags, riccati_flags, girsanov_flags, small_noise_flags;
  int table_which = 1;

  auto* run = app.add_subcommand("run", "run the configured experiment, write CSV rows");
  add_common_flags(run, run_flags);
  run->add_option("--refine", run_flags.refine_tol,
                  "halve dt until successive estimates differ by less than this relative "
                  "tolerance");
  run->add_option("--dump-samples", run_flags.dump_samples,
                  "write per-sample records (sample_index, g_terminal, log_weight) to this "
                  "CSV; requires a single N");

  auto* table = app.add_subcommand("table", "run an IS-vs-MC comparison table");
  table->add_option("name", table_which, "table number: 1 | 2 | 3")
      ->required()
      ->check(CLI::Range(1, 3));
  add_common_flags(table, table_flags);

  auto* rd = app.add_subcommand("riccati-dump", "emit the Riccati coefficient grid as CSV");
  add_common_flags(rd, riccati_flags);

  auto* gc = app.add_subcommand("girsanov-check",
                                "compare the two second-moment estimators (controlled vs tilted)");
  add_common_flags(gc, girsanov_flags);

  auto* sn = app.add_subcommand("small-noise-check",
                                "compare the particle estimator with the aggregated scalar SDE");
  add_common_flags(sn, small_noise_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (table->parsed()) return cmd_table(table_which, table_flags);
    if (rd->parsed()) return cmd_riccati_dump(riccati_flags);
    if (gc->parsed()) return cmd_girsanov_check(girsanov_flags);
    if (sn->parsed()) return cmd_small_noise_check(small_noise_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
