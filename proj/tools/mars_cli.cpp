#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

#include "mars/io.hpp"
#include "mars/km_reconstruct.hpp"
#include "mars/mcmc.hpp"
#include "mars/simulator.hpp"
#include "mars/summaries.hpp"

namespace {

using namespace mars;
namespace fs = std::filesystem;

enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kMalformed = 2,
  kInconsistentAtRisk = 3,
  kUnclassified = 4,
  kInitialization = 5,
  kOutOfRange = 6,
  kReplicationsFailed = 7,
  kConvergenceWarning = 10
};

std::vector<double> parse_list(const std::string &s, const std::string &what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string field;
  while (std::getline(ss, field, ','))
    out.push_back(io::parse_number(field, what));
  return out;
}

double data_horizon(const Dataset &d) {
  double h = 0.0;
  for (const Study &s : d.studies) {
    for (const auto &a : s.arms) {
      for (double t : a.event_times)
        h = std::max(h, t);
      for (double t : a.censor_times)
        h = std::max(h, t);
    }
    if (s.hazard_ratio)
      h = std::max(h, s.hazard_ratio->duration);
    for (const auto &r : s.survival_rates)
      h = std::max(h, r.time);
  }
  return h;
}

struct GridOptions {
  std::string grid = "6";
  std::optional<double> max_follow_up;

  TimeGrid resolve(const Dataset &d) const {
    if (grid.find(',') != std::string::npos)
      return io::parse_grid(grid, 0.0);
    double horizon = max_follow_up.value_or(0.0);
    if (!max_follow_up) {
      const double width = io::parse_number(grid, "--grid");
      const double h = data_horizon(d);
      if (!(h > 0.0))
        throw ConfigError("cannot infer a grid horizon from an empty dataset");
      horizon = width * std::ceil(h / width - 1e-12);
    }
    return io::parse_grid(grid, horizon);
  }
};

void add_grid_options(CLI::App *cmd, GridOptions &g) {
  cmd->add_option("--grid", g.grid,
                  "segment width in months, or explicit cutpoints '0,6,12,...'");
  cmd->add_option("--max-follow-up", g.max_follow_up,
                  "grid horizon for equal-width grids (default: data maximum)");
}

void print_violations(const std::vector<Violation> &v, std::ostream &os) {
  for (const auto &x : v)
    os << x.study_id << '\t' << x.rule << '\t' << x.message << '\n';
}

// reconstruct ---------------------------------------------------------------

struct ReconstructOptions {
  std::vector<std::string> curves;
  std::vector<std::string> at_risk;
  std::vector<int> total_events;
  std::optional<double> max_follow_up;
  std::string out = ".";
};

int cmd_reconstruct(const ReconstructOptions &o) {
  if (o.curves.size() != o.at_risk.size())
    throw CLI::ValidationError("--curve and --at-risk must be given in pairs");
  if (!o.total_events.empty() && o.total_events.size() != o.curves.size())
    throw CLI::ValidationError("--total-events needs one value per curve");
  nlohmann::json report = nlohmann::json::array();
  int status = kOk;
  for (std::size_t i = 0; i < o.curves.size(); ++i) {
    const Arm arm = i == 0 ? Arm::Reference : Arm::Treated;
    const auto raw = io::read_curve_csv(o.curves[i]);
    const AtRiskTable table = io::read_at_risk_csv(o.at_risk[i]);
    const DigitizedCurve curve = preprocess_curve(raw, arm);
    std::optional<int> total;
    if (!o.total_events.empty())
      total = o.total_events[i];
    nlohmann::json entry{{"arm", static_cast<int>(i)}, {"curve", o.curves[i]}};
    try {
      auto [rec, rep] = reconstruct_arm(curve, table, total);
      if (o.max_follow_up)
        rec = apply_follow_up_cap(std::move(rec), *o.max_follow_up);
      const fs::path out_csv = fs::path(o.out) / ("arm" + std::to_string(i) + ".csv");
      io::write_arm_csv(out_csv, rec);
      entry["output"] = out_csv.string();
      entry["report"] = io::report_to_json(rep);
      std::cout << "arm " << i << ": " << rep.total_events_reconstructed
                << " events, max survival error "
                << io::format_double(rep.max_abs_survival_error) << '\n';
    } catch (const ReconstructionError &e) {
      entry["error"] = e.what();
      entry["interval"] = e.interval();
      std::cerr << "arm " << i << ": " << e.what() << '\n';
      status = kInconsistentAtRisk;
    } catch (const DataError &e) {
      entry["error"] = e.what();
      std::cerr << "arm " << i << ": " << e.what() << '\n';
      status = kInconsistentAtRisk;
    }
    report.push_back(entry);
  }
  io::write_text(fs::path(o.out) / "report.json", report.dump(2) + "\n");
  return status;
}

// fit -----------------------------------------------------------------------

struct SamplerOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> chains, iters, burnin, threads;
  std::string config;

  SamplerConfig resolve() const {
    SamplerConfig c;
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in)
        throw ConfigError("cannot open " + config);
      io::apply_sampler_json(nlohmann::json::parse(in), c);
    }
    if (seed)
      c.seed = *seed;
    if (chains)
      c.n_chains = *chains;
    if (iters)
      c.n_iter = *iters;
    if (burnin)
      c.n_burnin = *burnin;
    else if (iters)
      c.n_burnin = std::min(c.n_burnin, c.n_iter / 2);
    if (threads)
      c.n_threads = *threads;
    c.validate();
    return c;
  }
};

void add_sampler_options(CLI::App *cmd, SamplerOptions &s) {
  cmd->add_option("--seed", s.seed, "master random seed")->required();
  cmd->add_option("--chains", s.chains, "number of chains");
  cmd->add_option("--iters", s.iters, "iterations per chain, burn-in included");
  cmd->add_option("--burnin", s.burnin, "burn-in iterations per chain");
  cmd->add_option("--threads", s.threads, "worker threads (0 = all cores)");
  cmd->add_option("--config", s.config, "JSON sampler / hyperprior overrides");
}

struct FitOptions {
  std::string dataset;
  GridOptions grid;
  SamplerOptions sampler;
  std::string out = ".";
};

int cmd_fit(const FitOptions &o) {
  const Dataset dataset = io::read_dataset(o.dataset);
  for (const Study &s : dataset.studies) {
    try {
      s.classify();
    } catch (const ConfigError &e) {
      std::cerr << "study " << s.id << ": " << e.what() << '\n';
      return kUnclassified;
    }
  }
  const TimeGrid grid = o.grid.resolve(dataset);
  const auto violations = validate_dataset(dataset, grid);
  if (!violations.empty()) {
    print_violations(violations, std::cerr);
    return kUsage;
  }
  print_violations(dataset_warnings(dataset), std::cerr);
  const SamplerConfig config = o.sampler.resolve();
  const ModelData data = prepare(dataset, grid);
  const std::string fp = io::fingerprint(dataset, grid);
  FitResult result;
  try {
    result = fit(data, config, fp);
  } catch (const InitializationError &e) {
    std::cerr << e.what() << '\n';
    return kInitialization;
  }
  const fs::path draws = fs::path(o.out) / "draws.csv";
  io::write_draws(draws, result, config);
  const Diagnostics &d = result.diagnostics;
  std::cout << "fingerprint " << fp << '\n'
            << "draws " << result.draws.size() << " (" << result.draws.n_chains
            << " chains)\n"
            << "max R-hat " << io::format_double(d.max_rhat) << ", min ESS "
            << io::format_double(d.min_ess) << '\n';
  if (!d.converged) {
    std::cerr << "warning: convergence gate not met (R-hat <= " << kMaxRhat
              << ", ESS >= " << kMinEss << ")\n";
    return kConvergenceWarning;
  }
  return kOk;
}

// summarize -----------------------------------------------------------------

struct SummarizeOptions {
  std::string draws;
  std::string times;
  std::string rmst;
  bool no_median = false;
  bool no_steps = false;
  std::string out = ".";
};

int cmd_summarize(const SummarizeOptions &o) {
  const PosteriorDraws draws = io::read_draws(o.draws);
  const TimeGrid &g = draws.grid;
  std::vector<double> times;
  if (o.times.empty()) {
    const Eigen::VectorXd &c = g.cutpoints();
    times.assign(c.data(), c.data() + c.size());
  } else {
    times = parse_list(o.times, "--times");
  }
  const std::vector<double> taus =
      o.rmst.empty() ? std::vector<double>{g.horizon()} : parse_list(o.rmst, "--rmst");
  SummaryTable table;
  try {
    for (Arm arm : {Arm::Reference, Arm::Treated}) {
      auto rows = posterior_survival_curve(draws, arm, times);
      table.insert(table.end(), rows.begin(), rows.end());
    }
    if (!o.no_steps) {
      auto rows = posterior_loghr_steps(draws);
      table.insert(table.end(), rows.begin(), rows.end());
    }
    if (!o.no_median)
      for (Arm arm : {Arm::Reference, Arm::Treated})
        table.push_back(posterior_median_survival(draws, arm));
    auto r0 = posterior_rmst(draws, Arm::Reference, taus);
    for (const auto &r : r0)
      if (r.measure == "rmst")
        table.push_back(r);
    auto r1 = posterior_rmst(draws, Arm::Treated, taus);
    table.insert(table.end(), r1.begin(), r1.end());
  } catch (const DomainError &e) {
    std::cerr << e.what() << '\n';
    return kOutOfRange;
  }
  io::write_summary_csv(fs::path(o.out) / "summary.csv", table, draws.fingerprint);
  io::write_curve_csv(fs::path(o.out) / "curve.csv", table, draws.fingerprint);
  std::cout << table.size() << " summary rows\n";
  return kOk;
}

// simulate ------------------------------------------------------------------

struct SimulateOptions {
  std::string config;
  std::optional<int> case_id;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications, chains, iters, burnin, threads;
  std::string out = ".";
};

int cmd_simulate(const SimulateOptions &o) {
  ScenarioConfig c = o.config.empty()
                         ? (o.case_id.value_or(1) == 2 ? ScenarioConfig::case2()
                                                       : ScenarioConfig::case1())
                         : io::read_scenario(o.config);
  c.seed = *o.seed;
  if (o.replications)
    c.replications = *o.replications;
  if (o.chains)
    c.sampler.n_chains = *o.chains;
  if (o.iters)
    c.sampler.n_iter = *o.iters;
  if (o.burnin)
    c.sampler.n_burnin = *o.burnin;
  else if (o.iters)
    c.sampler.n_burnin = std::min(c.sampler.n_burnin, c.sampler.n_iter / 2);
  if (o.threads)
    c.n_threads = *o.threads;
  if (c.replications < 1)
    throw CLI::ValidationError("replications must be positive");
  c.validate();
  const OperatingCharacteristics oc = run_replications(c);
  io::write_operating_csv(fs::path(o.out) / "operating.csv", oc);
  io::write_text(fs::path(o.out) / "manifest.json", io::manifest_json(c, oc).dump(2) + "\n");
  std::cout << "case " << c.case_id << ", " << c.replications << " replications, "
            << oc.excluded << " excluded\n"
            << "evidence types I/II/III: " << oc.n_type1 << '/' << oc.n_type2 << '/'
            << oc.n_type3 << '\n';
  for (const char *method : {"MARS", "IPD", "AD"})
    if (const OperatingRow *r = oc.find(method, "log_hr"))
      std::cout << method << " log HR " << io::format_double(r->mean) << " ("
                << io::format_double(r->sd) << "), coverage "
                << io::format_double(r->coverage) << '\n';
  if (oc.failed()) {
    std::cerr << "more than " << 100 * kMaxExcludedShare
              << "% of replications were excluded\n";
    return kReplicationsFailed;
  }
  return kOk;
}

// validate ------------------------------------------------------------------

struct ValidateOptions {
  std::string dataset;
  GridOptions grid;
};

int cmd_validate(const ValidateOptions &o) {
  const Dataset dataset = io::read_dataset(o.dataset);
  const TimeGrid grid = o.grid.resolve(dataset);
  const auto violations = validate_dataset(dataset, grid);
  print_violations(violations, std::cout);
  print_violations(dataset_warnings(dataset), std::cerr);
  if (violations.empty())
    std::cout << dataset.studies.size() << " studies, clean\n";
  return violations.empty() ? kOk : kUsage;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Multilevel piecewise-exponential meta-analysis of survival data"};
  app.require_subcommand(1);

  ReconstructOptions ro;
  auto *rec = app.add_subcommand("reconstruct", "rebuild pseudo-IPD from KM curves");
  rec->add_option("--curve", ro.curves, "curve CSV (time,survival), one per arm")->required();
  rec->add_option("--at-risk", ro.at_risk, "at-risk CSV (time,n_risk), one per arm")->required();
  rec->add_option("--total-events", ro.total_events, "reported total events per arm");
  rec->add_option("--max-follow-up", ro.max_follow_up, "censor times beyond this");
  rec->add_option("--out", ro.out, "output directory");

  FitOptions fo;
  auto *fitc = app.add_subcommand("fit", "sample the posterior");
  fitc->add_option("dataset", fo.dataset, "dataset JSON")->required();
  add_grid_options(fitc, fo.grid);
  add_sampler_options(fitc, fo.sampler);
  fitc->add_option("--out", fo.out, "output directory");

  SummarizeOptions so;
  auto *sum = app.add_subcommand("summarize", "posterior summaries from saved draws");
  sum->add_option("draws", so.draws, "draws CSV written by fit")->required();
  sum->add_option("--times", so.times, "survival time points (default: cutpoints)");
  sum->add_option("--rmst", so.rmst, "RMST horizons (default: grid horizon)");
  sum->add_flag("--no-median", so.no_median, "skip median survival");
  sum->add_flag("--no-steps", so.no_steps, "skip stepwise log HR");
  sum->add_option("--out", so.out, "output directory");

  SimulateOptions mo;
  auto *sim = app.add_subcommand("simulate", "replicate a simulation scenario");
  sim->add_option("--config", mo.config, "scenario JSON");
  sim->add_option("--case", mo.case_id, "built-in scenario 1 or 2 when no config");
  sim->add_option("--seed", mo.seed, "master random seed")->required();
  sim->add_option("--replications", mo.replications, "number of replications");
  sim->add_option("--chains", mo.chains, "chains per fit");
  sim->add_option("--iters", mo.iters, "iterations per chain");
  sim->add_option("--burnin", mo.burnin, "burn-in per chain");
  sim->add_option("--threads", mo.threads, "replications run concurrently");
  sim->add_option("--out", mo.out, "output directory");

  ValidateOptions vo;
  auto *val = app.add_subcommand("validate", "check a dataset file");
  val->add_option("dataset", vo.dataset, "dataset JSON")->required();
  add_grid_options(val, vo.grid);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*rec)
      return cmd_reconstruct(ro);
    if (*fitc)
      return cmd_fit(fo);
    if (*sum)
      return cmd_summarize(so);
    if (*sim)
      return cmd_simulate(mo);
    if (*val)
      return cmd_validate(vo);
  } catch (const CLI::ValidationError &e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError &e) {
    std::cerr << "malformed input: " << e.what() << '\n';
    return kMalformed;
  } catch (const ReconstructionError &e) {
    std::cerr << e.what() << '\n';
    return kInconsistentAtRisk;
  } catch (const InitializationError &e) {
    std::cerr << e.what() << '\n';
    return kInitialization;
  } catch (const DomainError &e) {
    std::cerr << e.what() << '\n';
    return kOutOfRange;
  } catch (const ConfigError &e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
