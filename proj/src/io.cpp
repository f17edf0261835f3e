#include "mars/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mars::io {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ','))
    out.push_back(trim(field));
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

std::ofstream open_out(const fs::path &path) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw FormatError("cannot write " + path.string());
  return out;
}

Arm arm_from_int(int v, const std::string &where) {
  if (v != 0 && v != 1)
    throw FormatError(where + ": arm must be 0 or 1");
  return static_cast<Arm>(v);
}

std::string csv_header_comment(const std::string &fingerprint) {
  return fingerprint.empty() ? "" : "# fingerprint: " + fingerprint + "\n";
}

std::string read_fingerprint_comment(const fs::path &path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# fingerprint: ", 0) == 0)
      return trim(line.substr(15));
    if (!line.empty() && line[0] != '#')
      break;
  }
  return "";
}

} // namespace

int CsvTable::column(const std::string &name, const std::string &source) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name)
      return static_cast<int>(i);
  throw FormatError(source + ": missing column '" + name + "'");
}

double parse_number(const std::string &field, const std::string &where) {
  double v = 0.0;
  const char *first = field.data();
  const char *last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw FormatError(where + ": expected a number, got '" + field + "'");
  return v;
}

CsvTable read_csv(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    auto fields = split(t);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header)
    throw FormatError(path.string() + ": empty file");
  return table;
}

std::vector<CurvePoint> read_curve_csv(const fs::path &path) {
  const CsvTable t = read_csv(path);
  const int ct = t.column("time", path.string());
  const int cs = t.column("survival", path.string());
  std::vector<CurvePoint> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[i]);
    const double time = parse_number(t.rows[i][ct], where);
    const double s = parse_number(t.rows[i][cs], where);
    if (time < 0.0)
      throw FormatError(where + ": negative time");
    out.push_back({time, s});
  }
  if (out.empty())
    throw FormatError(path.string() + ": no curve points");
  return out;
}

AtRiskTable read_at_risk_csv(const fs::path &path) {
  const CsvTable t = read_csv(path);
  const int ct = t.column("time", path.string());
  const int cn = t.column("n_risk", path.string());
  AtRiskTable out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[i]);
    const double time = parse_number(t.rows[i][ct], where);
    const double n = parse_number(t.rows[i][cn], where);
    if (n < 0.0 || n != std::floor(n))
      throw FormatError(where + ": n_risk must be a non-negative integer");
    out.entries.push_back({time, static_cast<int>(n)});
  }
  if (out.entries.empty())
    throw FormatError(path.string() + ": no at-risk rows");
  return out;
}

ReconstructedArm read_arm_csv(const fs::path &path, Arm arm) {
  const CsvTable t = read_csv(path);
  const int ct = t.column("time", path.string());
  const int ck = t.column("kind", path.string());
  ReconstructedArm out;
  out.arm = arm;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[i]);
    const double time = parse_number(t.rows[i][ct], where);
    if (!(time > 0.0))
      throw FormatError(where + ": times must be positive");
    const std::string &kind = t.rows[i][ck];
    if (kind == "event")
      out.event_times.push_back(time);
    else if (kind == "censor")
      out.censor_times.push_back(time);
    else
      throw FormatError(where + ": kind must be 'event' or 'censor'");
  }
  return out;
}

void write_arm_csv(const fs::path &path, const ReconstructedArm &arm,
                   const std::string &fingerprint) {
  std::vector<std::pair<double, int>> rows;
  for (double t : arm.event_times)
    rows.emplace_back(t, 0);
  for (double t : arm.censor_times)
    rows.emplace_back(t, 1);
  std::sort(rows.begin(), rows.end());
  auto out = open_out(path);
  out << csv_header_comment(fingerprint) << "time,kind\n";
  char buf[64];
  for (const auto &[t, kind] : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", t);
    out << buf << ',' << (kind == 0 ? "event" : "censor") << '\n';
  }
}

json report_to_json(const ReconstructionReport &r) {
  json j;
  j["max_abs_survival_error"] = r.max_abs_survival_error;
  j["per_interval_at_risk_error"] = r.per_interval_at_risk_error;
  j["total_events_reconstructed"] = r.total_events_reconstructed;
  j["total_events_discrepancy"] =
      r.total_events_discrepancy ? json(*r.total_events_discrepancy) : json(nullptr);
  j["censored_at_end"] = r.censored_at_end;
  j["assumed_no_censoring"] = r.assumed_no_censoring;
  return j;
}

Dataset read_dataset(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return dataset_from_json(j, path.parent_path());
}

Dataset dataset_from_json(const json &j, const fs::path &base_dir) {
  Dataset out;
  try {
    for (const json &s : j.at("studies")) {
      Study study;
      study.id = s.at("id").get<std::string>();
      const std::string where = "study " + study.id;
      if (s.contains("type")) {
        const int type = s.at("type").get<int>();
        if (type < 1 || type > 3)
          throw FormatError(where + ": type must be 1, 2 or 3");
        study.use = static_cast<EvidenceType>(type);
      }
      if (s.contains("reconstructed")) {
        for (const json &a : s.at("reconstructed")) {
          const Arm arm = arm_from_int(a.at("arm").get<int>(), where);
          if (a.contains("file")) {
            fs::path p = a.at("file").get<std::string>();
            if (p.is_relative())
              p = base_dir / p;
            study.arms.push_back(read_arm_csv(p, arm));
          } else {
            ReconstructedArm r;
            r.arm = arm;
            r.event_times = a.value("events", std::vector<double>{});
            r.censor_times = a.value("censored", std::vector<double>{});
            study.arms.push_back(std::move(r));
          }
        }
      }
      if (s.contains("hazard_ratio")) {
        const json &h = s.at("hazard_ratio");
        study.hazard_ratio = HazardRatioRecord{h.at("log_hr").get<double>(),
                                               h.at("se").get<double>(),
                                               h.at("duration").get<double>()};
      }
      if (s.contains("survival_rates")) {
        for (const json &r : s.at("survival_rates"))
          study.survival_rates.push_back(
              {r.at("time").get<double>(), arm_from_int(r.at("arm").get<int>(), where),
               r.at("survival").get<double>(), r.at("se").get<double>()});
      }
      out.studies.push_back(std::move(study));
    }
  } catch (const json::exception &e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return out;
}

json dataset_to_json(const Dataset &dataset) {
  json studies = json::array();
  for (const Study &s : dataset.studies) {
    json j;
    j["id"] = s.id;
    if (s.use)
      j["type"] = static_cast<int>(*s.use);
    if (!s.arms.empty()) {
      json arms = json::array();
      for (const ReconstructedArm &a : s.arms) {
        std::vector<double> ev = a.event_times, ce = a.censor_times;
        std::sort(ev.begin(), ev.end());
        std::sort(ce.begin(), ce.end());
        arms.push_back({{"arm", arm_value(a.arm)}, {"events", ev}, {"censored", ce}});
      }
      j["reconstructed"] = arms;
    }
    if (s.hazard_ratio)
      j["hazard_ratio"] = {{"log_hr", s.hazard_ratio->theta_hat},
                           {"se", s.hazard_ratio->se},
                           {"duration", s.hazard_ratio->duration}};
    if (!s.survival_rates.empty()) {
      json rates = json::array();
      for (const auto &r : s.survival_rates)
        rates.push_back({{"time", r.time}, {"arm", arm_value(r.arm)},
                         {"survival", r.s_hat}, {"se", r.se}});
      j["survival_rates"] = rates;
    }
    studies.push_back(j);
  }
  return {{"studies", studies}};
}

std::string fingerprint(const Dataset &dataset, const TimeGrid &grid) {
  const std::string text =
      dataset_to_json(dataset).dump() + "|" + grid_to_json(grid).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TimeGrid parse_grid(const std::string &text, double max_follow_up) {
  const std::string s = trim(text);
  if (s.find(',') == std::string::npos) {
    const double width = parse_number(s, "--grid");
    return TimeGrid::equal_width(width, max_follow_up);
  }
  std::vector<double> cuts;
  for (const auto &f : split(s))
    cuts.push_back(parse_number(f, "--grid"));
  return TimeGrid(Eigen::Map<Eigen::VectorXd>(cuts.data(),
                                              static_cast<Eigen::Index>(cuts.size())));
}

json grid_to_json(const TimeGrid &grid) {
  const Eigen::VectorXd &c = grid.cutpoints();
  return std::vector<double>(c.data(), c.data() + c.size());
}

TimeGrid grid_from_json(const json &j) {
  if (j.is_object()) {
    return TimeGrid::equal_width(j.at("width").get<double>(),
                                 j.at("horizon").get<double>());
  }
  std::vector<double> cuts = j.get<std::vector<double>>();
  return TimeGrid(
      Eigen::Map<Eigen::VectorXd>(cuts.data(), static_cast<Eigen::Index>(cuts.size())));
}

void apply_sampler_json(const json &j, SamplerConfig &c) {
  try {
    c.n_chains = j.value("chains", c.n_chains);
    c.n_iter = j.value("iters", c.n_iter);
    c.n_burnin = j.value("burnin", c.n_burnin);
    c.thin = j.value("thin", c.thin);
    c.adapt_window = j.value("adapt_window", c.adapt_window);
    c.target_accept = j.value("target_accept", c.target_accept);
    c.n_threads = j.value("threads", c.n_threads);
    c.sample_study_means = j.value("sample_study_means", c.sample_study_means);
    c.study_effects = j.value("study_effects", c.study_effects);
    if (j.contains("seed"))
      c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("fixed")) {
      const json &f = j.at("fixed");
      auto opt = [&](const char *key, std::optional<double> &slot) {
        if (f.contains(key))
          slot = f.at(key).get<double>();
      };
      opt("mu_beta", c.fixed.mu_beta);
      opt("mu_lambda", c.fixed.mu_lambda);
      opt("sigma2_beta", c.fixed.sigma2_beta);
      opt("sigma2_lambda", c.fixed.sigma2_lambda);
      opt("sigma2_alpha", c.fixed.sigma2_alpha);
      opt("sigma2_mu", c.fixed.sigma2_mu);
      opt("rho_beta", c.fixed.rho_beta);
      opt("rho_lambda", c.fixed.rho_lambda);
    }
    if (j.contains("hyperprior")) {
      const json &h = j.at("hyperprior");
      c.constants.mean_variance = h.value("mean_variance", c.constants.mean_variance);
      c.constants.gamma_shape = h.value("gamma_shape", c.constants.gamma_shape);
      c.constants.gamma_rate = h.value("gamma_rate", c.constants.gamma_rate);
      c.constants.rho_bound = h.value("rho_bound", c.constants.rho_bound);
    }
  } catch (const json::exception &e) {
    throw ConfigError(std::string("sampler config: ") + e.what());
  }
}

json sampler_to_json(const SamplerConfig &c) {
  json j{{"chains", c.n_chains},
         {"iters", c.n_iter},
         {"burnin", c.n_burnin},
         {"thin", c.thin},
         {"seed", c.seed},
         {"adapt_window", c.adapt_window},
         {"target_accept", c.target_accept},
         {"sample_study_means", c.sample_study_means},
         {"study_effects", c.study_effects}};
  json fixed = json::object();
  auto put = [&](const char *key, const std::optional<double> &v) {
    if (v)
      fixed[key] = *v;
  };
  put("mu_beta", c.fixed.mu_beta);
  put("mu_lambda", c.fixed.mu_lambda);
  put("sigma2_beta", c.fixed.sigma2_beta);
  put("sigma2_lambda", c.fixed.sigma2_lambda);
  put("sigma2_alpha", c.fixed.sigma2_alpha);
  put("sigma2_mu", c.fixed.sigma2_mu);
  put("rho_beta", c.fixed.rho_beta);
  put("rho_lambda", c.fixed.rho_lambda);
  j["fixed"] = fixed;
  j["hyperprior"] = {{"mean_variance", c.constants.mean_variance},
                     {"gamma_shape", c.constants.gamma_shape},
                     {"gamma_rate", c.constants.gamma_rate},
                     {"rho_bound", c.constants.rho_bound}};
  return j;
}

ScenarioConfig read_scenario(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open " + path.string());
  try {
    return scenario_from_json(json::parse(in));
  } catch (const json::parse_error &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ScenarioConfig scenario_from_json(const json &j) {
  try {
    const int case_id = j.value("case", 1);
    ScenarioConfig c = case_id == 2 ? ScenarioConfig::case2() : ScenarioConfig::case1();
    c.case_id = case_id;
    c.n_studies = j.value("n_studies", c.n_studies);
    if (j.contains("size_range")) {
      c.min_size = j.at("size_range").at(0).get<int>();
      c.max_size = j.at("size_range").at(1).get<int>();
    }
    if (j.contains("follow_up")) {
      const json &f = j.at("follow_up");
      c.follow_up_min = f.value("min", c.follow_up_min);
      c.follow_up_max = f.value("max", c.follow_up_max);
      c.follow_up_step = f.value("step", c.follow_up_step);
    }
    c.censoring_rate = j.value("censoring_rate", c.censoring_rate);
    c.treated_share = j.value("treated_share", c.treated_share);
    c.alpha_variance = j.value("alpha_variance", c.alpha_variance);
    c.mu_variance = j.value("mu_variance", c.mu_variance);
    c.log_hr = j.value("log_hr", c.log_hr);
    if (j.contains("weibull")) {
      c.baseline.rate = j.at("weibull").value("rate", c.baseline.rate);
      c.baseline.shape = j.at("weibull").value("shape", c.baseline.shape);
    }
    c.case2_baseline_rate = j.value("baseline_rate", c.case2_baseline_rate);
    if (j.contains("partition")) {
      const json &p = j.at("partition");
      c.partition.km = p.value("km", c.partition.km);
      c.partition.hr = p.value("hr", c.partition.hr);
      c.partition.km_and_hr = p.value("km_and_hr", c.partition.km_and_hr);
      c.partition.rates = p.value("rates", c.partition.rates);
    }
    if (j.contains("grid"))
      c.grid = grid_from_json(j.at("grid"));
    if (j.contains("rate_report_time"))
      c.rate_report_time = j.at("rate_report_time").get<double>();
    c.report_times = j.value("report_times", c.report_times);
    c.replications = j.value("replications", c.replications);
    if (j.contains("seed"))
      c.seed = j.at("seed").get<std::uint64_t>();
    c.n_threads = j.value("threads", c.n_threads);
    c.run_ipd = j.value("run_ipd", c.run_ipd);
    c.run_ad = j.value("run_ad", c.run_ad);
    c.run_without_rates = j.value("run_without_rates", c.run_without_rates);
    if (j.contains("sampler"))
      apply_sampler_json(j.at("sampler"), c.sampler);
    return c;
  } catch (const json::exception &e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

fs::path meta_path(const fs::path &csv_path) {
  fs::path p = csv_path;
  p += ".meta.json";
  return p;
}

void write_draws(const fs::path &csv_path, const FitResult &fit,
                 const SamplerConfig &config) {
  const PosteriorDraws &d = fit.draws;
  {
    auto out = open_out(csv_path);
    out << csv_header_comment(d.fingerprint) << "chain,iter";
    for (const auto &n : d.names)
      out << ',' << n;
    out << ",log_posterior\n";
    for (Eigen::Index r = 0; r < d.size(); ++r) {
      out << r / d.draws_per_chain << ',' << r % d.draws_per_chain;
      for (Eigen::Index c = 0; c < d.values.cols(); ++c)
        out << ',' << format_double(d.values(r, c));
      out << ',' << format_double(d.log_posterior[r]) << '\n';
    }
  }
  json meta;
  meta["fingerprint"] = d.fingerprint;
  meta["grid"] = grid_to_json(d.grid);
  meta["names"] = d.names;
  meta["alpha_ids"] = d.alpha_ids;
  meta["mu_ids"] = d.mu_ids;
  meta["n_chains"] = d.n_chains;
  meta["draws_per_chain"] = d.draws_per_chain;
  meta["sampler"] = sampler_to_json(config);
  const Diagnostics &g = fit.diagnostics;
  json rhat = json::object(), ess = json::object();
  for (std::size_t i = 0; i < d.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    rhat[d.names[i]] = std::isfinite(g.rhat[k]) ? json(g.rhat[k]) : json(nullptr);
    ess[d.names[i]] = g.ess[k];
  }
  meta["diagnostics"] = {{"max_rhat", std::isfinite(g.max_rhat) ? json(g.max_rhat) : json(nullptr)},
                         {"min_ess", g.min_ess},
                         {"converged", g.converged},
                         {"acceptance", g.acceptance},
                         {"rhat", rhat},
                         {"ess", ess}};
  auto out = open_out(meta_path(csv_path));
  out << meta.dump(2) << '\n';
}

PosteriorDraws read_draws(const fs::path &csv_path) {
  std::ifstream in(meta_path(csv_path));
  if (!in)
    throw FormatError("missing metadata " + meta_path(csv_path).string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::parse_error &e) {
    throw FormatError(meta_path(csv_path).string() + ": " + e.what());
  }
  PosteriorDraws d;
  try {
    d.fingerprint = meta.at("fingerprint").get<std::string>();
    d.grid = grid_from_json(meta.at("grid"));
    d.names = meta.at("names").get<std::vector<std::string>>();
    d.alpha_ids = meta.at("alpha_ids").get<std::vector<std::string>>();
    d.mu_ids = meta.at("mu_ids").get<std::vector<std::string>>();
    d.n_chains = meta.at("n_chains").get<int>();
    d.draws_per_chain = meta.at("draws_per_chain").get<int>();
  } catch (const json::exception &e) {
    throw FormatError(meta_path(csv_path).string() + ": " + e.what());
  }
  if (read_fingerprint_comment(csv_path) != d.fingerprint)
    throw FormatError(csv_path.string() + ": fingerprint does not match its metadata");
  const CsvTable t = read_csv(csv_path);
  if (t.header.size() != d.names.size() + 3)
    throw FormatError(csv_path.string() + ": column count does not match metadata");
  for (std::size_t i = 0; i < d.names.size(); ++i)
    if (t.header[i + 2] != d.names[i])
      throw FormatError(csv_path.string() + ": column '" + t.header[i + 2] +
                        "' does not match metadata");
  const auto rows = static_cast<Eigen::Index>(t.rows.size());
  if (rows != static_cast<Eigen::Index>(d.n_chains) * d.draws_per_chain)
    throw FormatError(csv_path.string() + ": row count does not match metadata");
  const auto cols = static_cast<Eigen::Index>(d.names.size());
  d.values.resize(rows, cols);
  d.log_posterior.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto &row = t.rows[static_cast<std::size_t>(r)];
    const std::string where =
        csv_path.string() + ":" + std::to_string(t.line_numbers[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < cols; ++c)
      d.values(r, c) = parse_number(row[static_cast<std::size_t>(c) + 2], where);
    d.log_posterior[r] = parse_number(row.back(), where);
  }
  return d;
}

std::string format_double(double v) {
  if (std::isnan(v))
    return "NA";
  if (std::isinf(v))
    return v > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_summary_csv(const fs::path &path, const SummaryTable &table,
                       const std::string &fingerprint) {
  auto out = open_out(path);
  out << csv_header_comment(fingerprint)
      << "measure,time,interval,arm,mean,sd,lower,upper,status,finite_fraction\n";
  for (const SummaryRow &r : table) {
    out << r.measure << ',' << format_double(r.time) << ',';
    if (r.interval >= 0)
      out << r.interval;
    else
      out << "NA";
    out << ',';
    if (r.arm >= 0)
      out << r.arm;
    else
      out << "NA";
    out << ',' << format_double(r.mean) << ',' << format_double(r.sd) << ','
        << format_double(r.lower) << ',' << format_double(r.upper) << ',' << r.status
        << ',' << format_double(r.finite_fraction) << '\n';
  }
}

void write_curve_csv(const fs::path &path, const SummaryTable &table,
                     const std::string &fingerprint) {
  auto out = open_out(path);
  out << csv_header_comment(fingerprint) << "arm,time,mean,lo,hi\n";
  for (const SummaryRow &r : table)
    if (r.measure == "survival")
      out << r.arm << ',' << format_double(r.time) << ',' << format_double(r.mean) << ','
          << format_double(r.lower) << ',' << format_double(r.upper) << '\n';
}

void write_operating_csv(const fs::path &path, const OperatingCharacteristics &oc) {
  auto out = open_out(path);
  out << "method,measure,time,arm,truth,mean,sd,mse_x100,coverage,interval_length,n\n";
  for (const OperatingRow &r : oc.rows) {
    out << r.method << ',' << r.measure << ',' << format_double(r.time) << ',';
    if (r.arm >= 0)
      out << r.arm;
    else
      out << "NA";
    out << ',' << format_double(r.truth) << ',' << format_double(r.mean) << ','
        << format_double(r.sd) << ',' << format_double(100.0 * r.mse) << ','
        << format_double(r.coverage) << ',' << format_double(r.interval_length) << ','
        << r.n << '\n';
  }
}

json manifest_json(const ScenarioConfig &c, const OperatingCharacteristics &oc) {
  json reps = json::array();
  for (const ReplicationRecord &r : oc.replications)
    reps.push_back({{"index", r.index},
                    {"seed", r.seed},
                    {"excluded", r.excluded},
                    {"reruns", r.reruns},
                    {"note", r.note}});
  return {{"case", c.case_id},
          {"seed", c.seed},
          {"replications", c.replications},
          {"n_studies", c.n_studies},
          {"partition",
           {{"km", c.partition.km},
            {"hr", c.partition.hr},
            {"km_and_hr", c.partition.km_and_hr},
            {"rates", c.partition.rates}}},
          {"evidence_counts",
           {{"type1", oc.n_type1}, {"type2", oc.n_type2}, {"type3", oc.n_type3}}},
          {"grid", grid_to_json(c.grid)},
          {"sampler", sampler_to_json(c.sampler)},
          {"excluded", oc.excluded},
          {"failed", oc.failed()},
          {"wall_seconds", oc.wall_seconds},
          {"replication_log", reps}};
}

void write_text(const fs::path &path, const std::string &text) {
  auto out = open_out(path);
  out << text;
}

} // namespace mars::io
