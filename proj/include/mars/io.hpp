#pragma once

// File formats: curve / at-risk / reconstructed-time CSVs, the dataset and
// scenario JSON files, posterior draws with their metadata sidecar, and the
// summary and operating-characteristics tables.

#include <json.hpp>

#include <filesystem>
#include <string>

#include "mars/evidence.hpp"
#include "mars/mcmc.hpp"
#include "mars/simulator.hpp"
#include "mars/summaries.hpp"

namespace mars::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Minimal CSV reader: header row required, '#' lines skipped, numeric
/// fields parsed strictly. Errors are FormatError naming file and line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;

  int column(const std::string &name, const std::string &source) const;
};
CsvTable read_csv(const fs::path &path);
double parse_number(const std::string &field, const std::string &where);

std::vector<CurvePoint> read_curve_csv(const fs::path &path);
AtRiskTable read_at_risk_csv(const fs::path &path);
ReconstructedArm read_arm_csv(const fs::path &path, Arm arm);
void write_arm_csv(const fs::path &path, const ReconstructedArm &arm,
                   const std::string &fingerprint = "");
json report_to_json(const ReconstructionReport &report);

/// Relative file references resolve against the dataset file's directory.
Dataset read_dataset(const fs::path &path);
Dataset dataset_from_json(const json &j, const fs::path &base_dir);
json dataset_to_json(const Dataset &dataset);

/// FNV-1a over the canonical dataset JSON and the grid cutpoints.
std::string fingerprint(const Dataset &dataset, const TimeGrid &grid);

/// "0,6,12,24" gives explicit cutpoints; a single number is a segment width
/// applied up to `max_follow_up`.
TimeGrid parse_grid(const std::string &text, double max_follow_up);

json grid_to_json(const TimeGrid &grid);
TimeGrid grid_from_json(const json &j);

/// Sampler keys: chains, iters, burnin, thin, adapt_window, target_accept,
/// threads, sample_study_means, study_effects, fixed{...}, hyperprior{...}.
void apply_sampler_json(const json &j, SamplerConfig &config);
json sampler_to_json(const SamplerConfig &config);

ScenarioConfig read_scenario(const fs::path &path);
ScenarioConfig scenario_from_json(const json &j);

void write_draws(const fs::path &csv_path, const FitResult &fit,
                 const SamplerConfig &config);
/// Reads draws plus the `<csv>.meta.json` sidecar; throws FormatError when
/// the two disagree on fingerprint or shape.
PosteriorDraws read_draws(const fs::path &csv_path);
fs::path meta_path(const fs::path &csv_path);

void write_summary_csv(const fs::path &path, const SummaryTable &table,
                       const std::string &fingerprint);
/// Long-format curve file: arm,time,mean,lo,hi.
void write_curve_csv(const fs::path &path, const SummaryTable &table,
                     const std::string &fingerprint);

void write_operating_csv(const fs::path &path, const OperatingCharacteristics &oc);
json manifest_json(const ScenarioConfig &config, const OperatingCharacteristics &oc);

std::string format_double(double v);
void write_text(const fs::path &path, const std::string &text);

} // namespace mars::io
