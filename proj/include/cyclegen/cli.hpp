#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cyclegen/analysis.hpp"
#include "cyclegen/cycle.hpp"
#include "cyclegen/error.hpp"
#include "cyclegen/io.hpp"
#include "cyclegen/piesmc.hpp"
#include "cyclegen/preprocess.hpp"
#include "cyclegen/statespace.hpp"
#include "cyclegen/synthetic.hpp"

namespace cyclegen::cli {

namespace fs = std::filesystem;
using io::json;

int exit_code(ErrorKind kind);

/// A preprocessed fleet directory: trips/*.csv, fleet_summary.json and a
/// cache/ directory for transition matrices.
struct FleetPaths {
  fs::path root;

  fs::path trips() const { return root / "trips"; }
  fs::path summary() const { return root / "fleet_summary.json"; }
  fs::path cache() const { return root / "cache"; }
};

/// Everything a command can be configured with. Config files and flags both
/// land here; flags win.
struct RunConfig {
  BinningScheme scheme = BinningScheme::standard();
  AgentConfig agent;
  PreprocessConfig preprocess;
  Method method = Method::piesmc;
  bool seed_set = false;
  std::size_t mtb_clusters = 4;
  bool mcb_dense_rows = true;
  double hf_split = kDefaultHfSplit;
  fs::path cache_dir;  // empty: <fleet>/cache
};

/// Applies a flat JSON object of settings. Unknown keys are input errors.
void apply_config(RunConfig& cfg, const json& settings);

/// Reads a JSON object, or `key = value` lines (# comments) when the file is
/// not JSON.
json read_config_file(const fs::path& path);

/// "speed=0.5,accel=0.2,grade=0.3" (any subset) as widths over the standard
/// ranges, starting from the standard widths.
BinningScheme parse_bins(std::string_view text);

/// Trip count, durations, fragment means/stds and idle statistics.
json fleet_summary(const std::vector<TripRecord>& trips, const std::vector<std::string>& errors = {});

struct PreprocessResult {
  std::size_t trips_written = 0;
  std::vector<std::string> errors;  // "file: message" per unusable input
  json summary;
};

/// Cleans every raw trip CSV in input_dir into out_dir/trips (replacing
/// earlier CSVs there) and writes out_dir/fleet_summary.json.
PreprocessResult cmd_preprocess(const fs::path& input_dir, const fs::path& out_dir, const PreprocessConfig& config);

/// FNV-1a over the trip files (names and bytes, in name order) and the scheme.
std::string fleet_key(const fs::path& fleet_dir, const BinningScheme& scheme);
fs::path matrix_cache_path(const fs::path& fleet_dir, const BinningScheme& scheme, const fs::path& cache_dir = {});

/// Builds the transition matrix for the fleet and caches it; returns the
/// cache file.
fs::path cmd_build_matrix(const fs::path& fleet_dir, const BinningScheme& scheme, const fs::path& cache_dir = {});

/// Writes an oracle fleet as a preprocessed fleet directory, plus
/// oracle_config.json holding its binning scheme. Returns the trip count.
std::size_t cmd_synth_fleet(const fs::path& out_dir, const synthetic::OracleFleetOptions& options = {});

struct GenerateResult {
  fs::path cycle_csv;
  fs::path report_json;
  json report;
  DriveCycle cycle;
};

/// Writes out_dir/<method>_cycle.csv and out_dir/<method>_report.json. The
/// report is byte-stable for a fixed seed except for its "timing" object.
GenerateResult cmd_generate(const fs::path& fleet_dir, const fs::path& out_dir, const RunConfig& config);

/// Fragments, distribution and VSP statistics and wavelet HF fractions of one
/// cycle, plus cost and accuracy levels when a fleet is given. Writes
/// <stem>_analysis.json, <stem>_vsp.csv and grade-scalogram files.
json cmd_analyze(const fs::path& cycle_csv, const std::optional<fs::path>& fleet_dir, const fs::path& out_dir,
                 const RunConfig& config);

struct CycleInput {
  std::string label;
  fs::path path;
};

/// "label=path", or a bare path labelled by its stem without a "_cycle" suffix.
CycleInput parse_cycle_arg(std::string_view arg);

/// Per-method comparison against the fleet. Improvements are relative to the
/// cycle labelled "mtb"; null without one or when E_mtb is zero. Writes
/// comparison.json and histogram/scalogram CSVs.
json cmd_compare(const fs::path& fleet_dir, const std::vector<CycleInput>& cycles, const fs::path& out_dir,
                 const RunConfig& config);

/// Grade error between two aligned single-series CSVs (the last column is
/// used). Writes the report to out_json when given.
GradeErrorReport cmd_validate_grade(const fs::path& calc_csv, const fs::path& ref_csv,
                                    const std::optional<fs::path>& out_json = {});

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace cyclegen::cli
