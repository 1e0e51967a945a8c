#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cyclegen/analysis.hpp"
#include "cyclegen/cycle.hpp"
#include "cyclegen/preprocess.hpp"
#include "cyclegen/statespace.hpp"

namespace cyclegen::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

/// Raw trip CSV with header `t,speed,lat,lon,alt`. Empty or `nan` speed and
/// altitude fields are missing values.
std::vector<RawSample> read_raw_trip(const fs::path& path);
void write_raw_trip(const fs::path& path, const std::vector<RawSample>& samples);

/// Cleaned trip CSV with header `t,v,a,g_f`. The trip id is the file stem.
TripRecord read_trip(const fs::path& path);
void write_trip(const fs::path& path, const TripRecord& trip);

/// All `*.csv` trips in a directory, in file-name order. Throws an input
/// error "no trips found" when there are none.
std::vector<TripRecord> read_trip_dir(const fs::path& dir);
std::vector<fs::path> list_csv(const fs::path& dir);

/// Drive cycle CSV with header `t,v,a,g`.
DriveCycle read_cycle(const fs::path& path);
void write_cycle(const fs::path& path, const DriveCycle& cycle);

/// Single-column numeric series; an optional non-numeric header line is skipped.
/// Multi-column files use the last column.
std::vector<double> read_series(const fs::path& path);

json to_json(const BinningScheme& scheme);
BinningScheme scheme_from_json(const json& j);

/// {schema_version, scheme, rows: [{from, to: [...], p: [...]}]} with one entry
/// per non-empty row.
json to_json(const Sagstm& m);
Sagstm sagstm_from_json(const json& j);

json to_json(const KinematicFragments& f);
json to_json(const FragmentCost& c);
json to_json(const GradeErrorReport& r);
json to_json(const DistributionStats& s);

void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

void write_text(const fs::path& path, std::string_view text);

/// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(std::string_view bytes);
  void update_file(const fs::path& path);
  std::uint64_t digest() const { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace cyclegen::io
